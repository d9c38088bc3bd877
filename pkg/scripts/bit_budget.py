"""Downlink/uplink bits and image fidelity per scheme on one corpus.

    python scripts/bit_budget.py --snr 0 --size 300
"""

import argparse

from gaiscn.experiment import load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-c", "--config")
    ap.add_argument("--snr", type=float, default=0.0)
    ap.add_argument("--size", type=int, default=300)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    cfg = load_config(args.config, snr_db=(args.snr,), corpus_size=args.size, master_seed=args.seed)
    report, _ = run_experiment(cfg, write=False)
    print(f"{'scheme':<8}{'downlink':>12}{'uplink':>10}{'psnr_db':>10}{'failures':>10}")
    for s in cfg.schemes:
        g = report.groups[(s, args.snr)]
        print(
            f"{s:<8}{g['downlink_bits']['mean']:>12.1f}{g['uplink_bits']['mean']:>10.1f}"
            f"{g['psnr_db']['mean']:>10.2f}{g['semantic_failures']:>10d}"
        )


if __name__ == "__main__":
    main()
