"""Recovery ratio and quantity discrepancy of scheme C binned by object count."""

import argparse
import dataclasses

from gaiscn.experiment import load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-c", "--config")
    ap.add_argument("--snr", type=float, default=0.0)
    ap.add_argument("--size", type=int, default=327)
    ap.add_argument("-k", type=int, nargs="+", default=[3])
    args = ap.parse_args()

    base = load_config(args.config, snr_db=(args.snr,), corpus_size=args.size, schemes=("C",))
    for k in args.k:
        cfg = dataclasses.replace(base, network=dataclasses.replace(base.network, k=k))
        report, _ = run_experiment(cfg, write=False)
        print(f"k={k}")
        print(f"  {'objects':<8}{'sessions':>9}{'recovery':>10}{'qty_disc':>10}{'similarity':>12}")
        for b in report.curves[("C", args.snr)]:
            if not b["sessions"]:
                continue
            print(
                f"  {b['bin']:<8}{b['sessions']:>9}{b['recovery_ratio']:>10.3f}"
                f"{b['quantity_discrepancy']:>10.3f}{b['similarity']:>12.3f}"
            )


if __name__ == "__main__":
    main()
