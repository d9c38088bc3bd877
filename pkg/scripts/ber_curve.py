"""Uncoded and LDPC-decoded BER against the closed-form curve."""

import argparse

import numpy as np

from gaiscn.channel import theoretical_ber, transmit_bits
from gaiscn.ldpc import bit_flip_decode, ldpc_encode, make_ldpc_code


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr", type=float, nargs="+", default=[-5, -2, 0, 2, 4, 6, 8])
    ap.add_argument("--bits", type=int, default=10**5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    code = make_ldpc_code()
    rng = np.random.default_rng(args.seed)
    blocks = -(-args.bits // code.k)
    print(f"{'snr_db':>7}{'theory':>11}{'uncoded':>11}{'ldpc':>11}{'block_ok':>10}")
    for snr in args.snr:
        msgs = rng.integers(0, 2, (blocks, code.k), dtype=np.uint8)
        rx = transmit_bits(ldpc_encode(msgs, code), snr, rng)
        words, ok = bit_flip_decode(rx, code)
        raw = np.mean(rx[:, : code.k] != msgs)
        dec = np.mean(words[:, : code.k] != msgs)
        print(f"{snr:>7.1f}{theoretical_ber(snr):>11.5f}{raw:>11.5f}{dec:>11.5f}{ok.mean():>10.3f}")


if __name__ == "__main__":
    main()
