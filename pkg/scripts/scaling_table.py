#!/usr/bin/env python3
"""Print predicted exponents and widths for a range of n at fixed mu and Re."""
import argparse
import math

from kladder import scaling_laws as sl


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=0.55)
    ap.add_argument("--Re", type=float, default=1e4)
    ap.add_argument("--delta", type=float, default=0.0)
    ap.add_argument("--n-max", type=int, default=6)
    args = ap.parse_args(argv)
    print(f"{'n':>2} {'lambda':>8} {'a_n':>9} {'gamma':>9} {'mu window':>17} {'bad width':>10} {'regime':>6}"
          f" {'ratio':>9}")
    for n in range(2, args.n_max + 1):
        w = sl.mu_window(n, args.delta)
        p = sl.ScalingParams(n, args.mu, args.Re, 2 * math.pi, 1.0, args.delta)
        try:
            bad, _, regime = sl.predicted_widths(p)
            bad = f"{bad:10.3e}"
        except ValueError:
            bad, regime = f"{'-':>10}", "-"
        print(f"{n:2d} {sl.lambda_n(n, args.delta):8.4f} {sl.a_n(n, args.mu, args.delta):9.4f} "
              f"{sl.gamma_n(n, args.mu, args.delta):9.3f} ({w.lower:.4f}, {w.upper:.4f}) {bad} {regime:>6} "
              f"{sl.predicted_ratio(n, args.mu, args.Re, args.delta):9.3g}")


if __name__ == "__main__":
    main()
