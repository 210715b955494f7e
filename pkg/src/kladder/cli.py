"""Command-line entry point: ``kladder simulate|analyze|verify|spectrum``.

Exit codes: 0 ok, 1 invariant failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import harness

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kladder", description="Spectral Navier-Stokes runs and interval diagnostics.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="integrate a configuration")
    s.add_argument("-c", "--config", required=True)
    s.add_argument("--resume", action="store_true", help="continue from the latest checkpoint")
    s.add_argument("-o", "--output-dir", help="override outputDir")

    a = sub.add_parser("analyze", help="good/bad intervals for a stored run")
    a.add_argument("-r", "--run", required=True)
    a.add_argument("-n", type=int, nargs="+", default=[1, 2, 3])
    a.add_argument("--mu", type=float)
    a.add_argument("--mode", choices=["theoretical", "empirical"], default="theoretical")
    a.add_argument("--min-duration", type=float)
    a.add_argument("--allow-mu-outside", action="store_true")

    v = sub.add_parser("verify", help="check invariants on a stored run")
    v.add_argument("-r", "--run", required=True)
    v.add_argument("--ebal-tol", type=float, default=1e-4)

    k = sub.add_parser("spectrum", help="fit the time-averaged shell spectrum")
    k.add_argument("-r", "--run", required=True)
    k.add_argument("--kmin", type=float, required=True)
    k.add_argument("--kmax", type=float, required=True)
    return p


def _simulate(args) -> int:
    cfg = harness.SimConfig.load(args.config)
    if args.output_dir:
        cfg.outputDir = args.output_dir
    art = harness.simulate(cfg, resume=args.resume)
    print(json.dumps({"runDir": str(art.run_dir), "configHash": art.configHash,
                      "samples": str(art.samples), "checkpoints": len(art.checkpoints)}))
    return EXIT_OK


def _analyze(args) -> int:
    a = harness.analyze(args.run, args.n, args.mu, args.mode, args.min_duration, args.allow_mu_outside)
    print(f"Re = {a.Re:.6g}")
    for n, r in a.report["n"].items():
        w = r["widths"]
        print(f"n={n}: good {w['nGood']} bad {w['nBad']} ratio {w['ratio']} predicted {w['predictedRatio']:.4g}"
              f" dangerous {len(a.dangerous[n].dangerous)}")
    return EXIT_OK


def _verify(args) -> int:
    ok, checks = harness.verify(args.run, args.ebal_tol)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:28s} margin={c.margin:.3e}  {c.detail}")
    return EXIT_OK if ok else EXIT_FAIL


def _spectrum(args) -> int:
    fit = harness.spectrum(args.run, args.kmin, args.kmax)
    print(json.dumps({"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual,
                      "shells": fit.shells}))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"simulate": _simulate, "analyze": _analyze, "verify": _verify, "spectrum": _spectrum}[args.cmd]
    try:
        return handler(args)
    except harness.ConfigError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
