"""Command-line entry point: ``ipwbias <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
import time

from . import harness
from .errors import IpwBiasError


def _design(value: str) -> str:
    key = {"a": "designA", "b": "designB", "c": "designC"}.get(value.lower())
    if key is None:
        raise argparse.ArgumentTypeError("design must be A, B or C")
    return key


def _n_list(value: str):
    try:
        return tuple(int(v) for v in value.split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError("n must be a comma-separated list of integers") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ipwbias", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="finite-sample simulation table")
    s.add_argument("--design", type=_design, default=None)
    s.add_argument("--config", default=None, help="JSON DGP config with a misspec block")
    s.add_argument("--n", type=_n_list, default=(500, 1000, 5000))
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--jobs", type=int, default=1)

    a = sub.add_parser("asymptotic", help="bias limits, components and condition checks")
    a.add_argument("--design", type=_design, required=True)
    a.add_argument("--N", type=int, default=10**6)
    a.add_argument("--nu", type=float, default=0.01, help="overlap threshold for e*; negative disables")

    e = sub.add_parser("example2", help="single-covariate example and curve data")
    e.add_argument("--N", type=int, default=10**6)

    d = sub.add_parser("psdensity", help="fitted propensity densities by arm")
    d.add_argument("--design", type=_design, required=True)
    d.add_argument("--n", type=int, default=10**5)
    d.add_argument("--bins", type=int, default=100)

    c = sub.add_parser("check", help="condition report for a custom config")
    c.add_argument("--config", required=True)
    c.add_argument("--N", type=int, default=10**6)

    for sp in (s, a, e, d, c):
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--out", default=".", help="output directory")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.command == "simulate":
            if (args.design is None) == (args.config is None):
                raise SystemExit("simulate needs exactly one of --design or --config")
            cfg = harness.RunConfig(args.design, args.config, args.n, args.reps, args.seed,
                                    args.jobs, args.out)
            print(harness.run_design(cfg).render())
        elif args.command == "asymptotic":
            nu = None if args.nu < 0 else args.nu
            cfg = harness.RunConfig(args.design, N=args.N, seed=args.seed, out_dir=args.out, nu=nu)
            res = harness.run_asymptotic(cfg)
            for label, v, se in res.rows():
                print(f"{label:<28} {v:>9.3f}  (se {se:.1e})")
        elif args.command == "example2":
            rep = harness.run_example2(args.out, args.N, args.seed)
            for k, v in rep.quadrature.bias.totals().items():
                print(f"Bias({k}*) quadrature {v:.3f}  montecarlo {rep.montecarlo.bias[k].total:.3f}")
        elif args.command == "psdensity":
            harness.emit_ps_density(args.design, args.n, args.seed, args.bins, args.out)
        elif args.command == "check":
            res = harness.check_config(args.config, args.N, args.seed, args.out)
            for e in res.conditions.entries:
                print(f"{e.condition:<4} part {e.part}: applicable={e.applicable} "
                      f"premise={e.premise_holds} conclusion={e.conclusion_holds}")
    except IpwBiasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"done in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
