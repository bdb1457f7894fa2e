"""Command line interface: ``vwwave run|verify|sweep|report``.

Exit codes: 0 success, 1 compute or verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, VWWaveError

log = logging.getLogger("vwwave")


def _cmd_run(args):
    from . import config, experiment

    cfg = config.load(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    run_dir = experiment.run(cfg, args.output)
    print(run_dir)
    return 0


def _cmd_sweep(args):
    from . import config, experiment

    cfg = config.load(args.config)
    run_dir = experiment.sweep(cfg, args.output)
    print(run_dir)
    return 0


def _verify_symmetriser(args):
    from .system import build_system, derive_system, random_coefficients, verify_symmetriser

    rng = np.random.default_rng(args.seed)
    ok = True
    print(f"{'n':>3} {'level':>5} {'size':>5} {'residual':>10}")
    for n in ([args.n] if args.n else range(1, 6)):
        data, _ = random_coefficients(n, args.points or 8, rng)
        sys_ = build_system(n, data)
        for level in range(args.level + 1):
            r = verify_symmetriser(sys_)
            ok &= r == 0.0
            print(f"{n:>3} {level:>5} {sys_.size:>5} {r:>10.3g}")
            if level < args.level:
                sys_ = derive_system(sys_)
    return 0 if ok else 1


def _verify_identities(args):
    from .system import verify_energy_identities

    ns = [args.n] if args.n else [1, 2, 3]
    ok = True
    print(f"{'n':>3} {'identity':<34} {'max rel err':>12}")
    reports = []
    for n in ns:
        rep = verify_energy_identities(n, trials=args.trials, seed=args.seed, points=args.points,
                                       level=args.level)
        reports.append(rep.to_dict())
        for name, r in rep.results.items():
            print(f"{n:>3} {name:<34} {r['max_rel_error']:>12.3e}")
        ok &= rep.passed(args.tol)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(reports, fh, indent=2, sort_keys=True)
    return 0 if ok else 1


def _verify_oracle(args):
    from .analysis import convergence_order
    from .solver import Grid, dalembert_oracle, solve

    g0 = lambda x: np.exp(-x**2)  # noqa: E731
    errors = []
    sizes = [args.points // 4, args.points // 2, args.points]
    for N in sizes:
        grid = Grid(points=N, extent=8.0, horizon=1.0)
        tr = solve([1.0], grid, g0)
        exact = dalembert_oracle(1.0, g0, None, tr.times[-1], grid.axis)
        errors.append(grid.norm(tr.u[-1] - exact) / grid.norm(exact))
    orders = convergence_order(errors)
    print(f"{'points':>7} {'rel L2 error':>13}")
    for N, e in zip(sizes, errors):
        print(f"{N:>7} {e:>13.3e}")
    print(f"observed orders: {', '.join(f'{o:.3f}' for o in orders)}")
    ok = errors[-1] <= 1e-3 and abs(orders[-1] - 2) <= 0.3
    return 0 if ok else 1


def _cmd_verify(args):
    return {"symmetriser": _verify_symmetriser, "identities": _verify_identities,
            "oracle": _verify_oracle}[args.target](args)


def _cmd_report(args):
    from .plotting import render

    run = Path(args.run_dir)
    if not run.is_dir():
        print(f"error: {run} is not a directory", file=sys.stderr)
        return 1
    written, warnings = render(run)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not written:
        print(f"error: no reports found in {run}", file=sys.stderr)
        return 1
    for p in written:
        print(p)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="vwwave", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("config")
    r.add_argument("--output", help="output root (default: $VWWAVE_OUTPUT_ROOT or ./runs)")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("sweep", help="cartesian sweep over kernels x scales")
    s.add_argument("config")
    s.add_argument("--output")
    s.set_defaults(func=_cmd_sweep)

    v = sub.add_parser("verify", help="algebraic and oracle checks")
    v.add_argument("target", choices=["symmetriser", "identities", "oracle"])
    v.add_argument("--n", type=int)
    v.add_argument("--level", type=int, default=1)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--points", type=int)
    v.add_argument("--tol", type=float, default=1e-10)
    v.add_argument("--json", help="write the identity report here")
    v.set_defaults(func=_cmd_verify)

    rep = sub.add_parser("report", help="render plots and a summary for a run directory")
    rep.add_argument("run_dir")
    rep.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify" and args.target == "oracle" and args.points is None:
        args.points = 2048
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except VWWaveError as exc:
        tb = exc.__traceback__
        while tb.tb_next is not None:
            tb = tb.tb_next
        module = tb.tb_frame.f_globals.get("__name__", "?")
        print(f"compute error ({type(exc).__name__} in {module}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
