"""Command-line interface: ``saulyev-ac run | converge | bench``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__, _kernels
from .diagnostics import CSV_HEADER, MonitorViolation
from .experiments import (
    ReferenceCache,
    bench_per_step,
    ic_eight_circles,
    ic_random,
    ic_sinesine,
    reference_solution,
    spatial_refinement,
    temporal_refinement,
)
from .grid import Grid, sup_norm
from .potentials import Potential
from .schemes import NOMINAL_ORDER, Scheme, SchemeConfig, ThresholdError, max_stable_tau, simulate
from .snapshots import load_snapshot, save_snapshot
from .solvers import NewtonConfig

EXIT_OK = 0
EXIT_VIOLATION = 3
EXIT_ORDER = 4
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def parse_number(token: str) -> float:
    """Float, or a power written ``2^-9`` / ``2**-9``."""
    token = token.strip()
    for sep in ("^", "**"):
        if sep in token:
            base, exp = token.split(sep, 1)
            return float(base) ** float(exp)
    return float(token)


def parse_list(text: str, conv=parse_number) -> list:
    return [conv(t) for t in text.split(",") if t.strip()]


def make_ic(token: str, grid: Grid, epsilon: float):
    token = token.strip()
    if token == "sinesine":
        return ic_sinesine(grid)
    if token == "circles":
        return ic_eight_circles(grid, epsilon)
    if token.startswith("random"):
        seed, amp = 0, 0.5
        if ":" in token:
            parts = token.split(":", 1)[1].split(",")
            seed = int(parts[0])
            if len(parts) > 1:
                amp = float(parts[1])
        return ic_random(grid, amp, seed)
    if token.startswith("file:"):
        field, _ = load_snapshot(token[5:])
        if field.grid != grid:
            raise UsageError(f"initial field {token[5:]} lives on {field.grid}, expected {grid}")
        return field
    raise UsageError(f"unknown initial condition {token!r}")


def _kappa(token: str):
    return None if token == "auto" else float(token)


# ------------------------------------------------------------------------- run


def _run_config(args) -> dict:
    return {
        "scheme": Scheme.parse(args.scheme).value,
        "potential": args.potential,
        "dim": args.dim,
        "M": args.M,
        "L": args.L,
        "eps": args.eps,
        "tau": args.tau,
        "t_end": args.t_end,
        "kappa": args.kappa,
        "ic": args.ic,
        "nonlinear_solver": args.nonlinear_solver,
        "newton_tol": args.newton_tol,
        "newton_max_iter": args.newton_max_iter,
        "snapshot_every": args.snapshot_every,
        "diag_every": args.diag_every,
        "allow_unstable": args.allow_unstable,
        "strict": not args.lenient,
    }


def cmd_run(args) -> int:
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
        for key, val in manifest["config"].items():
            attr = {"eps": "eps", "strict": None}.get(key, key)
            if attr is not None:
                setattr(args, attr, val)
        args.lenient = not manifest["config"].get("strict", True)
    missing = [n for n in ("scheme", "M", "eps", "tau", "t_end", "out") if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))

    p = Potential.parse(args.potential)
    scheme = Scheme.parse(args.scheme)
    if args.nonlinear_solver == "cardano" and p.kind != "poly":
        raise UsageError("--nonlinear-solver cardano requires the poly potential")
    if args.ic == "circles" and not math.isclose(args.L, 2 * math.pi, rel_tol=1e-12):
        raise UsageError("--ic circles requires --L 6.283185307179586")
    grid = Grid(args.dim, args.M, args.L)
    cfg = SchemeConfig(
        scheme, args.tau, args.eps, kappa=_kappa(str(args.kappa)),
        newton=NewtonConfig(tol=args.newton_tol, max_iter=args.newton_max_iter),
        nonlinear_solver=args.nonlinear_solver, enforce_thresholds=not args.allow_unstable,
    )
    u0 = make_ic(args.ic, grid, args.eps)
    kappa = cfg.resolved_kappa(p)
    try:
        limit = max_stable_tau(scheme, grid, p, kappa, args.eps)
    except ThresholdError:
        if not args.allow_unstable:
            raise
        limit = math.nan

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "saulyev-ac",
        "version": __version__,
        "config": _run_config(args),
        "resolved": {
            "kappa": kappa,
            "beta": p.beta,
            "h": grid.h,
            "r": args.eps**2 / grid.h**2,
            "max_stable_tau": limit,
            "n_steps": int(round(args.t_end / args.tau)),
            "newton": asdict(cfg.newton),
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    save_snapshot(out / "snapshots" / "step_000000", u0, 0.0, scheme.value, p.token)

    def sink(n, t, field):
        save_snapshot(out / "snapshots" / f"step_{n:06d}", field, t, scheme.value, p.token)

    diag = open(out / "diagnostics.csv", "w")
    diag.write(CSV_HEADER + "\n")

    def on_report(rep):
        diag.write(rep.csv_row() + "\n")

    # load compiled kernels now so the first step's wall time is not compile time
    _kernels.warmup()
    status = EXIT_OK
    try:
        traj = simulate(
            u0, cfg, p, args.t_end, args.snapshot_every, sink,
            strict=not args.lenient, diag_every=args.diag_every, on_report=on_report,
        )
        save_snapshot(out / "final", traj.final, traj.times[-1], scheme.value, p.token)
        ok = traj.all_dmp_ok and traj.all_energy_decreasing
        last = traj.reports[-1]
        print(
            f"{scheme.value}: {len(traj.reports)} reports, t={last.time:g}, E={last.energy:.10g}, "
            f"sup={last.sup_norm:.10g}, dmp_ok={traj.all_dmp_ok}, energy_decreasing={traj.all_energy_decreasing}"
        )
        if not ok:
            status = EXIT_VIOLATION
    except MonitorViolation as exc:
        print(f"monitor violation: {exc}", file=sys.stderr)
        status = EXIT_VIOLATION
    finally:
        diag.close()
    return status


# -------------------------------------------------------------------- converge


def cmd_converge(args) -> int:
    p = Potential.parse(args.potential)
    scheme = Scheme.parse(args.scheme)
    kappa = _kappa(str(args.kappa))
    cache = ReferenceCache(args.cache) if args.cache else None
    nominal = args.nominal if args.nominal is not None else NOMINAL_ORDER[scheme]
    if args.mode == "time":
        taus = sorted(parse_list(args.taus), reverse=True)
        if len(taus) < 2:
            raise UsageError("--taus needs at least two steps")
        grid = Grid(2, args.M, args.L)
        u0 = make_ic(args.ic, grid, args.eps)
        tau_ref = args.tau_ref if args.tau_ref is not None else min(taus) / 16
        ref = reference_solution(u0, p, args.eps, args.t_end, tau_ref, kappa=kappa, cache=cache, ic_label=args.ic)
        res = temporal_refinement(
            scheme, p, grid, taus, args.t_end, ref, u0=u0, epsilon=args.eps, kappa=kappa,
            nonlinear_solver=args.nonlinear_solver, allow_unstable=args.allow_unstable,
        )
    else:
        Ms = parse_list(args.Ms, int)
        if len(Ms) < 2:
            raise UsageError("--Ms needs at least two sizes")
        if args.tau is None:
            raise UsageError("space mode needs --tau")
        if args.ic not in ("sinesine",):
            raise UsageError("space mode supports --ic sinesine only")
        res = spatial_refinement(
            scheme, p, args.t_end, args.tau, Ms, M_ref=args.M_ref, L=args.L, epsilon=args.eps,
            kappa=kappa, cache=cache,
        )
    table = res.to_csv()
    sys.stdout.write(table)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(table)
    mean = res.mean_order(args.asymptotic_cells)
    tol = args.order_tol if args.order_tol is not None else (0.15 if nominal == 1 else 0.2)
    print(f"# mean asymptotic order {mean:.4f} (nominal {nominal}, tolerance {tol})")
    if not (abs(mean - nominal) <= tol):
        return EXIT_ORDER
    return EXIT_OK


# ----------------------------------------------------------------------- bench


def cmd_bench(args) -> int:
    p = Potential.parse(args.potential)
    res = bench_per_step(
        [s.strip() for s in args.schemes.split(",") if s.strip()],
        parse_list(args.sizes, int), p, args.steps, dim=args.dim, L=args.L, epsilon=args.eps,
        tau=args.tau, nonlinear_solver=args.nonlinear_solver,
    )
    sys.stdout.write(res.to_csv())
    sys.stdout.write(res.exponents_csv())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.csv").write_text(res.to_csv())
        (out / "exponents.csv").write_text(res.exponents_csv())
    return EXIT_OK


# ---------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="saulyev-ac", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, scheme_required=True):
        sp.add_argument("--potential", default="poly", help="poly | log | log:theta,theta_c")
        sp.add_argument("--L", type=float, default=2 * math.pi, help="domain length per axis")
        sp.add_argument("--eps", type=float, default=None if scheme_required else 0.05)
        sp.add_argument("--kappa", default="auto", help="'auto' or a number")
        sp.add_argument("--nonlinear-solver", choices=("newton", "cardano"), default="newton")

    run = sub.add_parser("run", help="march one simulation and write diagnostics")
    common(run)
    run.add_argument("--scheme")
    run.add_argument("--dim", type=int, default=2, choices=(1, 2))
    run.add_argument("--M", type=int)
    run.add_argument("--tau", type=parse_number)
    run.add_argument("--t-end", dest="t_end", type=parse_number)
    run.add_argument("--ic", default="sinesine", help="sinesine | circles | random:seed,amp | file:path")
    run.add_argument("--newton-tol", type=float, default=1e-12)
    run.add_argument("--newton-max-iter", type=int, default=50)
    run.add_argument("--snapshot-every", type=int, default=0)
    run.add_argument("--diag-every", type=int, default=1)
    run.add_argument("--allow-unstable", action="store_true", help="skip the step-size bound check")
    run.add_argument("--lenient", action="store_true", help="record monitor violations instead of aborting")
    run.add_argument("--manifest", help="re-run the configuration stored in a manifest.json")
    run.add_argument("--out")
    run.set_defaults(func=cmd_run)

    conv = sub.add_parser("converge", help="temporal or spatial refinement study")
    common(conv)
    conv.set_defaults(eps=0.01, L=1.0)
    conv.add_argument("--mode", choices=("time", "space"), required=True)
    conv.add_argument("--scheme", required=True)
    conv.add_argument("--M", type=int, default=128)
    conv.add_argument("--t-end", dest="t_end", type=parse_number, default=0.25)
    conv.add_argument("--taus", default="2^-9,2^-10,2^-11,2^-12,2^-13")
    conv.add_argument("--tau-ref", dest="tau_ref", type=parse_number, default=None)
    conv.add_argument("--tau", type=parse_number, default=None, help="fixed step for space mode")
    conv.add_argument("--Ms", default="16,32,64,128")
    conv.add_argument("--M-ref", dest="M_ref", type=int, default=512)
    conv.add_argument("--ic", default="sinesine")
    conv.add_argument("--nominal", type=float, default=None)
    conv.add_argument("--order-tol", type=float, default=None)
    conv.add_argument("--asymptotic-cells", type=int, default=3)
    conv.add_argument("--allow-unstable", action="store_true")
    conv.add_argument("--cache", default=None, help="directory for cached reference fields")
    conv.add_argument("--out", default=None)
    conv.set_defaults(func=cmd_converge)

    bench = sub.add_parser("bench", help="per-step wall time versus grid size")
    common(bench, scheme_required=False)
    bench.add_argument("--schemes", default="ess1,ess1-adjoint,ss2,ss2-adjoint,ssi1")
    bench.add_argument("--sizes", default="128,256,512,1024")
    bench.add_argument("--steps", type=int, default=5)
    bench.add_argument("--dim", type=int, default=2, choices=(1, 2))
    bench.add_argument("--tau", type=parse_number, default=None)
    bench.add_argument("--out", default=None)
    bench.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ThresholdError, ValueError) as exc:
        print(f"saulyev-ac {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
