"""Command-line driver: ``explicit-particles <experiment> [options]``.

Every run writes ``metadata.json`` plus experiment tables into ``--out``.
Exit status is 0 on success, 1 on configuration errors and 2 when the run
became unstable (the artifacts written so far are kept).
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, make_config, parse_config
from .core import ConfigurationError, DomainSpec, lattice_init
from .results import write_metadata, write_table
from .snapshots import write_snapshot_csv
from .solver import InstabilityError, Solver, SolverConfig, CollisionConfig
from .weights import PRESETS, optimize_polynomial, polynomial_F, preset_triple

log = logging.getLogger("explicit_particles")

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE = 0, 1, 2


def _snapshotter(cfg: RunConfig, out: Path):
    if not cfg.snapshots:
        return None
    sdir = out / "snapshots"
    sdir.mkdir(parents=True, exist_ok=True)

    def hook(state):
        if state.k % cfg.snapshots == 0:
            write_snapshot_csv(sdir / f"snap_{state.k:07d}.csv", state.system, state.t, state.k)
    return hook


def _taylor_green(cfg: RunConfig, out: Path, meta: dict, dxs=None):
    from .experiments.taylor_green import convergence_study, run_taylor_green

    if dxs:
        m = cfg.m or 2
        res = convergence_study(cfg.preset, dxs, m, cfg.pressure_recalc, cfg.squared_norm)
        write_table(out / "rates.csv",
                    ["dx_coarse", "dx_fine", "h_coarse", "h_fine", "vel_rate", "pres_rate"],
                    res.rows(), "observed orders in h between consecutive resolutions")
        write_table(out / "errors.csv", ["dx", "h", "vel_err", "pres_err", "stable"],
                    [(dx, h, r.vel_spacetime, r.pres_spacetime, r.stable)
                     for dx, h, r in zip(res.dxs, res.hs, res.reports)],
                    "relative space-time errors per resolution")
        meta["runs"] = [r.summary() for r in res.reports]
        return all(r.stable for r in res.reports)
    h = cfg.radius()
    rep = run_taylor_green(cfg.preset, cfg.dx, None, cfg.pressure_recalc, h=h, eps=cfg.eps,
                           T=cfg.T, squared_norm=cfg.squared_norm,
                           on_step=_snapshotter(cfg, out))
    write_table(out / "errors.csv", ["k", "t", "vel_err", "pres_err"], rep.as_rows(),
                "step, time, relative l2 velocity error, relative l2 mean-shifted pressure error")
    meta["solver"] = rep.metadata
    meta["summary"] = rep.summary()
    print(f"velocity error {rep.vel_spacetime:.6g}  pressure error {rep.pres_spacetime:.6g}")
    return rep.stable


def _cavity(cfg: RunConfig, out: Path, meta: dict):
    from .experiments.cavity import run_cavity
    from .experiments.profiles import load_reference_profile

    ref = load_reference_profile(cfg.reference, "ghia") if cfg.reference else None
    rep = run_cavity(cfg.preset, int(cfg.Re), cfg.dx, cfg.radius() / cfg.dx, cfg.eps, ref,
                     cfg.steady_tol, cfg.max_steps, cfg.t_max, on_step=_snapshotter(cfg, out))
    hist = rep.extra["indicator_history"]
    write_table(out / "errors.csv", ["k", "t", "steady_indicator"], hist.tolist(),
                "max_i |u_i^k - u_i^(k-1)| / tau over fluid particles")
    if "profile" in rep.extra:
        write_table(out / "profile.csv", ["x2", "u1", "u1_ref"], rep.extra["profile"].tolist(),
                    "centre-line velocity of the nearest particle and reference")
    meta["solver"] = rep.metadata
    meta["summary"] = rep.summary()
    print(f"profile error {rep.vel_spacetime:.6g}  steady {rep.extra['steady']}")
    return rep.stable


def _dambreak(cfg: RunConfig, out: Path, meta: dict):
    from .experiments.dambreak import DamBreakParams, run_dambreak, settled_means
    from .experiments.profiles import load_reference_profile

    p = DamBreakParams(dx=cfg.dx, h_factor=cfg.radius() / cfg.dx, eps=cfg.eps, T=cfg.T,
                       preset=cfg.preset, collision=CollisionConfig(cfg.collision))
    ref = load_reference_profile(cfg.reference, "sensor") if cfg.reference else None
    rep = run_dambreak(p, ref, on_step=_snapshotter(cfg, out))
    s = rep.extra["sensors"]
    write_table(out / "sensors.csv", ["t"] + [f"P{l + 1}" for l in range(s.shape[1] - 1)],
                s.tolist(), "time and wall-sensor pressures (nearest boundary particle)")
    meta["solver"] = rep.metadata
    meta["summary"] = rep.summary()
    if len(s):
        meta["settled_means"] = settled_means(rep).tolist()
    if "sensor_errors" in rep.extra:
        meta["sensor_errors"] = rep.extra["sensor_errors"]
    print(f"steps {len(s)}  min pressure {rep.extra['min_pressure']:.6g}")
    return rep.stable


def _truncation(cfg: RunConfig, out: Path, meta: dict):
    from .experiments.truncation import truncation_error_study

    res = truncation_error_study(cfg.preset, cfg.radius() / cfg.dx, cfg.eps_max, cfg.seeds, cfg.dx)
    write_table(out / "errors.csv", ["seed", "error"], list(zip(res.seeds, res.errors)),
                "relative laplacian truncation error per seed")
    meta["summary"] = {"mean": res.mean, "h_factor": res.h_factor, "eps_max": res.eps_max}
    print(f"mean truncation error {res.mean:.6g}")
    return True


def _optimize(cfg: RunConfig, out: Path, meta: dict):
    a = optimize_polynomial(cfg.n, cfg.dim)
    F = polynomial_F(a, cfg.dim)
    write_table(out / "weight.csv", ["power", "coefficient"], list(enumerate(a)),
                f"optimized reference weight sum_k a_k r^k, F = {F:.17g}")
    meta["summary"] = {"coefficients": a.tolist(), "F": F}
    print("coefficients " + " ".join(f"{v:.10g}" for v in a) + f"  F {F:.10g}")
    return True


def _custom(cfg: RunConfig, out: Path, meta: dict):
    d = cfg.dim or 2
    dom = DomainSpec((0.0,) * d, (1.0,) * d, (True,) * d)
    system = lattice_init(dom, cfg.dx)
    force = cfg.body_force or [0.0] * d
    scfg = SolverConfig(rho=1.0, nu=1.0 / cfg.Re, eps=cfg.eps, T=cfg.T, tau=cfg.tau,
                        body_force=np.asarray(force, float),
                        f_inf=float(np.linalg.norm(force)), pressure_recalc=cfg.pressure_recalc)
    solver = Solver(dom, system, preset_triple(cfg.preset, d), cfg.radius(), scfg, dx=cfg.dx)
    rows = []
    snap = _snapshotter(cfg, out)

    def cb(state):
        s = state.system
        ke = 0.5 * float(np.dot(s.volumes, (s.velocities ** 2).sum(axis=1)))
        rows.append((state.k, state.t, ke, float(np.abs(s.velocities).max()), float(s.pressures.mean())))
        if snap:
            snap(state)

    meta["solver"] = solver.metadata()
    ok = True
    try:
        solver.run(callback=cb)
    except InstabilityError as exc:
        meta["diverged_step"] = exc.step
        ok = False
    write_table(out / "errors.csv", ["k", "t", "kinetic_energy", "max_velocity", "mean_pressure"],
                rows, "global diagnostics per step")
    return ok


RUNNERS = {"taylor-green": _taylor_green, "cavity": _cavity, "dambreak": _dambreak,
           "truncation": _truncation, "optimize-weight": _optimize, "custom": _custom}


def execute(cfg: RunConfig, dxs=None) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"version": __version__, "config": cfg.to_dict(), "radius": None}
    if cfg.dx is not None and cfg.experiment != "optimize-weight":
        meta["radius"] = cfg.radius()
    t0 = time.perf_counter()
    runner = RUNNERS[cfg.experiment]
    ok = runner(cfg, out, meta, dxs) if cfg.experiment == "taylor-green" else runner(cfg, out, meta)
    meta["wall_time"] = time.perf_counter() - t0
    meta["status"] = "ok" if ok else "unstable"
    write_metadata(out / "metadata.json", meta)
    return EXIT_OK if ok else EXIT_UNSTABLE


def _floats(s):
    return [float(v) for v in s.split(",")]


def build_parser():
    ap = argparse.ArgumentParser(prog="explicit-particles",
                                 description="Explicit penalty particle solver and benchmarks.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
        p.add_argument("--preset", default="g-s", choices=PRESETS)
        p.add_argument("--snapshots", type=int, default=0, metavar="EVERY",
                       help="write a particle snapshot every EVERY steps")
        p.add_argument("--dx", type=float)
        p.add_argument("--h", type=float, help="influence radius (overrides --h-factor)")
        p.add_argument("--h-factor", type=float, dest="h_factor")
        p.add_argument("--eps", type=float)
        p.add_argument("--T", type=float)

    p = sub.add_parser("taylor-green", help="periodic vortex accuracy / convergence")
    common(p)
    p.add_argument("--m", type=int, help="h = C_m dx^(1/m) (convergence set-up)")
    p.add_argument("--dxs", type=_floats, help="comma-separated spacings for a convergence study")
    p.add_argument("--no-recalc", action="store_true", help="skip the pressure recalculation")
    p.add_argument("--unsquared-norm", action="store_true",
                   help="aggregate the unsquared space norm over time")

    p = sub.add_parser("cavity", help="lid-driven cavity against centre-line reference data")
    common(p)
    p.add_argument("--Re", type=float)
    p.add_argument("--reference", help="reference profile CSV (default: bundled data)")
    p.add_argument("--steady-tol", type=float, default=1e-3, dest="steady_tol")
    p.add_argument("--max-steps", type=int, default=200_000, dest="max_steps")
    p.add_argument("--t-max", type=float, dest="t_max")

    p = sub.add_parser("dambreak", help="reduced 2-D dam break with wall sensors")
    common(p)
    p.add_argument("--reference", help="sensor time-series CSV")
    p.add_argument("--no-collision", action="store_true")

    p = sub.add_parser("truncation", help="laplacian truncation error on perturbed lattices")
    common(p)
    p.add_argument("--eps-max", type=float, default=0.0, dest="eps_max")
    p.add_argument("--seeds", type=int, default=None, help="number of seeds (seed, seed+1, ...)")

    p = sub.add_parser("optimize-weight", help="truncation-optimal polynomial weight")
    p.add_argument("--out", default="out")
    p.add_argument("--n", type=int, default=3, help="polynomial degree")
    p.add_argument("--dim", type=int, default=2)

    p = sub.add_parser("run", help="run from a config file (key = value or JSON)")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    return ap


def _config_from_args(a) -> tuple[RunConfig, list | None]:
    if a.command == "run":
        cfg = parse_config(Path(a.config).read_text())
        if a.out is not None:
            cfg.out = a.out
        return cfg, None
    if a.command == "optimize-weight":
        return make_config(experiment="optimize-weight", n=a.n, dim=a.dim, out=a.out), None
    kw = dict(experiment=a.command, preset=a.preset, out=a.out, snapshots=a.snapshots,
              dx=a.dx, h=a.h, h_factor=a.h_factor, eps=a.eps, T=a.T)
    seed = 0 if a.seed is None else a.seed
    kw["seeds"] = [seed]
    dxs = None
    if a.command == "taylor-green":
        kw.update(m=a.m, pressure_recalc=not a.no_recalc, squared_norm=not a.unsquared_norm)
        dxs = a.dxs
    elif a.command == "cavity":
        kw.update(Re=a.Re, reference=a.reference, steady_tol=a.steady_tol,
                  max_steps=a.max_steps, t_max=a.t_max)
    elif a.command == "dambreak":
        kw.update(reference=a.reference, collision=not a.no_collision)
    elif a.command == "truncation":
        kw.update(eps_max=a.eps_max)
        if a.seeds:
            kw["seeds"] = list(range(seed, seed + a.seeds))
    return make_config(**kw), dxs


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, dxs = _config_from_args(a)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        status = execute(cfg, dxs)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    if status == EXIT_UNSTABLE:
        print(f"run became unstable; partial results in {cfg.out}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
