"""Command-line front door: ``degenlab --config run.ini --command certify``.

Exit status: 0 success (certify: LocalizedObserved), 1 validation tolerances
missed, 2 NotLocalized, 3 Inconclusive, 64 config parse error, 65 parameter
validation failure, 70 numerical instability.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import degiorgi, walkers
from .config import COMMANDS, ConfigError, RunConfig, load_config, _floats, _opt_float
from .field import box_field, integrate, support_radius, write_field_csv
from .oracle import BarenblattSpec, barenblatt
from .params import derive_constants, validate_params, write_constants_csv
from .solver import InstabilityError, epsilon_sweep, solve, write_trajectory

log = logging.getLogger("degenlab")

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_PARSE = 64
EXIT_INVALID = 65
EXIT_UNSTABLE = 70

PME_L1_TOL = 0.02
PME_EXPONENT_TOL = 0.05


class Artifacts:
    """Collects ``(name, path, rows)`` for the manifest."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.items = []

    def add(self, name: str, path: Path, rows: int):
        self.items.append((name, Path(path), int(rows)))

    def extend(self, pairs, prefix: str):
        for path, rows in pairs:
            self.add(f"{prefix}.{Path(path).stem}", path, rows)


def _fmt(x) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def write_manifest(cfg: RunConfig, arts: Artifacts, extra: dict, status: int) -> Path:
    """Plain ``key = value`` manifest; the only non-deterministic line is ``timestamp``."""
    path = arts.outdir / "manifest.txt"
    lines = [f"timestamp = {time.strftime('%Y-%m-%dT%H:%M:%S%z')}", f"command = {cfg.command}",
             f"seed = {cfg.seed}", f"exit_status = {status}"]
    lines += [f"config.{k} = {v}" for k, v in sorted(cfg.resolved().items())]
    lines += [f"result.{k} = {_fmt(v)}" for k, v in extra.items()]
    for name, p, rows in arts.items:
        lines.append(f"artifact.{name} = {p.name}")
        lines.append(f"rows.{name} = {rows}")
    path.write_text("\n".join(lines) + "\n")
    return path


def _write_summary(arts: Artifacts, text: str):
    p = arts.outdir / "summary.txt"
    p.write_text(text.rstrip() + "\n")
    arts.add("summary", p, text.rstrip().count("\n") + 1)


def cmd_constants(cfg: RunConfig, arts: Artifacts):
    grid = cfg.grid()
    omega = grid.values.size * grid.h**grid.dim
    omega0 = float(cfg.geometry.omega_mask(grid, 0).sum()) * grid.h**grid.dim
    dc = derive_constants(cfg.params, cfg.geometry.n_max, cfg.solver.t_end, omega, omega0)
    p = arts.outdir / "constants.csv"
    arts.add("constants", p, write_constants_csv(dc, p))
    chk = validate_params(cfg.params)
    text = "\n".join(f"{k} = {v:.12g}" for k, v in dc.as_rows())
    _write_summary(arts, text + f"\nadmissibility: {chk}")
    return EXIT_OK, {"eps0": dc.eps0, "Lambda": dc.Lambda, "lam": dc.lam, "admissible": chk.ok}


def cmd_solve(cfg: RunConfig, arts: Artifacts):
    traj = solve(cfg.initial_field(), cfg.solver)
    arts.extend(write_trajectory(traj, arts.outdir / "snapshots"), "snapshot")
    thr = float(cfg.get("geometry", "support_threshold"))
    res = {"steps": traj.step_count, "dt_min": traj.dt_min, "dt_max": traj.dt_max,
           "dt_mean": traj.dt_mean, "retries": traj.retries,
           "support_radius": support_radius(traj.final, thr), "max_u": float(traj.final.values.max())}
    _write_summary(arts, "\n".join(f"{k} = {_fmt(v)}" for k, v in res.items()))
    return EXIT_OK, res


def cmd_sweep(cfg: RunConfig, arts: Artifacts):
    eps = _floats(cfg.get("sweep", "eps"))
    u0 = cfg.initial_field()
    sw = epsilon_sweep(u0, cfg.solver, eps)
    thr = float(cfg.get("geometry", "support_threshold"))
    p = arts.outdir / "sweep.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "support_radius", "max_u", "max_drop", "steps", "distance_to_next"])
        for i, (e, tr) in enumerate(sw.runs):
            drop = 1 - tr.final.values.max() / max(u0.values.max(), 1e-300)
            dist = sw.distances[i] if i < len(sw.distances) else float("nan")
            w.writerow([_fmt(e), _fmt(support_radius(tr.final, thr)), _fmt(float(tr.final.values.max())),
                        _fmt(float(drop)), tr.step_count, _fmt(dist)])
    arts.add("sweep", p, len(sw.runs))
    for e, tr in sw.runs:
        fp = arts.outdir / f"final_eps_{e:.0e}.csv"
        arts.add(f"final_eps_{e:.0e}", fp, write_field_csv(tr.final, fp))
    res = {f"support_radius_eps_{e:.0e}": support_radius(tr.final, thr) for e, tr in sw.runs}
    _write_summary(arts, "\n".join(f"{k} = {_fmt(v)}" for k, v in res.items()))
    return EXIT_OK, res


def cmd_certify(cfg: RunConfig, arts: Artifacts):
    T = cfg.solver.t_end
    scfg = cfg.solver.with_(energy_geometry=cfg.geometry)
    if len(scfg.snapshot_times) < 200:
        scfg = scfg.with_(snapshot_times=tuple(T * np.arange(1, 201) / 200))
    traj = solve(cfg.initial_field(), scfg)
    thr = float(cfg.get("geometry", "support_threshold"))
    rep = degiorgi.verify_recursion(traj, cfg.geometry, cfg.params, T, threshold=thr)
    arts.extend(degiorgi.write_report(rep, arts.outdir), "certificate")
    _write_summary(arts, rep.summary())
    res = {"verdict": rep.verdict, "I_0": float(rep.I_seq[0]), "c_fit": rep.c_fit,
           "decay": rep.decay, "strictly_decreasing": rep.strictly_decreasing}
    return rep.exit_code, res


def cmd_validate(cfg: RunConfig, arts: Artifacts):
    scfg = cfg.solver.with_(mode="pme")
    m, dim = scfg.pme_m, cfg.params.dim
    amp = float(cfg.get("initial", "amplitude"))
    t0 = float(cfg.get("initial", "barenblatt_time"))
    spec = BarenblattSpec.from_constant(m, dim, amp)
    grid = cfg.grid()
    u0 = grid.with_values(barenblatt(grid.coords(), t0, spec))
    # the solver clock starts at 0; the profile is shifted by t0
    traj = solve(u0, scfg)
    shifted = BarenblattSpec(m, dim, spec.mass, t_offset=t0)
    fin = traj.final
    exact = fin.with_values(barenblatt(fin.coords(), fin.time, shifted))
    l1 = integrate(exact.with_values(np.abs(fin.values - exact.values))) / integrate(exact)
    times = np.array([s.time for s in traj.snapshots]) + t0
    thr = float(cfg.get("geometry", "support_threshold"))
    # the explicit scheme pushes a doubly-exponentially small precursor one node
    # per step, so a zero threshold would track the scheme and not the front
    radii = np.array([support_radius(s, thr) for s in traj.snapshots])
    slope = float(np.polyfit(np.log(times), np.log(radii), 1)[0])
    r_exact = shifted.support_radius(fin.time)
    res = {"l1_error": l1, "support_radius": radii[-1], "support_exact": r_exact,
           "support_error_in_h": abs(radii[-1] - r_exact) / grid.h, "growth_exponent": slope,
           "growth_exact": spec.a / dim}
    ok = l1 <= PME_L1_TOL and abs(radii[-1] - r_exact) <= 3 * grid.h and abs(slope - spec.a / dim) <= PME_EXPONENT_TOL
    arts.extend(write_trajectory(traj, arts.outdir / "snapshots"), "snapshot")
    _write_summary(arts, "\n".join(f"{k} = {_fmt(v)}" for k, v in res.items()) + f"\npass = {ok}")
    return (EXIT_OK if ok else EXIT_TOLERANCE), res


def cmd_walk(cfg: RunConfig, arts: Artifacts):
    w = cfg.raw["walkers"]
    n = int(w["particles"])
    grid = cfg.grid()
    hist_h = _opt_float(w["hist_h"])
    if hist_h:
        grid = box_field(float(cfg.get("grid", "half_width")), hist_h, cfg.params.dim)
    kind = cfg.get("initial", "kind")
    if kind == "point":
        ens = walkers.Ensemble.point_source(n, cfg.params.dim, total_mass=float(cfg.get("initial", "amplitude")),
                                            seed=cfg.seed)
    else:
        u0 = cfg.initial_field()
        ens = walkers.sample_from_density(u0, n, seed=cfg.seed)
    stats = walkers.WalkStats()
    out = walkers.advance(ens, cfg.law, cfg.params, cfg.solver.t_end, grid,
                          refresh_every=_opt_float(w["refresh_every"]), tau_max=_opt_float(w["tau_max"]),
                          weighting=w["weighting"], absorption=w["absorption"], stats=stats)
    p = arts.outdir / "ensemble.csv"
    arts.add("ensemble", p, walkers.write_ensemble_csv(out, p))
    dens = walkers.estimate_density(out, grid)
    p = arts.outdir / "density.csv"
    arts.add("density", p, write_field_csv(dens.field, p))
    mean, var, se_m, se_v = walkers.ensemble_moments(out)
    res = {"jumps": stats.jumps, "windows": stats.windows, "absorbed_boundary": stats.absorbed_boundary,
           "outside_hist": dens.outside, "total_weight": out.total_weight(),
           "mean": float(mean[0]), "variance": float(var[0]), "variance_stderr": float(se_v[0]),
           "support_radius": support_radius(dens.field, float(cfg.get("geometry", "support_threshold")))}
    _write_summary(arts, "\n".join(f"{k} = {_fmt(v)}" for k, v in res.items()))
    return EXIT_OK, res


HANDLERS = {
    "constants": cmd_constants, "solve": cmd_solve, "sweep": cmd_sweep,
    "certify": cmd_certify, "validate": cmd_validate, "walk": cmd_walk,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg.command``; writes artifacts plus ``manifest.txt``; returns the exit status."""
    # the admissibility conditions only matter for the certificate; with
    # alpha + beta = 0 the certificate is Inconclusive whatever the other values
    chk = validate_params(cfg.params)
    degenerate = cfg.params.alpha + cfg.params.beta > 0
    if cfg.command == "certify" and degenerate and not chk:
        log.error("parameter validation failed: %s", chk)
        return EXIT_INVALID
    if not chk:
        log.warning("parameters violate admissibility conditions: %s", chk)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    arts = Artifacts(outdir)
    try:
        status, res = HANDLERS[cfg.command](cfg, arts)
    except InstabilityError as exc:
        log.error("numerical instability: %s", exc)
        write_manifest(cfg, arts, {"error": str(exc)}, EXIT_UNSTABLE)
        return EXIT_UNSTABLE
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    write_manifest(cfg, arts, res, status)
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="degenlab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, help="INI file; missing keys take defaults")
    ap.add_argument("--output", type=Path, help="output directory (overrides run.output_dir)")
    ap.add_argument("--seed", type=int, help="walker seed (overrides run.seed)")
    ap.add_argument("--command", choices=COMMANDS, help="overrides run.command")
    ap.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override a single config entry; may be repeated")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    overrides = {}
    for item in args.set:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            log.error("bad --set entry %r", item)
            return EXIT_PARSE
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.output is not None:
        overrides["run.output_dir"] = str(args.output)
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    if args.command is not None:
        overrides["run.command"] = args.command
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_PARSE
    except ValueError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
