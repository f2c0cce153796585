"""Explicit finite-difference solver for the regularized degenerate equation.

``EinsteinDegenerate`` advances

    u_t = (u**alpha |grad u|**beta + eps) (k2 Lap u + b . grad u) + |A(u)|

in non-divergence form. ``PorousMediumValidation`` advances the divergence
form ``u_t = Lap(u**m)`` and exists only to check the numerics against the
Barenblatt solution.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .field import DeGiorgiGeometry, ScalarField, integrate, write_field_csv
from .params import ModelParams, reaction_lipschitz, reaction_value

log = logging.getLogger(__name__)

MODES = ("einstein", "pme")
BACKENDS = ("auto", "numpy", "compiled")
UNDERSHOOT_TOL = 1e-8


class InstabilityError(RuntimeError):
    """Raised when a step produces non-finite values or the step budget runs out."""


@dataclass(frozen=True)
class SolverConfig:
    params: ModelParams
    t_end: float
    mode: str = "einstein"
    drift: tuple = ()
    cfl_safety: float = 0.25
    snapshot_times: tuple = ()
    u_floor: float = 0.0
    pme_m: float = 2.0
    upwind_drift: bool = False
    max_steps: int = 5_000_000
    energy_geometry: Optional[DeGiorgiGeometry] = None
    backend: str = "auto"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.t_end <= 0:
            raise ValueError("t_end must be > 0")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if self.mode == "pme" and self.pme_m <= 1:
            raise ValueError("pme_m must be > 1")
        drift = tuple(float(b) for b in self.drift) or (0.0,) * self.params.dim
        if len(drift) != self.params.dim:
            raise ValueError("drift needs one component per axis")
        if any(abs(b) > self.params.k1 + 1e-15 for b in drift):
            raise ValueError(f"|drift| exceeds k1={self.params.k1}")
        object.__setattr__(self, "drift", drift)
        times = tuple(sorted(float(t) for t in self.snapshot_times))
        if any(t <= 0 or t > self.t_end * (1 + 1e-12) for t in times):
            raise ValueError("snapshot times must lie in (0, t_end]")
        object.__setattr__(self, "snapshot_times", times)

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass
class Trajectory:
    """Snapshots of a run; ``snapshots[0]`` is always the initial field.

    When the run tracked the gradient energy, ``energy[j, n]`` is the running
    time integral of ``int_{Omega_{n+1}} |grad z|**(beta+2) dx`` up to
    ``snapshots[j].time``, accumulated over the solver's own steps.
    """

    snapshots: list
    step_count: int = 0
    dt_min: float = math.nan
    dt_max: float = math.nan
    dt_mean: float = math.nan
    mass_history: list = field(default_factory=list)
    energy: Optional[np.ndarray] = None
    retries: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def final(self) -> ScalarField:
        return self.snapshots[-1]


def degenerate_coefficient(u, grad_norm, params: ModelParams):
    """``u**alpha * |grad u|**beta + eps``: inverse waiting time plus regularization."""
    u = np.asarray(u, dtype=float)
    g = np.asarray(grad_norm, dtype=float)
    if np.any(u < 0) or np.any(g < 0):
        raise ValueError("u and |grad u| must be >= 0")
    out = u**params.alpha * g**params.beta + params.epsilon_reg
    return out if out.ndim else float(out)


def _padded(values: np.ndarray) -> np.ndarray:
    # ghost nodes carry the Dirichlet value 0
    return np.pad(values, 1)


def _interior(a: np.ndarray, ax: int, offset: int) -> np.ndarray:
    idx = [slice(1, -1)] * a.ndim
    idx[ax] = slice(1 + offset, a.shape[ax] - 1 + offset)
    return a[tuple(idx)]


def _stencils(values: np.ndarray, h: float):
    """Central gradient components and 5-point Laplacian with zero ghost nodes."""
    p = _padded(values)
    lap = np.zeros_like(values)
    grads = []
    for ax in range(values.ndim):
        fwd = _interior(p, ax, 1)
        bwd = _interior(p, ax, -1)
        lap += fwd + bwd
        grads.append((fwd, bwd))
    lap = (lap - 2 * values.ndim * values) / h**2
    return p, lap, grads


def _rate(values: np.ndarray, h: float, cfg: SolverConfig) -> np.ndarray:
    par = cfg.params
    if cfg.mode == "pme":
        _, lap, _ = _stencils(values**cfg.pme_m, h)
        return lap
    _, lap, nb = _stencils(values, h)
    comps = [(fw - bw) / (2 * h) for fw, bw in nb]
    gnorm = np.sqrt(sum(c**2 for c in comps)) if len(comps) > 1 else np.abs(comps[0])
    coef = values**par.alpha * gnorm**par.beta + par.epsilon_reg
    adv = np.zeros_like(values)
    for (fw, bw), c, bi in zip(nb, comps, cfg.drift):
        if bi == 0:
            continue
        if cfg.upwind_drift:
            # u_t = b u_x transports with velocity -b
            c = (fw - values) / h if bi > 0 else (values - bw) / h
        adv += bi * c
    out = coef * (par.k2 * lap + adv)
    if par.reaction.active:
        out += reaction_value(par.reaction, values)
    return out


def max_coefficient(f: ScalarField, cfg: SolverConfig) -> float:
    u = f.values
    if cfg.mode == "pme":
        return float(cfg.pme_m * u.max() ** (cfg.pme_m - 1)) if u.size else 0.0
    par = cfg.params
    if par.beta:
        _, _, nb = _stencils(u, f.h)
        g2 = sum(((fw - bw) / (2 * f.h)) ** 2 for fw, bw in nb)
        coef = u**par.alpha * np.sqrt(g2) ** par.beta + par.epsilon_reg
        return float(coef.max())
    return float(u.max() ** par.alpha + par.epsilon_reg) if par.alpha else 1.0 + par.epsilon_reg


def stable_dt(f: ScalarField, cfg: SolverConfig) -> float:
    """Explicit-Euler step bound from diffusion, drift and reaction rates."""
    h, n = f.h, f.dim
    mc = max_coefficient(f, cfg)
    k2 = 1.0 if cfg.mode == "pme" else cfg.params.k2
    k1 = 0.0 if cfg.mode == "pme" else cfg.params.k1
    lip = 0.0 if cfg.mode == "pme" else reaction_lipschitz(cfg.params.reaction, float(f.values.max()))
    denom = 2 * n * k2 * mc + h * k1 * math.sqrt(n) * mc + h**2 * lip
    if denom <= 0:
        return cfg.cfl_safety * h**2
    return cfg.cfl_safety * h**2 / denom


def _raw_step(f: ScalarField, cfg: SolverConfig, dt: float) -> np.ndarray:
    new = f.values + dt * _rate(f.values, f.h, cfg)
    if not np.all(np.isfinite(new)):
        raise InstabilityError(f"non-finite values after step at t={f.time:g}, dt={dt:g}")
    if f.dirichlet:
        new[f.boundary_mask()] = 0.0
    return new


def step(f: ScalarField, cfg: SolverConfig, dt: float) -> ScalarField:
    """One explicit Euler step, Dirichlet nodes zeroed, values clamped at ``u_floor``."""
    new = _raw_step(f, cfg, dt)
    return f.with_values(np.maximum(new, cfg.u_floor), time=f.time + dt)


class _EnergyTracker:
    """Running ``int dt int_{Omega_{n+1}} |grad z|**(beta+2)`` for every n."""

    def __init__(self, geom: DeGiorgiGeometry, like: ScalarField, params: ModelParams):
        self.masks = geom.annulus_masks(like).reshape(geom.n_max + 1, -1).astype(float)
        self.kappa = params.z_exponent
        self.power = params.beta + 2
        self.h, self.dim = like.h, like.dim
        self.total = np.zeros(geom.n_max + 1)

    def add(self, values: np.ndarray, dt: float):
        z = values**self.kappa
        g = np.gradient(z, self.h, edge_order=2)
        g2 = g**2 if z.ndim == 1 else sum(c**2 for c in g)
        dens = (g2 ** (self.power / 2)).reshape(-1)
        self.total += dt * (self.masks @ dens) * self.h**self.dim


def _use_compiled(f: ScalarField, cfg: SolverConfig) -> bool:
    if cfg.backend == "numpy":
        return False
    if f.dim != 1:
        if cfg.backend == "compiled":
            raise ValueError("the compiled backend only handles 1D grids")
        return False
    return True


def solve(u0: ScalarField, cfg: SolverConfig) -> Trajectory:
    """Advance ``u0`` to ``cfg.t_end`` with the adaptive explicit scheme.

    The step is recomputed from :func:`stable_dt` every step and shortened to
    land exactly on each requested snapshot time. A step whose raw update
    undershoots below ``-1e-8 * max(u)`` is retried with half the step.
    1D runs use the compiled loop unless ``cfg.backend == "numpy"``.
    """
    if np.any(u0.values < 0):
        raise ValueError("initial data must be nonnegative")
    cur = u0.with_values(np.maximum(u0.values, cfg.u_floor), time=0.0)
    if cur.dirichlet:
        cur.values[cur.boundary_mask()] = 0.0
    targets = list(cfg.snapshot_times)
    if not targets or targets[-1] < cfg.t_end:
        targets.append(cfg.t_end)
    if _use_compiled(cur, cfg):
        traj = _solve_compiled(cur, cfg, targets)
    else:
        traj = _solve_numpy(cur, cfg, targets)
    log.debug("solve: %d steps, %d retries", traj.step_count, traj.retries)
    return traj


def _solve_numpy(cur: ScalarField, cfg: SolverConfig, targets: list) -> Trajectory:
    tracker = _EnergyTracker(cfg.energy_geometry, cur, cfg.params) if cfg.energy_geometry else None
    traj = Trajectory(snapshots=[cur.copy()])
    traj.mass_history.append((0.0, integrate(cur)))
    energies = [tracker.total.copy()] if tracker else None
    dts = []
    t = 0.0
    for target in targets:
        while t < target:
            if len(dts) >= cfg.max_steps:
                raise InstabilityError(f"step budget {cfg.max_steps} exhausted at t={t:g}")
            dt = stable_dt(cur, cfg)
            last = t + dt >= target * (1 - 1e-14)
            if last:
                dt = target - t
            umax = float(cur.values.max())
            while True:
                raw = _raw_step(cur, cfg, dt)
                if raw.min() >= -UNDERSHOOT_TOL * umax or dt < 1e-14 * max(target, 1.0):
                    break
                dt *= 0.5
                last = False
                traj.retries += 1
            if tracker:
                tracker.add(cur.values, dt)
            t = target if last else t + dt
            cur = cur.with_values(np.maximum(raw, cfg.u_floor), time=t)
            dts.append(dt)
        traj.snapshots.append(cur.copy())
        traj.mass_history.append((t, integrate(cur)))
        if tracker:
            energies.append(tracker.total.copy())
    traj.step_count = len(dts)
    if dts:
        arr = np.array(dts)
        traj.dt_min, traj.dt_max, traj.dt_mean = float(arr.min()), float(arr.max()), float(arr.mean())
    if tracker:
        traj.energy = np.array(energies)
    return traj


def _solve_compiled(cur: ScalarField, cfg: SolverConfig, targets: list) -> Trajectory:
    from . import _kernels as K

    par = cfg.params
    geom = cfg.energy_geometry
    n_lev = geom.n_max + 1 if geom else 0
    if geom:
        rad = cur.radius()
        level = (rad[None, :] >= geom.radii[1:n_lev + 1, None]).sum(axis=0).astype(np.int64)
    else:
        level = np.zeros(cur.shape[0], dtype=np.int64)
    energy = np.zeros(n_lev)
    stats = np.array([np.inf, 0.0, 0.0, 0.0])
    rx = par.reaction
    r_coeff = rx.coeff if (rx.active and cfg.mode == "einstein") else 0.0
    mode = K.MODE_PME if cfg.mode == "pme" else K.MODE_EINSTEIN
    u = cur.values.copy()
    traj = Trajectory(snapshots=[cur.copy()])
    traj.mass_history.append((0.0, integrate(cur)))
    energies = [energy.copy()]
    t, steps = 0.0, 0
    for target in targets:
        status, t, steps = K.march_1d(
            u, cur.h, t, target, mode, par.alpha, par.beta, par.epsilon_reg, par.k2, par.k1,
            cfg.drift[0], cfg.upwind_drift, cfg.pme_m, r_coeff, rx.power, cfg.cfl_safety,
            cfg.u_floor, cur.dirichlet, cfg.max_steps, steps, geom is not None, level,
            par.z_exponent, par.beta + 2.0, energy, stats, np.empty(0), UNDERSHOOT_TOL,
        )
        if status == K.NONFINITE:
            raise InstabilityError(f"non-finite values after step at t={t:g}")
        if status == K.BUDGET:
            raise InstabilityError(f"step budget {cfg.max_steps} exhausted at t={t:g}")
        snap = cur.with_values(u.copy(), time=t)
        traj.snapshots.append(snap)
        traj.mass_history.append((t, integrate(snap)))
        energies.append(energy.copy())
    traj.step_count = steps
    traj.retries = int(stats[3])
    if steps:
        traj.dt_min, traj.dt_max, traj.dt_mean = float(stats[0]), float(stats[1]), float(stats[2] / steps)
    if geom:
        traj.energy = np.array(energies)
    return traj


@dataclass
class SweepResult:
    runs: list
    distances: list

    @property
    def eps(self) -> list:
        return [e for e, _ in self.runs]


def epsilon_sweep(u0: ScalarField, cfg: SolverConfig, eps_list: Sequence[float]) -> SweepResult:
    """Solve once per regularization level and compare consecutive final states.

    ``distances[i]`` is the sup-norm gap between the final snapshots of runs
    ``i`` and ``i+1``.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be strictly decreasing")
    runs = []
    for eps in eps_list:
        c = cfg.with_(params=cfg.params.with_(epsilon_reg=eps))
        runs.append((eps, solve(u0, c)))
    dist = [
        float(np.abs(a.final.values - b.final.values).max())
        for (_, a), (_, b) in zip(runs, runs[1:])
    ]
    return SweepResult(runs, dist)


def write_trajectory(traj: Trajectory, outdir, prefix: str = "snapshot") -> list[tuple[Path, int]]:
    """One field CSV per snapshot plus the mass history; returns ``(path, rows)`` pairs."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for j, snap in enumerate(traj.snapshots):
        p = outdir / f"{prefix}_{j:04d}.csv"
        written.append((p, write_field_csv(snap, p)))
    p = outdir / f"{prefix}_mass.csv"
    with p.open("w") as fh:
        fh.write("time,mass\n")
        for t, m in traj.mass_history:
            fh.write(f"{t:.17g},{m:.17g}\n")
    written.append((p, len(traj.mass_history)))
    return written
