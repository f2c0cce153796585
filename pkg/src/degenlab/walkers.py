"""Monte Carlo particles for the alpha-beta jump process.

Each particle waits ``tau = tau_ref / (u**alpha |grad u|**beta + eps)`` (capped
at ``tau_max``) at its current position, then makes a free jump drawn from a
symmetric law with per-axis variance ``2 k2 tau_ref`` around ``drift_shift``.
``u`` is the ensemble's own histogram, refreshed every ``refresh_every``.

Two weightings are available:

``"gather"`` (default)
    On a jump ``y -> x`` the weight is multiplied by ``rate(x) / rate(y)``.
    The weighted density then solves ``u_t = rate(x) (phi * u - u) / tau_ref``,
    whose small-jump limit is the non-divergent operator
    ``rate(x) (k2 Lap u - b . grad u)`` with ``b = drift_shift / tau_ref``.
    Total weight is conserved only when the rate is constant.
``"none"``
    Plain scattering walk; weight is conserved exactly, but the limit is
    the divergence form ``k2 Lap(rate u)``.

Random numbers come from :mod:`degenlab.rng`, keyed by particle id and the
particle's own event counter, so results do not depend on batching.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import rng
from .field import ScalarField, gradient, integrate, support_radius
from .params import ModelParams

LAWS = ("gaussian", "uniform_ball")
WEIGHTINGS = ("gather", "none")
ABSORPTION_MODES = ("decay", "delete")


@dataclass(frozen=True)
class JumpLaw:
    """Free-jump law: symmetric about ``drift_shift`` with covariance ``2 k2 tau_ref I``."""

    distribution: str = "gaussian"
    k2: float = 1.0
    tau_ref: float = 1.0
    drift_shift: tuple = ()

    def __post_init__(self):
        if self.distribution not in LAWS:
            raise ValueError(f"distribution must be one of {LAWS}")
        if self.k2 <= 0 or self.tau_ref <= 0:
            raise ValueError("k2 and tau_ref must be > 0")
        object.__setattr__(self, "drift_shift", tuple(float(d) for d in self.drift_shift))

    @property
    def scale(self) -> float:
        """Per-axis standard deviation of one jump."""
        return math.sqrt(2 * self.k2 * self.tau_ref)

    def shift(self, dim: int) -> np.ndarray:
        d = np.array(self.drift_shift or (0.0,) * dim)
        if d.size != dim:
            raise ValueError("drift_shift needs one component per axis")
        return d

    def sample(self, seed: int, ids, events, dim: int) -> np.ndarray:
        """Displacements, shape ``(len(ids), dim)``."""
        if dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.distribution == "gaussian":
            g0, g1 = rng.normals(seed, ids, events, rng.LANE_JUMP)
            z = np.stack([g0, g1][:dim], axis=1)
            out = self.scale * z
        else:
            u0, u1 = rng.uniforms(seed, ids, events, rng.LANE_JUMP)
            # ball radius chosen so the per-axis variance is 2 k2 tau_ref
            if dim == 1:
                rad = math.sqrt(3) * self.scale
                out = (rad * (2 * u0 - 1))[:, None]
            else:
                rad = 2 * self.scale
                rr = rad * np.sqrt(u0)
                ang = 2 * np.pi * u1
                out = np.stack([rr * np.cos(ang), rr * np.sin(ang)], axis=1)
        return out + self.shift(dim)


@dataclass
class Ensemble:
    positions: np.ndarray
    weights: np.ndarray
    alive: np.ndarray
    clock: np.ndarray
    events: np.ndarray
    rng_seed: int = 0
    sim_time: float = 0.0
    started: bool = False
    windows_done: int = 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        self.positions = pos[:, None] if pos.ndim == 1 else pos
        n = self.positions.shape[0]
        for name in ("weights", "alive", "clock", "events"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have one entry per particle")

    @classmethod
    def from_positions(cls, positions, total_mass: float = 1.0, seed: int = 0) -> "Ensemble":
        pos = np.asarray(positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        n = pos.shape[0]
        w = np.full(n, total_mass / n) if n else np.zeros(0)
        return cls(pos, w, np.ones(n, bool), np.zeros(n), np.zeros(n, np.int64), seed)

    @classmethod
    def point_source(cls, n: int, dim: int = 1, at=None, total_mass: float = 1.0, seed: int = 0):
        at = np.zeros(dim) if at is None else np.asarray(at, dtype=float)
        return cls.from_positions(np.tile(at, (n, 1)), total_mass, seed)

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def ids(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.uint64)

    def total_weight(self) -> float:
        return float(self.weights[self.alive].sum())

    def copy(self) -> "Ensemble":
        return replace(self, positions=self.positions.copy(), weights=self.weights.copy(),
                       alive=self.alive.copy(), clock=self.clock.copy(), events=self.events.copy())


def sample_from_density(f: ScalarField, n: int, seed: int = 0) -> Ensemble:
    """Place ``n`` equal-weight particles distributed like the 1D field ``f``.

    Inverse-CDF sampling of the piecewise-linear interpolant; total weight
    equals ``integrate(f)``.
    """
    if f.dim != 1:
        raise ValueError("sample_from_density handles 1D fields")
    x = f.axes()[0]
    v = f.values
    cell = 0.5 * (v[1:] + v[:-1]) * f.h
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    if cdf[-1] <= 0:
        raise ValueError("field has no mass")
    ids = np.arange(n, dtype=np.uint64)
    u, _ = rng.uniforms(seed, ids, np.zeros(n, np.uint64), rng.LANE_INIT)
    target = u * cdf[-1]
    k = np.clip(np.searchsorted(cdf, target, side="right") - 1, 0, len(cell) - 1)
    # solve for the offset inside the cell with the linear density
    a = (v[k + 1] - v[k]) / f.h
    b = v[k]
    rem = target - cdf[k]
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.sqrt(np.maximum(b * b + 2 * a * rem, 0.0))
        off = np.where(np.abs(a) > 1e-14, (disc - b) / a, rem / np.where(b > 0, b, 1.0))
    pos = x[k] + np.clip(off, 0.0, f.h)
    return Ensemble.from_positions(pos, integrate(f), seed)


@dataclass
class DensityEstimate:
    field: ScalarField
    outside: int = 0


def _cell_index(f: ScalarField, positions: np.ndarray):
    idx = np.rint((positions - np.array(f.origin)) / f.h).astype(np.int64)
    shape = np.array(f.shape)
    clipped = np.clip(idx, 0, shape - 1)
    outside = np.any(idx != clipped, axis=1)
    return clipped, outside


def estimate_density(ens: Ensemble, grid: ScalarField) -> DensityEstimate:
    """Histogram of alive weights on the nodes of ``grid`` divided by ``h**dim``.

    Each node owns the cell of width ``h`` centred on it. Particles outside the
    grid are binned into the nearest boundary cell and counted in ``outside``.
    """
    if ens.size and ens.dim != grid.dim:
        raise ValueError("ensemble and grid dimensions differ")
    vals = np.zeros(grid.shape)
    live = ens.alive & (ens.weights > 0)
    if not live.any():
        return DensityEstimate(grid.with_values(vals, time=ens.sim_time), 0)
    idx, outside = _cell_index(grid, ens.positions[live])
    flat = np.ravel_multi_index(tuple(idx.T), grid.shape)
    vals = np.bincount(flat, weights=ens.weights[live], minlength=vals.size).reshape(grid.shape)
    vals /= grid.h**grid.dim
    return DensityEstimate(grid.with_values(vals, time=ens.sim_time), int(outside.sum()))


def _rate_field(density: ScalarField, params: ModelParams) -> np.ndarray:
    u = density.values
    if params.beta:
        _, gn = gradient(density)
        coef = u**params.alpha * gn**params.beta
    else:
        coef = u**params.alpha
    return coef + params.epsilon_reg


def local_tau(x, params: ModelParams, density: ScalarField, tau_max: float, tau_ref: float = 1.0):
    """Waiting time at ``x``: ``min(tau_max, tau_ref / (u**alpha |grad u|**beta + eps))``.

    ``u`` and ``|grad u|`` are read from ``density`` at the nearest node.
    """
    if tau_max <= 0:
        raise ValueError("tau_max must be > 0")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != density.dim:
        x = x.T
    rate = _rate_field(density, params)
    idx, _ = _cell_index(density, x)
    r = rate[tuple(idx.T)]
    with np.errstate(divide="ignore"):
        tau = np.where(r > 0, tau_ref / r, np.inf)
    tau = np.minimum(tau, tau_max)
    return float(tau[0]) if tau.size == 1 else tau


@dataclass
class WalkStats:
    jumps: int = 0
    windows: int = 0
    absorbed_boundary: int = 0
    frozen_jumps: int = 0
    outside_hist: int = 0


def _absorption_rate(params: ModelParams, u: np.ndarray) -> np.ndarray:
    spec = params.reaction
    if not spec.active:
        return np.zeros_like(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = spec.coeff * np.where(u > 0, u ** (spec.power - 1.0), 0.0)
    return np.nan_to_num(r, posinf=0.0)


def advance(
    ens: Ensemble,
    law: JumpLaw,
    params: ModelParams,
    until: float,
    grid: ScalarField,
    refresh_every: Optional[float] = None,
    tau_max: Optional[float] = None,
    weighting: str = "gather",
    absorption: str = "decay",
    stats: Optional[WalkStats] = None,
) -> Ensemble:
    """Run the event loop from ``ens.sim_time`` to ``until``; returns a new ensemble.

    Inside each refresh window the density (and hence every ``tau``) is
    frozen. A particle jumps whenever its clock falls inside the window;
    jumps leaving the grid box absorb the particle.
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}")
    if absorption not in ABSORPTION_MODES:
        raise ValueError(f"absorption must be one of {ABSORPTION_MODES}")
    if until <= ens.sim_time:
        raise ValueError("until must be > sim_time")
    refresh_every = law.tau_ref / 10 if refresh_every is None else refresh_every
    tau_max = 1e3 * law.tau_ref if tau_max is None else tau_max
    if refresh_every <= 0 or tau_max <= 0:
        raise ValueError("refresh_every and tau_max must be > 0")
    if ens.size and law.drift_shift:
        if np.any(np.abs(law.shift(ens.dim)) > params.k1 * law.tau_ref + 1e-15):
            raise ValueError(f"|drift_shift| exceeds k1 * tau_ref = {params.k1 * law.tau_ref:g}")
    stats = stats if stats is not None else WalkStats()
    out = ens.copy()
    if out.size == 0:
        out.sim_time = until
        return out
    lo = np.array(grid.origin)
    hi = lo + grid.h * (np.array(grid.shape) - 1)
    ids = out.ids
    seed = out.rng_seed

    t = out.sim_time
    n_windows = max(1, int(math.ceil((until - t) / refresh_every - 1e-9)))
    for w in range(n_windows):
        t_end = until if w == n_windows - 1 else t + refresh_every
        est = estimate_density(out, grid)
        stats.outside_hist += est.outside
        rate = _rate_field(est.field, params)
        with np.errstate(divide="ignore"):
            tau_grid = np.minimum(np.where(rate > 0, law.tau_ref / rate, np.inf), tau_max)

        def lookup(pos):
            idx, _ = _cell_index(grid, pos)
            k = tuple(idx.T)
            return rate[k], tau_grid[k]

        if not out.started:
            _, tau0 = lookup(out.positions)
            ph, _ = rng.uniforms(seed, ids, np.zeros(out.size, np.uint64), rng.LANE_PHASE)
            out.clock = t + tau0 * ph
            out.started = True

        while True:
            due = np.flatnonzero(out.alive & (out.clock < t_end))
            if due.size == 0:
                break
            r_from, tau_from = lookup(out.positions[due])
            disp = law.sample(seed, ids[due], out.events[due].astype(np.uint64), out.dim)
            new = out.positions[due] + disp
            out.events[due] += 1
            stats.jumps += due.size
            stats.frozen_jumps += int(np.sum(tau_from >= tau_max))
            gone = np.any((new < lo - 0.5 * grid.h) | (new > hi + 0.5 * grid.h), axis=1)
            out.positions[due] = new
            r_to, tau_to = lookup(new)
            if weighting == "gather":
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = np.where(r_to > 0, tau_from / tau_to, 0.0)
                out.weights[due] *= ratio
            out.clock[due] += tau_to
            dead = gone | (out.weights[due] <= 0)
            stats.absorbed_boundary += int(gone.sum())
            out.alive[due[dead]] = False

        if params.reaction.active:
            u_at = est.field.values[tuple(_cell_index(grid, out.positions)[0].T)]
            k = _absorption_rate(params, u_at) * (t_end - t)
            if absorption == "decay":
                out.weights *= np.exp(-k)
            else:
                # one draw per particle and window: the jump counter can repeat across windows
                win = np.full(out.size, out.windows_done, np.uint64)
                p, _ = rng.uniforms(seed, ids, win, rng.LANE_KILL)
                kill = out.alive & (p < -np.expm1(-k))
                out.alive[kill] = False
        stats.windows += 1
        out.windows_done += 1
        t = t_end
        out.sim_time = t
    return out


@dataclass
class Comparison:
    distance: float
    support_a: float
    support_b: float


def compare_to_pde(ens_density: ScalarField, pde_field: ScalarField, threshold: float = 1e-10) -> Comparison:
    """Normalized L1 distance ``int|a-b| / max(int a, int b)`` plus both support radii."""
    if ens_density.shape != pde_field.shape or not np.isclose(ens_density.h, pde_field.h):
        raise ValueError("fields must live on identical grids")
    ma, mb = integrate(ens_density), integrate(pde_field)
    norm = max(ma, mb)
    diff = integrate(ens_density.with_values(np.abs(ens_density.values - pde_field.values)))
    dist = 0.0 if norm <= 0 else diff / norm
    return Comparison(dist, support_radius(ens_density, threshold), support_radius(pde_field, threshold))


def ensemble_moments(ens: Ensemble):
    """Weighted mean, per-axis variance, and standard errors of both."""
    m = ens.alive & (ens.weights > 0)
    x = ens.positions[m]
    w = ens.weights[m]
    if w.sum() <= 0:
        raise ValueError("no live weight")
    w = w / w.sum()
    mean = w @ x
    dev = x - mean
    var = w @ dev**2
    n_eff = 1.0 / np.sum(w**2)
    se_mean = np.sqrt(var / n_eff)
    fourth = w @ dev**4
    se_var = np.sqrt(np.maximum(fourth - var**2, 0.0) / n_eff)
    return mean, var, se_mean, se_var


def write_ensemble_csv(ens: Ensemble, path) -> int:
    """Rows ``id, x0[, x1], weight, alive``; returns the number of rows."""
    fmt = "{:.17g}".format
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *(f"x{k}" for k in range(ens.dim)), "weight", "alive"])
        for i in range(ens.size):
            w.writerow([i, *(fmt(c) for c in ens.positions[i]), fmt(ens.weights[i]), int(ens.alive[i])])
    return ens.size
