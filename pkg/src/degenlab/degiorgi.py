"""Localization certificate: z-transform, annular functionals and threshold tests.

For a trajectory ``u(x, t)`` the certificate evaluates

    I_n(t) = sup_{tau <= t} int_{Omega_{n+1}} z**lam dx
             + int_0^t int_{Omega_{n+1}} |grad z|**(beta+2) dx dt,

with ``z = u**((theta+alpha+beta+1)/(beta+2))``, fits the constant of the
recursion ``I_n <= c T**q b_L**(n-1) I_{n-1}**(1+eps0)`` and compares ``I_0``
with the smallness thresholds that force ``I_n -> 0``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .field import DeGiorgiGeometry, ScalarField, gradient, integrate, support_radius
from .params import DerivedConstants, ModelParams, derive_constants
from .solver import Trajectory

LOCALIZED = "LocalizedObserved"
NOT_LOCALIZED = "NotLocalized"
INCONCLUSIVE = "Inconclusive"
EXIT_CODES = {LOCALIZED: 0, NOT_LOCALIZED: 2, INCONCLUSIVE: 3}

DECAY_FACTOR = 1e-3
MAX_CADENCE_FRACTION = 1 / 200


def z_transform(u: ScalarField, params: ModelParams) -> ScalarField:
    """``z = u**((theta+alpha+beta+1)/(beta+2))`` pointwise."""
    if np.any(u.values < 0):
        raise ValueError("z_transform needs u >= 0")
    return u.with_values(u.values**params.z_exponent)


def _lam(params: ModelParams) -> float:
    return (params.theta + 1) * (params.beta + 2) / (params.theta + params.alpha + params.beta + 1)


def _sup_terms(traj: Trajectory, geom: DeGiorgiGeometry, params: ModelParams) -> np.ndarray:
    """``int_{Omega_{n+1}} z**lam`` for every snapshot (rows) and n (columns)."""
    lam = _lam(params)
    first = traj.snapshots[0]
    masks = geom.annulus_masks(first).reshape(geom.n_max + 1, -1).astype(float)
    out = np.empty((len(traj.snapshots), geom.n_max + 1))
    for j, snap in enumerate(traj.snapshots):
        zl = (z_transform(snap, params).values ** lam).reshape(-1)
        out[j] = masks @ zl * snap.h**snap.dim
    return out


def _energy_from_snapshots(traj: Trajectory, geom: DeGiorgiGeometry, params: ModelParams) -> np.ndarray:
    # lower-fidelity fallback: left-endpoint rule over the snapshot intervals
    first = traj.snapshots[0]
    masks = geom.annulus_masks(first).reshape(geom.n_max + 1, -1).astype(float)
    power = params.beta + 2
    out = np.zeros((len(traj.snapshots), geom.n_max + 1))
    for j in range(1, len(traj.snapshots)):
        prev = traj.snapshots[j - 1]
        _, gn = gradient(z_transform(prev, params))
        dens = (gn**power).reshape(-1)
        dt = traj.snapshots[j].time - prev.time
        out[j] = out[j - 1] + dt * (masks @ dens) * prev.h**prev.dim
    return out


def _index_at(traj: Trajectory, t: float) -> int:
    times = traj.times
    tol = 1e-9 * max(1.0, abs(t))
    if t > times[-1] + tol:
        raise ValueError(f"trajectory ends at t={times[-1]:g} < {t:g}")
    return int(np.searchsorted(times, t + tol, side="right") - 1)


def functionals(traj: Trajectory, geom: DeGiorgiGeometry, params: ModelParams, t: float) -> np.ndarray:
    """``I_0 .. I_{n_max}`` at time ``t``.

    The gradient term uses the energy the solver accumulated over its own
    steps when available, and the snapshot sequence otherwise.
    """
    j = _index_at(traj, t)
    sup = _sup_terms(traj, geom, params)[: j + 1].max(axis=0)
    if traj.energy is not None and traj.energy.shape[1] == geom.n_max + 1:
        energy = traj.energy[j]
    else:
        energy = _energy_from_snapshots(traj, geom, params)[j]
    return sup + energy


def functional_In(traj: Trajectory, geom: DeGiorgiGeometry, params: ModelParams, n: int, t: float) -> float:
    if not 0 <= n <= geom.n_max:
        raise ValueError(f"n must lie in [0, {geom.n_max}]")
    return float(functionals(traj, geom, params, t)[n])


@dataclass
class DeGiorgiReport:
    constants: DerivedConstants
    I_seq: np.ndarray
    horizon: float
    c_fit: float
    c_paper: float
    ratios: np.ndarray
    theta_paper: float
    theta_fit: float
    support_radii: list
    verdict: str
    reasons: list = field(default_factory=list)
    two_r: float = math.nan

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.I_seq) < 0))

    @property
    def decay(self) -> float:
        i0 = self.I_seq[0]
        return 0.0 if i0 == 0 else float(self.I_seq[-1] / i0)

    def recursion_bound(self, c: float) -> np.ndarray:
        """Right-hand side ``c T**q b_L**(n-1) I_{n-1}**(1+eps0)`` for n >= 1 (nan at n = 0)."""
        dc = self.constants
        out = np.full(self.I_seq.size, math.nan)
        if not dc.eps0 > 0:
            return out
        tq = dc.t_pow_q(self.horizon)
        for n in range(1, self.I_seq.size):
            out[n] = c * tq * dc.b_L ** (n - 1) * self.I_seq[n - 1] ** (1 + dc.eps0)
        return out

    def summary(self) -> str:
        dc = self.constants
        lines = [
            f"verdict: {self.verdict}",
            *(f"  reason: {r}" for r in self.reasons),
            f"horizon T = {self.horizon:.6g}",
            f"eps0 = {dc.eps0:.6g}, Lambda = {dc.Lambda:.6g}, lambda = {dc.lam:.6g}, q = {dc.q:.6g}",
            f"b_L = {dc.b_L:.6g}, C_L = {dc.C_L:.6g}, M_L = {dc.M_L:.6g}, G = {dc.G:.6g}",
            f"recursion constant: configured (C_L+M_L)/G = {self.c_paper:.6g}, fitted = {self.c_fit:.6g}",
            f"threshold on I_0: configured {self.theta_paper:.6g}, fitted {self.theta_fit:.6g}",
            f"I_0 = {self.I_seq[0]:.6g}, I_n/I_0 at n_max = {self.decay:.6g}",
            f"I_n strictly decreasing: {self.strictly_decreasing}",
        ]
        if self.support_radii:
            lines.append(f"support radius at T = {self.support_radii[-1][1]:.6g} (2r = {self.two_r:.6g})")
        if dc.reaction_active:
            lines.append(f"sup|F'| = {dc.sup_f_prime:.6g} on the observed range")
        return "\n".join(lines)


def _fit_constant(I: np.ndarray, dc: DerivedConstants, T: float):
    # per-n ratio I_n / (T^q b^(n-1) I_{n-1}^(1+eps0)), evaluated in log space
    ratios = np.full(I.size, math.nan)
    logs = []
    lt = math.log(dc.t_pow_q(T))
    lb = math.log(dc.b_L)
    for n in range(1, I.size):
        if I[n] <= 0:
            ratios[n] = 0.0
            continue
        if I[n - 1] <= 0:
            ratios[n] = math.inf
            logs.append(math.inf)
            continue
        lr = math.log(I[n]) - lt - (n - 1) * lb - (1 + dc.eps0) * math.log(I[n - 1])
        logs.append(lr)
        ratios[n] = math.exp(lr) if lr < 700 else math.inf
    if not logs:
        return math.nan, ratios
    top = max(logs)
    return (math.exp(top) if top < 700 else math.inf), ratios


def _threshold(c: float, dc: DerivedConstants, T: float) -> float:
    if not (c > 0 and math.isfinite(c)):
        return math.nan
    e = dc.eps0
    lc = math.log(c * dc.t_pow_q(T))
    return math.exp(-lc / e - math.log(dc.b_L) / e**2)


def check_cadence(traj: Trajectory, T: float):
    times = traj.times
    times = times[times <= T * (1 + 1e-12)]
    gap = float(np.max(np.diff(times))) if times.size > 1 else math.inf
    if gap > T * MAX_CADENCE_FRACTION * (1 + 1e-9):
        raise ValueError(f"snapshot spacing {gap:g} exceeds T/200 = {T / 200:g}")


def verify_recursion(
    traj: Trajectory,
    geom: DeGiorgiGeometry,
    params: ModelParams,
    T: float,
    enforce_cadence: bool = True,
    threshold: float = 1e-10,
) -> DeGiorgiReport:
    """Evaluate the functionals at ``T``, fit the recursion and decide the verdict."""
    if enforce_cadence:
        check_cadence(traj, T)
    j = _index_at(traj, T)
    first = traj.snapshots[0]
    u_max = max(float(s.values.max()) for s in traj.snapshots[: j + 1])
    omega = first.values.size * first.h**first.dim
    omega0 = float(geom.omega_mask(first, 0).sum()) * first.h**first.dim
    dc = derive_constants(params, geom.n_max, T, omega, omega0, u_max=u_max)
    I = functionals(traj, geom, params, T)
    radii = [(float(s.time), support_radius(s, threshold)) for s in traj.snapshots[: j + 1]]
    c_paper = (dc.C_L + dc.M_L) / dc.G if dc.G > 0 else math.inf
    reasons = []
    if not dc.eps0 > 0:
        reasons.append("infinite speed of propagation regime: eps0 = 0 when alpha + beta = 0")
        return DeGiorgiReport(dc, I, T, math.nan, c_paper, np.full(I.size, math.nan), math.nan,
                              math.nan, radii, INCONCLUSIVE, reasons, 2 * geom.r)
    c_fit, ratios = _fit_constant(I, dc, T)
    theta_paper = dc.theta_L
    theta_fit = _threshold(c_fit, dc, T)
    decayed = I[0] == 0 or I[-1] <= DECAY_FACTOR * I[0]
    inside = radii[-1][1] < 2 * geom.r
    if decayed and inside:
        verdict = LOCALIZED
    else:
        verdict = NOT_LOCALIZED
        if not decayed:
            reasons.append(f"I_n/I_0 = {I[-1] / I[0]:.3g} > {DECAY_FACTOR:g} at n = {geom.n_max}")
        if not inside:
            reasons.append(f"support radius {radii[-1][1]:.6g} >= 2r = {2 * geom.r:g}")
    return DeGiorgiReport(dc, I, T, c_fit, c_paper, ratios, theta_paper, theta_fit, radii,
                          verdict, reasons, 2 * geom.r)


@dataclass
class LadyResult:
    values: np.ndarray
    bound: np.ndarray
    threshold: float
    overflow: bool
    steps: int
    underflow: bool = False


def ladyzhenskaya_bound(y0: float, c: float, b: float, eps: float, n: int) -> float:
    """``c**(((1+eps)**n-1)/eps) b**(((1+eps)**n-1)/eps**2 - n/eps) y0**((1+eps)**n)``."""
    if y0 == 0:
        return 0.0
    g = (1 + eps) ** n
    lg = (g - 1) / eps * math.log(c) + ((g - 1) / eps**2 - n / eps) * math.log(b) + g * math.log(y0)
    return math.exp(lg) if lg < 709.78 else math.inf


def ladyzhenskaya_threshold(c: float, b: float, eps: float) -> float:
    return c ** (-1 / eps) * b ** (-1 / eps**2)


_TINY = float(np.finfo(float).tiny)


def ladyzhenskaya_iterate(y0: float, c: float, b: float, eps: float, n: int) -> LadyResult:
    """Equality iteration ``y_{k+1} = c b**k y_k**(1+eps)`` for ``k < n``.

    Stops at the first non-finite value and sets ``overflow``; ``values`` then
    ends with ``inf``. It also stops, setting ``underflow``, once ``y_k**(1+eps)``
    drops below the smallest normal double: past that point the iterate carries
    subnormal rounding and is no longer the recursion's value. A zero sequence
    is exact and runs to ``n``.
    """
    if y0 < 0 or c <= 0 or b < 1 or eps <= 0 or n < 0:
        raise ValueError("need y0 >= 0, c > 0, b >= 1, eps > 0, n >= 0")
    vals = [float(y0)]
    overflow = underflow = False
    for k in range(n):
        try:
            pw = vals[-1] ** (1 + eps)
            nxt = c * b**k * pw
        except OverflowError:
            nxt = math.inf
        else:
            if vals[-1] > 0 and (pw < _TINY or nxt < _TINY):
                underflow = True
                break
        if not math.isfinite(nxt):
            vals.append(math.inf)
            overflow = True
            break
        vals.append(nxt)
    bound = np.array([ladyzhenskaya_bound(y0, c, b, eps, k) for k in range(len(vals))])
    return LadyResult(np.array(vals), bound, ladyzhenskaya_threshold(c, b, eps), overflow, len(vals) - 1,
                      underflow)


@dataclass
class ThresholdCheck:
    bound: float
    observed: float
    passed: bool
    theta_L: float
    I0: float
    I0_passed: bool
    B0: float
    mu: float


def threshold_check_no_reaction(
    traj: Trajectory, geom: DeGiorgiGeometry, params: ModelParams, T: float
) -> ThresholdCheck:
    """Compare ``||u_0||_inf`` and ``I_0(T)`` with the no-reaction smallness bounds.

    These are sufficient conditions only: a failed check says nothing about
    localization.
    """
    if params.reaction.active:
        raise ValueError("threshold_check_no_reaction needs reaction kind none")
    first = traj.snapshots[0]
    omega = first.values.size * first.h**first.dim
    omega0 = float(geom.omega_mask(first, 0).sum()) * first.h**first.dim
    dc = derive_constants(params, geom.n_max, T, omega, omega0)
    observed = float(first.values.max())
    I0 = float(functionals(traj, geom, params, T)[0])
    bound = dc.sup_u0_bound
    return ThresholdCheck(
        bound=bound, observed=observed, passed=bool(observed <= bound),
        theta_L=dc.theta_L_max, I0=I0, I0_passed=bool(I0 <= dc.theta_L_max),
        B0=dc.B0, mu=dc.mu,
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_report(rep: DeGiorgiReport, outdir, prefix: str = "certificate") -> list[tuple[Path, int]]:
    """Plain-text summary plus the ``(n, I_n, bound, ratio)`` and support-radius tables."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    p = outdir / f"{prefix}_report.txt"
    p.write_text(rep.summary() + "\n")
    written.append((p, rep.summary().count("\n") + 1))
    bound = rep.recursion_bound(rep.c_paper)
    p = outdir / f"{prefix}_functionals.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "I_n", "bound", "ratio"])
        for n, val in enumerate(rep.I_seq):
            w.writerow([n, _fmt(val), _fmt(bound[n]), _fmt(rep.ratios[n])])
    written.append((p, rep.I_seq.size))
    p = outdir / f"{prefix}_support.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "support_radius"])
        for t, r in rep.support_radii:
            w.writerow([_fmt(t), _fmt(r)])
    written.append((p, len(rep.support_radii)))
    return written
