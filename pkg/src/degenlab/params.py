"""Model parameters, admissibility checks and the closed-form certificate constants.

Everything in here is a pure function of the parameters; no grids, no solvers.
The exponents and constants are the ones that drive the De Giorgi iteration in
:mod:`degenlab.degiorgi`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

REACTION_KINDS = ("none", "power_law")

# The linear radial ramp used for the cutoffs has slope 2**(n+2)/r, so the
# slope bound c*2**n/r needs c >= 4.
MIN_CUTOFF_SLOPE = 4.0


@dataclass(frozen=True)
class ReactionSpec:
    """Reaction/absorption term ``|A(u)| = coeff * u**power``.

    ``kind="none"`` means ``A == 0``. ``s_exponent`` is the integrability
    exponent of the reaction estimate; when it is ``None`` the lower end of the
    admissible window is used. ``m0_bound`` bounds the derivative of the
    transformed reaction ``F``.
    """

    kind: str = "none"
    coeff: float = 0.0
    power: float = 1.0
    s_exponent: Optional[float] = None
    m0_bound: float = 1.0

    def __post_init__(self):
        if self.kind not in REACTION_KINDS:
            raise ValueError(f"unknown reaction kind {self.kind!r}; expected one of {REACTION_KINDS}")
        if self.kind == "power_law":
            if self.coeff < 0:
                raise ValueError("reaction coeff must be >= 0")
            if self.power <= 0:
                raise ValueError("reaction power must be > 0")
        if self.m0_bound <= 0:
            raise ValueError("m0_bound must be > 0")

    @property
    def active(self) -> bool:
        return self.kind == "power_law" and self.coeff > 0


def reaction_value(spec: ReactionSpec, u):
    """Return ``|A(u)|`` (scalar or array); zero for ``kind="none"``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("reaction_value needs u >= 0")
    if spec.kind == "none":
        out = np.zeros_like(u)
    else:
        out = spec.coeff * u**spec.power
    return out if out.ndim else float(out)


def reaction_lipschitz(spec: ReactionSpec, u_max: float) -> float:
    """Slope bound of ``|A|`` on ``[0, u_max]`` used by the time-step control."""
    if not spec.active or u_max <= 0:
        return 0.0
    if spec.power >= 1:
        return spec.coeff * spec.power * u_max ** (spec.power - 1)
    # sublinear: secant slope through the origin
    return spec.coeff * u_max ** (spec.power - 1)


@dataclass(frozen=True)
class ModelParams:
    """Physical and analysis constants of the degenerate model.

    Construction only rejects values that make no sense at all (negative
    powers, ``k2 <= 0``, unsupported dimension). The analytic admissibility
    conditions are checked by :func:`validate_params`, which reports every
    violation instead of raising.
    """

    alpha: float = 1.0
    beta: float = 0.0
    k1: float = 0.0
    k2: float = 1.0
    c1: float = 0.0
    theta: float = 1.0
    p: float = 2.0
    dim: int = 1
    epsilon_reg: float = 0.0
    r0: float = 1.0
    r: float = 2.5
    c_cut: float = MIN_CUTOFF_SLOPE
    sobolev_cg: float = 1.0
    poincare_cp: float = 1.0
    reaction: ReactionSpec = field(default_factory=ReactionSpec)

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if self.k1 < 0 or self.c1 < 0:
            raise ValueError("k1 and c1 must be >= 0")
        if self.k2 <= 0:
            raise ValueError("k2 must be > 0")
        if self.theta < 1:
            raise ValueError("theta must be >= 1")
        if self.dim not in (1, 2):
            raise ValueError("only dim 1 and 2 are supported")
        if self.epsilon_reg < 0:
            raise ValueError("epsilon_reg must be >= 0")
        if self.r0 <= 0 or self.r <= 0 or self.c_cut <= 0:
            raise ValueError("r0, r and c_cut must be > 0")
        if self.sobolev_cg <= 0 or self.poincare_cp <= 0:
            raise ValueError("embedding constants must be > 0")

    @property
    def z_exponent(self) -> float:
        """Power in ``z = u**((theta+alpha+beta+1)/(beta+2))``."""
        return (self.theta + self.alpha + self.beta + 1.0) / (self.beta + 2.0)

    @property
    def p_upper(self) -> float:
        return (self.theta + self.alpha) / (self.beta + 1.0) - self.k1 / self.k2 - self.c1

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass
class ValidationResult:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "Ok"
        return "; ".join(self.violations)


def _c_energy(par: ModelParams) -> float:
    return (par.theta + 1) * (
        par.k2 * (par.theta + par.alpha) / (1 + par.beta) - par.k1 - par.c1 * par.k2 * par.p
    )


def d_n(par: ModelParams, n) -> np.ndarray | float:
    """Coefficient of the lower-order term on the n-th annulus."""
    n = np.asarray(n, dtype=float)
    val = (par.theta + 1) * (
        par.k2 * par.p * (par.c_cut * 2.0**n / par.r) ** (par.beta + 2) + par.k1 + par.c1
    )
    return val if val.ndim else float(val)


def d_n_majorant(par: ModelParams, n) -> np.ndarray | float:
    """Geometric majorant ``(theta+1)(k1 + c k2 (theta+alpha)/(2 R0)) 2**(n(beta+2))``."""
    n = np.asarray(n, dtype=float)
    base = (par.theta + 1) * (par.k1 + par.c_cut / (2 * par.r0) * par.k2 * (par.theta + par.alpha))
    val = base * 2.0 ** (n * (par.beta + 2))
    return val if val.ndim else float(val)


def _eps0(par: ModelParams) -> float:
    s = par.alpha + par.beta
    return par.dim * s * (par.beta + 2) / (s + par.dim * (par.beta + 2) * (par.theta + 1))


def s_window(par: ModelParams) -> tuple[float, float]:
    """Admissible interval ``[lo, hi)`` for the reaction exponent ``s``."""
    e0 = _eps0(par)
    n = par.dim
    lo = max(1.0 + e0, n * e0, 1.0)
    hi = min(par.beta + 2.0, n * (1.0 + e0))
    return lo, hi


def _reaction_exponents(par: ModelParams, s: float):
    e0 = _eps0(par)
    lam = (par.theta + 1) * (par.beta + 2) / (par.theta + par.alpha + par.beta + 1)
    gamma = ((1 + e0) / s - 1 / (par.beta + 2)) * lam + 1
    # |A(u)| u^theta = F(w)^s with w = z^gamma = u^(gamma*kappa)
    f_exp = (par.reaction.power + par.theta) / (s * gamma * par.z_exponent)
    return gamma, f_exp


def f_derivative_sup(par: ModelParams, s: float, u_max: float) -> float:
    """``sup |F'|`` over ``w in [0, z(u_max)**gamma]`` for the power-law family."""
    spec = par.reaction
    gamma, f_exp = _reaction_exponents(par, s)
    amp = spec.coeff ** (1.0 / s)
    if f_exp < 1:
        return math.inf
    w_max = u_max ** (gamma * par.z_exponent)
    if f_exp == 1:
        return amp
    return amp * f_exp * w_max ** (f_exp - 1)


def validate_params(par: ModelParams) -> ValidationResult:
    """Check the admissibility conditions of the localization estimates.

    Returns a :class:`ValidationResult`; it is truthy when every condition holds
    and otherwise lists each violated condition with the offending numbers.
    """
    out = ValidationResult()
    lo = par.beta + 2
    hi = par.p_upper
    if par.p < lo:
        out.violations.append(f"p-bounds: p={par.p:g} < beta+2={lo:g}")
    if not par.p < hi:
        out.violations.append(
            f"p-bounds: p={par.p:g} >= (theta+alpha)/(beta+1) - k1/k2 - C1 = {hi:g}"
        )
    if par.r <= 2 * par.r0:
        out.violations.append(f"r <= 2R0: r={par.r:g}, R0={par.r0:g}")
    c = _c_energy(par)
    if c <= 0:
        out.violations.append(f"energy constant C={c:g} <= 0")
    if par.c_cut < MIN_CUTOFF_SLOPE:
        out.violations.append(
            f"cutoff constant c={par.c_cut:g} < {MIN_CUTOFF_SLOPE:g} (ramp slope exceeds c*2^n/r)"
        )
    # D_n majorization: both sides share the 2^(n(beta+2)) growth, so n = 0 decides
    lead = par.k1 + par.c_cut * par.k2 * (par.theta + par.alpha) / (2 * par.r0)
    lead -= par.k2 * par.p * (par.c_cut / par.r) ** (par.beta + 2)
    if lead < par.k1 + par.c1:
        out.violations.append(
            f"D_n majorization fails at n=0: D_0={d_n(par, 0):g} > {d_n_majorant(par, 0):g}"
        )
    if par.reaction.active:
        s_lo, s_hi = s_window(par)
        if not s_lo < s_hi:
            out.violations.append(f"reaction: empty s-window [{s_lo:g}, {s_hi:g})")
        else:
            s = par.reaction.s_exponent if par.reaction.s_exponent is not None else s_lo
            if not (s_lo <= s < s_hi):
                out.violations.append(f"reaction: s={s:g} outside [{s_lo:g}, {s_hi:g})")
            else:
                _, f_exp = _reaction_exponents(par, s)
                if f_exp < 1:
                    out.violations.append(
                        f"reaction: F(w) ~ w^{f_exp:g} has unbounded derivative at 0"
                    )
    return out


@dataclass(frozen=True)
class DerivedConstants:
    """All exponents and constants of the localization argument.

    ``D`` holds ``D_0 .. D_{n_max}``. ``q`` is the exponent selected at
    ``t_horizon``; use :meth:`t_pow_q` for other times. Entries that are not
    defined for the given parameters (``eps0 == 0``, unknown domain measure)
    are ``nan``.
    """

    lam: float
    Lambda: float
    eps0: float
    C: float
    D: tuple
    C_L: float
    b_L: float
    M_L: float
    G: float
    q: float
    s: float
    gamma: float
    H: float
    m: float
    theta_L: float
    theta_L_max: float
    B0: float
    mu: float
    sup_u0_bound: float
    t_horizon: float
    beta: float
    reaction_active: bool
    sup_f_prime: float = 0.0

    def t_pow_q(self, t: float) -> float:
        a = t ** (1.0 - self.Lambda)
        if not self.reaction_active:
            return a
        return max(a, t ** ((self.beta + 2 - self.s) / (self.beta + 2)))

    def as_rows(self) -> list[tuple[str, float]]:
        rows = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "D":
                rows.extend((f"D_{i}", float(x)) for i, x in enumerate(v))
            else:
                rows.append((f.name, float(v)))
        return rows


def derive_constants(
    par: ModelParams,
    n_max: int = 8,
    t_horizon: float = 1.0,
    omega_measure: Optional[float] = None,
    omega0_measure: Optional[float] = None,
    u_max: Optional[float] = None,
) -> DerivedConstants:
    """Evaluate every closed-form constant for ``par``.

    ``omega_measure`` and ``omega0_measure`` are the volumes of the domain and
    of the first annular region; they are only needed for ``B0`` and the
    sup-norm bound on the initial data. ``u_max`` is the observed solution
    range used for ``sup |F'|``; without it the configured ``m0_bound`` is
    used.
    """
    if t_horizon <= 0:
        raise ValueError("t_horizon must be > 0")
    a, b, th, n = par.alpha, par.beta, par.theta, par.dim
    ab = a + b
    Lambda = ab / (ab + n * (b + 2) * (th + 1))
    eps0 = n * Lambda * (b + 2)
    lam = (th + 1) * (b + 2) / (th + a + b + 1)
    C = _c_energy(par)
    D = tuple(float(x) for x in d_n(par, np.arange(n_max + 1)))
    C_L = (th + 1) * (par.k1 + par.c_cut / (2 * par.r0) * par.k2 * (th + a)) * par.sobolev_cg * 2 ** (b + 2)
    b_L = 2.0 ** (b + 2)
    G = min(1.0, C * (lam / (th + 1)) ** (b + 2))

    rx = par.reaction
    if rx.active:
        s_lo, s_hi = s_window(par)
        if not s_lo < s_hi:
            raise ValueError(f"no admissible reaction exponent: window [{s_lo:g}, {s_hi:g}) is empty")
        s = rx.s_exponent if rx.s_exponent is not None else s_lo
        if not (s_lo <= s < s_hi):
            raise ValueError(f"reaction exponent s={s:g} outside [{s_lo:g}, {s_hi:g})")
        gamma, _ = _reaction_exponents(par, s)
        sup_fp = f_derivative_sup(par, s, u_max) if u_max is not None else rx.m0_bound
        M_L = (th + 1) * (par.poincare_cp * gamma * sup_fp) ** s
    else:
        s = b + 2.0
        gamma, _ = _reaction_exponents(par, s)
        sup_fp = 0.0
        M_L = 0.0
    H = s / ((1 + eps0) * (b + 2))
    m = s / (1 + eps0)

    e1 = 1.0 - Lambda
    e2 = (b + 2 - s) / (b + 2)
    if rx.active and t_horizon**e2 > t_horizon**e1:
        q = e2
    else:
        q = e1

    nan = math.nan
    if eps0 > 0:
        theta_L = 2 ** (-(b + 2) / eps0**2) * (G / (C_L + M_L)) ** (1 / eps0) * t_horizon ** (-q / eps0)
        theta_L_max = 2 ** (-(b + 2) / eps0**2) * (G / C_L) ** (1 / eps0) * t_horizon ** (-(th + 1) / ab)
        mu = (ab + n * (b + 2) * (th + 1)) ** 2 / ((b + 2) * n**2 * ab**2 * (ab + th + 1))
        core = C_L ** (-1 / eps0) * G ** (1 + 1 / eps0)
        B0 = core / (D[0] * omega0_measure) if omega0_measure else nan
        sup_u0_bound = (
            2 ** (-mu) * (core / (D[0] * omega_measure)) ** (1 / (ab + th + 1)) * t_horizon ** (-1 / ab)
            if omega_measure
            else nan
        )
    else:
        theta_L = theta_L_max = mu = B0 = sup_u0_bound = nan

    return DerivedConstants(
        lam=lam, Lambda=Lambda, eps0=eps0, C=C, D=D, C_L=C_L, b_L=b_L, M_L=M_L, G=G,
        q=q, s=s, gamma=gamma, H=H, m=m, theta_L=theta_L, theta_L_max=theta_L_max,
        B0=B0, mu=mu, sup_u0_bound=sup_u0_bound, t_horizon=t_horizon, beta=b,
        reaction_active=rx.active, sup_f_prime=sup_fp,
    )


def write_constants_csv(dc: DerivedConstants, path) -> int:
    """Write ``name,value`` rows; returns the number of data rows."""
    rows = dc.as_rows()
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "value"])
        for name, val in rows:
            w.writerow([name, f"{val:.17g}"])
    return len(rows)


def read_constants_csv(path) -> dict[str, float]:
    with Path(path).open() as fh:
        return {row["name"]: float(row["value"]) for row in csv.DictReader(fh)}


def random_admissible(rng: np.random.Generator, dim: Optional[int] = None, max_tries: int = 1000) -> ModelParams:
    """Draw parameters uniformly from a box and keep the first admissible set."""
    for _ in range(max_tries):
        beta = rng.choice([0.0, rng.uniform(0, 2)])
        par = ModelParams(
            alpha=rng.uniform(0.05, 8),
            beta=float(beta),
            k1=rng.choice([0.0, rng.uniform(0, 1)]),
            k2=rng.uniform(0.2, 3),
            c1=rng.choice([0.0, rng.uniform(0, 0.5)]),
            theta=rng.uniform(1, 12),
            p=2.0,
            dim=int(dim if dim is not None else rng.integers(1, 3)),
            r0=rng.uniform(0.2, 2),
            r=1.0,
            c_cut=rng.uniform(MIN_CUTOFF_SLOPE, 6),
        )
        lo, hi = par.beta + 2, par.p_upper
        if hi <= lo:
            continue
        par = par.with_(p=rng.uniform(lo, hi), r=par.r0 * rng.uniform(2.05, 8))
        if validate_params(par):
            return par
    raise RuntimeError("no admissible parameter set found")


__all__ = [
    "ReactionSpec", "ModelParams", "ValidationResult", "DerivedConstants",
    "reaction_value", "reaction_lipschitz", "validate_params", "derive_constants",
    "d_n", "d_n_majorant", "s_window", "f_derivative_sup", "write_constants_csv",
    "read_constants_csv", "random_admissible",
]
