"""Closed-form reference solutions: the heat kernel and the Barenblatt profile."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def heat_kernel(x, t: float, D: float, dim: int = 1):
    """Fundamental solution of ``u_t = D Lap u`` with unit mass.

    ``x`` holds coordinates on the leading axis (shape ``(dim, ...)``) or, in
    1D, may be a plain array of positions.
    """
    if t <= 0:
        raise ValueError("heat_kernel needs t > 0")
    if D <= 0:
        raise ValueError("heat_kernel needs D > 0")
    x = np.asarray(x, dtype=float)
    r2 = x**2 if (dim == 1 and (x.ndim == 0 or x.shape[0] != 1)) else (x**2).sum(axis=0)
    out = (4 * math.pi * D * t) ** (-dim / 2) * np.exp(-r2 / (4 * D * t))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class BarenblattSpec:
    """Self-similar source solution of ``u_t = Lap(u**m)``.

    The profile is evaluated at ``t + t_offset``. ``mass`` fixes the constant
    ``C_m``; use :meth:`from_constant` to prescribe ``C_m`` directly.
    """

    m: float
    dim: int = 1
    mass: float = 1.0
    t_offset: float = 0.0

    def __post_init__(self):
        if self.m <= 1:
            raise ValueError("Barenblatt needs m > 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.mass <= 0:
            raise ValueError("mass must be > 0")
        if self.t_offset < 0:
            raise ValueError("t_offset must be >= 0")

    @property
    def a(self) -> float:
        return self.dim / (self.dim * (self.m - 1) + 2)

    @property
    def kappa(self) -> float:
        return (self.m - 1) * self.a / (2 * self.m * self.dim)

    @property
    def _shape_integral(self) -> float:
        # integral of (1 - |y|^2)_+^k over the unit ball, k = 1/(m-1)
        k = 1 / (self.m - 1)
        n = self.dim
        return math.pi ** (n / 2) * math.gamma(k + 1) / math.gamma(k + 1 + n / 2)

    @property
    def constant(self) -> float:
        k = 1 / (self.m - 1)
        n = self.dim
        return (self.mass * self.kappa ** (n / 2) / self._shape_integral) ** (1 / (k + n / 2))

    @classmethod
    def from_constant(cls, m: float, dim: int, constant: float, t_offset: float = 0.0):
        probe = cls(m, dim, 1.0, t_offset)
        k = 1 / (m - 1)
        mass = constant ** (k + dim / 2) * probe.kappa ** (-dim / 2) * probe._shape_integral
        return cls(m, dim, mass, t_offset)

    def support_radius(self, t: float) -> float:
        s = t + self.t_offset
        return math.sqrt(self.constant / self.kappa) * s ** (self.a / self.dim)


def barenblatt(x, t: float, spec: BarenblattSpec):
    """``u = s**-a (C - kappa |x|**2 s**(-2a/N))_+**(1/(m-1))`` with ``s = t + t_offset``."""
    s = t + spec.t_offset
    if s <= 0:
        raise ValueError("barenblatt needs t + t_offset > 0")
    x = np.asarray(x, dtype=float)
    if spec.dim == 1 and (x.ndim == 0 or x.shape[0] != 1):
        r2 = x**2
    else:
        r2 = (x**2).sum(axis=0)
    a, n = spec.a, spec.dim
    core = spec.constant - spec.kappa * r2 * s ** (-2 * a / n)
    out = s ** (-a) * np.maximum(core, 0.0) ** (1 / (spec.m - 1))
    return out if np.ndim(out) else float(out)
