"""Uniform-grid density fields, annular De Giorgi domains and cutoffs."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

DEFAULT_SUPPORT_THRESHOLD = 1e-10


@dataclass
class ScalarField:
    """Nonnegative nodal values on a uniform grid.

    Node ``i`` along axis ``k`` sits at ``origin[k] + i * h``. With
    ``dirichlet=True`` the outermost nodes carry the boundary value 0.
    """

    values: np.ndarray
    h: float
    origin: tuple
    time: float = 0.0
    dirichlet: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim not in (1, 2):
            raise ValueError("only 1D and 2D fields are supported")
        if self.h <= 0:
            raise ValueError("grid spacing must be > 0")
        self.origin = tuple(float(o) for o in np.atleast_1d(self.origin))
        if len(self.origin) != self.values.ndim:
            raise ValueError("origin must have one entry per axis")

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def axes(self) -> list[np.ndarray]:
        return [o + self.h * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def coords(self) -> np.ndarray:
        """Node coordinates with shape ``(dim, *shape)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))

    def radius(self) -> np.ndarray:
        return np.sqrt((self.coords() ** 2).sum(axis=0))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask

    def with_values(self, values, time=None) -> "ScalarField":
        return replace(self, values=np.asarray(values, dtype=float),
                       time=self.time if time is None else time)

    def copy(self) -> "ScalarField":
        return self.with_values(self.values.copy())


def box_field(half_width: float, h: float, dim: int = 1, fill=0.0, dirichlet=True) -> ScalarField:
    """Zero (or constant) field on the box ``[-half_width, half_width]**dim``."""
    n = int(round(2 * half_width / h)) + 1
    if not np.isclose((n - 1) * h, 2 * half_width, rtol=1e-9, atol=1e-12):
        raise ValueError("half_width must be a multiple of h/2")
    vals = np.full((n,) * dim, float(fill))
    return ScalarField(vals, h, (-half_width,) * dim, dirichlet=dirichlet)


def sample(func, like: ScalarField, time=None) -> ScalarField:
    """Evaluate ``func(coords)`` (coords shaped ``(dim, *shape)``) on the grid of ``like``."""
    vals = np.asarray(func(like.coords()), dtype=float)
    return like.with_values(np.broadcast_to(vals, like.shape).copy(), time=time)


def gradient_components(values: np.ndarray, h: float) -> list[np.ndarray]:
    """Central differences inside, second-order one-sided differences at the edges."""
    if min(values.shape) < 3:
        raise ValueError("gradient needs at least 3 nodes per axis")
    g = np.gradient(values, h, edge_order=2)
    return [g] if values.ndim == 1 else list(g)


def gradient(f: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(components, norm)``; components has shape ``(dim, *shape)``."""
    comps = np.stack(gradient_components(f.values, f.h))
    return comps, np.sqrt((comps**2).sum(axis=0))


@dataclass(frozen=True)
class DeGiorgiGeometry:
    """Radii ``r_n = 2r(1 - 2**-(n+1))`` of the annular domains and their midpoints."""

    r0: float
    r: float
    n_max: int = 8
    radii: np.ndarray = field(init=False, repr=False, compare=False)
    mid_radii: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = np.arange(self.n_max + 3)
        radii = 2 * self.r * (1 - 2.0 ** -(n + 1))
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "mid_radii", 0.5 * (radii[:-1] + radii[1:]))

    def omega_mask(self, f: ScalarField, n: int) -> np.ndarray:
        """Nodes of ``Omega_n``: grid minus the open ball of radius ``r_n``."""
        return f.radius() >= self.radii[n]

    def omega_bar_mask(self, f: ScalarField, n: int) -> np.ndarray:
        return f.radius() >= self.mid_radii[n]

    def annulus_masks(self, f: ScalarField, shift: int = 1) -> np.ndarray:
        """Stacked masks of ``Omega_{n+shift}`` for ``n = 0..n_max``."""
        rad = f.radius()
        return np.stack([rad >= self.radii[n + shift] for n in range(self.n_max + 1)])


def cutoff_eta(geom: DeGiorgiGeometry, n: int, x) -> np.ndarray | float:
    """Piecewise-linear radial cutoff: 0 inside ``B_{r_n}``, 1 beyond ``rbar_n``.

    ``x`` is a point or an array of points with coordinates on the last axis.
    """
    if not 0 <= n <= geom.n_max:
        raise ValueError(f"n must lie in [0, {geom.n_max}]")
    x = np.asarray(x, dtype=float)
    rad = np.abs(x) if x.ndim == 0 else np.sqrt((x**2).sum(axis=-1))
    lo, hi = geom.radii[n], geom.mid_radii[n]
    eta = np.clip((rad - lo) / (hi - lo), 0.0, 1.0)
    return eta if eta.ndim else float(eta)


def integrate(f: ScalarField, region: np.ndarray | None = None) -> float:
    """Midpoint rule: sum of ``values * h**dim`` over the nodes in ``region``."""
    vals = f.values if region is None else f.values[region]
    return float(vals.sum() * f.h**f.dim)


def support_radius(f: ScalarField, threshold: float = DEFAULT_SUPPORT_THRESHOLD) -> float:
    """Largest ``|x|`` over nodes with value above ``threshold`` (0 if none)."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    mask = f.values > threshold
    if not mask.any():
        return 0.0
    return float(f.radius()[mask].max())


def write_field_csv(f: ScalarField, path) -> int:
    """Write a snapshot; returns the number of node rows.

    Layout: a metadata header, one metadata row, a column header, then one row
    per node with index coordinates, physical coordinates and value. Floats use
    17 significant digits so a read/write cycle is exact.
    """
    fmt = "{:.17g}".format
    path = Path(path)
    coords = f.coords().reshape(f.dim, -1)
    idx = np.indices(f.shape).reshape(f.dim, -1)
    vals = f.values.reshape(-1)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dim", "shape", "h", "origin", "time"])
        w.writerow([f.dim, ";".join(map(str, f.shape)), fmt(f.h),
                    ";".join(fmt(o) for o in f.origin), fmt(f.time)])
        w.writerow([f"i{k}" for k in range(f.dim)] + [f"x{k}" for k in range(f.dim)] + ["value"])
        for j in range(vals.size):
            w.writerow([*idx[:, j].tolist(), *(fmt(c) for c in coords[:, j]), fmt(vals[j])])
    return int(vals.size)


def read_field_csv(path, dirichlet: bool = True) -> ScalarField:
    with Path(path).open() as fh:
        rows = csv.reader(fh)
        next(rows)
        dim, shape, h, origin, time = next(rows)
        next(rows)
        shape = tuple(int(s) for s in shape.split(";"))
        values = np.array([float(row[-1]) for row in rows])
    if values.size != int(np.prod(shape)):
        raise ValueError(f"{path}: expected {np.prod(shape)} node rows, found {values.size}")
    return ScalarField(values.reshape(shape), float(h),
                       tuple(float(o) for o in origin.split(";")), float(time), dirichlet)
