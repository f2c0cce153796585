import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenlab.oracle import BarenblattSpec, barenblatt, heat_kernel


def test_heat_kernel_peak():
    assert heat_kernel(0.0, 1.0, 0.25) == pytest.approx(1 / math.sqrt(math.pi))


def test_heat_kernel_mass_and_variance():
    x = np.linspace(-20, 20, 40001)
    u = heat_kernel(x, 2.0, 0.5)
    dx = x[1] - x[0]
    assert u.sum() * dx == pytest.approx(1.0, rel=1e-10)
    assert (x**2 * u).sum() * dx == pytest.approx(2 * 0.5 * 2.0, rel=1e-8)


def test_heat_kernel_2d_mass():
    ax = np.linspace(-8, 8, 801)
    X = np.stack(np.meshgrid(ax, ax, indexing="ij"))
    u = heat_kernel(X, 1.0, 0.5, dim=2)
    assert u.sum() * (ax[1] - ax[0]) ** 2 == pytest.approx(1.0, rel=1e-8)


def test_errors():
    with pytest.raises(ValueError):
        heat_kernel(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        BarenblattSpec(1.0)
    with pytest.raises(ValueError):
        barenblatt(0.0, 0.0, BarenblattSpec(2.0))


def test_barenblatt_m2_constants():
    spec = BarenblattSpec.from_constant(2, 1, 1.0)
    assert spec.a == pytest.approx(1 / 3)
    assert spec.kappa == pytest.approx(1 / 12)
    assert spec.constant == pytest.approx(1.0)
    assert spec.support_radius(1.0) == pytest.approx(math.sqrt(12))
    assert spec.support_radius(2.0) == pytest.approx(math.sqrt(12) * 2 ** (1 / 3))
    assert barenblatt(0.0, 1.0, spec) == pytest.approx(1.0)


def _residual(spec, x, t, dt=1e-4, dx=1e-3):
    # 4th-order central differences in the smooth part of the support
    u = lambda xx, tt: barenblatt(xx, tt, spec)
    ut = (-u(x, t + 2 * dt) + 8 * u(x, t + dt) - 8 * u(x, t - dt) + u(x, t - 2 * dt)) / (12 * dt)
    w = lambda xx: u(xx, t) ** spec.m
    lap = (-w(x + 2 * dx) + 16 * w(x + dx) - 30 * w(x) + 16 * w(x - dx) - w(x - 2 * dx)) / (12 * dx**2)
    return ut - lap


@pytest.mark.parametrize("m", [1.5, 2.0, 3.0])
def test_barenblatt_satisfies_pme(m):
    spec = BarenblattSpec(m, 1, mass=2.0)
    for t in (1.0, 1.7):
        R = spec.support_radius(t)
        for x in np.linspace(-0.6 * R, 0.6 * R, 7):
            assert abs(_residual(spec, float(x), t)) < 1e-6


def test_barenblatt_mass_conserved():
    spec = BarenblattSpec(2.0, 1, mass=3.0)
    x = np.linspace(-30, 30, 600001)
    for t in (0.5, 1.0, 4.0):
        assert barenblatt(x, t, spec).sum() * (x[1] - x[0]) == pytest.approx(3.0, rel=1e-6)


def test_barenblatt_2d_mass():
    spec = BarenblattSpec(2.0, 2, mass=1.5)
    ax = np.linspace(-4, 4, 1601)
    X = np.stack(np.meshgrid(ax, ax, indexing="ij"))
    assert barenblatt(X, 1.0, spec).sum() * (ax[1] - ax[0]) ** 2 == pytest.approx(1.5, rel=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.2, 4), st.sampled_from([1, 2]), st.floats(0.1, 10))
def test_support_exponent(m, dim, mass):
    spec = BarenblattSpec(m, dim, mass)
    t = np.geomspace(1, 10, 20)
    R = np.array([spec.support_radius(s) for s in t])
    slope = np.polyfit(np.log(t), np.log(R), 1)[0]
    assert abs(slope - spec.a / dim) < 1e-3


@settings(max_examples=40, deadline=None)
@given(st.floats(1.2, 4), st.floats(0.1, 10))
def test_from_constant_roundtrip(m, c):
    spec = BarenblattSpec.from_constant(m, 1, c)
    assert spec.constant == pytest.approx(c, rel=1e-12)
