import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenlab.field import (
    DeGiorgiGeometry, ScalarField, box_field, cutoff_eta, gradient, integrate, read_field_csv,
    sample, support_radius, write_field_csv,
)
from degenlab.oracle import BarenblattSpec, barenblatt


def unit_interval(h=0.01):
    n = int(round(1 / h)) + 1
    return ScalarField(np.zeros(n), h, (0.0,))


def test_gradient_constant_and_linear():
    f = box_field(1.0, 0.1)
    _, g = gradient(f.with_values(np.full(f.shape, 2.5)))
    assert np.all(g == 0)
    lin = sample(lambda x: 3 * x[0], f)
    comps, _ = gradient(lin)
    assert np.allclose(comps[0][1:-1], 3.0, atol=1e-12, rtol=0)


def test_gradient_quadratic_at_one():
    f = sample(lambda x: x[0] ** 2, box_field(2.0, 0.1))
    comps, _ = gradient(f)
    i = int(np.argmin(np.abs(f.axes()[0] - 1.0)))
    assert comps[0][i] == pytest.approx(2.0, abs=1e-12)


def test_gradient_2d_linear_exact():
    f = sample(lambda x: 2 * x[0] - 5 * x[1] + 1, box_field(1.0, 0.25, dim=2))
    comps, norm = gradient(f)
    assert np.allclose(comps[0], 2.0, atol=1e-12)
    assert np.allclose(comps[1], -5.0, atol=1e-12)
    assert np.allclose(norm, math.sqrt(29), atol=1e-12)


def test_geometry_radii():
    g = DeGiorgiGeometry(1.0, 2.5, 8)
    assert g.radii[0] == pytest.approx(2.5)
    assert np.all(np.diff(g.radii) > 0)
    assert g.radii[-1] < 5.0
    assert np.all((g.radii[:-1] < g.mid_radii) & (g.mid_radii < g.radii[1:]))


def test_cutoff_examples():
    g = DeGiorgiGeometry(1.0, 4.0, 4)
    assert cutoff_eta(g, 0, 0.0) == 0.0
    assert cutoff_eta(g, 0, g.mid_radii[0]) == 1.0
    assert cutoff_eta(g, 0, 7.0) == 1.0
    # ramp on [4, 5]: midpoint 4.5 -> 0.5
    assert cutoff_eta(g, 0, 4.5) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        cutoff_eta(g, 5, 1.0)


def test_integrate_examples():
    f = unit_interval()
    assert integrate(f) == 0
    assert integrate(f.with_values(np.ones(f.shape))) == pytest.approx(1.0, abs=0.01 * (1 + 1e-9))
    assert integrate(f.with_values(f.axes()[0])) == pytest.approx(0.5, abs=0.01)
    assert integrate(f, np.zeros(f.shape, bool)) == 0


def test_support_radius_examples():
    f = box_field(3.0, 0.01)
    assert support_radius(f, 0.0) == 0
    ind = sample(lambda x: (np.abs(x[0]) <= 1).astype(float), f)
    assert support_radius(ind, 0.5) == pytest.approx(1.0, abs=f.h)
    spec = BarenblattSpec.from_constant(2, 1, 1.0)
    bar = sample(lambda x: barenblatt(x, 1.0, spec), box_field(5.0, 0.01))
    assert support_radius(bar, 0.0) == pytest.approx(math.sqrt(12), abs=0.01)


def test_csv_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(3)
    f = box_field(1.0, 0.1, dim=2).with_values(rng.random((21, 21)), time=0.3)
    n = write_field_csv(f, tmp_path / "f.csv")
    assert n == 441
    g = read_field_csv(tmp_path / "f.csv")
    assert np.array_equal(f.values, g.values)
    assert g.h == f.h and g.origin == f.origin and g.time == f.time


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 0.5))
def test_gradient_linear_property(a, b, h):
    f = sample(lambda x: a * x[0] + b, box_field(10 * h, h))
    comps, _ = gradient(f)
    assert np.allclose(comps[0][1:-1], a, atol=1e-9 * (1 + abs(a) + abs(b) / h))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5, 3), st.integers(0, 6))
def test_cutoff_monotone_and_slope(r, n):
    g = DeGiorgiGeometry(r / 2.2, r, 6)
    rad = np.linspace(0, 2 * r, 4001)
    eta = cutoff_eta(g, n, rad[:, None])
    assert np.all(np.diff(eta) >= 0)
    slope = np.max(np.diff(eta) / np.diff(rad))
    assert slope <= 4 * 2**n / r + 1e-12 * (1 + slope) + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3), st.sampled_from([1, 2]))
def test_nested_domains(r, dim):
    g = DeGiorgiGeometry(r / 2.5, r, 8)
    f = box_field(2.5 * r, r / 10, dim)
    for n in range(8):
        inner, outer = g.omega_mask(f, n + 1), g.omega_mask(f, n)
        assert np.all(outer[inner])
        assert np.all(g.omega_bar_mask(f, n)[inner])


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
def test_integrate_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    f = box_field(1.0, 0.05)
    u, v = rng.random(f.shape), rng.random(f.shape)
    lhs = integrate(f.with_values(a * u + b * v))
    rhs = a * integrate(f.with_values(u)) + b * integrate(f.with_values(v))
    assert lhs == pytest.approx(rhs, abs=1e-12)
