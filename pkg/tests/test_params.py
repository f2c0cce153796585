from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenlab.params import (
    ModelParams, ReactionSpec, d_n, d_n_majorant, derive_constants, f_derivative_sup,
    random_admissible, reaction_value, read_constants_csv, s_window, validate_params,
    write_constants_csv,
)


def exact_constants(alpha, beta, theta, n):
    # rational re-derivation used as an independent oracle
    a, b, th = Fraction(alpha), Fraction(beta), Fraction(theta)
    Lam = (a + b) / (a + b + n * (b + 2) * (th + 1))
    lam = (th + 1) * (b + 2) / (th + a + b + 1)
    eps0 = n * (a + b) * (b + 2) / (a + b + n * (b + 2) * (th + 1))
    return Lam, lam, eps0


def test_hand_example_alpha1():
    dc = derive_constants(ModelParams(alpha=1, beta=0, theta=1, dim=1))
    assert dc.Lambda == pytest.approx(0.2, rel=1e-14)
    assert dc.eps0 == pytest.approx(0.4, rel=1e-14)
    assert dc.lam == pytest.approx(4 / 3, rel=1e-14)


def test_exact_oracle_agrees():
    for args in [(1, 0, 1, 1), (3, 1, 2, 2), (Fraction(1, 2), Fraction(3, 2), 5, 1)]:
        Lam, lam, eps0 = exact_constants(*args)
        par = ModelParams(alpha=float(args[0]), beta=float(args[1]), theta=float(args[2]), dim=args[3])
        dc = derive_constants(par)
        assert dc.Lambda == pytest.approx(float(Lam), rel=1e-14)
        assert dc.lam == pytest.approx(float(lam), rel=1e-14)
        assert dc.eps0 == pytest.approx(float(eps0), rel=1e-14)


def test_nondegenerate_eps0_vanishes():
    dc = derive_constants(ModelParams(alpha=0, beta=0, theta=3, p=2))
    assert dc.eps0 == 0
    assert np.isnan(dc.theta_L)


def test_b_L_beta0():
    assert derive_constants(ModelParams(alpha=2, beta=0)).b_L == 4


def test_energy_constant_alpha6():
    dc = derive_constants(ModelParams(alpha=6, beta=0, theta=1, k1=0, k2=1, c1=0, p=2))
    assert dc.C == pytest.approx(14)


def test_mu_theta1():
    # (1 + 2*2)^2 / (2 * 1 * 1 * 3) = 25/6
    dc = derive_constants(ModelParams(alpha=1, beta=0, theta=1))
    assert dc.mu == pytest.approx(25 / 6)


def test_validate_examples():
    assert validate_params(ModelParams(alpha=6, beta=0, theta=1, p=2))
    bad = validate_params(ModelParams(alpha=1, beta=0, theta=1, p=2))
    assert not bad
    assert any("p-bounds" in v for v in bad.violations)
    short = validate_params(ModelParams(alpha=1, beta=0, theta=1, r0=1, r=1.5))
    assert any("r <= 2R0" in v for v in short.violations)


def test_certificate_default_params_admissible():
    par = ModelParams(alpha=1, beta=0, theta=1.6, p=2)
    assert validate_params(par), str(validate_params(par))
    # just below the majorization threshold theta = 1.56
    assert not validate_params(par.with_(theta=1.5))


def test_reaction_value():
    assert reaction_value(ReactionSpec(), 5.0) == 0
    assert reaction_value(ReactionSpec("power_law", 1, 2), 0.0) == 0
    assert reaction_value(ReactionSpec("power_law", 2, 2), 3.0) == 18
    with pytest.raises(ValueError):
        reaction_value(ReactionSpec(), -1.0)


def test_reaction_empty_window_rejected():
    par = ModelParams(alpha=1, beta=0, theta=1.6, reaction=ReactionSpec("power_law", 1.0, 2.0))
    lo, hi = s_window(par)
    assert lo >= hi
    with pytest.raises(ValueError):
        derive_constants(par)


def test_reaction_in_2d():
    par = ModelParams(alpha=1, beta=0, theta=4, dim=2, p=2,
                      reaction=ReactionSpec("power_law", 0.5, 3.0))
    lo, hi = s_window(par)
    assert lo < hi
    dc = derive_constants(par, u_max=1.0)
    assert dc.M_L > 0
    assert dc.H == pytest.approx(dc.s / ((1 + dc.eps0) * 2))
    # (1+eps0)(1-H) + s/(beta+2) = 1+eps0
    assert (1 + dc.eps0) * (1 - dc.H) + dc.s / 2 == pytest.approx(1 + dc.eps0, rel=1e-13)
    assert f_derivative_sup(par, dc.s, 1.0) == pytest.approx(dc.sup_f_prime)


def test_no_reaction_neutral_values():
    dc = derive_constants(ModelParams(alpha=2, beta=1, theta=2, p=3))
    assert dc.M_L == 0 and dc.s == 3
    assert dc.q == pytest.approx(1 - dc.Lambda)
    assert dc.t_pow_q(2.0) == pytest.approx(2.0 ** (1 - dc.Lambda))


def test_constructor_rejects_nonsense():
    with pytest.raises(ValueError):
        ModelParams(k2=0)
    with pytest.raises(ValueError):
        ModelParams(theta=0.5)
    with pytest.raises(ValueError):
        ModelParams(dim=3)


def test_constants_csv_roundtrip(tmp_path):
    dc = derive_constants(ModelParams(alpha=6, theta=1), omega_measure=10.0, omega0_measure=5.0)
    n = write_constants_csv(dc, tmp_path / "c.csv")
    back = read_constants_csv(tmp_path / "c.csv")
    assert len(back) == n
    assert back["C"] == dc.C and back["D_3"] == dc.D[3]


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_invariants_random_admissible(seed):
    par = random_admissible(np.random.default_rng(seed))
    dc = derive_constants(par)
    assert 0 < dc.Lambda < 1
    assert dc.eps0 > 0 and dc.lam > 0 and dc.C > 0 and dc.G > 0 and dc.b_L > 1
    lhs = dc.Lambda + (1 - dc.Lambda) * (par.beta + 2) / dc.lam
    assert lhs == pytest.approx(1 + dc.eps0, rel=1e-12)
    ab = par.alpha + par.beta
    explicit = par.dim * ab * (par.beta + 2) / (ab + par.dim * (par.beta + 2) * (par.theta + 1))
    assert dc.eps0 == pytest.approx(explicit, rel=1e-12)
    assert np.all(np.diff(dc.D) > 0)
    n = np.arange(21)
    assert np.all(d_n(par, n) <= d_n_majorant(par, n) * (1 + 1e-12))


@settings(max_examples=200, deadline=None)
@given(seeds, st.floats(0, 1))
def test_validate_monotone_in_p(seed, frac):
    par = random_admissible(np.random.default_rng(seed))
    lo = par.beta + 2
    smaller = par.with_(p=lo + frac * (par.p - lo))
    assert validate_params(smaller)
