import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from zkdecay import weights as W

finite_x = st.floats(-40, 40, allow_nan=False)


def test_certification_has_no_violations():
    rep = W.verify_profile(n=10_000)
    assert len(rep) == 18
    assert [r["invariant"] for r in rep if r["max_violation"] > 0] == []


@pytest.mark.parametrize("kind", ["base-phi", "base-psi", "chi"])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
def test_certification_per_kind(kind, sigma):
    rep = W.verify_profile(kind, -30, 30, 5000, sigma)
    assert all(r["max_violation"] == 0 for r in rep)


def test_grid_too_small():
    with pytest.raises(ValueError):
        W.verify_profile(n=100)


@given(finite_x)
def test_phi_sandwich(x):
    p = W.phi(x)
    assert np.exp(-abs(x)) <= p * (1 + 1e-15) and p <= 3 * np.exp(-abs(x))


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 1.2, 1.499, 1.5, 2.0, 7.0])
def test_phi_pieces(x):
    p = W.phi(x)
    if x <= 1:
        assert p == 1.0
    if x >= 1 + W.TRANSITION_WIDTH:
        assert p == pytest.approx(np.exp(-x), rel=1e-15)


@pytest.mark.parametrize("order", [1, 2, 3])
@pytest.mark.parametrize("fn", [W.phi, W.chi], ids=["phi", "chi"])
def test_derivatives_match_finite_differences(fn, order):
    x = np.linspace(-2.2, 2.2, 2001)
    h = 1e-4
    fd = (fn(x + h, order - 1) - fn(x - h, order - 1)) / (2 * h)
    scale = np.max(np.abs(fn(x, order))) + 1
    assert np.max(np.abs(fd - fn(x, order))) < 1e-5 * scale


@pytest.mark.parametrize("x", [0.5, 1.0, 1.25, 1.5, 3.0, 10.0, 60.0])
def test_psi_is_primitive_of_phi(x):
    knots = [0.0] + [k for k in (1.0, 1.0 + W.TRANSITION_WIDTH) if k < x] + [x]
    ref = sum(quad(lambda s: float(W.phi(s)), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
              for a, b in zip(knots, knots[1:]))
    assert W.psi(x) == pytest.approx(ref, abs=1e-12)
    assert W.psi(-x) == pytest.approx(-ref, abs=1e-12)


def test_psi_limit():
    assert W.psi(200.0) == pytest.approx(W.PSI_INFINITY, abs=1e-15)
    assert W.sup_norm_psi(2.0) == pytest.approx(2 * W.PSI_INFINITY)
    assert W.PSI_INFINITY < 3


@given(st.floats(0.1, 10), st.floats(-1, 1))
def test_psi_sigma_linear_core(sigma, frac):
    x = sigma * frac
    assert W.psi_sigma(sigma, x) == pytest.approx(x, abs=1e-14)
    assert W.phi_sigma(sigma, x) == 1.0


@pytest.mark.parametrize("sigma", [0.25, 1.0, 4.0])
def test_l2_norm(sigma):
    ref, _ = quad(lambda s: float(W.phi_sigma(sigma, s)) ** 2, -np.inf, np.inf,
                  points=None, limit=400, epsabs=1e-13)
    assert W.l2_norm_phi(sigma) == pytest.approx(np.sqrt(ref), rel=1e-9)


def test_scale_must_be_positive():
    with pytest.raises(ValueError):
        W.phi_sigma(0.0, 1.0)


@given(st.floats(-3, 3))
def test_chi_range_and_reflection(x):
    c = W.chi(x)
    assert 0.0 <= c <= 1.0
    assert W.chi_reflected(x) == W.chi(-x)
    assert W.chi(x, 1) <= 0.0


def test_chi_floor_and_constant():
    assert W.measured_chi_floor() > 1.0
    c = W.measured_derivative_constant()
    assert 1.0 <= c < 200


def test_profile_object():
    prof = W.WeightProfile("base-psi", 2.0)
    assert prof(1.0) == pytest.approx(1.0)
    assert prof(0.0, 1) == 1.0
    with pytest.raises(ValueError):
        prof(0.0, 4)
    with pytest.raises(ValueError):
        W.WeightProfile("nope")(0.0)


def test_bump_partition_limits():
    t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    s = W.bump_partition(t)
    assert s[0] == 0 and s[1] == 0 and s[3] == 1 and s[4] == 1
    assert s[2] == pytest.approx(0.5)
