import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import erf

from zkdecay import diagnostics as D
from zkdecay import params as P
from zkdecay import solver as S
from zkdecay import weights as W

REGION = P.RegionParams2D(0.3, 1.0, q=1.1)


@pytest.fixture(scope="module")
def grid2():
    return S.Grid.cube(2, 256, 32 * math.pi)


def _pieces(fn, a, b, knots):
    pts = [a] + sorted(k for k in knots if a < k < b) + [b]
    return sum(quad(fn, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
               for lo, hi in zip(pts, pts[1:]))


def test_xi_separable_against_quadrature(grid2):
    t, sx, w = 20.0, 3.0, 4.0
    f = S.gaussian(grid2, 0.4, w, center=(sx, 0.0))
    law = P.ScaleLaws2D(0.3, 1.0)
    l1, l2, eta = float(law.lambda1(t)), float(law.lambda2(t)), float(law.eta(t))
    q = 1.1
    gx = lambda x: 0.4 * math.exp(-((x - sx) ** 2) / w**2)
    gy = lambda y: math.exp(-(y**2) / w**2)
    wx = lambda x: float(W.psi_sigma(1.0, x / l1) * W.phi_sigma(1.0, x / l1**q))
    wy = lambda y: float(W.phi_sigma(1.0, y / l2))
    kx = [s * k for s in (-1, 1) for k in (l1, 1.5 * l1, l1**q, 1.5 * l1**q)]
    ky = [s * k for s in (-1, 1) for k in (l2, 1.5 * l2)]
    ix = _pieces(lambda x: gx(x) * wx(x), -60, 60, kx)
    iy = _pieces(lambda y: gy(y) * wy(y), -60, 60, ky)
    assert D.xi_2d(f, t, REGION) == pytest.approx(ix * iy / eta, rel=1e-9)


def test_xi_vanishes_for_even_data(grid2):
    f = S.gaussian(grid2, 0.5, 4.0)
    assert abs(D.xi_2d(f, 20.0, REGION)) < 1e-15


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(10.0, 60.0))
def test_xi_bound_holds_for_random_data(seed, t):
    g = S.Grid.cube(2, 128, 32 * math.pi)
    f = S.random_band_limited(g, seed, 0.5, 0.5)
    bound = D.xi_bound_2d(t, REGION, math.sqrt(S.mass(f)))
    assert abs(D.xi_2d(f, t, REGION)) <= bound


def test_xi_rejects_bad_input(grid2):
    f = S.gaussian(grid2, 0.5, 4.0)
    with pytest.raises(ValueError):
        D.xi_2d(f, 20.0, P.RegionParams2D(0.7, 1.0))
    with pytest.raises(ValueError):
        D.xi_2d(f, 1.0, REGION)
    small = S.Grid.cube(2, 64, 10.0)
    with pytest.raises(D.OmegaOverflowError):
        D.xi_2d(S.gaussian(small, 0.5, 1.0), 50.0, REGION)


def test_xi_gkdv_and_3d_bounds():
    g1 = S.Grid.cube(1, 4096, 256 * math.pi)
    f1 = S.gaussian(g1, 0.5, 4.0, center=(2.0,))
    prm = P.GkdvParams(2, 0.5, 1.1)
    for t in (5.0, 20.0):
        assert abs(D.xi_gkdv(f1, t, prm)) <= D.xi_bound_gkdv(t, prm, math.sqrt(S.mass(f1)))
    g3 = S.Grid.cube(3, 64, 32 * math.pi)
    f3 = S.gaussian(g3, 0.5, 4.0, center=(2.0, 0.0, 0.0))
    p3 = P.RegionParams3D(1 / 3, 1 / 3 + 1e-3, 1 / 3 + 1e-4, 1 / 3 + 1e-4)
    w = {"delta1": 0.5, "delta2": 0.5, "delta3": 0.5}
    val = D.xi_3d(f3, 3.0, p3, **w)
    assert 0 < val <= D.xi_bound_3d(3.0, p3, math.sqrt(S.mass(f3)), **w)


def test_q_functional_takes_both_signs(grid2):
    prm = P.RegionParams2D(0.3, 1.5)
    right = S.gaussian(grid2, 0.5, 2.0, center=(3.0, 0.0))
    left = S.gaussian(grid2, 0.5, 2.0, center=(-3.0, 0.0))
    a = D.q_functional(right, 20.0, prm, 0.5)
    b = D.q_functional(left, 20.0, prm, 0.5)
    assert a > 0 > b and a == pytest.approx(-b, rel=1e-12)
    with pytest.raises(ValueError):
        D.q_functional(right, 20.0, prm, 0.9)
    with pytest.raises(ValueError):
        D.q_functional(right, 20.0, REGION, 0.5)


def test_local_mass_against_erf():
    g = S.Grid.cube(1, 4096, 20.0)
    dx = g.dx[0]
    A, w = 0.8, 2.0
    f = S.gaussian(g, A, w)
    h = 256.5 * dx  # edges midway between nodes
    dens = lambda x: A**2 * np.exp(-2 * x**2 / w**2)
    ddens = lambda x: -4 * x / w**2 * dens(x)
    exact = A**2 * w * math.sqrt(math.pi / 2) * erf(math.sqrt(2) * h / w)
    corrected = exact - dx**2 / 24 * (ddens(h) - ddens(-h))
    box = P.Box((0.0,), (h,))
    assert D.local_mass(f, box) == pytest.approx(corrected, abs=1e-8)


def test_local_mass_overflow(grid2):
    with pytest.raises(D.OmegaOverflowError):
        D.local_mass(S.gaussian(grid2, 1.0, 1.0), P.Box((0.0, 0.0), (200.0, 1.0)))


def test_monitored_term_is_half_weighted(grid2):
    f = S.gaussian(grid2, 0.4, 4.0)
    wm = D.weighted_local_mass(f, 20.0, REGION)
    assert D.monitored_term(f, 20.0, REGION) == pytest.approx(wm / 2)
    assert wm > 0
    assert D.min_weight_on_omega(grid2, 20.0, REGION) > 0


def test_accumulator_trapezoid_is_exact_for_linear_integrand():
    t = np.linspace(10, 50, 81)
    acc = D.decay_accumulator(t, 3.0 * t * np.log(t))
    assert acc.partial_sums[-1] == pytest.approx(120.0, rel=1e-13)
    assert acc.quartile_ratio == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("bad", [[5.0, 20.0], [20.0, 15.0]])
def test_accumulator_rejects(bad):
    with pytest.raises(ValueError):
        D.decay_accumulator(bad, [1.0, 1.0])


@pytest.mark.parametrize("b", [0.2, 1 / 3, 0.45])
def test_log_power_integral(b):
    ref = quad(lambda s: 1 / (s * math.log(s) ** (1 / b)), 10, 1e4, epsrel=1e-12)[0]
    assert D.log_power_integral(10.0, 1e4, b) == pytest.approx(ref, rel=1e-10)


def test_fit_c1_recovers_known_constant():
    b = 0.3
    t = np.linspace(10, 60, 20001)
    xi = 1 / np.log(t)
    dxi = -1 / (t * np.log(t) ** 2)
    mon = dxi + 2.5 / (t * np.log(t) ** (1 / b))
    assert D.fit_c1(t, xi, mon, b) == pytest.approx(2.5, rel=1e-4)


def test_time_sequence_against_mpmath():
    b, C0, eps, t0 = 1 / 3, 1.0, 0.1, 10.0
    seq = D.times_sequence(t0, eps, C0, b, 20)
    with mp.workdps(50):
        L = mp.log(t0)
        for got in seq.times:
            L = L * mp.exp(2 * C0 / (eps * L ** (1 / mp.mpf(b) - 1)))
            assert abs(got - float(mp.exp(L))) <= 1e-12 * float(mp.exp(L))
    assert not seq.overflow


def test_time_sequence_overflow_and_domain():
    seq = D.times_sequence(10.0, 0.01, 50.0, 0.3, 5)
    assert seq.overflow
    with pytest.raises(ValueError):
        D.times_sequence(5.0, 0.1, 1.0, 0.3, 3)
    with pytest.raises(ValueError):
        D.times_sequence(10.0, 0.1, 1.0, 0.5, 3)


def test_far_region_mass_matches_erf():
    g = S.Grid.cube(2, 256, 32 * math.pi)
    t = 20.0
    th = float(P.theta_far(t, 0.5, 0.1))
    w = 3.0
    f = S.gaussian(g, 0.5, w, center=(-1.5 * th, 0.0))
    one_d = lambda a, b: w * math.sqrt(math.pi / 2) / 2 * (erf(math.sqrt(2) * b / w) - erf(math.sqrt(2) * a / w))
    exact = 0.25 * one_d(-0.5 * th, 0.5 * th) * one_d(-200, 200)
    dx = g.dx[0]
    assert D.far_region_mass(f, t, 0.5, 0.1) == pytest.approx(exact, abs=2 * dx * 0.25 * w)


def test_far_identity_on_short_run():
    g = S.Grid.cube(2, 256, 32 * math.pi)
    st_ = S.initialize(S.gaussian(g, 0.2, 8.0), 10.0, 0.01, "zk")
    S.advance(st_, 49)
    before = st_.field
    S.step(st_)
    current, t = st_.field, st_.t
    S.step(st_)
    res = D.identity_residual_6p2(before, current, st_.field, t, 0.01, 0.5, 0.1, axis=0)
    assert res["relative"] <= 1e-4
    assert res["A1"] >= 0 and res["A2"] >= 0
    res_y = D.identity_residual_6p2(before, current, st_.field, t, 0.01, 0.5, 0.1, axis=1)
    assert res_y["relative"] <= 1e-4


def test_far_band_must_fit():
    g = S.Grid.cube(2, 64, 10.0)
    with pytest.raises(ValueError):
        D.far_region_mass(S.gaussian(g, 1.0, 1.0), 100.0, 0.5, 0.1)


def test_diagnostic_series():
    s = D.DiagnosticSeries("m")
    s.append(10.0, 1.0)
    s.append(11.0, 1.0)
    with pytest.raises(ValueError):
        s.append(11.0, 1.0)
    with pytest.raises(ValueError):
        s.append(12.0, math.nan)
    assert s.rows()[-1][2] > 0


def test_rate_certificate():
    t = np.array([10.0, 100.0])
    ok = D.rate_certificate([0.1, 10.0], t, 0.3, 1.0)
    assert ok.tolist() == [True, False]
