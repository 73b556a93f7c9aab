import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from zkdecay import params as P


@pytest.mark.parametrize("b,r,ok", [(0.3, 1.0, True), (0.7, 1.0, False), (0.49, 1.0, True),
                                    (0.5, 1.0, False), (0.1, 0.2, False), (0.1, 3.0, False)])
def test_validate_2d(b, r, ok):
    assert P.validate_2d(P.RegionParams2D(b, r)).valid is ok


def test_rejection_names_the_condition():
    rep = P.validate_2d(P.RegionParams2D(0.7, 1.0))
    assert rep.failed() == ["0 < b < 2/(3+r)"]
    assert rep.to_dict()["valid"] is False


def test_h1_mode_narrows_r():
    prm = P.RegionParams2D(0.3, 0.5)
    assert P.validate_2d(prm, "L2").valid
    assert not P.validate_2d(prm, "H1").valid
    with pytest.raises(ValueError):
        P.validate_2d(prm, "H2")


def test_q_constraints_and_note():
    rep = P.validate_2d(P.RegionParams2D(0.3, 1.0, q=1.1))
    assert rep.valid
    assert rep.derived["q_lemdecay"] == pytest.approx(2 / 0.3 - 3)
    assert rep.notes
    assert not P.validate_2d(P.RegionParams2D(0.3, 1.0, q=2.5)).valid


def test_br_example_is_not_below_one_fifth():
    rep = P.validate_2d(P.RegionParams2D(0.59, 0.34))
    assert rep.derived["br"] == pytest.approx(0.2006, abs=1e-12)
    assert rep.derived["br"] > 0.2


def test_non_centered_offsets():
    good = P.RegionParams2D(0.3, 1.0, centered=False, m=0.5, n=0.5)
    bad = P.RegionParams2D(0.3, 1.0, centered=False, m=0.8, n=0.5)
    assert P.validate_2d(good).valid and not P.validate_2d(bad).valid


@pytest.mark.parametrize("value", [math.nan, math.inf, -1.0])
def test_non_finite_or_negative(value):
    with pytest.raises(ValueError):
        P.validate_2d(P.RegionParams2D(0.3, value))


@pytest.mark.parametrize("r,expected", [(1 / 3, 3 / 5), (3.0, 1 / 3), (1.0, 0.5)])
def test_b_supremum_2d(r, expected):
    assert abs(P.computed_b_supremum_2d(r) - expected) <= 1e-12


@pytest.mark.parametrize("r1,r2,expected", [(1.0, 1.0, 2 / 5), (1.0, 2.0, 1 / 3)])
def test_b_supremum_3d(r1, r2, expected):
    assert abs(P.computed_b_supremum_3d(r1, r2) - expected) <= 1e-12


def test_max_volume_exponent():
    v = P.max_volume_exponent_3d()
    assert v["exponent"] == pytest.approx(4 / 3, abs=1e-12)
    assert (v["r1"], v["r2"], v["b"]) == pytest.approx((1.5, 1.5, 1 / 3), abs=1e-9)


def test_max_area_exponent():
    a = P.max_area_exponent_2d()
    assert a["exponent"] == pytest.approx(4 / 3)


def test_reduce_check_small():
    rep = P.reduce_check(20_000, seed=1, boundary_samples=5_000)
    assert rep["discrepancies"] == 0
    assert rep["implied_condition_violations"] == 0
    assert rep["accepted_boundary"] > 0


def test_boundary_samples_straddle_surfaces():
    rng = np.random.default_rng(0)
    pts = P.boundary_biased_samples(4000, rng)
    acc = P.validate_3d_reduced(pts)
    assert 0 < acc.mean() < 1


@pytest.mark.parametrize("h1,expected", [(False, True), (True, False)])
def test_spot_point_depends_on_mode(h1, expected):
    spot = (1 / 3, 1 / 3 + 1e-3, 1 / 3, 1 / 3)
    assert bool(P.validate_3d_full(spot, h1)) is expected
    assert bool(P.validate_3d_reduced(spot, h1)) is expected


unit = st.floats(0, 1, allow_nan=False)


@given(unit, unit, unit, unit)
def test_full_equals_reduced(p1, p2, p3, p4):
    p = (p1, p2, p3, p4)
    for h1 in (True, False):
        assert bool(P.validate_3d_full(p, h1)) == bool(P.validate_3d_reduced(p, h1))


@given(unit, unit, unit, unit)
def test_normalized_system_agrees(p1, p2, p3, p4):
    assume(p1 > 1e-3)
    p = (p1, p2, p3, p4)
    assume(min(abs(p3 / p1 - 1), abs(p4 / p1 - 1), abs(p2 / p1 - 1)) > 1e-9)
    assert bool(P.normalized_system(p)) == bool(P.validate_3d_reduced(p))


@given(st.floats(0.5, 1.0), unit, unit, unit)
def test_large_p1_always_rejected(p1, p2, p3, p4):
    assert not P.validate_3d_full((p1, p2, p3, p4), h1=False)


def test_from_box_roundtrip():
    prm = P.RegionParams3D.from_box(0.3, 1.2, 1.4)
    assert prm.as_tuple() == pytest.approx((0.3, 0.301, 0.36, 0.42))
    assert P.check_3d(prm).valid
    assert P.validate_3d_region(0.3, 1.2, 1.4).valid


@pytest.mark.parametrize("p,q,b_sup", [(2, 1.5, 2 / 3.5), (4, 1.1, 4 / (4 + 3.3))])
def test_gkdv_bounds(p, q, b_sup):
    rep = P.validate_gkdv(P.GkdvParams(p, b_sup, q))
    assert rep.valid and rep.derived["b_sup"] == pytest.approx(b_sup)
    assert not P.validate_gkdv(P.GkdvParams(p, b_sup + 1e-9, q)).valid


def test_gkdv_power_checked():
    with pytest.raises(ValueError):
        P.validate_gkdv(P.GkdvParams(3, 0.3, 1.1))


@given(st.floats(2.1, 1e6))
def test_scale_law_log_derivatives(t):
    law = P.ScaleLaws2D(0.3, 1.0)
    h = 1e-6 * t
    fd = (np.log(law.lambda1(t + h)) - np.log(law.lambda1(t - h))) / (2 * h)
    assert law.lambda1_log_derivative(t) == pytest.approx(fd, rel=1e-5, abs=1e-12)
    fd = (np.log(law.eta(t + h)) - np.log(law.eta(t - h))) / (2 * h)
    assert law.eta_log_derivative(t) == pytest.approx(fd, rel=1e-5, abs=1e-12)


@given(st.floats(2.5, 1e4), st.floats(0.1, 1.5), st.floats(0.01, 0.5))
def test_far_scale_derivative(t, p, eps):
    h = 1e-6 * t
    fd = (P.theta_far(t + h, p, eps) - P.theta_far(t - h, p, eps)) / (2 * h)
    assert P.theta_far_derivative(t, p, eps) == pytest.approx(fd, rel=1e-5)


def test_scale_laws_need_large_time():
    with pytest.raises(ValueError):
        P.ScaleLaws2D(0.3, 1.0).lambda1(1.5)


def test_region_boxes():
    box = P.region_omega(16.0, P.RegionParams2D(0.25, 2.0))
    assert box.half_widths == pytest.approx((2.0, 4.0))
    assert box.contains(1.9, -3.9) and not box.contains(2.0, 0.0)
    off = P.region_omega(16.0, P.RegionParams2D(0.3, 1.0, centered=False, m=0.5, n=0.25,
                                                sign_m=1, sign_n=-1))
    assert off.center == pytest.approx((-4.0, 2.0))
    with pytest.raises(ValueError):
        P.region_omega(1.0, P.RegionParams2D(0.3, 1.0))
    with pytest.raises(ValueError):
        P.region_omega(10.0, P.RegionParams2D(0.7, 1.0))
