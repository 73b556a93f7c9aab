"""Functionals and identities evaluated along simulated trajectories.

All weighted integrals are grid Riemann sums over the periodic box, which is
spectrally accurate for smooth integrands.  Separable weights are formed as
outer products of one-dimensional factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import params as P
from . import weights as W
from . import solver as S
from .solver import Field

# phi(x) >= 1e-14 exactly when |x| <= ln(1e14), since phi = e^{-|x|} beyond the blend
SUPPORT_CUTOFF = math.log(1e14)
TIME_FLOOR_LARGE = 10.0


class OmegaOverflowError(ValueError):
    """A weight or region reaches beyond the trusted part of the periodic box."""


# ---------------------------------------------------------------- helpers

def _axis_array(grid, j: int) -> np.ndarray:
    shape = [1] * grid.dimension
    shape[j] = -1
    return grid.axis(j).reshape(shape)


def _check_support(grid, centers, half_widths, what: str) -> None:
    for j, (c, h) in enumerate(zip(centers, half_widths)):
        L = grid.half_length[j]
        if abs(c) + h > L / 2:
            raise OmegaOverflowError(
                f"{what} on axis {j} reaches {abs(c) + h:.4g}, beyond the central half-box {L / 2:.4g}")


def _localized(scale: float, arg_scale: float) -> float:
    """Half-width where phi_scale(x / arg_scale) stays above 1e-14."""
    return SUPPORT_CUTOFF * scale * arg_scale


def _shifts_2d(t: float, params: P.RegionParams2D) -> tuple[float, float]:
    if params.centered:
        return 0.0, 0.0
    return params.sign_m * t**params.m, params.sign_n * t**params.n


def _q_of(params: P.RegionParams2D) -> float:
    return P.q_lemdecay(params.b, params.r) if params.q is None else params.q


def _require_valid_2d(params: P.RegionParams2D, mode: str = "L2") -> None:
    rep = P.validate_2d(params, mode)
    if not rep.valid:
        raise ValueError(f"invalid 2D parameters: {rep.failed()}")


def _require_2d(field: Field) -> None:
    if field.grid.dimension != 2:
        raise ValueError("this functional needs a two-dimensional field")


FINE_SAMPLING = 64


def weighted_integral(values: np.ndarray, grid, weights, fine: int = FINE_SAMPLING) -> float:
    """int I(x) prod_j w_j(x_j) dx, with I the trigonometric interpolant of ``values``.

    Each w_j is a callable of the axis coordinate (None means 1), sampled on a
    1D grid ``fine`` times denser than the axis.  This stays accurate when a
    weight is narrower than the grid spacing, which a plain grid sum is not.
    """
    F = np.fft.fftn(values)
    total = float(np.prod(grid.n))
    for n, L, w in zip(grid.n, grid.half_length, weights):
        modes = np.fft.fftfreq(n, 1.0 / n).astype(int)
        if w is None:
            S_ = np.where(modes == 0, 2.0 * L, 0.0)
        else:
            M = fine * n
            xf = -L + np.arange(M) * (2.0 * L / M)
            wv = np.broadcast_to(np.asarray(w(xf), dtype=float), (M,))
            S_ = np.fft.ifft(wv)[modes % M] * (2.0 * L)
            S_[n // 2] = 0.0
        F = np.tensordot(S_, F, axes=([0], [0]))
    return float(F.real) / total


def _padded(field: Field):
    """Samples of ``field`` on the doubled grid, where quadratic and cubic terms stay band-limited."""
    return S.upsample(field, 2)


# ------------------------------------------------------------------- Xi, 2D

def xi_2d(field: Field, t: float, params: P.RegionParams2D, sigma: float = 1.0,
          delta1: float = 1.0, delta2: float = 1.0) -> float:
    """(1/eta) int u psi_sigma(x~/l1) phi_d1(x~/l1^q) phi_d2(y~/l2), x~ = x + rho1, y~ = y + rho2."""
    _require_2d(field)
    _require_valid_2d(params)
    if t < P.T_MIN:
        raise ValueError(f"t must be >= {P.T_MIN}")
    law = P.ScaleLaws2D(params.b, params.r)
    l1, l2, eta = float(law.lambda1(t)), float(law.lambda2(t)), float(law.eta(t))
    q = _q_of(params)
    r1, r2 = _shifts_2d(t, params)
    grid = field.grid
    _check_support(grid, (-r1, -r2),
                   (_localized(delta1, l1**q), _localized(delta2, l2)), "Xi weight")
    def wx(x):
        return W.psi_sigma(sigma, (x + r1) / l1) * W.phi_sigma(delta1, (x + r1) / l1**q)

    def wy(y):
        return W.phi_sigma(delta2, (y + r2) / l2)

    return weighted_integral(field.values, grid, [wx, wy]) / eta


def xi_bound_2d(t: float, params: P.RegionParams2D, u0_norm: float, sigma: float = 1.0,
                delta1: float = 1.0, delta2: float = 1.0) -> float:
    """Cauchy-Schwarz bound (l1^q l2)^{1/2}/eta ||u0|| ||psi_sigma||_inf ||phi_d1||_2 ||phi_d2||_2."""
    law = P.ScaleLaws2D(params.b, params.r)
    l1, l2, eta = float(law.lambda1(t)), float(law.lambda2(t)), float(law.eta(t))
    q = _q_of(params)
    return (math.sqrt(l1**q * l2) / eta * c2_constant(u0_norm, sigma, delta1, delta2))


def c2_constant(u0_norm: float, sigma: float, delta1: float, delta2: float,
                delta3: float | None = None) -> float:
    """||u0|| ||psi_sigma||_inf ||phi_d2||_2 ||phi_d1||_2 (times ||phi_d3||_2 in 3D)."""
    c = u0_norm * W.sup_norm_psi(sigma) * W.l2_norm_phi(delta2) * W.l2_norm_phi(delta1)
    if delta3 is not None:
        c *= W.l2_norm_phi(delta3)
    return c


# ------------------------------------------------------------------- Xi, 3D

def xi_3d(field: Field, t: float, params: P.RegionParams3D, sigma: float = 1.0,
          delta1: float = 1.0, delta2: float = 1.0, delta3: float = 1.0) -> float:
    """(1/eta) int u psi_sigma(x/l1) phi_d1(x/l2) phi_d2(y/l3) phi_d3(z/l4)."""
    if field.grid.dimension != 3:
        raise ValueError("xi_3d needs a three-dimensional field")
    if not bool(P.validate_3d_full(params.as_tuple())):
        raise ValueError("invalid 3D parameters")
    law = P.ScaleLaws3D(params)
    l1, l2, l3, l4 = (float(f(t)) for f in (law.lambda1, law.lambda2, law.lambda3, law.lambda4))
    eta = float(law.eta(t))
    grid = field.grid
    _check_support(grid, (0.0, 0.0, 0.0),
                   (_localized(delta1, l2), _localized(delta2, l3), _localized(delta3, l4)),
                   "Xi weight")
    weights = [lambda x: W.psi_sigma(sigma, x / l1) * W.phi_sigma(delta1, x / l2),
               lambda y: W.phi_sigma(delta2, y / l3),
               lambda z: W.phi_sigma(delta3, z / l4)]
    return weighted_integral(field.values, grid, weights) / eta


def xi_bound_3d(t: float, params: P.RegionParams3D, u0_norm: float, sigma: float = 1.0,
                delta1: float = 1.0, delta2: float = 1.0, delta3: float = 1.0) -> float:
    law = P.ScaleLaws3D(params)
    vol = float(law.lambda2(t) * law.lambda3(t) * law.lambda4(t))
    return math.sqrt(vol) / float(law.eta(t)) * c2_constant(u0_norm, sigma, delta1, delta2, delta3)


# ----------------------------------------------------------------- Xi, gKdV

def xi_gkdv(field: Field, t: float, params: P.GkdvParams, sigma: float = 1.0,
            delta1: float = 1.0) -> float:
    """(1/eta) int u psi_sigma(x~/l1) phi_d1(x~/l1^q), x~ measured from the region center."""
    if field.grid.dimension != 1:
        raise ValueError("xi_gkdv needs a one-dimensional field")
    box = P.region_omega(t, params)
    law = P.ScaleLawsGkdv(params)
    l1, eta = float(law.lambda1(t)), float(law.eta(t))
    grid = field.grid
    _check_support(grid, box.center, (_localized(delta1, l1**params.q),), "Xi weight")
    c = box.center[0]

    def w(x):
        return W.psi_sigma(sigma, (x - c) / l1) * W.phi_sigma(delta1, (x - c) / l1**params.q)

    return weighted_integral(field.values, grid, [w]) / eta


def xi_bound_gkdv(t: float, params: P.GkdvParams, u0_norm: float, sigma: float = 1.0,
                  delta1: float = 1.0) -> float:
    law = P.ScaleLawsGkdv(params)
    l1, eta = float(law.lambda1(t)), float(law.eta(t))
    return (math.sqrt(l1**params.q) / eta * u0_norm * W.sup_norm_psi(sigma)
            * W.l2_norm_phi(delta1))


# ------------------------------------------------------------ H1 functional

def q_functional(field: Field, t: float, params, sigma_prime: float, sigma: float = 1.0,
                 delta1: float = 1.0, delta2: float = 1.0, delta3: float = 1.0) -> float:
    """(1/eta) int u^2 psi_{sigma_prime}(x/l1) times the transverse phi factors.

    The x factor is odd, so the value carries the sign of the x-imbalance of u^2.
    """
    if not 1.0 / sigma + 1.0 / delta1 <= 1.0 / sigma_prime:
        raise ValueError("sigma' must satisfy 1/sigma + 1/delta1 <= 1/sigma'")
    grid = field.grid
    if isinstance(params, P.RegionParams2D):
        _require_2d(field)
        _require_valid_2d(params, "H1")
        law = P.ScaleLaws2D(params.b, params.r)
        l1, l2, eta = float(law.lambda1(t)), float(law.lambda2(t)), float(law.eta(t))
        _check_support(grid, (0.0, 0.0), (0.0, _localized(delta2, l2)), "Q weight")
        weights = [lambda x: W.psi_sigma(sigma_prime, x / l1),
                   lambda y: W.phi_sigma(delta2, y / l2)]
    elif isinstance(params, P.RegionParams3D):
        if grid.dimension != 3:
            raise ValueError("3D parameters need a three-dimensional field")
        if not bool(P.validate_3d_full(params.as_tuple(), h1=True)):
            raise ValueError("invalid 3D parameters for the H1 functional")
        law = P.ScaleLaws3D(params)
        l1, l3, l4, eta = (float(f(t)) for f in (law.lambda1, law.lambda3, law.lambda4, law.eta))
        _check_support(grid, (0.0,) * 3, (0.0, _localized(delta2, l3), _localized(delta3, l4)),
                       "Q weight")
        weights = [lambda x: W.psi_sigma(sigma_prime, x / l1),
                   lambda y: W.phi_sigma(delta2, y / l3),
                   lambda z: W.phi_sigma(delta3, z / l4)]
    else:
        raise TypeError("q_functional takes 2D or 3D region parameters")
    fine = _padded(field)
    return weighted_integral(fine.values**2, fine.grid, weights) / eta


# --------------------------------------------------------------- local norms

def _box_mask(grid, box: P.Box) -> np.ndarray:
    for j, (c, h) in enumerate(zip(box.center, box.half_widths)):
        if abs(c) + h > grid.half_length[j]:
            raise OmegaOverflowError(f"region exceeds the grid on axis {j}")
    X = grid.coords()
    return np.broadcast_to(box.contains(*X), grid.shape)


def local_mass(field: Field, box: P.Box) -> float:
    """Sum of u^2 over the cells whose centers lie in ``box``."""
    return field.integrate(np.where(_box_mask(field.grid, box), field.values**2, 0.0))


def local_h1(field: Field, box: P.Box) -> float:
    dens = field.values**2 + sum(g**2 for g in field.gradient())
    return field.integrate(np.where(_box_mask(field.grid, box), dens, 0.0))


def _monitored_factors(grid, t: float, params: P.RegionParams2D, sigma: float, delta1: float,
                       delta2: float):
    """The separable monitored weight as (x factor, y factor) and its normalization l1 eta."""
    law = P.ScaleLaws2D(params.b, params.r)
    l1, l2, eta = float(law.lambda1(t)), float(law.lambda2(t)), float(law.eta(t))
    q = _q_of(params)
    r1, r2 = _shifts_2d(t, params)
    _check_support(grid, (-r1, -r2),
                   (_localized(min(sigma, delta1 * l1 ** (q - 1)), l1), _localized(delta2, l2)),
                   "monitored weight")

    def wx(x):
        return W.psi_sigma(sigma, (x + r1) / l1, 1) * W.phi_sigma(delta1, (x + r1) / l1**q)

    def wy(y):
        return W.phi_sigma(delta2, (y + r2) / l2)

    return wx, wy, l1 * eta


def weighted_local_mass(field: Field, t: float, params: P.RegionParams2D, sigma: float = 1.0,
                        delta1: float = 1.0, delta2: float = 1.0) -> float:
    """(1/(l1 eta)) int u^2 psi_sigma'(x~/l1) phi_d1(x~/l1^q) phi_d2(y~/l2)."""
    _require_2d(field)
    _require_valid_2d(params)
    wx, wy, scale = _monitored_factors(field.grid, t, params, sigma, delta1, delta2)
    fine = _padded(field)
    return weighted_integral(fine.values**2, fine.grid, [wx, wy]) / scale


def monitored_term(field: Field, t: float, params: P.RegionParams2D, sigma: float = 1.0,
                   delta1: float = 1.0, delta2: float = 1.0) -> float:
    """Half the weighted local mass: the positive term of dXi/dt that the time integral controls."""
    return 0.5 * weighted_local_mass(field, t, params, sigma, delta1, delta2)


def min_weight_on_omega(grid, t: float, params: P.RegionParams2D, sigma: float = 1.0,
                        delta1: float = 1.0, delta2: float = 1.0) -> float:
    wx, wy, _ = _monitored_factors(grid, t, params, sigma, delta1, delta2)
    mask = _box_mask(grid, P.region_omega(t, params))
    if not mask.any():
        return 1.0
    w = wx(_axis_array(grid, 0)) * wy(_axis_array(grid, 1))
    return float(np.min(np.broadcast_to(w, grid.shape)[mask]))


def cubic_quadratic_ratio(field: Field, t: float, params: P.RegionParams2D, sigma: float = 1.0,
                          delta1: float = 1.0, delta2: float = 1.0) -> dict:
    """Realized constant C in int |u|^3 w <= C int u^2 w for the monitored weight w."""
    wx, wy, _ = _monitored_factors(field.grid, t, params, sigma, delta1, delta2)
    # |u|^3 is not band-limited, so both integrals are plain sums on a 4x finer grid
    fine = S.upsample(field, 4)
    g = fine.grid
    w = wx(_axis_array(g, 0)) * wy(_axis_array(g, 1))
    quad = fine.integrate(fine.values**2 * w)
    cubic = fine.integrate(np.abs(fine.values) ** 3 * w)
    h1 = math.sqrt(field.integrate(field.values**2 + sum(g**2 for g in field.gradient())))
    ratio = cubic / quad if quad > 0 else 0.0
    return {"cubic": cubic, "quadratic": quad, "realized_constant": ratio,
            "h1_norm": h1, "constant_over_h1": ratio / h1 if h1 > 0 else 0.0}


# ------------------------------------------------------------- accumulators

@dataclass
class AccumulatorResult:
    times: np.ndarray
    partial_sums: np.ndarray
    first_quartile_increment: float
    last_quartile_increment: float

    @property
    def quartile_ratio(self) -> float:
        if self.first_quartile_increment == 0:
            return 0.0 if self.last_quartile_increment == 0 else math.inf
        return self.last_quartile_increment / self.first_quartile_increment


def decay_accumulator(times, values, t_floor: float = TIME_FLOOR_LARGE) -> AccumulatorResult:
    """Trapezoid partial sums of int value / (t ln t) dt."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1 or t.size < 2:
        raise ValueError("times and values must be equal-length 1D series of length >= 2")
    if t[0] < t_floor:
        raise ValueError(f"accumulator needs t >= {t_floor}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    f = v / (t * np.log(t))
    sums = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))])
    span = t[-1] - t[0]
    at = np.interp([t[0] + span / 4, t[-1] - span / 4], t, sums)
    return AccumulatorResult(t, sums, float(at[0] - sums[0]), float(sums[-1] - at[1]))


def log_power_integral(a, T, b: float):
    """int_a^T ds / (s ln^{1/b} s) in closed form (1/b > 1)."""
    alpha = 1.0 / b
    la, lT = np.log(a), np.log(T)
    return (la ** (1 - alpha) - lT ** (1 - alpha)) / (alpha - 1)


def lemdecay_majorant(a: float, T, C0: float, b: float):
    """C0 / ln^{1/b}(a) + C0 int_a^T ds / (s ln^{1/b} s)."""
    return C0 / math.log(a) ** (1.0 / b) + C0 * log_power_integral(a, T, b)


def fit_c1(times, xi_values, monitored_values, b: float) -> float:
    """Smallest C1 with monitored <= dXi/dt + C1 / (t ln^{1/b} t) at every sample."""
    t = np.asarray(times, dtype=float)
    dxi = np.gradient(np.asarray(xi_values, dtype=float), t)
    gap = np.asarray(monitored_values, dtype=float) - dxi
    return float(max(0.0, np.max(gap * t * np.log(t) ** (1.0 / b))))


def fitted_constants(times, xi_values, monitored_values, b: float, u0_norm: float,
                     sigma: float, delta1: float, delta2: float) -> dict:
    c2 = c2_constant(u0_norm, sigma, delta1, delta2)
    c1 = fit_c1(times, xi_values, monitored_values, b)
    half = len(times) // 2
    c1_half = fit_c1(times[:half], xi_values[:half], monitored_values[:half], b) if half > 2 else c1
    return {"C0": c2 / b + c1, "C1": c1, "C2": c2, "C1_first_half": c1_half}


def rate_certificate(values, times, b: float, C0: float) -> np.ndarray:
    """True where F(t_n) <= C0 / ln^{1/b - 1}(t_n)."""
    t = np.asarray(times, dtype=float)
    return np.asarray(values, dtype=float) <= C0 / np.log(t) ** (1.0 / b - 1.0)


# ---------------------------------------------------------- time sequence

@dataclass
class TimeSequence:
    t0: float
    eps: float
    C0: float
    b: float
    log_times: list[float]
    overflow: bool = False

    @property
    def times(self) -> list[float]:
        return [math.exp(L) if L < 709.0 else math.inf for L in self.log_times]


def times_sequence(t0: float, eps: float, C0: float, b: float, n: int) -> TimeSequence:
    """t_{k+1} = t_k ^ exp(2 C0 / (eps ln^{1/b-1} t_k)), carried in log space.

    Returns n generated times t_1..t_n; ``overflow`` marks truncation once t
    leaves the double range.
    """
    if t0 < TIME_FLOOR_LARGE:
        raise ValueError(f"t0 must be >= {TIME_FLOOR_LARGE}")
    if not (eps > 0 and C0 > 0):
        raise ValueError("eps and C0 must be positive")
    if not 0 < b < 0.4:
        raise ValueError("b must lie in (0, 2/5)")
    L = math.log(t0)
    logs = []
    overflow = False
    for _ in range(n):
        growth = 2.0 * C0 / (eps * L ** (1.0 / b - 1.0))
        # exp(L) must stay representable: stop once L would reach 709
        if growth >= math.log(709.0 / L):
            overflow = True
            break
        L = L * math.exp(growth)
        logs.append(L)
    return TimeSequence(t0, eps, C0, b, logs, overflow)


# -------------------------------------------------------------- far regions

def _far_axis_check(field: Field, axis: int, theta: float) -> None:
    if axis >= field.grid.dimension:
        raise ValueError(f"axis {axis} out of range")
    if 2 * theta > field.grid.half_length[axis]:
        raise OmegaOverflowError(
            f"far band out to 2 theta = {2 * theta:.4g} exceeds the box half-length "
            f"{field.grid.half_length[axis]:.4g} on axis {axis}")


def far_region_mass(field: Field, t: float, far_exponent: float, eps: float, axis: int = 0,
                    side: int = -1) -> float:
    """Sum of u^2 over cells with theta <= side * x_axis <= 2 theta, theta = t^p ln^{1+eps} t."""
    if side not in (-1, 1):
        raise ValueError("side must be -1 or +1")
    theta = float(P.theta_far(t, far_exponent, eps))
    _far_axis_check(field, axis, theta)
    s = side * _axis_array(field.grid, axis)
    mask = np.broadcast_to((s >= theta) & (s <= 2 * theta), field.grid.shape)
    return field.integrate(np.where(mask, field.values**2, 0.0))


def _chi_factors(dimension: int, axis: int, theta: float, side: int, order: int,
                 times_arg: bool = False):
    """Per-axis weights for chi^(order)((sgn x_axis + theta)/theta), sgn = -side."""
    sgn = -side

    def w(x):
        arg = (sgn * x + theta) / theta
        val = W.chi(arg, order)
        return val * arg if times_arg else val

    return [w if j == axis else None for j in range(dimension)]


def far_energy(field: Field, t: float, far_exponent: float, eps: float, axis: int = 0,
               side: int = -1) -> float:
    """(1/2) int u^2 chi((sgn x_axis + theta)/theta)."""
    theta = float(P.theta_far(t, far_exponent, eps))
    _far_axis_check(field, axis, theta)
    fine = _padded(field)
    d = field.grid.dimension
    return 0.5 * weighted_integral(fine.values**2, fine.grid, _chi_factors(d, axis, theta, side, 0))


def far_identity_terms(field: Field, t: float, far_exponent: float, eps: float, axis: int = 0,
                       side: int = -1) -> dict:
    """The terms A_k that, added to (1/2) d/dt int u^2 chi, sum to zero for ZK with u u_x.

    Along x:  A1 = -(th'/2th) int u^2 chi',  A2 = (th'/2th) int u^2 chi' X,
              A3 = (3/2th) int u_x^2 chi',   A4 = (1/2th) int |grad_perp u|^2 chi',
              A5 = -(1/2th^3) int u^2 chi''',  A6 = -(1/3th) int u^3 chi'.
    Transverse axis j:  A1, A2 as above and A3 = (1/th) int u_x u_j chi'.
    Odd-derivative terms carry sgn = -side.
    """
    theta = float(P.theta_far(t, far_exponent, eps))
    _far_axis_check(field, axis, theta)
    rate = float(P.theta_far_derivative(t, far_exponent, eps)) / theta
    sgn = -side
    d = field.grid.dimension
    fine = _padded(field)
    g = fine.grid
    u = fine.values
    c1 = _chi_factors(d, axis, theta, side, 1)

    def I(integrand, weights=c1):
        return weighted_integral(integrand, g, weights)

    terms = {"A1": -0.5 * rate * I(u**2),
             "A2": 0.5 * rate * I(u**2, _chi_factors(d, axis, theta, side, 1, times_arg=True))}
    grads = fine.gradient()
    if axis == 0:
        perp = sum(gr**2 for gr in grads[1:]) if d > 1 else np.zeros_like(u)
        terms["A3"] = sgn * 1.5 / theta * I(grads[0] ** 2)
        terms["A4"] = sgn * 0.5 / theta * I(perp)
        terms["A5"] = -sgn * 0.5 / theta**3 * I(u**2, _chi_factors(d, axis, theta, side, 3))
        terms["A6"] = -sgn / (3.0 * theta) * I(u**3)
    else:
        terms["A3"] = sgn / theta * I(grads[0] * grads[axis])
    return terms


# rows whose largest term sits within this factor of the roundoff level are not scored
ROUNDOFF_MARGIN = 1e6


def identity_residual_6p2(before: Field, current: Field, after: Field, t: float, h: float,
                          far_exponent: float, eps: float, axis: int = 0,
                          side: int = -1) -> dict:
    """Residual of the far-region identity from snapshots at t - h, t, t + h."""
    e_minus = far_energy(before, t - h, far_exponent, eps, axis, side)
    e_plus = far_energy(after, t + h, far_exponent, eps, axis, side)
    ddt = (e_plus - e_minus) / (2 * h)
    terms = far_identity_terms(current, t, far_exponent, eps, axis, side)
    residual = abs(ddt + sum(terms.values()))
    scale = max([abs(ddt)] + [abs(v) for v in terms.values()])
    # spectral sums carry absolute error ~ eps * total mass; differencing divides by h
    roundoff = np.finfo(float).eps * S.mass(current) / h
    return {"t": t, "ddt": ddt, **terms, "residual": residual, "scale": scale,
            "relative": residual / scale if scale > 0 else 0.0,
            "resolved": bool(scale >= ROUNDOFF_MARGIN * roundoff)}


# ------------------------------------------------------------------- series

@dataclass
class DiagnosticSeries:
    """Timestamped values with a running trapezoid sum of value / (t ln t)."""

    name: str
    times: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    accumulator: list[float] = field(default_factory=list)

    def append(self, t: float, value: float) -> None:
        if not math.isfinite(value):
            raise ValueError(f"{self.name}: non-finite value at t = {t}")
        if self.times and t <= self.times[-1]:
            raise ValueError(f"{self.name}: times must increase ({t} after {self.times[-1]})")
        if self.times:
            t0, v0 = self.times[-1], self.values[-1]
            inc = 0.5 * (v0 / (t0 * math.log(t0)) + value / (t * math.log(t))) * (t - t0)
            self.accumulator.append(self.accumulator[-1] + inc)
        else:
            self.accumulator.append(0.0)
        self.times.append(float(t))
        self.values.append(float(value))

    def rows(self):
        return list(zip(self.times, self.values, self.accumulator))
