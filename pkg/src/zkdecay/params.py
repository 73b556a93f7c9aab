"""Parameter regions, time-dependent scale laws and the constraint-system oracle.

Comparisons are exact (no slack): the constraints are open or closed
conditions, and boundary behaviour is part of what gets tested.

The symbol ``p`` is used three different ways in the underlying analysis
(exponent of the compensation factor, gKdV nonlinearity power, far-region
growth exponent); here they are ``eta_exponent``, ``GkdvParams.p`` and
``far_exponent`` respectively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

T_MIN = 2.0


def _finite_nonneg(**values):
    for name, v in values.items():
        if v is None:
            continue
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v!r}")


@dataclass
class ValidityReport:
    checks: dict[str, bool]
    derived: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(self.checks.values())

    def failed(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]

    def to_dict(self) -> dict:
        return {"valid": self.valid, "checks": dict(self.checks),
                "derived": dict(self.derived), "notes": list(self.notes)}


# --------------------------------------------------------------------------- 2D

@dataclass(frozen=True)
class RegionParams2D:
    b: float
    r: float
    q: float | None = None
    centered: bool = True
    m: float = 0.0
    n: float = 0.0
    sign_m: int = 1
    sign_n: int = 1


def b_supremum_2d(r: float) -> float:
    return 2.0 / (3.0 + r)


def q_lemdecay(b: float, r: float) -> float:
    """The q forced by the decay-rate lemma, q = 2/b - r - 2."""
    return 2.0 / b - r - 2.0


def validate_2d(params: RegionParams2D, mode: str = "L2") -> ValidityReport:
    """Check the 2D box conditions; ``mode='H1'`` additionally needs 1 < r < 3."""
    b, r, q = params.b, params.r, params.q
    _finite_nonneg(b=b, r=r, q=q, m=params.m, n=params.n)
    checks = {
        "1/3 < r < 3": 1.0 / 3.0 < r < 3.0,
        "0 < b < 2/(3+r)": 0.0 < b < 2.0 / (3.0 + r),
    }
    if q is not None:
        checks["1 < q < 2"] = 1.0 < q < 2.0
        checks["b <= 2/(2+q+r)"] = b <= 2.0 / (2.0 + q + r)
    if not params.centered:
        checks["0 <= m < 1 - b(1+r)/2"] = 0.0 <= params.m < 1.0 - 0.5 * b * (1.0 + r)
        checks["0 <= n < 1 - b(3-r)/2"] = 0.0 <= params.n < 1.0 - 0.5 * b * (3.0 - r)
    if mode == "H1":
        checks["1 < r < 3 (H1)"] = 1.0 < r < 3.0
    elif mode != "L2":
        raise ValueError(f"mode must be 'L2' or 'H1', got {mode!r}")
    derived = {
        "b_sup": b_supremum_2d(r),
        "br": b * r,
        "br_sup": 2.0 * r / (3.0 + r),
        "area_exponent": b * (1.0 + r),
    }
    notes = []
    if b > 0:
        ql = q_lemdecay(b, r)
        derived["q_lemdecay"] = ql
        if not 1.0 < ql < 2.0:
            notes.append(f"q = 2/b - r - 2 = {ql:.6g} lies outside (1, 2)")
    return ValidityReport(checks, derived, notes)


def bisect_supremum(pred, lo: float, hi: float, iters: int = 200) -> float:
    """Largest x in [lo, hi] with pred(x) true, assuming pred(lo) and monotonicity."""
    if not pred(lo):
        raise ValueError("predicate must hold at the lower end")
    if pred(hi):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _toward(point, target, step: float = 1e-13):
    """Move ``point`` a distance ``step`` toward an interior ``target``."""
    point = np.asarray(point, dtype=float)
    d = np.asarray(target, dtype=float) - point
    norm = np.linalg.norm(d)
    return point if norm == 0 else point + step * d / norm


def computed_b_supremum_2d(r: float) -> float:
    """b-supremum located by bisection on the 2D validator itself.

    At the ends of the r range the limit is approached from inside.
    """
    r = float(_toward([r], [1.0])[0])
    return bisect_supremum(lambda b: validate_2d(RegionParams2D(b, r)).valid, 1e-12, 1.0)


def max_area_exponent_2d() -> dict:
    """sup of b(1+r) over the 2D region; b(1+r) < 2(1+r)/(3+r) increases in r."""
    r_star = 3.0
    b_star = b_supremum_2d(r_star)
    return {"exponent": b_star * (1.0 + r_star), "r": r_star, "b": b_star}


# --------------------------------------------------------------------------- 3D

@dataclass(frozen=True)
class RegionParams3D:
    p1: float
    p2: float
    p3: float
    p4: float
    q1: float = 1.0

    @property
    def r1(self) -> float:
        """Exponent of t in the compensation factor."""
        return 1.0 - self.p1

    @property
    def r2(self) -> float:
        """Exponent of ln t in the compensation factor."""
        return 1.0 + self.q1

    def as_tuple(self):
        return (self.p1, self.p2, self.p3, self.p4)

    @classmethod
    def from_box(cls, b: float, r1: float, r2: float, eps0: float = 1e-3, q1: float = 1.0):
        """p1 = b, p2 = b + eps0, p3 = b r1, p4 = b r2."""
        return cls(b, b + eps0, b * r1, b * r2, q1)


# Each condition is coded as written, including the redundant ones, so that the
# full-vs-reduced comparison is a real check.  Arguments may be numpy arrays.
CONSTRAINTS_3D = {
    "e40": lambda p1, p2, p3, p4: (p1 > 0) & (p2 > 0) & (p3 > 0) & (p4 > 0) & (p1 < 1),
    "e4": lambda p1, p2, p3, p4: (0 < 2 * p1 + p2 + p3 + p4) & (2 * p1 + p2 + p3 + p4 < 2),
    "e6": lambda p1, p2, p3, p4: p2 > p1,
    "new1": lambda p1, p2, p3, p4: p3 > p1,
    "new2": lambda p1, p2, p3, p4: p4 > p1,
    "e7": lambda p1, p2, p3, p4: p1 > (p3 + p4) / 3,
    "e8": lambda p1, p2, p3, p4: 0.5 * p1 + p2 > 0.5 * (p3 + p4),
    "e9": lambda p1, p2, p3, p4: p2 > 0.25 * (p1 + p3 + p4),
    "e10": lambda p1, p2, p3, p4: p3 > (p1 + p4) / 3,
    "e11": lambda p1, p2, p3, p4: p4 > (p1 + p3) / 3,
    "e13": lambda p1, p2, p3, p4: p2 > 0.2 * (2 * p1 + p3 + p4),
    "e14": lambda p1, p2, p3, p4: p2 + 3 * p3 > p4 + 2 * p1,
    "e15": lambda p1, p2, p3, p4: p2 + 3 * p4 > p3 + 2 * p1,
    "e16": lambda p1, p2, p3, p4: 3 * p1 + (p3 + p4) < 2,
}

FULL_3D = tuple(CONSTRAINTS_3D)
REDUCED_3D = ("e40", "e4", "e6", "new1", "new2", "e7", "e10", "e11")
# p3 > p1 and p4 > p1 are only needed for gradient decay; the L2 statement drops them
_H1_ONLY = ("new1", "new2")


def constraint_names(reduced: bool, h1: bool = True) -> tuple[str, ...]:
    names = REDUCED_3D if reduced else FULL_3D
    return names if h1 else tuple(n for n in names if n not in _H1_ONLY)

# the same conditions as half-spaces a.p > c, used only to aim boundary samples
_HALFSPACES_3D = [
    ((1, 0, 0, 0), 0), ((0, 1, 0, 0), 0), ((0, 0, 1, 0), 0), ((0, 0, 0, 1), 0),
    ((-1, 0, 0, 0), -1), ((-2, -1, -1, -1), -2), ((-1, 1, 0, 0), 0),
    ((-1, 0, 1, 0), 0), ((-1, 0, 0, 1), 0), ((3, 0, -1, -1), 0),
    ((0.5, 1, -0.5, -0.5), 0), ((-0.25, 1, -0.25, -0.25), 0),
    ((-1, 0, 3, -1), 0), ((-1, 0, -1, 3), 0), ((-0.4, 1, -0.2, -0.2), 0),
    ((-2, 1, 3, -1), 0), ((-2, 1, -1, 3), 0), ((-3, 0, -1, -1), -2),
]


def _unpack(p):
    if isinstance(p, RegionParams3D):
        return p.as_tuple()
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        return tuple(float(v) for v in arr)
    return arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3]


def _all(names, p):
    args = _unpack(p)
    out = True
    for name in names:
        out = out & CONSTRAINTS_3D[name](*args)
    return out


def validate_3d_full(p, h1: bool = True):
    """All fourteen conditions (arrays of tuples accepted, shape (..., 4))."""
    return _all(constraint_names(False, h1), p)


def validate_3d_reduced(p, h1: bool = True):
    """Only the conditions the reduction lemma keeps."""
    return _all(constraint_names(True, h1), p)


def check_3d(p) -> ValidityReport:
    args = _unpack(p)
    checks = {name: bool(CONSTRAINTS_3D[name](*args)) for name in FULL_3D}
    p1, p2, p3, p4 = args
    derived = {"p2_tilde": p2 / p1, "p3_tilde": p3 / p1, "p4_tilde": p4 / p1,
               "a": (p3 + p4) / p1} if p1 > 0 else {}
    return ValidityReport(checks, derived)


def triangle_membership(p3t, p4t):
    """Interior of the triangle with vertices (1/2,1/2), (2,1), (1,2) in normalized coordinates."""
    return (1 > (p3t + p4t) / 3) & (p3t > (1 + p4t) / 3) & (p4t > (1 + p3t) / 3)


def normalized_system(p, h1: bool = True):
    """Normalized reformulation: triangle, p2~ > 1 and 2 + p2~ + a < 2/p1 (plus p3~, p4~ > 1)."""
    p1, p2, p3, p4 = _unpack(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        p2t, p3t, p4t = p2 / p1, p3 / p1, p4 / p1
        a = p3t + p4t
        ok = ((p1 > 0) & (p2 > 0) & (p3 > 0) & (p4 > 0) & (p1 < 1)
              & triangle_membership(p3t, p4t) & (p2t > 1) & (2 + p2t + a < 2 / p1))
        if h1:
            ok = ok & (p3t > 1) & (p4t > 1)
        return ok


def validate_3d_region(b: float, r1: float, r2: float, h1: bool = True) -> ValidityReport:
    """The 3D box conditions in (b, r1, r2) form; without ``h1`` the lower bound on r is 1/2."""
    _finite_nonneg(b=b, r1=r1, r2=r2)
    lower = 1.0 if h1 else 0.5
    checks = {
        "b > 0": b > 0,
        f"r1, r2 > {lower:g}": r1 > lower and r2 > lower,
        "r1 + r2 < 3": r1 + r2 < 3,
        "r1 + 1 < 3 r2": r1 + 1 < 3 * r2,
        "r2 + 1 < 3 r1": r2 + 1 < 3 * r1,
        "b < 2/(3+r1+r2)": b < 2.0 / (3.0 + r1 + r2),
    }
    derived = {"b_sup": 2.0 / (3.0 + r1 + r2), "volume_exponent": b * (1 + r1 + r2)}
    return ValidityReport(checks, derived)


def computed_b_supremum_3d(r1: float, r2: float, h1: bool = True) -> float:
    lower = 1.0 if h1 else 0.5
    r1, r2 = _toward([r1, r2], [1.4, 1.4])
    return bisect_supremum(lambda b: validate_3d_region(b, r1, r2, h1).valid, 1e-12, 1.0)


def max_volume_exponent_3d(h1: bool = True) -> dict:
    """sup of b(1+r1+r2) over the 3D region.

    For fixed s = r1 + r2 the supremum in b gives 2(1+s)/(3+s), increasing in s,
    so the problem reduces to the linear program max r1 + r2 over the closed
    (r1, r2) polygon.  The reported maximizer is the midpoint of the optimal face.
    """
    from scipy.optimize import linprog

    lower = 1.0 if h1 else 0.5
    A = [[1, 1], [1, -3], [-3, 1]]
    ub = [3, -1, -1]
    bounds = [(lower, None), (lower, None)]
    res = linprog([-1, -1], A_ub=A, b_ub=ub, bounds=bounds, method="highs")
    s = -res.fun
    face = []
    for sign in (1, -1):
        rr = linprog([sign, 0], A_ub=A, b_ub=ub, A_eq=[[1, 1]], b_eq=[s],
                     bounds=bounds, method="highs")
        face.append(rr.x[0])
    r1 = 0.5 * (face[0] + face[1])
    b = 2.0 / (3.0 + s)
    return {"exponent": b * (1.0 + s), "r1": r1, "r2": s - r1, "b": b}


def boundary_biased_samples(n: int, rng: np.random.Generator, width: float = 1e-6) -> np.ndarray:
    """Tuples within ``width`` of a randomly chosen constraint surface, on either side."""
    base = rng.uniform(0, 1, (n, 4))
    # half of the bases come from the feasible set so the surfaces that bound it get hit
    feas = _feasible_points(n // 2, rng)
    base[: len(feas)] = feas
    H = np.array([h[0] for h in _HALFSPACES_3D], dtype=float)
    c = np.array([h[1] for h in _HALFSPACES_3D], dtype=float)
    j = rng.integers(0, len(H), n)
    a = H[j]
    norm = np.linalg.norm(a, axis=1)
    gap = (c[j] - np.einsum("ij,ij->i", a, base)) / norm**2
    offset = rng.uniform(0, width, n) * rng.choice([-1.0, 1.0], n)
    pts = base + (gap + offset / norm)[:, None] * a
    return np.abs(pts)


def _feasible_points(n: int, rng: np.random.Generator) -> np.ndarray:
    out = []
    total = 0
    while total < n:
        p1 = rng.uniform(0, 0.5, 4 * n)
        p3 = p1 * rng.uniform(0.5, 2, 4 * n)
        p4 = p1 * rng.uniform(0.5, 2, 4 * n)
        p2 = p1 * rng.uniform(1, 4, 4 * n)
        cand = np.stack([p1, p2, p3, p4], axis=1)
        cand = cand[validate_3d_reduced(cand)]
        out.append(cand)
        total += len(cand)
    return np.concatenate(out)[:n]


def reduce_check(samples: int = 1_000_000, seed: int = 0,
                 boundary_samples: int = 100_000, chunk: int = 250_000,
                 h1: bool = True) -> dict:
    """Monte Carlo comparison of the full and reduced 3D constraint systems."""
    rng = np.random.default_rng(seed)
    discrepancies = 0
    accepted = 0
    side_violations = 0
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        pts = rng.uniform(0, 1, (k, 4))
        full = validate_3d_full(pts, h1)
        red = validate_3d_reduced(pts, h1)
        discrepancies += int(np.count_nonzero(full != red))
        accepted += int(np.count_nonzero(red))
        side_violations += _implied_violations(pts[red], h1)
        done += k
    bpts = boundary_biased_samples(boundary_samples, rng)
    bfull = validate_3d_full(bpts, h1)
    bred = validate_3d_reduced(bpts, h1)
    b_disc = int(np.count_nonzero(bfull != bred))
    side_violations += _implied_violations(bpts[bred], h1)
    return {
        "mode": "H1" if h1 else "L2",
        "samples": samples,
        "seed": seed,
        "discrepancies": discrepancies + b_disc,
        "uniform_discrepancies": discrepancies,
        "boundary_samples": boundary_samples,
        "boundary_discrepancies": b_disc,
        "accepted_uniform": accepted,
        "accepted_boundary": int(np.count_nonzero(bred)),
        "implied_condition_violations": side_violations,
    }


def _implied_violations(pts: np.ndarray, h1: bool = True) -> int:
    """Accepted tuples breaking p1 < 1/2 or p2 > p1 (and p3, p4 > p1 in H1 mode)."""
    if len(pts) == 0:
        return 0
    p1 = pts[:, 0]
    ok = (p1 < 0.5) & (pts[:, 1] > p1)
    if h1:
        ok &= (pts[:, 2] > p1) & (pts[:, 3] > p1)
    return int(np.count_nonzero(~ok))


# ------------------------------------------------------------------------ gKdV

@dataclass(frozen=True)
class GkdvParams:
    p: int
    b: float
    q: float
    n: float = 0.0
    sign_n: int = 1

    @property
    def m(self) -> float:
        return 1.0 - self.b


def gkdv_b_bounds(p: int, q: float) -> dict[str, float]:
    return {
        "p/(p+q(p-1))": p / (p + q * (p - 1)),
        "2/(2+q)": 2.0 / (2.0 + q),
        "p/(2p-1)": p / (2.0 * p - 1.0),
    }


def validate_gkdv(params: GkdvParams) -> ValidityReport:
    if params.p not in (2, 4):
        raise ValueError(f"nonlinearity power must be 2 or 4, got {params.p!r}")
    _finite_nonneg(b=params.b, q=params.q, n=params.n)
    bounds = gkdv_b_bounds(params.p, params.q)
    b_sup = min(bounds.values())
    b = params.b
    checks = {
        "q > 1": params.q > 1,
        "0 < b <= min{...}": 0 < b <= b_sup,
        "m = 1 - b > 0": 1.0 - b > 0,
        "0 <= n <= 1 - b/2": 0 <= params.n <= 1.0 - b / 2.0,
    }
    binding = [k for k, v in bounds.items() if v == b_sup]
    derived = {"b_sup": b_sup, "m": 1.0 - b, **bounds}
    return ValidityReport(checks, derived, [f"binding: {', '.join(binding)}"])


# ------------------------------------------------------------------ scale laws

def _log(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < T_MIN):
        raise ValueError(f"scale laws are defined for t >= {T_MIN}")
    return np.log(t)


@dataclass(frozen=True)
class ScaleLaws2D:
    """lambda1 = t^b / ln t, lambda2 = lambda1^r, eta = t^(1-b) ln^2 t."""

    b: float
    r: float

    @property
    def eta_exponent(self) -> float:
        return 1.0 - self.b

    def lambda1(self, t):
        return np.asarray(t, dtype=float) ** self.b / _log(t)

    def lambda2(self, t):
        return self.lambda1(t) ** self.r

    def eta(self, t):
        return np.asarray(t, dtype=float) ** self.eta_exponent * _log(t) ** 2

    def lambda1_log_derivative(self, t):
        """lambda1'/lambda1 = (b ln t - 1) / (t ln t)."""
        L = _log(t)
        return (self.b * L - 1) / (np.asarray(t) * L)

    def eta_log_derivative(self, t):
        L = _log(t)
        return (self.eta_exponent * L + 2) / (np.asarray(t) * L)


@dataclass(frozen=True)
class ScaleLaws3D:
    """lambda1 = t^p1 / ln^q1 t, lambda_k = t^pk, eta = t^(1-p1) ln^(1+q1) t."""

    params: RegionParams3D

    def lambda1(self, t):
        return np.asarray(t, dtype=float) ** self.params.p1 / _log(t) ** self.params.q1

    def lambda2(self, t):
        return np.asarray(t, dtype=float) ** self.params.p2

    def lambda3(self, t):
        return np.asarray(t, dtype=float) ** self.params.p3

    def lambda4(self, t):
        return np.asarray(t, dtype=float) ** self.params.p4

    def eta(self, t):
        return np.asarray(t, dtype=float) ** self.params.r1 * _log(t) ** self.params.r2


@dataclass(frozen=True)
class ScaleLawsGkdv:
    params: GkdvParams

    def lambda1(self, t):
        return np.asarray(t, dtype=float) ** self.params.b / _log(t)

    def eta(self, t):
        return np.asarray(t, dtype=float) ** self.params.m * _log(t) ** 2

    def rho(self, t):
        return self.params.sign_n * np.asarray(t, dtype=float) ** self.params.n


def theta_far(t, far_exponent: float, eps: float):
    """Far-region scale t^p ln^(1+eps) t."""
    return np.asarray(t, dtype=float) ** far_exponent * _log(t) ** (1.0 + eps)


def theta_far_derivative(t, far_exponent: float, eps: float):
    t = np.asarray(t, dtype=float)
    L = _log(t)
    return t ** (far_exponent - 1) * L**eps * (far_exponent * L + 1 + eps)


# ---------------------------------------------------------------------- regions

@dataclass(frozen=True)
class Box:
    center: tuple[float, ...]
    half_widths: tuple[float, ...]

    def contains(self, *coords):
        inside = True
        for x, c, h in zip(coords, self.center, self.half_widths):
            inside = inside & (np.abs(x - c) < h)
        return inside

    @property
    def volume_exponent_proxy(self) -> float:
        return float(np.prod(self.half_widths))


def region_omega(t: float, params, dimension: int | None = None) -> Box:
    """The growing box at time t for 2D, 3D or gKdV parameters."""
    if t < T_MIN:
        raise ValueError(f"t = {t} is below the domain start t = {T_MIN}")
    if isinstance(params, RegionParams2D):
        if not validate_2d(params).valid:
            raise ValueError(f"invalid 2D parameters: {validate_2d(params).failed()}")
        hw = (t**params.b, t ** (params.b * params.r))
        if params.centered:
            return Box((0.0, 0.0), hw)
        # |x + rho1| < t^b with rho1 = sign_m t^m
        return Box((-params.sign_m * t**params.m, -params.sign_n * t**params.n), hw)
    if isinstance(params, RegionParams3D):
        if not bool(validate_3d_reduced(params)):
            raise ValueError("invalid 3D parameters")
        return Box((0.0, 0.0, 0.0), (t**params.p1, t**params.p3, t**params.p4))
    if isinstance(params, GkdvParams):
        rep = validate_gkdv(params)
        if not rep.valid:
            raise ValueError(f"invalid gKdV parameters: {rep.failed()}")
        return Box((-params.sign_n * t**params.n,), (t**params.b,))
    raise TypeError(f"unsupported parameter type {type(params).__name__}")
