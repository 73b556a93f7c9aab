"""Smooth weight families used by the virial functionals.

The base profile ``phi`` is even, equal to 1 on [-1, 1] and to ``exp(-|x|)``
for ``|x| >= 2``.  In between it is a convex blend of the two branches driven
by the C-infinity partition of unity

    s(t) = g(t) / (g(t) + g(1 - t)),   g(t) = exp(-1/t) for t > 0.

The blend is confined to [1, 1 + TRANSITION_WIDTH].  Spreading it over all of
[1, 2] breaks the upper bound ``phi <= 3 exp(-x)`` (the ratio peaks near 3.33),
while a width of 1/2 keeps the ratio below 2.96.

``psi`` is the primitive of ``phi`` vanishing at 0.  ``chi`` is the
non-increasing cutoff equal to 1 on (-inf, -1] and 0 on [0, inf).

All derivatives are analytic, up to order 3.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

import numpy as np

TRANSITION_WIDTH = 0.5

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def bump_partition(t, order: int = 0):
    """Smooth step s(t): 0 for t <= 0, 1 for t >= 1, and its derivatives.

    Written as a logistic of y = 1/(1-t) - 1/t, which keeps s monotone in
    floating point and gives every derivative the nonnegative factor s(1-s).
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    inside = (t > 0) & (t < 1)
    ti = np.where(inside, t, 0.5)
    with np.errstate(over="ignore", under="ignore"):
        y = 1.0 / (1.0 - ti) - 1.0 / ti
        s = 1.0 / (1.0 + np.exp(-y))
        sc = 1.0 / (1.0 + np.exp(y))
        a, b = 1.0 / ti, 1.0 / (1.0 - ti)
        d1 = a**2 + b**2
        d2 = 2 * b**3 - 2 * a**3
        d3 = 6 * b**4 + 6 * a**4
        w = s * sc
        if order == 0:
            val = np.where(inside, s, np.where(t >= 1, 1.0, 0.0))
        elif order == 1:
            val = w * d1
        elif order == 2:
            val = w * ((sc - s) * d1**2 + d2)
        elif order == 3:
            val = w * ((1 - 6 * s * sc) * d1**3 + 3 * (sc - s) * d1 * d2 + d3)
        else:
            raise ValueError("derivative order must be in 0..3")
    if order > 0:
        val = np.where(inside, np.nan_to_num(val, nan=0.0, posinf=0.0, neginf=0.0), 0.0)
    return val[0] if scalar else val


def _phi_pos(x, order: int):
    """phi^(order) on x >= 0."""
    tau = TRANSITION_WIDTH
    x = np.asarray(x, dtype=float)
    e = np.exp(-x)
    out = np.where(x >= 1 + tau, e if order % 2 == 0 else -e, 0.0)
    if order == 0:
        out = np.where(x <= 1, 1.0, out)
    mid = (x > 1) & (x < 1 + tau)
    if np.any(mid):
        xm = x[mid]
        u = (xm - 1) / tau
        S = [bump_partition(u, k) / tau**k for k in range(order + 1)]
        em = np.exp(-xm)
        h = [1 - em, em, -em, em]
        binom = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1]]
        if order == 0:
            # exp(-x) plus a nonnegative remainder, so phi >= exp(-x) survives rounding
            val = em + (1 - S[0]) * (1 - em)
        else:
            val = -sum(binom[order][k] * S[k] * h[order - k] for k in range(order + 1))
        out[mid] = val
    return out


def phi(x, order: int = 0):
    """Base localizing weight (even), or its derivative of the given order."""
    x = np.asarray(x, dtype=float)
    val = _phi_pos(np.abs(x), order)
    if order % 2 == 1:
        val = np.sign(x) * val
    return val[()] if val.ndim == 0 else val


def _psi_transition(xa):
    """integral of phi over [1, xa] for 1 <= xa <= 1 + tau, by Gauss-Legendre."""
    half = (xa - 1) / 2
    nodes = 1 + half[:, None] * (_GL_NODES[None, :] + 1)
    return half * (_phi_pos(nodes, 0) @ _GL_WEIGHTS)


_PSI_KNEE = 1.0 + float(_psi_transition(np.array([1 + TRANSITION_WIDTH]))[0])
#: limit of psi at +infinity
PSI_INFINITY = _PSI_KNEE + np.exp(-(1 + TRANSITION_WIDTH))


def psi(x, order: int = 0):
    """Primitive of phi with psi(0) = 0; odd, linear on [-1, 1], bounded."""
    x = np.asarray(x, dtype=float)
    if order > 0:
        return phi(x, order - 1)
    tau = TRANSITION_WIDTH
    a = np.abs(x)
    out = np.where(a <= 1, a, _PSI_KNEE + np.exp(-(1 + tau)) - np.exp(-a))
    mid = (a > 1) & (a < 1 + tau)
    if np.any(mid):
        out[mid] = 1.0 + _psi_transition(a[mid])
    out = np.where(x < 0, -out, out)
    # exact identity on [-1, 1]
    out = np.where(a <= 1, x, out)
    return out[()] if out.ndim == 0 else out


def _check_sigma(sigma):
    if not np.all(np.asarray(sigma) > 0):
        raise ValueError(f"scale must be positive, got {sigma!r}")


def phi_sigma(sigma, x, order: int = 0):
    """phi(x / sigma) and its x-derivatives."""
    _check_sigma(sigma)
    return phi(np.asarray(x) / sigma, order) / sigma**order


def psi_sigma(sigma, x, order: int = 0):
    """sigma * psi(x / sigma); equals x on [-sigma, sigma] and has derivative phi_sigma."""
    _check_sigma(sigma)
    x = np.asarray(x, dtype=float)
    return sigma ** (1 - order) * psi(x / sigma, order)


def chi(x, order: int = 0):
    """Cutoff: 1 for x <= -1, 0 for x >= 0, non-increasing in between."""
    x = np.asarray(x, dtype=float)
    u = x + 1.0
    val = bump_partition(u, order)
    val = 1.0 - val if order == 0 else -val
    return val[()] if val.ndim == 0 else val


def chi_prime(x):
    return chi(x, 1)


def chi_reflected(x, order: int = 0):
    """x -> chi(-x), supported on [0, inf)."""
    return (-1) ** order * chi(-np.asarray(x, dtype=float), order)


@dataclass(frozen=True)
class WeightProfile:
    """One of the weight kinds with uniform evaluation of derivatives 0..3."""

    kind: Literal["base-phi", "base-psi", "chi", "chi-reflected"]
    scale: float = 1.0
    transition: tuple[float, float] = (1.0, 1.0 + TRANSITION_WIDTH)

    def __call__(self, x, order: int = 0):
        if not 0 <= order <= 3:
            raise ValueError("derivative order must be in 0..3")
        if self.kind == "base-phi":
            return phi_sigma(self.scale, x, order)
        if self.kind == "base-psi":
            return psi_sigma(self.scale, x, order)
        if self.kind == "chi":
            return chi(x, order)
        if self.kind == "chi-reflected":
            return chi_reflected(x, order)
        raise ValueError(f"unknown weight kind {self.kind!r}")


def l2_norm_phi(sigma: float) -> float:
    """||phi_sigma||_{L^2(R)}, computed from the piecewise form."""
    tau = TRANSITION_WIDTH
    nodes = 1 + tau / 2 * (_GL_NODES + 1)
    transition = tau / 2 * (_phi_pos(nodes, 0) ** 2 @ _GL_WEIGHTS)
    core = 2 * (1.0 + transition + np.exp(-2 * (1 + tau)) / 2)
    return float(np.sqrt(sigma * core))


def sup_norm_psi(sigma: float) -> float:
    """||psi_sigma||_inf = sigma * psi(inf)."""
    return float(sigma * PSI_INFINITY)


def measured_derivative_constant(x_max: float = 50.0, n: int = 200001) -> float:
    """Smallest c with |phi'| <= c phi and |phi''| <= c phi on a dense grid."""
    x = np.linspace(0, x_max, n)
    # the transition is where the ratio peaks; sample it densely too
    x = np.union1d(x, np.linspace(1, 1 + TRANSITION_WIDTH, 20001))
    p = phi(x)
    return float(max(np.max(np.abs(phi(x, 1)) / p), np.max(np.abs(phi(x, 2)) / p)))


def measured_chi_floor(n: int = 20001) -> float:
    """min of -chi' over [-3/4, -1/4]."""
    x = np.linspace(-0.75, -0.25, n)
    return float(np.min(-chi(x, 1)))


def verify_profile(kind: str = "all", x_min: float = -50.0, x_max: float = 50.0,
                   n: int = 10_000, sigma: float = 1.0) -> list[dict]:
    """Max violation of every pointwise invariant of the weight families on a grid.

    Returns a list of ``{invariant, max_violation, measured_constant}`` records;
    ``max_violation == 0`` means the invariant holds at every sample.
    """
    if n < 1000:
        raise ValueError("verification grid needs at least 10^3 points")
    x = np.linspace(x_min, x_max, n)
    h = x[1] - x[0]
    report = []

    def add(name, viol, const=None):
        report.append({"invariant": name, "max_violation": float(viol),
                       "measured_constant": None if const is None else float(const)})

    if kind in ("all", "base-phi"):
        xs = x / sigma
        ax = np.abs(xs)
        p = phi(xs)
        e = np.exp(-ax)
        add("phi_sigma >= exp(-|x|/sigma)", np.max(np.maximum(e - p, 0.0)))
        add("phi_sigma <= 3 exp(-|x|/sigma)", np.max(np.maximum(p - 3 * e, 0.0)),
            np.max(p / e))
        add("phi even", np.max(np.abs(p - phi(-xs))))
        add("phi' <= 0 on [0, inf)", np.max(np.maximum(phi(ax, 1), 0.0)))
        add("phi = 1 on [-1, 1]", np.max(np.abs(p[ax <= 1] - 1), initial=0.0))
        tail = ax >= 2
        add("phi = exp(-x) on [2, inf)",
            np.max(np.abs(p[tail] - e[tail]) / e[tail], initial=0.0))
        c = measured_derivative_constant()
        p0 = phi(ax)
        ratio = np.maximum(np.abs(phi(ax, 1)), np.abs(phi(ax, 2))) / p0
        add("|phi'|, |phi''| <= c phi", np.max(np.maximum(ratio - c, 0.0)), c)

    if kind in ("all", "base-psi"):
        ps = psi_sigma(sigma, x)
        lin = np.abs(x) <= sigma
        add("psi_sigma(x) = x on [-sigma, sigma]",
            np.max(np.abs(ps[lin] - x[lin]), initial=0.0))
        add("|psi_sigma| <= 3 sigma", np.max(np.maximum(np.abs(ps) - 3 * sigma, 0.0)),
            sup_norm_psi(sigma) / sigma)
        add("psi odd", np.max(np.abs(ps + psi_sigma(sigma, -x))))
        fd = (psi_sigma(sigma, x + h) - psi_sigma(sigma, x - h)) / (2 * h)
        mismatch = np.abs(fd - phi_sigma(sigma, x))
        # central-difference truncation bound h^2/6 max|psi'''|
        d3 = np.max(np.abs(psi_sigma(sigma, np.linspace(x_min, x_max, 20 * n), 3)))
        allowed = h**2 / 6 * d3 * 1.01 + 1e-13
        add("psi_sigma' = phi_sigma (central difference)",
            np.max(np.maximum(mismatch - allowed, 0.0)), np.max(mismatch))

    if kind in ("all", "chi", "chi-reflected"):
        cx = chi(x)
        add("0 <= chi <= 1", np.max(np.maximum(cx - 1, 0) + np.maximum(-cx, 0)))
        add("chi = 1 on x <= -1", np.max(np.abs(cx[x <= -1] - 1), initial=0.0))
        add("chi = 0 on x >= 0", np.max(np.abs(cx[x >= 0]), initial=0.0))
        add("chi non-increasing", np.max(np.maximum(np.diff(cx), 0.0)))
        add("chi' <= 0", np.max(np.maximum(chi(x, 1), 0.0)))
        c0 = measured_chi_floor()
        band = (x >= -0.75) & (x <= -0.25)
        add("-chi' >= c0 on [-3/4, -1/4]",
            np.max(np.maximum(c0 - (-chi(x[band], 1)), 0.0), initial=0.0), c0)
        add("chi reflection", np.max(np.abs(chi_reflected(x) - chi(-x))))

    return report


def report_json(report: list[dict]) -> str:
    return json.dumps(report, indent=2)
