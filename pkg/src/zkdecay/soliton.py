"""Ground states of Lap Q - c Q + Q^2 = 0 in one to three dimensions.

Q_c(x) = c Q(sqrt(c) x) solves the c-scaled problem.  The solve is a
Petviashvili iteration: a spectral fixed point Q <- M^gamma (-Lap + c)^{-1} Q^2
with stabilizing factor M = <(-Lap + c)Q, Q> / <Q^2, Q> and gamma = 3/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .solver import Field, Grid, irfft, rfft

RENORMALIZATION_EXPONENT = 1.5
POSITIVITY_FLOOR = -1e-12
SYMMETRY_TOLERANCE = 1e-10
# grid points required across the core |x| <= 4/sqrt(c), and box half-length in units of 1/sqrt(c)
CORE_POINTS = 16
MIN_BOX_WIDTHS = 10.0


class SolitonConvergenceError(RuntimeError):
    def __init__(self, message: str, history: list[float]):
        self.history = list(history)
        super().__init__(f"{message}; last residuals {self.history[-5:]}")


@dataclass
class SolitonProfile:
    dimension: int
    speed: float
    field: Field
    residual: float
    iterations: int
    history: list[float] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def mass(self) -> float:
        return self.field.integrate(self.values**2)

    def asymmetry(self) -> float:
        """Largest relative mismatch under reflection of any single axis."""
        u = self.values
        worst = 0.0
        for ax in range(u.ndim):
            # x_j -> -x_j maps index j to (n - j) mod n since x = 0 is a grid point
            r = np.roll(np.flip(u, axis=ax), 1, axis=ax)
            worst = max(worst, float(np.max(np.abs(r - u)) / np.max(np.abs(u))))
        return worst


def _check_resolution(grid: Grid, c: float) -> None:
    width = 1.0 / np.sqrt(c)
    for dx, L in zip(grid.dx, grid.half_length):
        if 8 * width / dx < CORE_POINTS:
            raise ValueError(f"grid spacing {dx:.3g} under-resolves the width scale {width:.3g}")
        if L < MIN_BOX_WIDTHS * width:
            raise ValueError(f"box half-length {L:.3g} is below {MIN_BOX_WIDTHS:g} widths")


def elliptic_residual(u: np.ndarray, grid: Grid, c: float) -> np.ndarray:
    v = rfft(u)
    return irfft(-grid.k_squared * v, grid) - c * u + u * u


def solve_ground_state(dimension: int, c: float, grid: Grid, tolerance: float = 1e-11,
                       max_iter: int = 500) -> SolitonProfile:
    """Positive radial solution of Lap Q - c Q + Q^2 = 0 on ``grid``."""
    if grid.dimension != dimension:
        raise ValueError(f"grid dimension {grid.dimension} != requested {dimension}")
    if not c > 0:
        raise ValueError("speed must be positive")
    _check_resolution(grid, c)
    X = grid.coords()
    r2 = sum(x**2 for x in X)
    u = c * np.exp(-r2 * c / 4.0) * np.ones(grid.shape)
    symbol = grid.k_squared + c
    history: list[float] = []
    for it in range(1, max_iter + 1):
        v = rfft(u)
        w = rfft(u * u)
        num = np.vdot(symbol * v, v).real
        den = np.vdot(w, v).real
        if den <= 0:
            raise SolitonConvergenceError("stabilizing factor became undefined", history or [np.inf])
        m = num / den
        u = irfft(m**RENORMALIZATION_EXPONENT * w / symbol, grid)
        res = float(np.max(np.abs(elliptic_residual(u, grid, c))))
        history.append(res)
        if not np.isfinite(res):
            break
        if res <= tolerance:
            prof = SolitonProfile(dimension, float(c), Field(grid, u), res, it, history)
            _verify(prof)
            return prof
    raise SolitonConvergenceError(f"no convergence to {tolerance:g} in {max_iter} iterations",
                                  history)


def _verify(prof: SolitonProfile) -> None:
    lo = float(np.min(prof.values))
    if lo < POSITIVITY_FLOOR:
        raise SolitonConvergenceError(f"profile dips to {lo:.3g} below the positivity floor",
                                      prof.history)
    asym = prof.asymmetry()
    if asym > SYMMETRY_TOLERANCE:
        raise SolitonConvergenceError(f"reflection asymmetry {asym:.3g}", prof.history)


def exact_1d(x, c: float = 1.0) -> np.ndarray:
    """Closed form in one dimension: (3c/2) sech^2(sqrt(c) x / 2)."""
    return 1.5 * c / np.cosh(np.sqrt(c) * np.asarray(x) / 2) ** 2


def mass_scaling_exponent(dimension: int) -> float:
    return 2.0 - dimension / 2.0


def local_soliton_mass(profile: SolitonProfile, R: float, shift: float = 0.0) -> float:
    """Integral of Q_c^2 over the cells whose centers satisfy |x - shift| <= R, |x'| <= R."""
    return local_box_mass(profile.field, R, shift)


def local_box_mass(f: Field, R: float, shift: float = 0.0) -> float:
    grid = f.grid
    if any(R >= L for L in grid.half_length):
        raise ValueError("window radius must be below the box half-length")
    inside = np.ones(grid.shape, dtype=bool)
    X = grid.coords()
    for j, x in enumerate(X):
        d = x - shift if j == 0 else x
        if j == 0:
            # distance on the periodic box
            Lx = 2 * grid.half_length[0]
            d = (d + Lx / 2) % Lx - Lx / 2
        inside = inside & (np.abs(d) <= R)
    return f.integrate(np.where(inside, f.values**2, 0.0))


def c0_table(radii=(1.0, 2.0, 4.0, 8.0), dimensions=(1, 2, 3), grids=None) -> dict:
    """Local mass of the unit-speed ground state over |x_j| <= R, per dimension."""
    grids = grids or default_grids()
    table = {}
    for d in dimensions:
        prof = solve_ground_state(d, 1.0, grids[d], tolerance=1e-10)
        table[d] = {float(R): local_soliton_mass(prof, R) for R in radii}
        table[d]["total"] = prof.mass
    return table


def default_grids() -> dict:
    return {1: Grid((1024,), (40.0,)), 2: Grid((256, 256), (20.0, 20.0)),
            3: Grid((128,) * 3, (15.0,) * 3)}
