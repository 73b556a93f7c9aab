"""Periodic pseudospectral integrator for ZK (2D/3D) and gKdV (p = 2, 4).

    ZK:    u_t + d_x Lap u + u u_x = 0
    gKdV:  u_t + d_x (u_xx + u^p) = 0

Time stepping is fourth-order exponential time differencing (ETDRK4) with the
phi-function coefficients averaged over a complex contour.  Quadratic products
are dealiased by the 2/3 rule; the quartic gKdV product is formed on a grid
padded by a factor 2.  The canonical state is the array of real samples, so a
run restarted from a checkpoint repeats the uninterrupted run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

CONTOUR_POINTS = 32

EQUATIONS = ("zk", "gkdv-p2", "gkdv-p4")


class BlowUpError(RuntimeError):
    """Non-finite values appeared during a step."""

    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"non-finite field at t = {t:.6g}")


def equation_power(equation: str) -> int:
    if equation == "zk":
        return 2
    if equation in ("gkdv-p2", "gkdv-p4"):
        return int(equation[-1])
    raise ValueError(f"unknown equation kind {equation!r}; expected one of {EQUATIONS}")


def check_equation(equation: str, dimension: int) -> None:
    equation_power(equation)
    if equation == "zk" and dimension not in (2, 3):
        raise ValueError("ZK runs in dimension 2 or 3")
    if equation.startswith("gkdv") and dimension != 1:
        raise ValueError("gKdV runs in dimension 1")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on prod [-L_j, L_j); axis 0 is x."""

    n: tuple[int, ...]
    half_length: tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        L = tuple(float(v) for v in np.atleast_1d(self.half_length))
        if len(L) == 1 and len(n) > 1:
            L = L * len(n)
        if len(n) != len(L) or not 1 <= len(n) <= 3:
            raise ValueError("grid needs 1 to 3 axes with matching lengths")
        for v in n:
            if v < 32 or v & (v - 1):
                raise ValueError(f"points per axis must be a power of two >= 32, got {v}")
        if any(v <= 0 for v in L):
            raise ValueError("box half-lengths must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "half_length", L)

    @classmethod
    def cube(cls, dimension: int, n: int, half_length: float) -> "Grid":
        return cls((n,) * dimension, (half_length,) * dimension)

    @property
    def dimension(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return self.n[:-1] + (self.n[-1] // 2 + 1,)

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(2 * L / n for L, n in zip(self.half_length, self.n))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    def axis(self, j: int) -> np.ndarray:
        return -self.half_length[j] + self.dx[j] * np.arange(self.n[j])

    def coords(self, sparse: bool = True):
        return np.meshgrid(*[self.axis(j) for j in range(self.dimension)],
                           indexing="ij", sparse=sparse)

    def axis_wavenumbers(self, j: int) -> np.ndarray:
        d = self.dx[j]
        if j == self.dimension - 1:
            return 2 * np.pi * sfft.rfftfreq(self.n[j], d)
        return 2 * np.pi * sfft.fftfreq(self.n[j], d)

    @cached_property
    def wavenumbers(self) -> list[np.ndarray]:
        """Broadcastable wavenumber arrays in rfftn layout."""
        ks = []
        for j in range(self.dimension):
            shape = [1] * self.dimension
            shape[j] = -1
            ks.append(self.axis_wavenumbers(j).reshape(shape))
        return ks

    @cached_property
    def derivative_wavenumbers(self) -> list[np.ndarray]:
        """Wavenumbers with the Nyquist mode zeroed, for odd derivatives."""
        ks = []
        for j, k in enumerate(self.wavenumbers):
            k = k.copy()
            k[tuple(0 if i != j else self.n[j] // 2 for i in range(self.dimension))] = 0.0
            ks.append(k)
        return ks

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Keep integer modes |m_j| < n_j / 3 on every axis."""
        mask = np.ones(self.spectral_shape, dtype=bool)
        for j in range(self.dimension):
            m = np.abs(np.rint(self.wavenumbers[j] * self.half_length[j] / np.pi))
            mask = mask & (m < self.n[j] / 3)
        return mask

    def fits_central_half(self, box) -> bool:
        """True if an axis-aligned box lies inside the central half of the domain."""
        for c, h, L in zip(box.center, box.half_widths, self.half_length):
            if abs(c) + h > L / 2:
                return False
        return True


def rfft(u: np.ndarray) -> np.ndarray:
    return sfft.rfftn(u)


def irfft(v: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.irfftn(v, s=grid.n)


class Field:
    """Real samples on a grid with a lazily cached spectrum."""

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"values of shape {values.shape} do not match grid {grid.shape}")
        self.grid = grid
        self.values = values
        self._spectrum = None

    @classmethod
    def from_spectrum(cls, grid: Grid, spectrum) -> "Field":
        f = cls(grid, irfft(spectrum, grid))
        return f

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = rfft(self.values)
        return self._spectrum

    def derivative(self, axis: int, order: int = 1) -> np.ndarray:
        k = self.grid.derivative_wavenumbers[axis] if order % 2 else self.grid.wavenumbers[axis]
        return irfft((1j * k) ** order * self.spectrum, self.grid)

    def gradient(self) -> list[np.ndarray]:
        return [self.derivative(j) for j in range(self.grid.dimension)]

    def dealiased(self) -> "Field":
        return Field.from_spectrum(self.grid, self.spectrum * self.grid.dealias_mask)

    def integrate(self, integrand=None) -> float:
        """Grid sum of ``integrand`` (default: the field) times the cell volume."""
        arr = self.values if integrand is None else integrand
        return float(np.sum(arr) * self.grid.cell_volume)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


# ---------------------------------------------------------------- operators

def linear_symbol(grid: Grid, equation: str) -> np.ndarray:
    """Fourier multiplier of the linear part, L with v_t = L v + N(v); purely imaginary."""
    check_equation(equation, grid.dimension)
    kx = grid.derivative_wavenumbers[0]
    if equation == "zk":
        return 1j * kx * grid.k_squared
    return 1j * kx * grid.wavenumbers[0] ** 2


def linear_symbol_at(k, equation: str) -> complex:
    """Symbol at a single wavevector (tuple for ZK, scalar for gKdV)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if equation == "zk":
        return 1j * k[0] * float(np.dot(k, k))
    equation_power(equation)
    return 1j * k[0] ** 3


def _padded_power(spectrum: np.ndarray, grid: Grid, p: int, factor: int = 2) -> np.ndarray:
    """Spectrum of u^p computed on a grid padded by ``factor`` and truncated back."""
    big = tuple(factor * n for n in grid.n)
    pad = np.zeros(big[:-1] + (big[-1] // 2 + 1,), dtype=complex)
    sl = _embed_slices(grid.n, big)
    for src, dst in sl:
        pad[dst] = spectrum[src]
    scale = float(np.prod(big)) / float(np.prod(grid.n))
    u = sfft.irfftn(pad * scale, s=big)
    w = sfft.rfftn(u**p) / scale
    out = np.zeros(grid.spectral_shape, dtype=complex)
    for src, dst in sl:
        out[src] = w[dst]
    return out


def _embed_slices(n, big):
    """Index pairs mapping the small rfft layout into the padded one."""
    d = len(n)
    per_axis = []
    for j in range(d):
        if j == d - 1:
            per_axis.append([(slice(0, n[j] // 2 + 1), slice(0, n[j] // 2 + 1))])
        else:
            h = n[j] // 2
            per_axis.append([(slice(0, h), slice(0, h)),
                             (slice(n[j] - h, n[j]), slice(big[j] - h, big[j]))])
    pairs = [((), ())]
    for axis_pairs in per_axis:
        pairs = [(s + (a,), t + (b,)) for s, t in pairs for a, b in axis_pairs]
    return pairs


def upsample(field: "Field", factor: int = 2) -> "Field":
    """Trigonometric interpolant of ``field`` sampled on a grid ``factor`` times finer.

    Nyquist modes are dropped so the interpolant stays real and symmetric.
    """
    if factor == 1:
        return field
    grid = field.grid
    fine = Grid(tuple(factor * n for n in grid.n), grid.half_length)
    v = field.spectrum.copy()
    for j, n in enumerate(grid.n):
        idx = [slice(None)] * grid.dimension
        idx[j] = n // 2
        v[tuple(idx)] = 0.0
    pad = np.zeros(fine.spectral_shape, dtype=complex)
    for src, dst in _embed_slices(grid.n, fine.n):
        pad[dst] = v[src]
    scale = float(np.prod(fine.n)) / float(np.prod(grid.n))
    return Field(fine, sfft.irfftn(pad * scale, s=fine.n))


def nonlinear_spectrum(v: np.ndarray, grid: Grid, equation: str) -> np.ndarray:
    """Dealiased spectrum of the nonlinear term for a dealiased input spectrum."""
    p = equation_power(equation)
    mask = grid.dealias_mask
    ikx = 1j * grid.derivative_wavenumbers[0]
    if equation == "gkdv-p4":
        return -ikx * _padded_power(v, grid, 4) * mask
    u = irfft(v, grid)
    coeff = 0.5 if equation == "zk" else 1.0
    return -coeff * ikx * rfft(u * u) * mask


def nonlinear_term(field: Field, equation: str) -> Field:
    """-(1/2) d_x(u^2) for ZK, -d_x(u^p) for gKdV, dealiased."""
    check_equation(equation, field.grid.dimension)
    v = field.spectrum * field.grid.dealias_mask
    return Field.from_spectrum(field.grid, nonlinear_spectrum(v, field.grid, equation))


# ------------------------------------------------------------ conservation

def mass(field: Field) -> float:
    return field.integrate(field.values**2)


def _power_integral(field: Field, p: int) -> float:
    """Integral of u^p computed on a doubly padded grid (exact for dealiased u, p <= 5)."""
    grid = field.grid
    big = tuple(2 * n for n in grid.n)
    pad = np.zeros(big[:-1] + (big[-1] // 2 + 1,), dtype=complex)
    for src, dst in _embed_slices(grid.n, big):
        pad[dst] = field.spectrum[src] * grid.dealias_mask[src]
    scale = float(np.prod(big)) / float(np.prod(grid.n))
    u = sfft.irfftn(pad * scale, s=big)
    return float(np.sum(u**p) * grid.cell_volume / scale)


def energy(field: Field, equation: str) -> float:
    """Hamiltonian conserved by the flow.

    ZK with u u_x:  (1/2)|grad u|^2 - (1/6) u^3
    gKdV:           (1/2) u_x^2 - u^(p+1)/(p+1)
    """
    check_equation(equation, field.grid.dimension)
    grid = field.grid
    v = field.spectrum
    # Parseval with rfft weights (interior half-axis modes counted twice)
    w = np.full(grid.spectral_shape, 2.0)
    w[..., 0] = 1.0
    if grid.n[-1] % 2 == 0:
        w[..., -1] = 1.0
    norm = grid.cell_volume / float(np.prod(grid.n))
    if equation == "zk":
        grad2 = float(np.sum(w * grid.k_squared * np.abs(v) ** 2) * norm)
        return 0.5 * grad2 - _power_integral(field, 3) / 6.0
    p = equation_power(equation)
    kx2 = grid.derivative_wavenumbers[0] ** 2
    grad2 = float(np.sum(w * kx2 * np.abs(v) ** 2) * norm)
    return 0.5 * grad2 - _power_integral(field, p + 1) / (p + 1)


# ------------------------------------------------------------------ ETDRK4

@dataclass
class ETDCoefficients:
    dt: float
    E: np.ndarray
    E2: np.ndarray
    Q: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray

    @classmethod
    def build(cls, L: np.ndarray, dt: float, points: int = CONTOUR_POINTS,
              radius: float = 1.0) -> "ETDCoefficients":
        Ldt = (L * dt).ravel()
        roots = radius * np.exp(2j * np.pi * (np.arange(1, points + 1) - 0.5) / points)
        out = {k: np.empty(Ldt.shape, dtype=complex) for k in ("Q", "f1", "f2", "f3")}
        chunk = 1 << 16
        for s in range(0, Ldt.size, chunk):
            z = Ldt[s:s + chunk, None] + roots[None, :]
            ez = np.exp(z)
            ez2 = np.exp(z / 2)
            out["Q"][s:s + chunk] = dt * np.mean((ez2 - 1) / z, axis=1)
            out["f1"][s:s + chunk] = dt * np.mean((-4 - z + ez * (4 - 3 * z + z**2)) / z**3, axis=1)
            out["f2"][s:s + chunk] = dt * np.mean((2 + z + ez * (z - 2)) / z**3, axis=1)
            out["f3"][s:s + chunk] = dt * np.mean((-4 - 3 * z - z**2 + ez * (4 - z)) / z**3, axis=1)
        shape = L.shape
        return cls(dt, np.exp(L * dt), np.exp(L * dt / 2),
                   *(out[k].reshape(shape) for k in ("Q", "f1", "f2", "f3")))


@dataclass
class SolverState:
    t: float
    field: Field
    dt: float
    equation: str
    coefficients: ETDCoefficients
    baseline_mass: float
    baseline_energy: float
    steps: int = 0
    nonlinear: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.field.grid


def initialize(field: Field, t: float, dt: float, equation: str, nonlinear: bool = True,
               t_start_min: float = 2.0, dealias: bool = True) -> SolverState:
    """Build a state at time t; ``dealias=False`` keeps the samples bit-exact (restarts)."""
    if t < t_start_min:
        raise ValueError(f"start time {t} is below {t_start_min}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = field.grid
    check_equation(equation, grid.dimension)
    if dealias:
        field = field.dealiased()
    coeffs = ETDCoefficients.build(linear_symbol(grid, equation), dt)
    return SolverState(t=float(t), field=field, dt=float(dt), equation=equation,
                       coefficients=coeffs, baseline_mass=mass(field),
                       baseline_energy=energy(field, equation), nonlinear=nonlinear)


def step(state: SolverState) -> SolverState:
    """Advance one ETDRK4 step in place and return the state."""
    grid = state.grid
    c = state.coefficients
    mask = grid.dealias_mask
    v = rfft(state.field.values) * mask
    if state.nonlinear:
        def N(w):
            return nonlinear_spectrum(w, grid, state.equation)
        Nv = N(v)
        a = c.E2 * v + c.Q * Nv
        Na = N(a)
        b = c.E2 * v + c.Q * Na
        Nb = N(b)
        cc = c.E2 * a + c.Q * (2 * Nb - Nv)
        Nc = N(cc)
        v = c.E * v + c.f1 * Nv + 2 * c.f2 * (Na + Nb) + c.f3 * Nc
    else:
        v = c.E * v
    u = irfft(v * mask, grid)
    state.steps += 1
    t_new = state.t + state.dt
    if not np.all(np.isfinite(u)):
        raise BlowUpError(t_new)
    state.t = t_new
    state.field = Field(grid, u)
    return state


def advance(state: SolverState, n_steps: int, callback=None, every: int = 1) -> SolverState:
    """Take ``n_steps`` steps, calling ``callback(state)`` every ``every`` steps."""
    for i in range(1, n_steps + 1):
        step(state)
        if callback is not None and i % every == 0:
            callback(state)
    return state


def steps_between(t0: float, t1: float, dt: float) -> int:
    n = int(round((t1 - t0) / dt))
    if abs(n * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1)):
        raise ValueError(f"interval [{t0}, {t1}] is not a multiple of dt = {dt}")
    return n


# --------------------------------------------------------------- initial data

def gaussian(grid: Grid, amplitude: float, width: float, center=None) -> Field:
    """amplitude * exp(-|x - center|^2 / width^2)."""
    center = np.zeros(grid.dimension) if center is None else np.asarray(center, dtype=float)
    X = grid.coords()
    r2 = sum((x - c) ** 2 for x, c in zip(X, center))
    return Field(grid, amplitude * np.exp(-r2 / width**2) * np.ones(grid.shape))


def gaussian_mass(amplitude: float, width: float, dimension: int) -> float:
    return amplitude**2 * (np.pi * width**2 / 2) ** (dimension / 2)


def random_band_limited(grid: Grid, seed: int, amplitude: float = 0.1,
                        k_cut: float = 1.0) -> Field:
    """Smooth random field with Gaussian spectral envelope of scale ``k_cut``; reproducible per seed."""
    rng = np.random.default_rng(seed)
    shape = grid.spectral_shape
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    envelope = np.exp(-grid.k_squared / (2 * k_cut**2)) * grid.dealias_mask
    u = irfft(coeffs * envelope, grid)
    peak = np.max(np.abs(u))
    return Field(grid, amplitude * u / peak if peak > 0 else u)


def translate(field: Field, shift) -> Field:
    """Spectral translation by ``shift`` (exact for band-limited fields)."""
    shift = np.atleast_1d(np.asarray(shift, dtype=float))
    phase = sum(-1j * k * s for k, s in zip(field.grid.derivative_wavenumbers, shift))
    return Field.from_spectrum(field.grid, field.spectrum * np.exp(phase))


def travelling_wave_amplitude(equation: str) -> float:
    """Factor turning the ground state of Lap Q - Q + Q^2 = 0 into a travelling wave.

    With the nonlinearity u u_x = (1/2) d_x(u^2) the ZK wave is 2 Q_c; the
    gKdV p = 2 wave is Q_c itself.
    """
    if equation == "zk":
        return 2.0
    if equation == "gkdv-p2":
        return 1.0
    raise ValueError(f"no quadratic ground-state wave for {equation!r}")


def make_initial(kind: str, grid: Grid, equation: str = "zk", **params) -> Field:
    """Initial data: 'gaussian', 'soliton', 'multisoliton' or 'random-band-limited'."""
    if kind == "gaussian":
        f = gaussian(grid, params.get("amplitude", 0.5), params.get("width", 4.0),
                     params.get("center"))
    elif kind == "random-band-limited":
        f = random_band_limited(grid, int(params["seed"]), params.get("amplitude", 0.1),
                                params.get("k_cut", 1.0))
    elif kind in ("soliton", "multisoliton"):
        from . import soliton as sol

        waves = params.get("waves")
        if kind == "soliton" or waves is None:
            waves = [{"speed": params.get("speed", 1.0), "center": params.get("center")}]
        amp = travelling_wave_amplitude(equation)
        total = np.zeros(grid.shape)
        for w in waves:
            prof = sol.solve_ground_state(grid.dimension, w["speed"], grid,
                                          tolerance=params.get("tolerance", 1e-11),
                                          max_iter=params.get("max_iter", 500))
            center = w.get("center")
            shape = prof.field if center is None else translate(prof.field, center)
            total += amp * shape.values
        f = Field(grid, total)
    else:
        raise ValueError(f"unknown initial condition kind {kind!r}")
    return f.dealiased()
