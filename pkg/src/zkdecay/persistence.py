"""Run configuration, binary checkpoints, manifests and series files.

Config files are YAML mappings:

    equation: zk                 # zk | gkdv-p2 | gkdv-p4
    grid: {n: [256, 256], half_length: [201.06, 201.06]}
    initial: {kind: gaussian, amplitude: 0.5, width: 4.0}
    seed: 0
    dt: 0.001
    t_start: 2.0
    t_end: 7.0
    snapshot_every: 500          # steps between checkpoints and diagnostic samples
    diagnostics:
      - {functional: xi_2d, b: 0.3, r: 1.0, q: 1.1}
      - {functional: far_identity, far_exponent: 0.5, eps: 0.1, axis: 0, side: -1}

Checkpoints are a fixed little-endian header followed by the samples as
little-endian float64 in row-major (C) order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import params as P
from . import solver as S

MAGIC = b"ZKDCKPT\x00"
FORMAT_VERSION = 1
# magic, version, dimension, n[3], half_length[3], t, dt, steps, seed, equation,
# baseline mass, baseline energy
_HEADER = struct.Struct("<8sII3I3dddQq16sdd")

FUNCTIONALS = (
    "mass", "energy", "xi_2d", "xi_3d", "xi_gkdv", "q_functional", "local_mass", "local_h1",
    "weighted_local_mass", "monitored_term", "far_region_mass", "far_identity",
)
INITIAL_KINDS = ("gaussian", "soliton", "multisoliton", "random-band-limited")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class CheckpointError(ValueError):
    pass


# ------------------------------------------------------------------ config

@dataclass
class RunConfig:
    equation: str
    grid: dict
    initial: dict
    dt: float
    t_start: float
    t_end: float
    snapshot_every: int
    seed: int = 0
    diagnostics: list = field(default_factory=list)
    nonlinear: bool = True

    def make_grid(self) -> S.Grid:
        return S.Grid(tuple(self.grid["n"]), tuple(self.grid["half_length"]))

    @property
    def total_steps(self) -> int:
        return S.steps_between(self.t_start, self.t_end, self.dt)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def run_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a mapping")
        known = {f for f in cls.__dataclass_fields__}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown key")
        for key in ("equation", "grid", "initial", "dt", "t_start", "t_end", "snapshot_every"):
            if key not in data:
                raise ConfigError(key, "missing required key")
        try:
            cfg = cls(
                equation=str(data["equation"]),
                grid={"n": [int(v) for v in data["grid"]["n"]],
                      "half_length": [float(v) for v in data["grid"]["half_length"]]},
                initial=dict(data["initial"]),
                dt=float(data["dt"]),
                t_start=float(data["t_start"]),
                t_end=float(data["t_end"]),
                snapshot_every=int(data["snapshot_every"]),
                seed=int(data.get("seed", 0)),
                diagnostics=[dict(d) for d in data.get("diagnostics", []) or []],
                nonlinear=bool(data.get("nonlinear", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("<root>", f"malformed value ({exc})") from exc
        validate_config(cfg)
        return cfg


def validate_config(cfg: RunConfig) -> None:
    """Reject a config before any compute; errors name the offending field path."""
    try:
        grid = cfg.make_grid()
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from exc
    try:
        S.check_equation(cfg.equation, grid.dimension)
    except ValueError as exc:
        raise ConfigError("equation", str(exc)) from exc
    if not cfg.dt > 0:
        raise ConfigError("dt", "must be positive")
    if cfg.t_start < P.T_MIN:
        raise ConfigError("t_start", f"must be >= {P.T_MIN}")
    if not cfg.t_end > cfg.t_start:
        raise ConfigError("t_end", "must exceed t_start")
    try:
        cfg.total_steps
    except ValueError as exc:
        raise ConfigError("t_end", str(exc)) from exc
    if cfg.snapshot_every < 1:
        raise ConfigError("snapshot_every", "must be >= 1")
    kind = cfg.initial.get("kind")
    if kind not in INITIAL_KINDS:
        raise ConfigError("initial.kind", f"expected one of {INITIAL_KINDS}")
    for i, spec in enumerate(cfg.diagnostics):
        _validate_diagnostic(spec, f"diagnostics[{i}]", cfg, grid)


def region_params(spec: dict, dimension: int, path: str = "diagnostics"):
    """Build the region parameter object a diagnostic spec describes."""
    try:
        if dimension == 2:
            return P.RegionParams2D(float(spec["b"]), float(spec["r"]),
                                    None if spec.get("q") is None else float(spec["q"]),
                                    bool(spec.get("centered", True)), float(spec.get("m", 0.0)),
                                    float(spec.get("n", 0.0)), int(spec.get("sign_m", 1)),
                                    int(spec.get("sign_n", 1)))
        if dimension == 3:
            return P.RegionParams3D(*(float(spec[k]) for k in ("p1", "p2", "p3", "p4")),
                                    q1=float(spec.get("q1", 1.0)))
        return P.GkdvParams(int(spec["p"]), float(spec["b"]), float(spec["q"]),
                            float(spec.get("n", 0.0)), int(spec.get("sign_n", 1)))
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}", "missing region parameter") from exc


def _validate_diagnostic(spec: dict, path: str, cfg: RunConfig, grid: S.Grid) -> None:
    name = spec.get("functional")
    if name not in FUNCTIONALS:
        raise ConfigError(f"{path}.functional", f"expected one of {FUNCTIONALS}")
    for key in ("sigma", "delta1", "delta2", "delta3", "sigma_prime"):
        if key in spec and not float(spec[key]) > 0:
            raise ConfigError(f"{path}.{key}", "must be positive")
    if name in ("mass", "energy"):
        return
    if name in ("far_region_mass", "far_identity"):
        for key in ("far_exponent", "eps"):
            if key not in spec:
                raise ConfigError(f"{path}.{key}", "missing")
        axis = int(spec.get("axis", 0))
        if not 0 <= axis < grid.dimension:
            raise ConfigError(f"{path}.axis", "out of range")
        theta = float(P.theta_far(cfg.t_end, float(spec["far_exponent"]), float(spec["eps"])))
        if 2 * theta > grid.half_length[axis]:
            raise ConfigError(f"{path}.far_exponent",
                              f"far band 2 theta(t_end) = {2 * theta:.4g} leaves the box")
        return
    prm = region_params(spec, grid.dimension, path)
    mode = "H1" if name in ("q_functional", "local_h1") else "L2"
    if isinstance(prm, P.RegionParams2D):
        rep = P.validate_2d(prm, mode)
        if not rep.valid:
            raise ConfigError(f"{path}.b", f"region parameters fail {rep.failed()}")
    elif isinstance(prm, P.RegionParams3D):
        if not bool(P.validate_3d_full(prm.as_tuple(), h1=(mode == "H1"))):
            raise ConfigError(f"{path}.p1", "3D exponents fail the constraint system")
    else:
        try:
            rep = P.validate_gkdv(prm)
        except ValueError as exc:
            raise ConfigError(f"{path}.p", str(exc)) from exc
        if not rep.valid:
            raise ConfigError(f"{path}.b", f"region parameters fail {rep.failed()}")
    box = P.region_omega(cfg.t_end, prm)
    if not grid.fits_central_half(box):
        raise ConfigError(path, "Omega(t_end) does not fit inside the central half-box")


def load_config(path) -> RunConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return RunConfig.from_dict(data)


def save_config(cfg: RunConfig, path) -> Path:
    path = Path(path)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))
    return path


# --------------------------------------------------------------- checkpoints

@dataclass
class CheckpointHeader:
    dimension: int
    n: tuple[int, ...]
    half_length: tuple[float, ...]
    t: float
    dt: float
    steps: int
    seed: int
    equation: str
    baseline_mass: float = 0.0
    baseline_energy: float = 0.0
    version: int = FORMAT_VERSION


def write_checkpoint(path, values: np.ndarray, header: CheckpointHeader) -> Path:
    path = Path(path)
    d = header.dimension
    n = tuple(header.n) + (0,) * (3 - d)
    L = tuple(header.half_length) + (0.0,) * (3 - d)
    head = _HEADER.pack(MAGIC, header.version, d, *n, *L, header.t, header.dt, header.steps,
                        header.seed, header.equation.encode("ascii").ljust(16, b"\x00"),
                        header.baseline_mass, header.baseline_energy)
    data = np.ascontiguousarray(values, dtype="<f8")
    if data.shape != tuple(header.n):
        raise CheckpointError(f"array shape {data.shape} disagrees with header {header.n}")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(head)
        fh.write(data.tobytes(order="C"))
    tmp.replace(path)
    return path


def read_checkpoint(path) -> tuple[CheckpointHeader, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointError("file shorter than the checkpoint header")
    (magic, version, d, n0, n1, n2, L0, L1, L2, t, dt, steps, seed, eq, bm,
     be) = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError("bad magic: not a checkpoint file")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"checkpoint version {version} != supported {FORMAT_VERSION}")
    if not 1 <= d <= 3:
        raise CheckpointError(f"bad dimension {d}")
    n = (n0, n1, n2)[:d]
    header = CheckpointHeader(d, n, (L0, L1, L2)[:d], t, dt, steps, seed,
                              eq.rstrip(b"\x00").decode("ascii"), bm, be, version)
    count = int(np.prod(n))
    body = raw[_HEADER.size:]
    if len(body) != 8 * count:
        raise CheckpointError(f"payload has {len(body)} bytes, expected {8 * count}")
    values = np.frombuffer(body, dtype="<f8").reshape(n).astype(float)
    return header, values


def state_header(state: S.SolverState, seed: int) -> CheckpointHeader:
    g = state.grid
    return CheckpointHeader(g.dimension, g.n, g.half_length, state.t, state.dt, state.steps,
                            seed, state.equation, state.baseline_mass, state.baseline_energy)


def save_state(path, state: S.SolverState, seed: int) -> Path:
    return write_checkpoint(path, state.field.values, state_header(state, seed))


def restart(checkpoint, cfg: RunConfig) -> S.SolverState:
    """Rebuild the solver state stored in ``checkpoint`` after checking it against ``cfg``."""
    header, values = read_checkpoint(checkpoint)
    grid = cfg.make_grid()
    mismatches = []
    if header.n != grid.n:
        mismatches.append(f"grid.n: checkpoint {header.n} vs config {grid.n}")
    if header.half_length != grid.half_length:
        mismatches.append(f"grid.half_length: checkpoint {header.half_length} vs config {grid.half_length}")
    if header.equation != cfg.equation:
        mismatches.append(f"equation: checkpoint {header.equation} vs config {cfg.equation}")
    if header.dt != cfg.dt:
        mismatches.append(f"dt: checkpoint {header.dt} vs config {cfg.dt}")
    if header.seed != cfg.seed:
        mismatches.append(f"seed: checkpoint {header.seed} vs config {cfg.seed}")
    if mismatches:
        raise CheckpointError("; ".join(mismatches))
    state = S.initialize(S.Field(grid, values), header.t, header.dt, header.equation,
                         nonlinear=cfg.nonlinear, dealias=False)
    state.steps = header.steps
    state.baseline_mass = header.baseline_mass
    state.baseline_energy = header.baseline_energy
    return state


# ----------------------------------------------------------- manifests, CSV

def save_manifest(run: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    path.write_text(json.dumps(run, indent=2, sort_keys=True, default=_jsonable))
    return path


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_series_csv(path, rows, run_id: str) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# run_id={run_id}\n")
        w = csv.writer(fh)
        w.writerow(["t", "value", "accumulator"])
        for t, v, a in rows:
            w.writerow([repr(float(t)), repr(float(v)), repr(float(a))])
    return path


def read_series_csv(path) -> tuple[str, list[tuple[float, float, float]]]:
    with open(path) as fh:
        first = fh.readline().strip()
        run_id = first.split("=", 1)[1] if first.startswith("# run_id=") else ""
        reader = csv.reader(fh)
        next(reader)
        rows = [tuple(float(v) for v in row) for row in reader]
    return run_id, rows
