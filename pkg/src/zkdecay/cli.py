"""Command-line entry point.

Exit codes: 0 success, 1 validation failure or bad usage, 2 numerical failure.
Reports are JSON files in the output directory (``--out`` or $ZKDECAY_OUT).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import diagnostics as D
from . import params as P
from . import persistence as io
from . import solver as S
from . import soliton as Q
from . import weights as W

OUT_ENV = "ZKDECAY_OUT"
DEFAULT_OUT = "zkdecay-out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class CommandOutcome:
    exit_code: int
    summary: str
    report_path: str | None = None


def _out_dir(arg) -> Path:
    out = Path(arg or os.environ.get(OUT_ENV, DEFAULT_OUT))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(out: Path, name: str, report: dict) -> str:
    path = out / f"{name}.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True, default=io._jsonable))
    return str(path)


# ---------------------------------------------------------------- commands

def cmd_verify_weights(args) -> CommandOutcome:
    rep = W.verify_profile(x_min=args.x_min, x_max=args.x_max, n=args.n, sigma=args.sigma)
    bad = [r["invariant"] for r in rep if r["max_violation"] > 0]
    report = {"command": "verify-weights", "anchor": "weight family bounds and cutoff properties",
              "grid": {"x_min": args.x_min, "x_max": args.x_max, "n": args.n},
              "invariants": rep, "violations": len(bad)}
    path = _write_report(_out_dir(args.out), "verify_weights", report)
    return CommandOutcome(0 if not bad else 1,
                          f"{len(rep)} invariants, {len(bad)} violated" + (f": {bad}" if bad else ""),
                          path)


def _params_from_mapping(data: dict):
    kind = data.get("kind", "2d")
    if kind == "2d":
        prm = io.region_params(data, 2, "params")
        return P.validate_2d(prm, data.get("mode", "L2"))
    if kind == "3d":
        prm = io.region_params(data, 3, "params")
        return P.check_3d(prm)
    if kind == "gkdv":
        return P.validate_gkdv(io.region_params(data, 1, "params"))
    raise io.ConfigError("params.kind", "expected 2d, 3d or gkdv")


def cmd_params_check(args) -> CommandOutcome:
    data = yaml.safe_load(Path(args.config).read_text())
    rep = _params_from_mapping(data)
    report = {"command": "params check", "anchor": "region parameter constraints",
              "input": data, **rep.to_dict()}
    path = _write_report(_out_dir(args.out), "params_check", report)
    return CommandOutcome(0 if rep.valid else 1,
                          "valid" if rep.valid else f"invalid: {rep.failed()}", path)


def cmd_params_reduce_check(args) -> CommandOutcome:
    rep = P.reduce_check(samples=args.samples, seed=args.seed,
                         boundary_samples=args.boundary_samples, h1=not args.l2)
    rep = {"command": "params reduce-check",
           "anchor": "equivalence of the full and reduced 3D constraint systems", **rep}
    path = _write_report(_out_dir(args.out), "reduce_check", rep)
    ok = rep["discrepancies"] == 0
    return CommandOutcome(0 if ok else 1, f"{rep['samples']} uniform + {rep['boundary_samples']} "
                          f"boundary samples, {rep['discrepancies']} discrepancies", path)


def cmd_times_seq(args) -> CommandOutcome:
    seq = D.times_sequence(args.t0, args.eps, args.c0, args.b, args.n)
    increasing = all(b > a for a, b in zip(seq.log_times, seq.log_times[1:]))
    report = {"command": "times-seq", "anchor": "recursive time sequence for the decay rate",
              "t0": args.t0, "eps": args.eps, "C0": args.c0, "b": args.b, "n": args.n,
              "log_times": seq.log_times, "times": seq.times, "overflow": seq.overflow,
              "strictly_increasing": increasing}
    path = _write_report(_out_dir(args.out), "times_seq", report)
    shown = ", ".join(f"{t:.6g}" for t in seq.times)
    return CommandOutcome(0 if increasing else 1, f"times: {shown}", path)


def cmd_soliton(args) -> CommandOutcome:
    d = args.dim
    defaults = Q.default_grids()[d]
    n = args.n or defaults.n[0]
    L = args.half_length or defaults.half_length[0]
    grid = S.Grid.cube(d, n, L)
    prof = Q.solve_ground_state(d, args.speed, grid, tolerance=args.tol, max_iter=args.max_iter)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_checkpoint(out, prof.values, io.CheckpointHeader(
        d, grid.n, grid.half_length, 0.0, 0.0, prof.iterations, 0, "ground-state",
        prof.mass, 0.0))
    report = {"command": "soliton", "anchor": "ground state of Lap Q - c Q + Q^2 = 0",
              "dimension": d, "speed": args.speed, "residual": prof.residual,
              "iterations": prof.iterations, "mass": prof.mass,
              "mass_over_scaling": prof.mass / args.speed ** Q.mass_scaling_exponent(d),
              "min_value": float(prof.values.min()), "asymmetry": prof.asymmetry(),
              "profile": str(out)}
    path = _write_report(out.parent, out.stem + "_report", report)
    return CommandOutcome(0, f"d={d} c={args.speed}: residual {prof.residual:.3e} after "
                          f"{prof.iterations} iterations", path)


def cmd_simulate(args) -> CommandOutcome:
    from .runner import simulate

    cfg = io.load_config(args.config)
    out = _out_dir(args.out)
    man = simulate(cfg, out, resume=args.restart, stop_after=args.stop_after)
    path = str(out / "manifest.json")
    if man["status"] != "ok":
        return CommandOutcome(2, f"run stopped: {man['error']}", path)
    failed = [k for k, v in man["checks"].items() if not v["ok"]]
    code = 0 if not failed or args.stop_after else 1
    return CommandOutcome(code, f"t = {man['t_final']:.6g} after {man['steps']} steps; "
                          f"failed checks: {failed or 'none'}", path)


def _parse_kv(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = yaml.safe_load(v)
    return out


def cmd_diagnose(args) -> CommandOutcome:
    from .runner import evaluate

    traj = Path(args.traj)
    ckpts = sorted((traj / "checkpoints").glob("step_*.bin"))
    if not ckpts:
        raise io.ConfigError("--traj", f"no checkpoints under {traj / 'checkpoints'}")
    spec = {"functional": args.functional, **_parse_kv(args.params)}
    series = D.DiagnosticSeries(args.functional)
    bounds = []
    for path in ckpts:
        header, values = io.read_checkpoint(path)
        grid = S.Grid(header.n, header.half_length)
        res = evaluate(spec, S.Field(grid, values), header.t, header.equation,
                       float(np.sqrt(header.baseline_mass)))
        series.append(header.t, res["value"])
        if "bound" in res:
            bounds.append(res["bound"])
    out = _out_dir(args.out or traj)
    io.write_series_csv(out / f"diagnose_{args.functional}.csv", series.rows(), traj.name)
    report = {"command": "diagnose", "anchor": f"functional {args.functional}", "spec": spec,
              "times": series.times, "values": series.values, "accumulator": series.accumulator}
    violations = 0
    if bounds:
        violations = int(np.sum(np.abs(series.values) > np.asarray(bounds)))
        report["bounds"] = bounds
        report["bound_violations"] = violations
    path = _write_report(out, f"diagnose_{args.functional}", report)
    return CommandOutcome(0 if violations == 0 else 1,
                          f"{len(series.times)} snapshots, {violations} bound violations", path)


def cmd_acceptance(args) -> CommandOutcome:
    from .acceptance import run_all

    results = run_all(quick=args.quick, out_dir=_out_dir(args.out))
    for r in results:
        print(r.line())
    report = {"command": "acceptance", "criteria": [r.to_dict() for r in results]}
    path = _write_report(_out_dir(args.out), "acceptance", report)
    failed = [r.number for r in results if not r.passed]
    return CommandOutcome(0 if not failed else 1, f"failed criteria: {failed or 'none'}", path)


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="zkdecay", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("verify-weights", help="certify the weight families")
    s.add_argument("--x-min", type=float, default=-50.0)
    s.add_argument("--x-max", type=float, default=50.0)
    s.add_argument("--n", type=int, default=10_000)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify_weights)

    s = sub.add_parser("params", help="parameter-region checks")
    psub = s.add_subparsers(dest="params_command", required=True, parser_class=_Parser)
    c = psub.add_parser("check", help="validate a parameter file")
    c.add_argument("--config", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_params_check)
    c = psub.add_parser("reduce-check", help="full vs reduced 3D system on random tuples")
    c.add_argument("--samples", type=int, default=1_000_000)
    c.add_argument("--boundary-samples", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--l2", action="store_true", help="drop the gradient-only conditions")
    c.add_argument("--out")
    c.set_defaults(func=cmd_params_reduce_check)

    s = sub.add_parser("times-seq", help="recursive time sequence")
    s.add_argument("--t0", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--c0", type=float, required=True)
    s.add_argument("--b", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_times_seq)

    s = sub.add_parser("soliton", help="solve for a ground state")
    s.add_argument("--dim", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--speed", type=float, default=1.0)
    s.add_argument("--n", type=int)
    s.add_argument("--half-length", type=float)
    s.add_argument("--tol", type=float, default=1e-11)
    s.add_argument("--max-iter", type=int, default=500)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_soliton)

    s = sub.add_parser("simulate", help="run a configured simulation")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--restart", help="checkpoint to resume from")
    s.add_argument("--stop-after", type=int, help="stop after this many steps")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("diagnose", help="evaluate a functional over stored checkpoints")
    s.add_argument("--traj", required=True)
    s.add_argument("--functional", required=True, choices=[f for f in io.FUNCTIONALS
                                                           if f != "far_identity"])
    s.add_argument("--params", nargs="*", metavar="KEY=VALUE")
    s.add_argument("--out")
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("acceptance", help="run the acceptance suite")
    s.add_argument("--quick", action="store_true", help="skip the long simulations")
    s.add_argument("--out")
    s.set_defaults(func=cmd_acceptance)
    return p


def dispatch(argv=None) -> CommandOutcome:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return CommandOutcome(1, f"usage error: {exc}")
    except (io.ConfigError, io.CheckpointError, ValueError, FileNotFoundError) as exc:
        return CommandOutcome(1, f"validation error: {exc}")
    except (S.BlowUpError, Q.SolitonConvergenceError, FloatingPointError) as exc:
        return CommandOutcome(2, f"numerical failure: {exc}")


def main(argv=None) -> int:
    outcome = dispatch(argv)
    print(outcome.summary)
    if outcome.report_path:
        print(f"report: {outcome.report_path}")
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
