"""Command line front end: certificates, simulation, verification, plots.

Configuration comes from an optional JSON file plus flag overrides
(flags win).  Exit codes: 0 all good, 1 a check failed or integration
broke down, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace

from .bounds import BoundCertificate, CertificateError, certificate
from .model import Params, State
from .plot import states_svg, x1_bound_svg
from .simulate import IntegrationError, integrate, read_trajectory_csv, write_trajectory_csv
from .verify import build_report

__all__ = ["RunConfig", "cmd_bounds", "cmd_simulate", "cmd_verify", "cmd_plot", "main", "entry"]

# Demo parameter set used throughout the docs: strong annihilation
# (alpha2 = alpha8 = 30), a tenfold chain gain (alpha3 = 10), all other
# rates 1.  This system oscillates and exercises every check.
DEMO_ALPHAS = (1.0, 30.0, 10.0, 1.0, 1.0, 1.0, 1.0, 30.0)


@dataclass(frozen=True)
class RunConfig:
    params: Params
    x0: State
    horizon: float = 100.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    L0: float | None = None
    out: str = "."
    seed: int = 1729
    fuzz: int = 0
    certificate_json: str | None = None
    trajectory_csv: str | None = None


_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def _coerce_params(obj) -> Params:
    if isinstance(obj, dict):
        return Params.from_json(obj)
    return Params.from_sequence(obj)


def _coerce_state(obj) -> State:
    if isinstance(obj, dict):
        return State.from_json(obj)
    return State.from_sequence(obj)


def default_config() -> RunConfig:
    return RunConfig(params=Params.from_sequence(DEMO_ALPHAS), x0=State.zero())


def load_config(path: str) -> RunConfig:
    with open(path, "r") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed config JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError("config JSON must be an object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    cfg = default_config()
    updates = {}
    if "params" in obj:
        updates["params"] = _coerce_params(obj["params"])
    if "x0" in obj:
        updates["x0"] = _coerce_state(obj["x0"])
    for key in ("horizon", "rel_tol", "abs_tol", "L0"):
        if key in obj and obj[key] is not None:
            updates[key] = float(obj[key])
    for key in ("seed", "fuzz"):
        if key in obj:
            updates[key] = int(obj[key])
    for key in ("out", "certificate_json", "trajectory_csv"):
        if key in obj and obj[key] is not None:
            updates[key] = str(obj[key])
    return replace(cfg, **updates)


def _csv_floats(text: str, n: int, what: str) -> list[float]:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != n:
        raise ValueError(f"{what} needs {n} comma-separated values, got {len(parts)}")
    return [float(s) for s in parts]


def _apply_flags(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates = {}
    if args.params is not None:
        updates["params"] = Params.from_sequence(_csv_floats(args.params, 8, "--params"))
    if args.x0 is not None:
        updates["x0"] = State.from_sequence(_csv_floats(args.x0, 4, "--x0"))
    if args.horizon is not None:
        updates["horizon"] = float(args.horizon)
    if args.L0 is not None:
        updates["L0"] = float(args.L0)
    if args.out is not None:
        updates["out"] = args.out
    if args.seed is not None:
        updates["seed"] = int(args.seed)
    if args.fuzz is not None:
        updates["fuzz"] = int(args.fuzz)
    return replace(cfg, **updates)


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(cfg: RunConfig) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def cmd_bounds(cfg: RunConfig) -> int:
    cert = certificate(cfg.params, cfg.x0, cfg.L0)
    out = _outdir(cfg)
    _write_json(os.path.join(out, "certificate.json"), cert.to_json())
    print(f"L_star = {cert.L_star:.4f}")
    print(f"L_used = {cert.L_used:.4f}")
    print(f"T0     = {cert.T0:.4f}")
    print(f"M1     = {cert.M1:.4f}")
    print(f"M2     = {cert.M2:.4f}")
    print(f"M3     = {cert.M3:.4f}")
    print(f"M4     = {cert.M4:.4f}")
    print(f"gamma  = {cert.gamma:.4f}")
    print(
        f"T0 / M1 / M2 / M3 / M4 = {cert.T0:.4f} / {cert.M1:.4f} / "
        f"{cert.M2:.4f} / {cert.M3:.4f} / {cert.M4:.4f}"
    )
    print(f"wrote {os.path.join(out, 'certificate.json')}")
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    try:
        traj = integrate(cfg.params, cfg.x0, cfg.horizon, cfg.rel_tol, cfg.abs_tol)
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 1
    out = _outdir(cfg)
    path = os.path.join(out, "trajectory.csv")
    write_trajectory_csv(traj, path)
    m = traj.y.max(axis=0)
    print(f"steps = {len(traj.t) - 1}")
    print(
        f"max x1 = {m[0]:.4f}, max x2 = {m[1]:.4f}, "
        f"max x3 = {m[2]:.4f}, max x4 = {m[3]:.4f}"
    )
    print(f"wrote {path}")
    return 0


_STATUS_TAGS = {"pass": "PASS", "fail": "FAIL", "not-applicable": "N/A "}


def cmd_verify(cfg: RunConfig) -> int:
    cert = None
    if cfg.certificate_json is not None:
        with open(cfg.certificate_json, "r") as fh:
            cert = BoundCertificate.from_json(json.load(fh))
    traj = None
    if cfg.trajectory_csv is not None:
        traj = read_trajectory_csv(cfg.trajectory_csv, cfg.params, cfg.rel_tol, cfg.abs_tol)
    try:
        report = build_report(
            cfg.params,
            cfg.x0,
            horizon=cfg.horizon,
            rel_tol=cfg.rel_tol,
            abs_tol=cfg.abs_tol,
            L_override=cfg.L0,
            cert=cert,
            traj=traj,
            fuzz_count=cfg.fuzz,
            fuzz_seed=cfg.seed,
        )
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return 1
    out = _outdir(cfg)
    path = os.path.join(out, "report.json")
    _write_json(path, report.to_json())
    for c in report.checks:
        margin = "" if c.margin is None else f" margin={c.margin:.6g}"
        print(f"[{_STATUS_TAGS[c.status]}] {c.name}:{margin} {c.detail}")
    print(f"wrote {path}")
    if report.all_passed:
        print("all checks passed")
        return 0
    print("some checks FAILED", file=sys.stderr)
    return 1


def cmd_plot(cfg: RunConfig) -> int:
    if cfg.trajectory_csv is not None:
        traj = read_trajectory_csv(cfg.trajectory_csv, cfg.params, cfg.rel_tol, cfg.abs_tol)
    else:
        try:
            traj = integrate(cfg.params, cfg.x0, cfg.horizon, cfg.rel_tol, cfg.abs_tol)
        except IntegrationError as exc:
            print(f"integration failed: {exc}", file=sys.stderr)
            return 1
    cert = certificate(cfg.params, cfg.x0, cfg.L0)
    out = _outdir(cfg)
    p_states = os.path.join(out, "states.svg")
    p_bound = os.path.join(out, "x1_bound.svg")
    states_svg(traj, p_states)
    x1_bound_svg(traj, cert.M1, p_bound)
    print(f"wrote {p_states}")
    print(f"wrote {p_bound}")
    return 0


_COMMANDS = {
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="aifcert",
        description="Boundedness certificates and certified simulation for the "
        "four-species annihilation feedback loop.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "bounds": "compute the bound certificate",
        "simulate": "integrate the system and write a trajectory CSV",
        "verify": "run every check and write a report",
        "plot": "emit SVG figures",
    }
    for name, h in helps.items():
        sp = sub.add_parser(name, help=h)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--params", help="a1,...,a8 rate constants")
        sp.add_argument("--x0", help="v1,v2,v3,v4 initial state")
        sp.add_argument("--horizon", type=float, help="integration horizon")
        sp.add_argument("--L0", type=float, help="certificate level override (>= L*)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="fuzzing seed")
        sp.add_argument("--fuzz", type=int, help="fuzzed parameter sets to fold into verify")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        cfg = _apply_flags(cfg, args)
        return _COMMANDS[args.command](cfg)
    except (CertificateError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
