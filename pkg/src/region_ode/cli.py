"""Scenario-driven command line front end.

Commands:

    region-ode run <scenario.ini> -o <dir>
    region-ode check <scenario.ini> --which region|transversality|classify|lower|upper
    region-ode sweep <scenario.ini> --param <name> --values a,b,c [-o <dir>]

Scenario files are flat key/value text with section headers (INI).  There
is no expression language: models and regions are registered presets, and
the only symbolic values are curve tokens ('linear 0 1') and alpha tokens
('2M+1', resolved against the grid bound M of the ball benchmark).

Exit codes: 0 all enabled certificates pass, 1 a certificate failed,
2 usage or parse error.  REGION_ODE_SEED overrides the scenario seed.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import presets
from .integrator import (IntegratorConfig, Trajectory, _atomic_write,
                         integrate_modified, write_events_file,
                         write_trajectory_csv)
from .krasovskij import EpsSchedule
from .regions import (CheckReport, PairInconsistencyError, ViablePair,
                      check_lower_solution, check_solution_region,
                      check_transversality, check_upper_solution,
                      classify_pair)
from .rhs_model import RhsModel
from .verify import CertReport, certify


class UsageError(Exception):
    """Malformed scenario or command line; maps to exit code 2."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Typed view of one scenario file; round-trips through the canonicalizer."""

    # [scenario]
    name: str = "scenario"
    preset: str = "band_example"
    horizon: float = 1.0
    x0: tuple[float, ...] = (0.0,)
    seed: int = 0
    allow_outside_start: bool = False
    # [model]
    alpha: str = "0"
    q: int = 10
    # [region]
    region_kind: str = "example_band45"
    r: float = 1.0
    alpha_fn: str = "linear 0 1"
    beta_fn: str = "step 1 2 0.5"
    # [integrator]
    method: str = "rk4_events"
    step: float = 1e-5
    event_tol: float = 1e-10
    max_event_bisections: int = 60
    selection: str = "center"
    # [checks]
    m_region: int = 2000
    m_transversality: int = 12
    region_tol: float = 0.0
    region_mode: str = "modified"
    transversality_margin: float = 1e-6
    env_m: int = 64
    eps0: float = 1e-2
    eps_factor: float = 0.5
    eps_depth: int = 6
    region_cert_tol: float = 1e-9
    residual_delta: float = 1e-9
    surface_time_delta: float = 1e-6
    surface_time_tol: float = 1e-3
    lower_fn: str = "linear 0 1"
    upper_fn: str = "ramp_cap 1 2 2"


_SECTIONS = {
    "scenario": ("name", "preset", "horizon", "x0", "seed", "allow_outside_start"),
    "model": ("alpha", "q"),
    "region": ("region_kind", "r", "alpha_fn", "beta_fn"),
    "integrator": ("method", "step", "event_tol", "max_event_bisections", "selection"),
    "checks": ("m_region", "m_transversality", "region_tol", "region_mode",
               "transversality_margin", "env_m", "eps0", "eps_factor",
               "eps_depth", "region_cert_tol", "residual_delta",
               "surface_time_delta", "surface_time_tol", "lower_fn", "upper_fn"),
}

# keys stored under a different name in the file ([region] kind = ...)
_FILE_KEY = {"region_kind": "kind"}


def _coerce(field: dataclasses.Field, raw: str):
    if field.type in ("float", float):
        return float(raw)
    if field.type in ("int", int):
        return int(raw)
    if field.type in ("bool", bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if field.name == "x0":
        return tuple(float(p) for p in raw.split())
    return raw


def parse_scenario(path: str) -> ScenarioConfig:
    """Load and validate a scenario file; raises UsageError on problems."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise UsageError(f"cannot read scenario file {path}")

    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    values: dict = {}
    for section, keys in _SECTIONS.items():
        if not cp.has_section(section):
            continue
        known = {_FILE_KEY.get(k, k): k for k in keys}
        for file_key, raw in cp.items(section):
            if file_key not in known:
                raise UsageError(
                    f"{path}: unknown key {file_key!r} in section [{section}]")
            name = known[file_key]
            try:
                values[name] = _coerce(fields[name], raw)
            except ValueError as exc:
                raise UsageError(
                    f"{path}: bad value for [{section}] {file_key}: {exc}") from exc
    for section in cp.sections():
        if section not in _SECTIONS:
            raise UsageError(f"{path}: unknown section [{section}]")

    env_seed = os.environ.get("REGION_ODE_SEED")
    if env_seed is not None:
        try:
            values["seed"] = int(env_seed)
        except ValueError as exc:
            raise UsageError(f"REGION_ODE_SEED is not an integer: {env_seed!r}") from exc

    try:
        cfg = ScenarioConfig(**values)
    except TypeError as exc:
        raise UsageError(f"{path}: {exc}") from exc
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    if cfg.preset not in presets.MODEL_PRESETS:
        raise UsageError(f"unknown model preset {cfg.preset!r} "
                         f"(registered: {sorted(presets.MODEL_PRESETS)})")
    if cfg.horizon <= 0:
        raise UsageError("horizon must be positive")
    if cfg.step <= 0 or cfg.step > cfg.horizon:
        raise UsageError("step must lie in (0, horizon]")
    if cfg.region_kind not in ("ball", "band", "example_band45"):
        raise UsageError(f"unknown region kind {cfg.region_kind!r}")


def canonical_text(cfg: ScenarioConfig) -> str:
    """Stable-key-order text form; parsing it back gives an equal config."""
    lines = []
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for name in keys:
            val = getattr(cfg, name)
            if name == "x0":
                text = " ".join(repr(v) for v in val)
            elif isinstance(val, bool):
                text = "true" if val else "false"
            elif isinstance(val, float):
                text = repr(val)
            else:
                text = str(val)
            lines.append(f"{_FILE_KEY.get(name, name)} = {text}")
        lines.append("")
    return "\n".join(lines)


def write_scenario(cfg: ScenarioConfig, path: str) -> None:
    _atomic_write(path, canonical_text(cfg))


def preset_scenario(name: str) -> ScenarioConfig:
    """Built-in scenario defaults reproducing the two shipped benchmarks."""
    if name == "ball_example":
        return ScenarioConfig(name="ball_example", preset="ball_example",
                              horizon=1.0, x0=(0.0, 0.0), alpha="2M+1", q=10,
                              region_kind="ball", r=1.0, step=1e-5,
                              region_cert_tol=1e-9)
    if name == "band_example":
        return ScenarioConfig(name="band_example", preset="band_example",
                              horizon=1.0, x0=(0.0,),
                              region_kind="example_band45", step=1e-5,
                              region_cert_tol=1e-9)
    raise UsageError(f"unknown scenario preset {name!r}")


# ---------------------------------------------------------------------------
# Building runtime objects from a scenario
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Runtime:
    cfg: ScenarioConfig
    model: RhsModel
    pair: ViablePair
    x0: np.ndarray
    schedule: EpsSchedule
    integrator: IntegratorConfig


def build_runtime(cfg: ScenarioConfig) -> Runtime:
    if cfg.preset == "ball_example":
        alpha = presets.parse_alpha(cfg.alpha, presets.ball_example_bound())
        model = presets.ball_example_model(alpha=alpha, q=cfg.q,
                                           horizon=cfg.horizon)
    else:
        model = presets.MODEL_PRESETS[cfg.preset](horizon=cfg.horizon)
    if len(cfg.x0) != model.n:
        raise UsageError(f"x0 has dimension {len(cfg.x0)}, model needs {model.n}")

    pair = presets.region_from_spec(
        cfg.region_kind,
        {"r": cfg.r, "n": model.n, "alpha_fn": cfg.alpha_fn, "beta_fn": cfg.beta_fn},
        horizon=cfg.horizon)
    x0 = np.asarray(cfg.x0, dtype=float)
    if pair.h(0.0, x0) > 0.0 and not cfg.allow_outside_start:
        raise UsageError("h(0, x0) > 0: starting point outside the region "
                         "(set allow_outside_start = true to override)")

    schedule = EpsSchedule(eps0=cfg.eps0, factor=cfg.eps_factor, depth=cfg.eps_depth)
    icfg = IntegratorConfig(method=cfg.method, step=cfg.step,
                            event_tol=cfg.event_tol,
                            max_event_bisections=cfg.max_event_bisections,
                            selection=cfg.selection, seed=cfg.seed)
    try:
        icfg.validate(cfg.horizon)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return Runtime(cfg=cfg, model=model, pair=pair, x0=x0,
                   schedule=schedule, integrator=icfg)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunResult:
    region: CheckReport
    transversality: Optional[CheckReport]
    trajectory: Trajectory
    cert: CertReport
    exit_code: int


def run_scenario(cfg: ScenarioConfig, outdir: str, quiet: bool = False) -> RunResult:
    rt = build_runtime(cfg)
    os.makedirs(outdir, exist_ok=True)

    def say(msg: str) -> None:
        if not quiet:
            print(msg)

    region = check_solution_region(rt.pair, rt.model, rt.x0, m=cfg.m_region,
                                   tol=cfg.region_tol, mode=cfg.region_mode,
                                   schedule=rt.schedule, env_m=cfg.env_m,
                                   seed=cfg.seed)
    say(f"solution_region: {'pass' if region.passed else 'FAIL'} "
        f"(worst {region.worst_value:.3e})")

    trans = None
    if rt.model.surfaces:
        trans = check_transversality(rt.model, rt.pair, m=cfg.m_transversality,
                                     margin=cfg.transversality_margin,
                                     schedule=rt.schedule, env_m=cfg.env_m,
                                     seed=cfg.seed)
        say(f"transversality: {'pass' if trans.passed else 'FAIL'} "
            f"(worst {trans.worst_value:.3e})")

    traj = integrate_modified(rt.model, rt.pair, rt.x0, rt.integrator)
    say(f"integrated {len(traj.times)} nodes, {len(traj.events)} events")

    cert = certify(traj, rt.model, rt.pair,
                   region_tol=cfg.region_cert_tol,
                   delta_surface=cfg.residual_delta,
                   surface_delta=cfg.surface_time_delta,
                   surface_tol=cfg.surface_time_tol)
    say(f"certificate: {'pass' if cert.passed else 'FAIL'} "
        f"(max_h {cert.max_h:.3e}, residual {cert.residual:.3e}, "
        f"surface_time {cert.surface_time_fraction:.3e})")

    write_trajectory_csv(os.path.join(outdir, "trajectory.csv"),
                         traj, rt.model, rt.pair)
    write_events_file(os.path.join(outdir, "events.txt"), traj)
    blocks = [f"# scenario: {cfg.name}", "", region.to_text()]
    if trans is not None:
        blocks.append(trans.to_text())
    blocks.append(cert.to_text())
    _atomic_write(os.path.join(outdir, "report.txt"), "\n".join(blocks))

    ok = region.passed and (trans is None or trans.passed) and cert.passed
    return RunResult(region=region, transversality=trans, trajectory=traj,
                     cert=cert, exit_code=0 if ok else 1)


def cmd_run(scenario_path: str, outdir: str, quiet: bool = False) -> int:
    cfg = parse_scenario(scenario_path)
    result = run_scenario(cfg, outdir, quiet=quiet)
    if not quiet:
        print("verdict:", "pass" if result.exit_code == 0 else
              "fail (a certificate did not hold)")
    return result.exit_code


def cmd_check(scenario_path: str, which: str) -> int:
    cfg = parse_scenario(scenario_path)
    rt = build_runtime(cfg)
    if which == "region":
        rep = check_solution_region(rt.pair, rt.model, rt.x0, m=cfg.m_region,
                                    tol=cfg.region_tol, mode=cfg.region_mode,
                                    schedule=rt.schedule, env_m=cfg.env_m,
                                    seed=cfg.seed)
    elif which == "transversality":
        if not rt.model.surfaces:
            raise UsageError("model declares no surfaces")
        rep = check_transversality(rt.model, rt.pair, m=cfg.m_transversality,
                                   margin=cfg.transversality_margin,
                                   schedule=rt.schedule, env_m=cfg.env_m,
                                   seed=cfg.seed)
    elif which == "classify":
        try:
            label, rep = classify_pair(rt.pair, horizon=cfg.horizon,
                                       m=cfg.m_region, seed=cfg.seed)
        except PairInconsistencyError as exc:
            print(f"classification: error ({exc})")
            return 1
        print(f"classification: {label}")
    elif which == "lower":
        rep = check_lower_solution(rt.model, presets.curve_from_tokens(cfg.lower_fn),
                                   float(rt.x0[0]), seed=cfg.seed)
    elif which == "upper":
        rep = check_upper_solution(rt.model, presets.curve_from_tokens(cfg.upper_fn),
                                   float(rt.x0[0]), seed=cfg.seed)
    else:
        raise UsageError(f"unknown checker {which!r} "
                         "(choose region|transversality|classify|lower|upper)")
    print(rep.to_text(), end="")
    return 0 if rep.passed else 1


_SWEEPABLE = {
    "alpha": ("alpha", str),
    "step": ("step", float),
    "q": ("q", int),
    "r": ("r", float),
    "seed": ("seed", int),
}


def cmd_sweep(scenario_path: str, param: str, values: list[str],
              outdir: str) -> int:
    cfg = parse_scenario(scenario_path)
    if param not in _SWEEPABLE:
        raise UsageError(f"unknown sweep parameter {param!r} "
                         f"(supported: {sorted(_SWEEPABLE)})")
    if not values:
        raise UsageError("empty sweep values list")
    field, conv = _SWEEPABLE[param]

    rows = []
    worst_code = 0
    for raw in values:
        try:
            val = conv(raw)
        except ValueError as exc:
            raise UsageError(f"bad value {raw!r} for {param}: {exc}") from exc
        sub = dataclasses.replace(cfg, **{field: val},
                                  name=f"{cfg.name}[{param}={raw}]")
        subdir = os.path.join(outdir, f"{param}={raw}")
        result = run_scenario(sub, subdir, quiet=True)
        trans = result.transversality
        rows.append((raw,
                     "-" if trans is None else ("pass" if trans.passed else "fail"),
                     result.cert.max_h,
                     result.cert.surface_time_fraction,
                     result.exit_code))
        worst_code = max(worst_code, result.exit_code)

    header = f"{param:>12s}  {'transversality':>14s}  {'max_h':>12s}  {'surface_time':>12s}  exit"
    lines = [header]
    for raw, tv, mh, st, code in rows:
        lines.append(f"{raw:>12s}  {tv:>14s}  {mh:12.4e}  {st:12.4e}  {code}")
    table = "\n".join(lines)
    print(table)
    os.makedirs(outdir, exist_ok=True)
    _atomic_write(os.path.join(outdir, "sweep_summary.txt"), table + "\n")
    return worst_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="region-ode",
        description="solution-region checks, integration, and certification "
                    "for discontinuous ODE scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run checks, integrate, certify")
    p_run.add_argument("scenario")
    p_run.add_argument("-o", "--output", required=True, help="output directory")
    p_run.add_argument("-q", "--quiet", action="store_true")

    p_check = sub.add_parser("check", help="run a single checker")
    p_check.add_argument("scenario")
    p_check.add_argument("--which", required=True)

    p_sweep = sub.add_parser("sweep", help="re-run over a parameter list")
    p_sweep.add_argument("scenario")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values")
    p_sweep.add_argument("-o", "--output", default="sweep_out")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize others
        return 2 if exc.code not in (0,) else 0

    try:
        if args.command == "run":
            return cmd_run(args.scenario, args.output, quiet=args.quiet)
        if args.command == "check":
            return cmd_check(args.scenario, args.which)
        if args.command == "sweep":
            values = [v for v in args.values.split(",") if v != ""]
            return cmd_sweep(args.scenario, args.param, values, args.output)
        return 2
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
