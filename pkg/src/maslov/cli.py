"""Command line front end.

Commands
--------
catalog    list built-in shapes
check      max Lagrangian residual of a shape over a sample grid
index      run both index engines on (shape, loop) pairs -> JSONL reports
theorem    pointwise identity residual for (shape, loop) pairs
periods    index of every periodic-axis generator loop
sweep      closure-defect table over an auxiliary metric family -> CSV
transport  frame transport along a quarter arc, flat or bumped metric

Exit codes: 0 verified, 1 validation failure, 2 non-convergence,
3 configuration error. Reports are JSON lines (or CSV tracks/tables with
--format csv); pass --no-timestamps for byte-reproducible output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .catalog import build_loop, build_shape, catalog_entries
from .engines import (
    MaslovReport,
    metric_sweep,
    period_vector,
    run_report,
    theorem_residual,
)
from .errors import (
    ConfigError,
    FrameValidationError,
    ImmersionRankError,
    MaslovError,
    MetricError,
    NonConvergenceError,
)
from .grassmann import LagrangianFrame, parallel_transport_plane
from .immersion import check_lagrangian, generator_loop
from .metrics import diag_bump_metric, flat_metric, kahler_bump_metric

EXIT_VERIFIED = 0
EXIT_VALIDATION = 1
EXIT_NONCONVERGENT = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as ConfigError (exit 3)."""

    def error(self, message):
        raise ConfigError(message)


@dataclass
class RunConfig:
    """One resolved invocation; mirrors the config-file schema."""

    command: str
    shape: str | None = None
    loops: list = field(default_factory=list)
    samples: int = 512
    tol: float = 1e-6
    out: str | None = None
    format: str = "jsonl"
    seed: int = 42
    no_timestamps: bool = False
    metric_family: str | None = None
    grid: int = 12
    steps: int = 2000
    dim: int = 1

    def validate(self) -> "RunConfig":
        if self.samples < 16:
            raise ConfigError(f"--samples must be at least 16, got {self.samples}")
        if self.tol <= 0:
            raise ConfigError(f"--tol must be positive, got {self.tol}")
        if self.format not in ("jsonl", "csv"):
            raise ConfigError(f"--format must be jsonl or csv, got {self.format!r}")
        if self.grid < 1:
            raise ConfigError(f"--grid must be positive, got {self.grid}")
        if self.steps < 1:
            raise ConfigError(f"--steps must be positive, got {self.steps}")
        return self


def _build_parser() -> _Parser:
    parser = _Parser(prog="maslov", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_shape in (
        ("catalog", False),
        ("check", True),
        ("index", True),
        ("theorem", True),
        ("periods", True),
        ("sweep", True),
        ("transport", False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON file mirroring RunConfig")
        p.add_argument("--shape", default=None)
        p.add_argument("--loop", action="append", default=None, dest="loops")
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", default=None, choices=("jsonl", "csv"))
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--no-timestamps", action="store_true", default=None,
                       dest="no_timestamps")
        p.add_argument("--metric-family", default=None, dest="metric_family")
        p.add_argument("--grid", type=int, default=None)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--dim", type=int, default=None)
        p.set_defaults(needs_shape=needs_shape)
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as handle:
                file_values = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config!r}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
    cfg = RunConfig(command=args.command)
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        cli_value = getattr(args, f.name, None)
        if cli_value is not None:
            setattr(cfg, f.name, cli_value)
        elif f.name in file_values:
            setattr(cfg, f.name, file_values[f.name])
    return cfg.validate()


def _timestamp(cfg: RunConfig) -> str | None:
    if cfg.no_timestamps:
        return None
    return time.strftime("%Y-%m-%dT%H:%M:%S")


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _jsonl(records) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n"
                   for r in records)


def _require_shape(cfg: RunConfig):
    if not cfg.shape:
        raise ConfigError(f"command {cfg.command!r} needs --shape")
    return build_shape(cfg.shape, default_seed=cfg.seed)


def _loops_for(cfg: RunConfig, imm):
    specs = list(cfg.loops or [])
    if specs:
        return [build_loop(imm, spec) for spec in specs]
    loops = [generator_loop(imm.domain, axis)
             for axis in range(imm.n) if imm.domain.periodic[axis]]
    if not loops:
        raise ConfigError(
            "shape has no periodic axes; pass --loop explicitly"
        )
    return loops


def _default_grid(n: int) -> int:
    return {1: 128, 2: 16, 3: 6}.get(n, 4)


def _parse_metric_family(text: str, n: int):
    """Parse 'bump:eps=<comma list>' into (eps, metric field) pairs."""
    name, _, param_text = text.partition(":")
    if name != "bump":
        raise ConfigError(f"unknown metric family {name!r} (expected 'bump')")
    key, _, values = param_text.partition("=")
    if key != "eps" or not values:
        raise ConfigError("metric family syntax is bump:eps=<e1,e2,...>")
    try:
        eps_list = [float(v) for v in values.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad eps list {values!r}") from exc
    return [(eps, flat_metric(n) if eps == 0.0 else diag_bump_metric(n, eps))
            for eps in eps_list]


def _track_csv(reports: list[MaslovReport]) -> str:
    lines = ["shape,loop,k,t,re,im"]
    for report in reports:
        track = report.angle_track
        for k, value in enumerate(track):
            t = k / len(track)
            lines.append(f"{report.shape},{report.loop},{k},{t!r},"
                         f"{value.real!r},{value.imag!r}")
    return "\n".join(lines) + "\n"


def _cmd_catalog(cfg: RunConfig) -> int:
    _emit(cfg, _jsonl(catalog_entries()))
    return EXIT_VERIFIED


def _cmd_check(cfg: RunConfig) -> int:
    imm = _require_shape(cfg)
    grid = cfg.grid if cfg.grid != RunConfig.grid else _default_grid(imm.n)
    residual = check_lagrangian(imm, grid)
    tolerance = cfg.tol if cfg.tol != RunConfig.tol else imm.lagrangian_tol
    status = "verified" if residual <= tolerance else "failed"
    record = {
        "command": "check",
        "shape": imm.name,
        "jet_source": imm.jet_source,
        "max_residual": residual,
        "tolerance": tolerance,
        "status": status,
    }
    ts = _timestamp(cfg)
    if ts:
        record["timestamp"] = ts
    _emit(cfg, _jsonl([record]))
    return EXIT_VERIFIED if status == "verified" else EXIT_VALIDATION


def _cmd_index(cfg: RunConfig) -> int:
    imm = _require_shape(cfg)
    loops = _loops_for(cfg, imm)
    reports = [run_report(imm, loop, cfg.samples, tolerance=cfg.tol)
               for loop in loops]
    ts = _timestamp(cfg)
    if cfg.format == "csv":
        _emit(cfg, _track_csv(reports))
    else:
        _emit(cfg, "".join(r.to_jsonl(ts) + "\n" for r in reports))
    if any(r.status == "non-convergent" for r in reports):
        return EXIT_NONCONVERGENT
    if any(r.status == "failed" for r in reports):
        return EXIT_VALIDATION
    return EXIT_VERIFIED


def _cmd_theorem(cfg: RunConfig) -> int:
    imm = _require_shape(cfg)
    loops = _loops_for(cfg, imm)
    records = []
    worst_status = EXIT_VERIFIED
    # Expression-defined jets cannot reach the analytic tier; the looser
    # bound is surfaced automatically unless --tol was given explicitly.
    tolerance = cfg.tol
    if cfg.tol == RunConfig.tol and imm.jet_source.startswith("expression"):
        tolerance = 1e-3
    ts = _timestamp(cfg)
    for loop in loops:
        try:
            residual = theorem_residual(imm, loop, cfg.samples)
        except NonConvergenceError as exc:
            records.append({"command": "theorem", "shape": imm.name,
                            "loop": loop.loop_id, "N": cfg.samples,
                            "status": "non-convergent", "reason": str(exc)})
            worst_status = max(worst_status, EXIT_NONCONVERGENT)
            continue
        status = "verified" if residual <= tolerance else "failed"
        if status == "failed":
            worst_status = max(worst_status, EXIT_VALIDATION)
        record = {"command": "theorem", "shape": imm.name, "loop": loop.loop_id,
                  "N": cfg.samples, "theorem_residual": residual,
                  "tolerance": tolerance, "status": status}
        if ts:
            record["timestamp"] = ts
        records.append(record)
    _emit(cfg, _jsonl(records))
    return worst_status


def _cmd_periods(cfg: RunConfig) -> int:
    imm = _require_shape(cfg)
    periods = period_vector(imm, samples=cfg.samples)
    record = {"command": "periods", "shape": imm.name, "N": cfg.samples,
              "period_vector": periods, "status": "verified"}
    ts = _timestamp(cfg)
    if ts:
        record["timestamp"] = ts
    _emit(cfg, _jsonl([record]))
    return EXIT_VERIFIED


def _cmd_sweep(cfg: RunConfig) -> int:
    imm = _require_shape(cfg)
    family_text = cfg.metric_family or "bump:eps=0,0.05,0.1"
    family = _parse_metric_family(family_text, imm.n)
    table = metric_sweep(imm, family, cfg.grid)
    if cfg.format == "csv":
        _emit(cfg, table.to_csv())
    else:
        records = [{"parameter": row.parameter, "closure_defect": row.closure_defect,
                    "status": row.status} for row in table.rows]
        best = table.best()
        records.append({"argmin_parameter": best.parameter,
                        "argmin_defect": best.closure_defect})
        _emit(cfg, _jsonl(records))
    if all(row.status != "ok" for row in table.rows):
        return EXIT_VALIDATION
    return EXIT_VERIFIED


def _cmd_transport(cfg: RunConfig) -> int:
    n = cfg.dim
    radius = 2.0

    def arc(t: float):
        angle = 0.5 * np.pi * t
        position = np.zeros(2 * n)
        position[0] = radius * np.cos(angle)
        position[n] = radius * np.sin(angle)
        velocity = np.zeros(2 * n)
        velocity[0] = -radius * np.sin(angle) * 0.5 * np.pi
        velocity[n] = radius * np.cos(angle) * 0.5 * np.pi
        return position, velocity

    metric_id = "flat"
    if cfg.metric_family:
        family = _parse_metric_family(cfg.metric_family, n)
        eps = family[-1][0]
        metric_id = f"bump:eps={eps:g}"
        midpoint, _ = arc(0.5)
        metric = (flat_metric(n) if eps == 0.0
                  else kahler_bump_metric(n, eps, center=midpoint, width=0.32))
    else:
        metric = flat_metric(n)

    def arc_reversed(t: float):
        position, velocity = arc(1.0 - t)
        return position, -velocity

    start = LagrangianFrame.standard(n)
    forward = parallel_transport_plane(metric, arc, start, cfg.steps)
    backward = parallel_transport_plane(metric, arc_reversed, forward.frame, cfg.steps)
    roundtrip = float(np.max(np.abs(backward.frame.vectors - start.vectors)))
    status = "verified" if (not forward.drift_warning and roundtrip <= 1e-6) else "failed"
    record = {
        "command": "transport", "metric": metric_id, "dim": n, "steps": cfg.steps,
        "orthonormal_residual": forward.orthonormal_residual,
        "lagrangian_residual": forward.lagrangian_residual,
        "roundtrip_error": roundtrip, "status": status,
    }
    ts = _timestamp(cfg)
    if ts:
        record["timestamp"] = ts
    _emit(cfg, _jsonl([record]))
    return EXIT_VERIFIED if status == "verified" else EXIT_VALIDATION


_COMMANDS = {
    "catalog": _cmd_catalog,
    "check": _cmd_check,
    "index": _cmd_index,
    "theorem": _cmd_theorem,
    "periods": _cmd_periods,
    "sweep": _cmd_sweep,
    "transport": _cmd_transport,
}


def run_command(argv=None) -> int:
    """Parse arguments, dispatch, and map failures to exit codes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve_config(args)
        return _COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "reason": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(json.dumps({"error": "non-convergence", "reason": str(exc)}),
              file=sys.stderr)
        return EXIT_NONCONVERGENT
    except (FrameValidationError, ImmersionRankError, MetricError, ValueError) as exc:
        print(json.dumps({"error": "validation", "reason": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION
    except MaslovError as exc:
        print(json.dumps({"error": "validation", "reason": str(exc)}), file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
