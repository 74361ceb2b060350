"""Command-line interface: ``cliffmech verify | derive | simulate | table``.

Settings come from command-line flags, then from a JSON config file
(``--config`` or the ``CLIFFMECH_CONFIG`` environment variable), then from
built-in defaults, in that order of precedence.

Exit codes:
    0  success
    2  usage error (bad flag, missing or invalid setting)
    3  Hamiltonian parse error
    4  integration failure (non-convergence, divergence, degenerate form)
    5  a hard verification check failed
    6  I/O error reading config or writing output
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    FINITE_DIFFERENCE,
    SYMBOLIC,
    HamiltonianSystem,
    IntegratorConfig,
    energy_drift,
    integrate,
    symplecticity_residual,
)
from .errors import CliffmechError, IntegrationError, InvalidArgumentError, ParseError, SingularSystemError
from .forms import symplectic_form_of_structure
from .report import (
    dumps_json,
    diagnostics,
    render_derivation,
    render_table_markdown,
    render_verification_markdown,
    table_report,
    trajectory_csv,
    verification_report,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_INTEGRATION = 4
EXIT_VERIFICATION = 5
EXIT_IO = 6

CONFIG_ENV = "CLIFFMECH_CONFIG"
COMMANDS = ("verify", "derive", "simulate", "table")
FORMATS = ("csv", "json", "markdown", "latex")
_DEFAULT_FORMAT = {"verify": "json", "derive": "markdown", "simulate": "csv", "table": "markdown"}
_ALLOWED_FORMATS = {
    "verify": ("json", "markdown"),
    "derive": ("markdown", "latex"),
    "simulate": ("csv",),
    "table": ("markdown", "json"),
}


class UsageError(CliffmechError):
    pass


@dataclass
class RunConfig:
    command: str
    n: int = 1
    structure: int | None = None
    ham: str | None = None
    x0: list[float] | None = None
    dt: float = 1e-2
    steps: int = 100
    method: str = "midpoint"
    gradient: str = SYMBOLIC
    tol: float = 1e-12
    max_iter: int = 50
    format: str | None = None
    output: str | None = None
    diagnostics: str | None = None
    timestamp: bool = False
    extra: dict = field(default_factory=dict)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.method, self.dt, self.steps, self.tol, self.max_iter)


def _parse_x0(value) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.replace(" ", "").split(",") if p]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise UsageError(f"--x0 must be comma-separated numbers, got {value!r}") from None
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    raise UsageError(f"x0 must be a list or comma-separated string, got {value!r}")


def _as_int(name: str, value) -> int:
    if isinstance(value, bool):
        raise UsageError(f"{name} must be an integer, got {value!r}")
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be an integer, got {value!r}") from None
    if not as_float.is_integer():
        raise UsageError(f"{name} must be an integer, got {value!r}")
    return int(as_float)


def _as_float(name: str, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be a number, got {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", help="block size; the phase space is R^(8n)")
    common.add_argument("--structure", help="structure index k in 1..6")
    common.add_argument("--ham", help="Hamiltonian expression in x0..x{8n-1}")
    common.add_argument("--x0", help="initial point, comma-separated")
    common.add_argument("--dt", help="time step")
    common.add_argument("--steps", help="number of steps")
    common.add_argument("--method", help="rk4 or midpoint (implicit midpoint)")
    common.add_argument("--gradient", help="symbolic (default) or fd (finite differences)")
    common.add_argument("--format", help="output format: csv, json, markdown or latex")
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--diagnostics", help="simulate: diagnostics JSON path")
    common.add_argument("--config", help=f"JSON config file (fallback: ${CONFIG_ENV})")
    common.add_argument(
        "--timestamp", action="store_true", default=None,
        help="add a generation timestamp to JSON metadata",
    )

    parser = argparse.ArgumentParser(
        prog="cliffmech",
        description="Hamilton dynamics for the six Clifford structures on R^8n.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{verify,derive,simulate,table}")
    sub.add_parser("verify", parents=[common], help="check every structure identity")
    sub.add_parser("derive", parents=[common], help="derive and print Hamilton's equations for J_k*")
    sub.add_parser("simulate", parents=[common], help="integrate a Hamiltonian flow to CSV")
    sub.add_parser("table", parents=[common], help="anticommutator / product table")
    return parser


def _load_config_file(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return doc


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over config-file values over defaults and validate the result."""
    file_cfg = _load_config_file(args.config)
    known = {f.name for f in fields(RunConfig)} - {"command", "extra"}
    unknown = sorted(set(file_cfg) - known - {"command"})
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    merged = {k: v for k, v in file_cfg.items() if k in known}
    for key in known:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value

    cfg = RunConfig(command=args.command)
    if "n" in merged:
        cfg.n = _as_int("n", merged["n"])
    if cfg.n < 1:
        raise UsageError(f"n must be a positive integer, got {cfg.n}")
    if "structure" in merged:
        cfg.structure = _as_int("structure", merged["structure"])
        if not 1 <= cfg.structure <= 6:
            raise UsageError(f"structure must be in 1..6, got {cfg.structure}")
    if "ham" in merged:
        cfg.ham = str(merged["ham"])
    if "x0" in merged:
        cfg.x0 = _parse_x0(merged["x0"])
    if "dt" in merged:
        cfg.dt = _as_float("dt", merged["dt"])
    if "steps" in merged:
        cfg.steps = _as_int("steps", merged["steps"])
    if "tol" in merged:
        cfg.tol = _as_float("tol", merged["tol"])
    if "max_iter" in merged:
        cfg.max_iter = _as_int("max_iter", merged["max_iter"])
    if "method" in merged:
        cfg.method = str(merged["method"])
    if "gradient" in merged:
        g = str(merged["gradient"])
        cfg.gradient = {"fd": FINITE_DIFFERENCE, "finite-difference": FINITE_DIFFERENCE}.get(g, g)
        if cfg.gradient not in (SYMBOLIC, FINITE_DIFFERENCE):
            raise UsageError(f"gradient must be symbolic or fd, got {g!r}")
    for key in ("output", "diagnostics"):
        if merged.get(key) is not None:
            setattr(cfg, key, str(merged[key]))
    cfg.timestamp = bool(merged.get("timestamp", False))

    fmt = merged.get("format") or _DEFAULT_FORMAT[cfg.command]
    if fmt not in _ALLOWED_FORMATS[cfg.command]:
        raise UsageError(
            f"format {fmt!r} is not available for {cfg.command}; "
            f"choose from {', '.join(_ALLOWED_FORMATS[cfg.command])}"
        )
    cfg.format = fmt

    if cfg.command in ("derive", "simulate") and cfg.structure is None:
        if cfg.command == "derive":
            raise UsageError("derive needs --structure")
        cfg.structure = 1
    if cfg.command == "simulate":
        if cfg.ham is None:
            raise UsageError("simulate needs --ham")
        if cfg.x0 is None:
            raise UsageError("simulate needs --x0")
        if len(cfg.x0) != 8 * cfg.n:
            raise UsageError(f"x0 has {len(cfg.x0)} entries but 8n = {8 * cfg.n}")
        try:
            cfg.integrator()
        except InvalidArgumentError as exc:
            raise UsageError(str(exc)) from None
    return cfg


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text)


def _metadata(cfg: RunConfig) -> dict:
    meta = {"tool": "cliffmech", "version": __version__, "command": cfg.command}
    if cfg.timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    return meta


def cmd_verify(cfg: RunConfig) -> int:
    report = verification_report(cfg.n)
    if cfg.format == "json":
        report = {"metadata": _metadata(cfg), **report}
        _emit(dumps_json(report), cfg.output)
    else:
        _emit(render_verification_markdown(report), cfg.output)
    return EXIT_OK if report["all_passed"] else EXIT_VERIFICATION


def cmd_derive(cfg: RunConfig) -> int:
    _emit(render_derivation(cfg.structure, cfg.format), cfg.output)
    return EXIT_OK


def cmd_table(cfg: RunConfig) -> int:
    report = table_report(cfg.n)
    if cfg.format == "json":
        _emit(dumps_json(report), cfg.output)
    else:
        _emit(render_table_markdown(report), cfg.output)
    return EXIT_OK


def _diagnostics_path(cfg: RunConfig) -> str | None:
    if cfg.diagnostics:
        return cfg.diagnostics
    if cfg.output:
        return str(Path(cfg.output).with_suffix(".json"))
    return None


def cmd_simulate(cfg: RunConfig) -> int:
    system = HamiltonianSystem.from_expression(cfg.ham, 8 * cfg.n, cfg.gradient)
    omega = symplectic_form_of_structure(cfg.structure, cfg.n)
    icfg = cfg.integrator()
    traj = integrate(system, omega, np.array(cfg.x0), icfg)
    residual = symplecticity_residual(system, omega, np.array(cfg.x0), icfg.dt, icfg.method)
    diag = diagnostics(traj, energy_drift(traj), residual, icfg.steps)
    diag = {**diag, "metadata": {**_metadata(cfg), "structure": cfg.structure, "n": cfg.n, "hamiltonian": cfg.ham}}
    _emit(trajectory_csv(traj), cfg.output)
    diag_text = dumps_json(diag)
    path = _diagnostics_path(cfg)
    if path is None:
        sys.stderr.write(diag_text)
    else:
        Path(path).write_text(diag_text)
    return EXIT_OK


_HANDLERS = {"verify": cmd_verify, "derive": cmd_derive, "simulate": cmd_simulate, "table": cmd_table}


def _report_parse_error(exc: ParseError, source: str | None) -> None:
    print(f"cliffmech: parse error at offset {exc.offset}: {exc.message}", file=sys.stderr)
    if source is not None:
        print(f"  {source}", file=sys.stderr)
        print("  " + " " * exc.offset + "^", file=sys.stderr)
    if exc.expected:
        print(f"  expected one of: {', '.join(sorted(exc.expected))}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = None
    try:
        cfg = resolve_config(args)
        return _HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cliffmech {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        _report_parse_error(exc, cfg.ham if cfg else None)
        return EXIT_PARSE
    except (IntegrationError, SingularSystemError) as exc:
        print(f"cliffmech: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except CliffmechError as exc:
        # evaluation errors surface while integrating
        print(f"cliffmech: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OSError as exc:
        print(f"cliffmech: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
