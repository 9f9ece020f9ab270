"""Command-line front end.

Subcommands ``trajectory``, ``observables``, ``wavefunction``, ``minimize``
and ``verify`` write CSV (one ``#`` header line echoing the configuration)
or JSON lines.  Settings come from built-in defaults, then an optional
``--config`` file of ``key = value`` lines, then command-line flags.

Exit codes: 0 success, 1 a verification check failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .core import OscParams, ParameterError, Regime, make_params
from .dynamics import mechanical_energy, phase_states
from .observables import (
    NoSolutionError,
    expectations_cs,
    expectations_tcs,
    g_function,
    minimization_times,
    solve_mu_for_time,
    uncertainty_products,
)
from .states import Grid, StateSpec, build_state, default_grid, evaluate, moments
from .verify import default_report

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

COMMANDS = ("trajectory", "observables", "wavefunction", "minimize", "verify")


class UsageError(Exception):
    pass


def fmt(value) -> str:
    """17 significant digits, enough to re-parse to the same double."""
    if value is None:
        return ""
    return "%.17g" % value


@dataclass(frozen=True)
class RunConfig:
    m: float = 1.0
    gamma: float = 0.0
    omega0: float = 1.0
    hbar: float = 1.0
    b_re: float = 0.0
    b_im: float = 1.0
    x0: float = 1.0
    p0: float = 0.5
    t0: float = 0.0
    t1: float = 10.0
    nt: int = 101
    grid_halfwidth: Optional[float] = None
    grid_n: int = 4096
    state: str = "fock:0"
    format: str = "csv"
    out: Optional[str] = None
    solve_mu: Optional[float] = None
    tol: tuple = ()
    corrupt_branch: bool = False
    no_battery: bool = False

    def __post_init__(self):
        if not self.t1 >= self.t0:
            raise UsageError(f"t1 must be >= t0, got t0={self.t0!r}, t1={self.t1!r}")
        if self.nt < 1:
            raise UsageError(f"nt must be >= 1, got {self.nt!r}")
        if self.grid_n < 5:
            raise UsageError(f"grid-n must be >= 5, got {self.grid_n!r}")
        if self.grid_halfwidth is not None and not self.grid_halfwidth > 0:
            raise UsageError(f"grid-halfwidth must be positive, got {self.grid_halfwidth!r}")
        if self.format not in ("csv", "json-lines"):
            raise UsageError(f"format must be csv or json-lines, got {self.format!r}")
        try:
            StateSpec.parse(self.state)
        except ValueError as exc:
            raise UsageError(str(exc))
        for item in self.tol:
            _split_tol(item)

    @property
    def params(self) -> OscParams:
        try:
            return make_params(self.m, self.gamma, self.omega0, self.hbar,
                               complex(self.b_re, self.b_im), self.x0, self.p0)
        except ParameterError as exc:
            raise UsageError(str(exc))

    @property
    def state_spec(self) -> StateSpec:
        return StateSpec.parse(self.state)

    @property
    def times(self) -> np.ndarray:
        if self.nt == 1:
            return np.array([self.t0])
        return np.linspace(self.t0, self.t1, self.nt)

    @property
    def tolerances(self) -> dict:
        return dict(_split_tol(item) for item in self.tol)

    def to_text(self) -> str:
        """``key = value`` lines that :func:`parse_config_text` reads back."""
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None or (f.name == "tol" and not value):
                continue
            if f.name == "tol":
                value = ";".join(value)
            elif isinstance(value, float):
                value = fmt(value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def header(self, command: str) -> str:
        items = [f"{f.name}={_echo(getattr(self, f.name))}" for f in dataclasses.fields(self)
                 if f.name not in ("format", "out")]
        return f"# cktcs {__version__} {command} " + " ".join(items)


def _echo(value):
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, tuple):
        return ";".join(value)
    return str(value)


def _split_tol(item: str):
    name, sep, value = item.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"--tol expects NAME=VALUE, got {item!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise UsageError(f"--tol value must be a number, got {value!r}")


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    if key == "tol":
        return tuple(s.strip() for s in raw.split(";") if s.strip())
    if kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{key} expects a boolean, got {raw!r}")
    if raw.lower() == "none" and kind.startswith("Optional"):
        return None
    try:
        if kind == "int":
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError:
        raise UsageError(f"{key} expects a number, got {raw!r}")
    return raw


def parse_config_text(text: str) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment, dashes in keys
    are accepted."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise UsageError(f"config line {lineno}: expected key = value")
        if key not in _FIELD_TYPES:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}")
    for key in _FIELD_TYPES:
        flag = getattr(args, key, None)
        if flag is None or flag is False or (key == "tol" and not flag):
            continue
        values[key] = tuple(flag) if key == "tol" else flag
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# output


def _write_rows(cfg: RunConfig, command: str, columns, rows, stream):
    if cfg.format == "csv":
        stream.write(cfg.header(command) + "\n")
        stream.write(",".join(columns) + "\n")
        for row in rows:
            stream.write(",".join(_csv_text(v) if isinstance(v, str) else fmt(v) for v in row) + "\n")
    else:
        for row in rows:
            stream.write(json.dumps(dict(zip(columns, row))) + "\n")


def cmd_trajectory(cfg: RunConfig, stream) -> int:
    params = cfg.params
    times = cfg.times
    rows = []
    for t, ps in zip(times, phase_states(params, times)):
        E = float(mechanical_energy(params, ps.x, ps.p, ps.t))
        rows.append((ps.t, ps.x, ps.p, ps.w.real, ps.w.imag, ps.z.real, ps.z.imag, ps.sigma, E))
    cols = ("t", "x", "p", "w_re", "w_im", "z_re", "z_im", "sigma", "E")
    _write_rows(cfg, "trajectory", cols, rows, stream)
    return EXIT_OK


def cmd_observables(cfg: RunConfig, stream) -> int:
    params = cfg.params
    spec = cfg.state_spec
    rows = []
    for t in cfg.times:
        t = float(t)
        if spec.kind == "fock":
            obs = expectations_tcs(params, spec.n, t)
            n = spec.n
        else:
            obs = expectations_cs(params, spec.alpha, t)
            n = 0
        g = uncertainty_products(params, n, t).g_value
        rows.append((t, obs.mean_x, obs.mean_p, obs.var_x, obs.var_p, obs.product,
                     g, obs.mean_E))
    cols = ("t", "mean_x", "mean_p", "var_x", "var_p", "product", "g", "mean_E")
    _write_rows(cfg, "observables", cols, rows, stream)
    return EXIT_OK


def cmd_wavefunction(cfg: RunConfig, stream) -> int:
    params = cfg.params
    t = cfg.t0
    state = build_state(params, cfg.state_spec, t)
    if cfg.grid_halfwidth is None:
        grid = default_grid(state, n_points=cfg.grid_n)
    else:
        grid = Grid(moments(state)[0], cfg.grid_halfwidth, cfg.grid_n)
    x = grid.points
    psi = evaluate(state, x)
    rows = [(xi, v.real, v.imag, abs(v) ** 2) for xi, v in zip(x, psi)]
    _write_rows(cfg, "wavefunction", ("x", "re", "im", "abs2"), rows, stream)
    return EXIT_OK


def cmd_minimize(cfg: RunConfig, stream) -> int:
    params = cfg.params
    if params.b.real != 0:
        raise UsageError("minimize needs Re b = 0")
    if params.regime is Regime.CRITICAL:
        raise UsageError("minimization instants are undefined at critical damping")
    theta, mu, omega, regime = params.theta, params.mu, params.omega, params.regime
    res = minimization_times(theta, mu, omega, regime)
    first = {math.pi * k / omega for k in range(3)}
    rows = []
    for t in res.times:
        if regime is Regime.UNDERDAMPED:
            event = "t1" if t in first else "t2"
        else:
            event = "t01" if t == 0 else "t02"
        rows.append((event, t, float(g_function(theta, mu, omega, t, regime)), None))
    if res.status != "ok":
        rows.append(("status", None, None, res.status))
    if cfg.solve_mu is not None:
        try:
            rows.append(("solve_mu", cfg.solve_mu, solve_mu_for_time(theta, omega, cfg.solve_mu, regime), None))
        except NoSolutionError as exc:
            rows.append(("solve_mu", cfg.solve_mu, None, str(exc)))
    _write_rows(cfg, "minimize", ("event", "t", "value", "note"), rows, stream)
    return EXIT_OK


def _csv_text(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def cmd_verify(cfg: RunConfig, stream) -> int:
    params_list = [cfg.params] if cfg.no_battery else None
    summary = default_report(params_list, corrupt_branch=cfg.corrupt_branch)
    if cfg.tol:
        summary = summary.with_tolerances(cfg.tolerances)
    if cfg.format == "csv":
        stream.write(cfg.header("verify") + "\n")
        stream.write(summary.to_text())
    else:
        stream.write(summary.to_json_lines())
    return EXIT_OK if summary.passed else EXIT_CHECK_FAILED


_HANDLERS = dict(trajectory=cmd_trajectory, observables=cmd_observables,
                 wavefunction=cmd_wavefunction, minimize=cmd_minimize, verify=cmd_verify)


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("physical parameters")
    for name, help_ in [("m", "mass"), ("gamma", "damping rate"), ("omega0", "undamped frequency"),
                        ("hbar", "action quantum"), ("b-im", "Im b, positive"), ("b-re", "Re b"),
                        ("x0", "initial position"), ("p0", "initial momentum")]:
        g.add_argument(f"--{name}", type=float, help=help_)
    g = p.add_argument_group("sampling")
    g.add_argument("--t0", type=float, help="first time (the evaluation time for wavefunction)")
    g.add_argument("--t1", type=float, help="last time")
    g.add_argument("--nt", type=int, help="number of times")
    g.add_argument("--grid-halfwidth", type=float, help="half-width of the x grid")
    g.add_argument("--grid-n", type=int, help="number of grid points")
    g.add_argument("--state", help="fock:N or coherent:RE,IM")
    g = p.add_argument_group("output")
    g.add_argument("--format", choices=("csv", "json-lines"))
    g.add_argument("--out", help="output file (stdout by default)")
    p.add_argument("--config", help="file of key = value lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cktcs", description="Trajectory-coherent states of the "
                                     "Caldirola-Kanai oscillator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = dict(trajectory="classical and variational solution",
                 observables="averages, variances and uncertainty products",
                 wavefunction="wavefunction on a grid at time t0",
                 minimize="instants where the uncertainty product is minimal",
                 verify="run the numerical verification report")
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        _add_common(p)
        if name == "minimize":
            p.add_argument("--solve-mu", type=float, metavar="T",
                           help="find mu that makes the product minimal at T")
        if name == "verify":
            p.add_argument("--tol", action="append", metavar="NAME=VAL",
                           help="override tolerance of checks matching glob NAME")
            p.add_argument("--corrupt-branch", action="store_true",
                           help="build states on the wrong square-root branch (test hook)")
            p.add_argument("--no-battery", action="store_true",
                           help="check only the given parameters")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = build_config(args)
        handler = _HANDLERS[args.command]
        if cfg.out is None:
            return handler(cfg, sys.stdout)
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            return handler(cfg, fh)
    except UsageError as exc:
        print(f"cktcs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        print(f"cktcs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
