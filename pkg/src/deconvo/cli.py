"""Command-line front end.

Usage: deconvo <command> <config-path> [--seed N] [--reps N] [--out PATH]

Commands: estimate, simulate, mc-table, mise-scan, normality, misspec,
field-export. The config file is a flat key-value format, one `key = value`
per line, with dotted section prefixes; `#` starts a comment. Example:

    signal = theta1
    kernel = laplace:3
    design.kind = fixed
    design.n = 30
    design.a_n = 0.25
    noise.sigma2 = 0.25
    estimator.h = 0.36
    estimator.partition = 1|2
    points = 0,0; 1,1.8
    reps = 200
    seed = 1

Every run writes its artifact plus a `<artifact>.manifest.json` recording the
full config, effective seed, package versions, and runtime. Exit codes:
0 success, 2 configuration error, 3 numerical error, 4 I/O error.
DECONVO_THREADS caps the Monte Carlo worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy

from .errors import ConfigError, DeconvoError, NumericalError, OutputError
from .estimators import estimate_field, save_field
from .harness import (
    Scenario,
    default_mise_grid,
    mise_scan,
    misspecification_run,
    normality_diagnostics,
    run_monte_carlo,
    worker_count,
)
from .model import (
    Design,
    EstimatorConfig,
    NoiseSpec,
    Partition,
    density_from_id,
    kernel_from_id,
)
from .synth import load_dataset, sample_fixed_design, sample_random_design, save_dataset

__all__ = ["RunConfig", "parse_config", "serialize_config", "execute", "main"]

COMMANDS = ("estimate", "simulate", "mc-table", "mise-scan", "normality",
            "misspec", "field-export")


# ---------------------------------------------------------------------------
# key registry: parse/render pairs keep parse_config . serialize identity


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_int(lo=None):
    def run(s: str) -> int:
        try:
            v = int(s)
        except ValueError:
            raise ValueError(f"expected an integer, got {s!r}") from None
        if lo is not None and v < lo:
            raise ValueError(f"must be at least {lo}, got {v}")
        return v
    return run


def _parse_float(lo=None, strict=False):
    def run(s: str) -> float:
        try:
            v = float(s)
        except ValueError:
            raise ValueError(f"expected a number, got {s!r}") from None
        if lo is not None and (v < lo or (strict and v <= lo)):
            bound = "greater than" if strict else "at least"
            raise ValueError(f"must be {bound} {lo}, got {v}")
        return v
    return run


def _parse_choice(*options):
    def run(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {s!r}")
        return s
    return run


def _parse_floats(s: str) -> tuple:
    try:
        return tuple(float(t) for t in s.replace(";", ",").split(",") if t.strip())
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {s!r}") from None


def _parse_points(s: str):
    s = s.strip()
    if s.startswith("grid:"):
        parts = s.split(":")
        if len(parts) != 4:
            raise ValueError("grid spec is grid:lo:hi:count")
        try:
            return ("grid", float(parts[1]), float(parts[2]), int(parts[3]))
        except ValueError:
            raise ValueError("grid spec is grid:lo:hi:count") from None
    pts = []
    for chunk in s.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            pts.append(tuple(float(t) for t in chunk.split(",")))
        except ValueError:
            raise ValueError(f"bad point {chunk!r}") from None
    if not pts or len({len(p) for p in pts}) != 1:
        raise ValueError("points must be same-length comma tuples split by ;")
    return ("list", tuple(pts))


def _render_points(v) -> str:
    if v[0] == "grid":
        return f"grid:{v[1]!r}:{v[2]!r}:{v[3]}"
    return "; ".join(",".join(repr(c) for c in p) for p in v[1])


def _parse_beta(s: str):
    rows = [r.strip() for r in s.split(";") if r.strip()]
    parsed = tuple(tuple(float(t) for t in r.split(",") if t.strip())
                   for r in rows)
    if len(parsed) == 1:
        return ("seq", parsed[0])
    if len({len(r) for r in parsed}) != 1:
        raise ValueError("lattice rows must have equal length")
    return ("lattice", parsed)


def _render_beta(v) -> str:
    if v[0] == "seq":
        return ",".join(repr(c) for c in v[1])
    return "; ".join(",".join(repr(c) for c in row) for row in v[1])


def _ident(s: str) -> str:
    return s


@dataclass(frozen=True)
class _Key:
    parse: object
    render: object = str


_KEYS = {
    "command": _Key(_parse_choice(*COMMANDS)),
    "signal": _Key(_ident),
    "kernel": _Key(_ident),
    "assumed_kernel": _Key(_ident),
    "data": _Key(_ident),
    "design.kind": _Key(_parse_choice("fixed", "grid", "random")),
    "design.n": _Key(_parse_int(lo=1), repr),
    "design.a_n": _Key(_parse_float(lo=0.0, strict=True), repr),
    "design.d": _Key(_parse_int(lo=1), repr),
    "design.density": _Key(_ident),
    "noise.kind": _Key(_parse_choice("iid", "ma-seq", "ma-lattice")),
    "noise.sigma2": _Key(_parse_float(lo=0.0), repr),
    "noise.beta": _Key(_parse_beta, _render_beta),
    "estimator.kind": _Key(_parse_choice("fd", "fd-additive", "rd", "rd-additive")),
    "estimator.h": _Key(_parse_float(lo=0.0, strict=True), repr),
    "estimator.partition": _Key(_ident),
    "estimator.quad_order": _Key(_parse_int(lo=2), repr),
    "estimator.imag_tolerance": _Key(_parse_float(lo=0.0, strict=True), repr),
    "estimator.fast_path": _Key(_parse_bool, lambda b: "true" if b else "false"),
    "points": _Key(_parse_points, _render_points),
    "h_grid": _Key(_parse_floats, lambda v: ",".join(repr(c) for c in v)),
    "reps": _Key(_parse_int(lo=1), repr),
    "seed": _Key(_parse_int(), repr),
    "out": _Key(_ident),
    "format": _Key(_parse_choice("csv", "json")),
}

_DEFAULTS = {
    "design.kind": "fixed",
    "design.d": 2,
    "noise.kind": "iid",
    "noise.sigma2": 1.0,
    "estimator.quad_order": 64,
    "estimator.imag_tolerance": 1e-8,
    "estimator.fast_path": True,
    "reps": 200,
    "seed": 0,
    "format": "csv",
}

_REQUIRED = {
    "estimate": ("signal", "kernel", "design.n", "design.a_n", "estimator.h"),
    "field-export": ("signal", "kernel", "design.n", "design.a_n",
                     "estimator.h", "points"),
    "simulate": ("signal", "kernel", "design.n", "design.a_n"),
    "mc-table": ("signal", "kernel", "design.n", "design.a_n", "estimator.h",
                 "points"),
    "mise-scan": ("signal", "kernel", "design.n", "design.a_n", "h_grid"),
    "normality": ("signal", "kernel", "design.n", "design.a_n", "estimator.h",
                  "points"),
    "misspec": ("signal", "kernel", "assumed_kernel", "design.n",
                "design.a_n", "estimator.h", "points"),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    @property
    def out(self):
        return self.values.get("out")

    @property
    def format(self):
        return self.values.get("format", "csv")

    def get(self, key, default=None):
        return self.values.get(key, default)


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Parse the key-value config format; errors carry line numbers."""
    values = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key = value, got {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {ln}: unknown key {key}")
        if key in values:
            raise ConfigError(f"line {ln}: duplicate key {key}")
        try:
            values[key] = _KEYS[key].parse(val)
        except ValueError as exc:
            raise ConfigError(f"line {ln}: key {key}: {exc}") from None
    cmd = command or values.get("command")
    if cmd is None:
        raise ConfigError("missing required key command")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    if "command" in values and values["command"] != cmd:
        raise ConfigError(
            f"config file says command {values['command']} but {cmd} was requested")
    values["command"] = cmd
    for key, default in _DEFAULTS.items():
        values.setdefault(key, default)
    _validate(cmd, values)
    return RunConfig(cmd, values)


def _validate(cmd: str, values: dict) -> None:
    for key in _REQUIRED[cmd]:
        if key not in values:
            raise ConfigError(f"missing required key {key}")
    if values.get("design.kind") == "random" and "design.density" not in values:
        if any(k in _REQUIRED[cmd] for k in ("design.n",)):
            raise ConfigError("missing required key design.density")
    if "data" in values and cmd not in ("estimate", "field-export"):
        raise ConfigError(f"key data is not accepted by command {cmd}")


def serialize_config(rc: RunConfig) -> str:
    """Canonical text form; parse_config(serialize_config(rc)) == rc."""
    lines = []
    for key in _KEYS:
        if key in rc.values:
            lines.append(f"{key} = {_KEYS[key].render(rc.values[key])}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# scenario construction


def _design_from(rc: RunConfig) -> Design:
    kind = rc.get("design.kind", "fixed")
    if kind == "grid":
        kind = "fixed"
    d = rc.get("design.d", 2)
    density = None
    if kind == "random":
        if "design.density" not in rc.values:
            raise ConfigError("missing required key design.density")
        density = density_from_id(rc.get("design.density"), d)
    return Design(kind, rc.get("design.n"), rc.get("design.a_n"), d, density)


def _noise_from(rc: RunConfig, d: int) -> NoiseSpec:
    kind = rc.get("noise.kind", "iid")
    beta = rc.get("noise.beta")
    if kind == "iid":
        return NoiseSpec("iid", rc.get("noise.sigma2", 1.0), (), d)
    if beta is None:
        raise ConfigError("missing required key noise.beta")
    if kind == "ma-seq":
        if beta[0] != "seq":
            raise ConfigError("noise.beta for ma-seq is one comma list")
        return NoiseSpec("ma-seq", rc.get("noise.sigma2", 1.0), beta[1], d)
    rows = beta[1] if beta[0] == "lattice" else (beta[1],)
    if d != 2 or len(rows) != len(rows[0]):
        raise ConfigError("noise.beta for ma-lattice must be a square grid "
                          "of rows (d=2)")
    return NoiseSpec("ma-lattice", rc.get("noise.sigma2", 1.0), rows, d)


def _estimator_config_from(rc: RunConfig, design: Design, kernel_id: str,
                           h: float | None = None) -> EstimatorConfig:
    kernel = kernel_from_id(kernel_id, design.d)
    part = None
    if "estimator.partition" in rc.values:
        part = Partition.from_id(rc.get("estimator.partition"), design.d)
    elif rc.get("estimator.kind", "").endswith("additive"):
        part = Partition(design.d, tuple((i,) for i in range(design.d)))
    return EstimatorConfig(
        kernel,
        float(h if h is not None else rc.get("estimator.h")),
        partition=part,
        quad_order=rc.get("estimator.quad_order", 64),
        fast_path=rc.get("estimator.fast_path", True),
        imag_tolerance=rc.get("estimator.imag_tolerance", 1e-8),
        a_n=design.a_n,
    )


def _points_from(rc: RunConfig, d: int, default=None) -> np.ndarray:
    spec = rc.get("points")
    if spec is None:
        if default is not None:
            return default
        return np.zeros((1, d))
    if spec[0] == "grid":
        _, lo, hi, count = spec
        return default_mise_grid(lo, hi, count, d)
    pts = np.asarray(spec[1], dtype=float)
    if pts.shape[1] != d:
        raise ConfigError(f"points must be {d}-dimensional")
    return pts


def _scenario_from(rc: RunConfig, h: float | None = None,
                   points: np.ndarray | None = None) -> Scenario:
    design = _design_from(rc)
    noise = _noise_from(rc, design.d)
    assumed = rc.get("assumed_kernel") or rc.get("kernel")
    config = _estimator_config_from(rc, design, assumed, h)
    pts = points if points is not None else _points_from(rc, design.d)
    return Scenario(
        signal=rc.get("signal"),
        kernel=rc.get("kernel"),
        design=design,
        noise=noise,
        config=config,
        points=pts,
        estimator=rc.get("estimator.kind", ""),
        reps=rc.get("reps", 200),
        seed=rc.get("seed", 0),
        assumed_kernel=rc.get("assumed_kernel", ""),
    )


# ---------------------------------------------------------------------------
# artifact writers


def _write_rows(path: str, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _write_json(path: str, payload: dict) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def _manifest(artifact: str, rc: RunConfig, runtime: float) -> None:
    payload = {
        "command": rc.command,
        "config": serialize_config(rc),
        "seed": rc.get("seed", 0),
        "threads": worker_count(),
        "runtime_seconds": runtime,
        "versions": {
            "deconvo": _version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    _write_json(str(artifact) + ".manifest.json", payload)


def _version() -> str:
    from . import __version__
    return __version__


def _num(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# command handlers


def _dataset_for(rc: RunConfig, scenario: Scenario):
    if "data" in rc.values:
        return load_dataset(rc.get("data"))
    sig = scenario.signal_obj()
    ker = scenario.true_kernel_obj()
    rng = np.random.default_rng(np.random.SeedSequence((scenario.seed, 0)))
    if scenario.design.kind == "fixed":
        return sample_fixed_design(scenario.design, sig, ker, scenario.noise, rng)
    return sample_random_design(scenario.design, sig, ker, scenario.noise, rng)


def _cmd_estimate(rc: RunConfig, with_variance: bool) -> str:
    scenario = _scenario_from(rc)
    ds = _dataset_for(rc, scenario)
    noise = scenario.noise if with_variance else None
    fld = estimate_field(ds, scenario.config, scenario.points,
                         scenario.estimator, noise=noise)
    out = rc.out or ("field.csv" if with_variance else "estimates.csv")
    if rc.format == "json":
        payload = {"points": fld.points.tolist(),
                   "estimates": fld.estimates.tolist(),
                   "config": fld.config}
        if fld.variances is not None:
            payload["predicted_var"] = fld.variances.tolist()
        _write_json(out, payload)
    else:
        save_field(fld, out)
    return out


def _cmd_simulate(rc: RunConfig) -> str:
    scenario = _scenario_from(rc, h=1.0)
    ds = _dataset_for(rc, scenario)
    out = rc.out or "dataset.csv"
    save_dataset(ds, out)
    return out


def _cmd_mc_table(rc: RunConfig) -> str:
    scenario = _scenario_from(rc)
    summary = run_monte_carlo(scenario)
    d = scenario.design.d
    out = rc.out or "mc_table.csv"
    header = [f"x_{i + 1}" for i in range(d)] + ["theta_true", "mean", "var", "mse"]
    rows = []
    for i in range(summary.points.shape[0]):
        rows.append([_num(v) for v in summary.points[i]]
                    + [_num(summary.theta_true[i]), _num(summary.mean[i]),
                       _num(summary.var[i]), _num(summary.mse[i])])
    if rc.format == "json":
        _write_json(out, {"points": summary.points.tolist(),
                          "theta_true": summary.theta_true.tolist(),
                          "mean": summary.mean.tolist(),
                          "var": summary.var.tolist(),
                          "mse": summary.mse.tolist(),
                          "reps": summary.reps})
    else:
        _write_rows(out, header, rows)
    return out


def _cmd_mise_scan(rc: RunConfig) -> str:
    h_grid = np.asarray(rc.get("h_grid"), dtype=float)
    design_d = rc.get("design.d", 2)
    pts = None
    if "points" in rc.values:
        pts = _points_from(rc, design_d)
    scenario = _scenario_from(rc, h=float(h_grid[0]))
    table = mise_scan(scenario, h_grid, grid=pts)
    out = rc.out or "mise.csv"
    if rc.format == "json":
        _write_json(out, {"h": table.h.tolist(), "mise": table.mise.tolist(),
                          "argmin": table.argmin, "reps": table.reps})
    else:
        _write_rows(out, ["h", "mise"],
                    [[_num(h), _num(m)] for h, m in zip(table.h, table.mise)])
    return out


def _cmd_normality(rc: RunConfig) -> str:
    scenario = _scenario_from(rc)
    result = normality_diagnostics(scenario)
    out = rc.out or "normality.json"
    payload = {
        "kappa": [float(v) for v in result["kappa"]],
        "normalizer": float(result["normalizer"]),
        "reps": int(result["reps"]),
        "verdict": result["verdict"],
        "variance_flag": result["variance_flag"],
        "samples": [float(v) for v in result["samples"]],
    }
    _write_json(out, payload)
    return out


def _cmd_misspec(rc: RunConfig) -> str:
    scenario = _scenario_from(rc)
    reference, fitted = misspecification_run(scenario)
    d = scenario.design.d
    out = rc.out or "misspec.csv"
    if rc.format == "json":
        _write_json(out, {"points": reference.points.tolist(),
                          "reference": reference.estimates.tolist(),
                          "fitted": fitted.estimates.tolist(),
                          "reference_config": reference.config,
                          "fitted_config": fitted.config})
    else:
        header = [f"x_{i + 1}" for i in range(d)] + ["reference", "fitted"]
        rows = [[_num(v) for v in reference.points[i]]
                + [_num(reference.estimates[i]), _num(fitted.estimates[i])]
                for i in range(reference.estimates.size)]
        _write_rows(out, header, rows)
    return out


def execute(rc: RunConfig) -> int:
    """Dispatch a parsed run; returns the process exit code."""
    start = time.perf_counter()
    try:
        if rc.command == "estimate":
            artifact = _cmd_estimate(rc, with_variance=False)
        elif rc.command == "field-export":
            artifact = _cmd_estimate(rc, with_variance=True)
        elif rc.command == "simulate":
            artifact = _cmd_simulate(rc)
        elif rc.command == "mc-table":
            artifact = _cmd_mc_table(rc)
        elif rc.command == "mise-scan":
            artifact = _cmd_mise_scan(rc)
        elif rc.command == "normality":
            artifact = _cmd_normality(rc)
        else:
            artifact = _cmd_misspec(rc)
        _manifest(artifact, rc, time.perf_counter() - start)
    except ConfigError as exc:
        print(f"deconvo: config error: {exc}", file=sys.stderr)
        return 2
    except OutputError as exc:
        print(f"deconvo: output error: {exc}", file=sys.stderr)
        return 4
    except (NumericalError, DeconvoError) as exc:
        print(f"deconvo: numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"deconvo: I/O error: {exc}", file=sys.stderr)
        return 4
    print(artifact)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="deconvo",
        description="Fourier deconvolution estimators: simulation and "
                    "estimation runs driven by a config file.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="path to the key-value config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--reps", type=int, default=None,
                        help="override the replicate count")
    parser.add_argument("--out", default=None,
                        help="override the artifact path")
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"deconvo: cannot read config: {exc}", file=sys.stderr)
        return 4
    try:
        rc = parse_config(text, args.command)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.reps is not None:
            if args.reps < 1:
                raise ConfigError("reps must be at least 1")
            overrides["reps"] = args.reps
        if args.out is not None:
            overrides["out"] = args.out
        if overrides:
            rc = RunConfig(rc.command, {**rc.values, **overrides})
    except ConfigError as exc:
        print(f"deconvo: config error: {exc}", file=sys.stderr)
        return 2
    return execute(rc)


if __name__ == "__main__":
    sys.exit(main())
