"""YAML run configuration.

Example (sinusoidal arrivals, lognormal service)::

    horizon: 20
    r0: 0
    intensity: {kind: sinusoidal, base: 2/3, amplitude: 1, period: 10}
    service: {kind: lognormal, location: -0.5, scale: 1}
    solver: {h: 0.005}
    experiment: {n: [20, 200], reps: 50, base_seed: 1}
    output: {directory: out/sinusoid}

Numbers may be written as fractions in quotes-free form (``2/3``).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import yaml

from . import intensity as _int
from . import lifetimes as _life
from .errors import ConfigError, LossFluidError
from .fluid import default_step, default_tol_pin
from .model import ModelConfig

OUTPUT_ENV = "LOSSFLUID_OUTPUT_DIR"
DEFAULT_OUTPUT = "lossfluid-out"

_TOP_KEYS = {"horizon", "r0", "intensity", "service", "initial_service", "solver", "experiment", "output"}
_SOLVER_KEYS = {"h", "tol_pin", "mollifier"}
_EXPERIMENT_KEYS = {"n", "reps", "base_seed", "workers", "residual_reps", "residual_points"}
_OUTPUT_KEYS = {"directory"}

_INTENSITY = {
    "constant": ({"rate"}, lambda p: _int.ConstantIntensity(p["rate"])),
    "sinusoidal": (
        {"base", "amplitude", "period"},
        lambda p: _int.SinusoidalIntensity(p["base"], p["amplitude"], p["period"]),
    ),
    "piecewise-constant": (
        {"starts", "rates"},
        lambda p: _int.PiecewiseConstantIntensity(tuple(p["starts"]), tuple(p["rates"])),
    ),
    "table": (
        {"times", "rates"},
        lambda p: _int.TableIntensity(tuple(p["times"]), tuple(p["rates"])),
    ),
}

_SERVICE = {
    "exponential": ({"rate"}, lambda p: _life.Exponential(p["rate"])),
    "deterministic": ({"value"}, lambda p: _life.Deterministic(p["value"])),
    "lognormal": ({"location", "scale"}, lambda p: _life.LogNormal(p["location"], p["scale"])),
    "weibull": ({"shape", "scale"}, lambda p: _life.Weibull(p["shape"], p["scale"])),
}


@dataclass
class RunConfig:
    model: ModelConfig
    h: float
    tol_pin: float
    mollifier: Optional[float] = None
    n_list: list = field(default_factory=lambda: [20, 200])
    reps: int = 50
    base_seed: int = 0
    workers: int = 1
    residual_reps: int = 200
    residual_points: int = 40
    output_dir: Path = Path(DEFAULT_OUTPUT)
    source: Optional[Path] = None


class _Reader:
    """Typed access to the parsed mapping; errors carry the dotted key and file line."""

    def __init__(self, source, lines):
        self.source = source
        self.lines = lines

    def fail(self, key, message):
        line = self.lines.get(key)
        where = f"{self.source}:{line}" if line else str(self.source)
        raise ConfigError(f"{where}: {message}", field=key) from None

    def mapping(self, value, key, allowed):
        if not isinstance(value, dict):
            self.fail(key, f"{key}: expected a mapping")
        unknown = sorted(set(value) - allowed)
        if unknown:
            name = f"{key}.{unknown[0]}" if key else unknown[0]
            self.fail(name, f"{name}: unknown key")
        return value

    def number(self, value, key):
        if isinstance(value, bool):
            self.fail(key, f"{key}: expected a number, got {value!r}")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            try:
                return float(Fraction(value.strip()))
            except (ValueError, ZeroDivisionError):
                pass
        self.fail(key, f"{key}: expected a number, got {value!r}")

    def integer(self, value, key, minimum=None):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(key, f"{key}: expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(key, f"{key}: must be >= {minimum}, got {value}")
        return value

    def numbers(self, value, key):
        if not isinstance(value, list) or not value:
            self.fail(key, f"{key}: expected a nonempty list of numbers")
        return [self.number(v, f"{key}[{i}]") for i, v in enumerate(value)]


def _line_map(node, prefix="", out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            name = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[name] = k.start_mark.line + 1
            _line_map(v, name, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            name = f"{prefix}[{i}]"
            out[name] = v.start_mark.line + 1
            _line_map(v, name, out)
    return out


def _build(reader, table, raw, key, base_dir, allow_empirical=False):
    if not isinstance(raw, dict):
        reader.fail(key, f"{key}: expected a mapping")
    kind = raw.get("kind")
    if allow_empirical and kind == "empirical":
        reader.mapping(raw, key, {"kind", "file", "values"})
        try:
            if "file" in raw:
                return _life.Empirical.from_file(base_dir / str(raw["file"]))
            if "values" in raw:
                return _life.Empirical(tuple(reader.numbers(raw["values"], f"{key}.values")))
        except (OSError, LossFluidError, ValueError) as exc:
            reader.fail(key, f"{key}: {exc}")
        reader.fail(key, f"{key}: empirical law needs 'file' or 'values'")
    if kind not in table:
        choices = sorted(table) + (["empirical"] if allow_empirical else [])
        reader.fail(f"{key}.kind", f"{key}.kind: expected one of {choices}, got {kind!r}")
    needed, make = table[kind]
    reader.mapping(raw, key, {"kind"} | needed)
    params = {}
    for name in sorted(needed):
        if name not in raw:
            reader.fail(key, f"{key}.{name}: missing")
        value, dotted = raw[name], f"{key}.{name}"
        params[name] = reader.numbers(value, dotted) if isinstance(value, list) else reader.number(value, dotted)
    try:
        return make(params)
    except LossFluidError as exc:
        reader.fail(key, f"{key}: {exc}")


def parse_config(path) -> RunConfig:
    """Read and validate a YAML run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    reader = _Reader(path, _line_map(node) if node is not None else {})
    data = reader.mapping(data if data is not None else {}, "", _TOP_KEYS)
    base_dir = path.parent

    for key in ("horizon", "intensity", "service"):
        if key not in data:
            reader.fail(key, f"{key}: missing")
    T = reader.number(data["horizon"], "horizon")
    if not T > 0:
        reader.fail("horizon", f"horizon: must be > 0, got {T}")
    r0 = reader.number(data.get("r0", 0), "r0")
    if not 0 <= r0 <= 1:
        reader.fail("r0", f"r0: must lie in [0, 1], got {r0}")

    lam = _build(reader, _INTENSITY, data["intensity"], "intensity", base_dir)
    service = _build(reader, _SERVICE, data["service"], "service", base_dir, allow_empirical=True)
    initial = None
    if data.get("initial_service") is not None:
        initial = _build(reader, _SERVICE, data["initial_service"], "initial_service", base_dir, allow_empirical=True)
    try:
        model = ModelConfig(lam, service, T, r0=r0, initial_service=initial)
    except LossFluidError as exc:
        reader.fail("intensity", str(exc))

    solver = reader.mapping(data.get("solver") or {}, "solver", _SOLVER_KEYS)
    h = reader.number(solver["h"], "solver.h") if "h" in solver else default_step(T)
    if not 0 < h <= T / 10:
        reader.fail("solver.h", f"solver.h: must lie in (0, T/10], got {h}")
    tol = reader.number(solver["tol_pin"], "solver.tol_pin") if "tol_pin" in solver else default_tol_pin(h)
    if not 0 < tol <= 0.1:
        reader.fail("solver.tol_pin", f"solver.tol_pin: must lie in (0, 0.1], got {tol}")
    moll = None
    if solver.get("mollifier") is not None:
        moll = reader.number(solver["mollifier"], "solver.mollifier")
        if not 0 < moll < 1:
            reader.fail("solver.mollifier", f"solver.mollifier: must lie in (0, 1), got {moll}")

    exp = reader.mapping(data.get("experiment") or {}, "experiment", _EXPERIMENT_KEYS)
    raw_n = exp.get("n", [20, 200])
    raw_n = raw_n if isinstance(raw_n, list) else [raw_n]
    n_list = [reader.integer(v, f"experiment.n[{i}]", minimum=1) for i, v in enumerate(raw_n)]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        reader.fail("experiment.n", "experiment.n: capacities must be strictly increasing")

    out = reader.mapping(data.get("output") or {}, "output", _OUTPUT_KEYS)
    if "directory" in out:
        output_dir = Path(str(out["directory"]))
    else:
        output_dir = Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))

    return RunConfig(
        model=model,
        h=h,
        tol_pin=tol,
        mollifier=moll,
        n_list=n_list,
        reps=reader.integer(exp.get("reps", 50), "experiment.reps", minimum=1),
        base_seed=reader.integer(exp.get("base_seed", 0), "experiment.base_seed", minimum=0),
        workers=reader.integer(exp.get("workers", 1), "experiment.workers", minimum=1),
        residual_reps=reader.integer(exp.get("residual_reps", 200), "experiment.residual_reps", minimum=1),
        residual_points=reader.integer(exp.get("residual_points", 40), "experiment.residual_points", minimum=1),
        output_dir=output_dir,
        source=path,
    )
