"""Run configuration (JSON) and CSV serialisation of spectra and traces."""

import csv
import json
import os
import re
import tempfile
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import (MonotonicityError, ParseError, SchemaError,
                     ValidationError)
from .params import ModelParams
from .spectrum import AxisKind, QuadratureConfig, Spectrum
from .trapsim import DecayTrace

RATE_COLUMN = "K_av_cm3_s"
TRACE_COLUMNS = ("t_s", "n_cm3")
FLOAT_FORMAT = "{:.16e}"  # 17 significant digits: lossless for IEEE doubles


# --------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 2:
            raise ValidationError("count", "grid count must be an integer >= 2")
        if not self.start < self.stop:
            raise ValidationError("start", "grid start must be < stop")
        object.__setattr__(self, "count", int(self.count))

    def values(self):
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class FitSpec:
    free: Tuple[str, ...] = ()
    bounds: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    initial: Dict[str, float] = field(default_factory=dict)
    max_iter: int = 200


@dataclass(frozen=True)
class ShiftSpec:
    intensities: Tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    fields: Tuple[float, ...] = ()
    rabi_scaling: str = "sqrt"
    omega_share: float = 1.0
    light_shift_slope: float = 0.0


@dataclass(frozen=True)
class DecaySpec:
    n0: float = 1.0e11
    k_av: Optional[float] = None
    b_field: Optional[float] = None
    t_stop: float = 1.0
    count: int = 50
    noise_rel: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    quadrature: QuadratureConfig = QuadratureConfig()
    field_grid: Optional[GridSpec] = None
    detuning_grid: Optional[GridSpec] = None
    fixed_b: Optional[float] = None
    fit: FitSpec = FitSpec()
    shift: ShiftSpec = ShiftSpec()
    decay: DecaySpec = DecaySpec()
    input: Optional[Path] = None
    output: Optional[Path] = None
    seed: int = 0


_TOP_KEYS = {"model", "quadrature", "grids", "fit", "shift_scan", "decay", "io", "seed"}


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _section(raw, name, text, allowed):
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ParseError(f"section {name!r} must be an object", _line_of(text, name), name)
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ValidationError(f"{name}.{unknown[0]}", "unknown key")
    return sec


def _number(value, name, text, key=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"expected a number, got {value!r}", _line_of(text, key or name), name)
    return value


def _grid(sec, name, text):
    if sec is None:
        return None
    if not isinstance(sec, dict) or set(sec) != {"start", "stop", "count"}:
        raise ParseError("grid needs exactly start, stop, count", _line_of(text, name), name)
    try:
        return GridSpec(*(_number(sec[k], f"grids.{name}.{k}", text, k)
                          for k in ("start", "stop", "count")))
    except ValidationError as exc:
        raise ValidationError(f"grids.{name}.{exc.field}", str(exc).split(": ", 1)[1]) from None


def parse_config(text, base_dir=Path(".")):
    """Build a RunConfig from JSON text; relative paths resolve against ``base_dir``."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from None
    if not isinstance(raw, dict):
        raise ParseError("top level must be an object", 1)
    unknown = sorted(set(raw) - _TOP_KEYS)
    if unknown:
        raise ValidationError(unknown[0], "unknown top-level key")
    if "model" not in raw:
        raise ValidationError("model", "missing section")

    model_sec = _section(raw, "model", text, {f.name for f in fields(ModelParams)})
    for key, value in model_sec.items():
        _number(value, key, text)
    required = [f.name for f in fields(ModelParams) if f.default is MISSING]
    missing = [k for k in required if k not in model_sec]
    if missing:
        raise ValidationError(missing[0], "missing model parameter")
    model = ModelParams.from_dict(model_sec)

    quad_sec = _section(raw, "quadrature", text,
                        {"node_count", "energy_cutoff", "scheme", "tolerance", "max_depth"})
    quadrature = QuadratureConfig(**quad_sec)

    grids = _section(raw, "grids", text, {"field", "detuning", "fixed_b"})
    fixed_b = grids.get("fixed_b")
    if fixed_b is not None:
        fixed_b = float(_number(fixed_b, "grids.fixed_b", text, "fixed_b"))

    fit_sec = _section(raw, "fit", text, {"free", "bounds", "initial", "max_iter"})
    from .analysis import FITTABLE
    free = tuple(fit_sec.get("free", ()))
    for name in free:
        if name not in FITTABLE:
            raise ValidationError("fit.free", f"cannot fit {name!r}")
    bounds = {}
    for name, pair in fit_sec.get("bounds", {}).items():
        if name not in FITTABLE:
            raise ValidationError("fit.bounds", f"unknown parameter {name!r}")
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ParseError("bounds must be [lo, hi]", _line_of(text, name), name)
        lo, hi = (default if v is None else float(_number(v, name, text))
                  for v, default in zip(pair, (float("-inf"), float("inf"))))
        if not lo < hi:
            raise ValidationError(f"fit.bounds.{name}", "empty interval")
        bounds[name] = (lo, hi)
    initial = dict(fit_sec.get("initial", {}))
    if initial:
        model.replace(**initial)  # validates names and invariants
    fit = FitSpec(free, bounds, initial, int(fit_sec.get("max_iter", 200)))

    shift_sec = _section(raw, "shift_scan", text,
                         {"intensities", "fields", "rabi_scaling", "omega_share",
                          "light_shift_slope"})
    shift = ShiftSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in shift_sec.items()})
    if np.any(np.diff(shift.intensities) <= 0) or min(shift.intensities) <= 0:
        raise ValidationError("shift_scan.intensities", "must be positive and increasing")

    decay_sec = _section(raw, "decay", text,
                         {"n0", "k_av", "b_field", "t_stop", "count", "noise_rel"})
    decay = DecaySpec(**decay_sec)
    if not decay.n0 > 0:
        raise ValidationError("decay.n0", "must be > 0")
    if not decay.t_stop > 0 or decay.count < 3:
        raise ValidationError("decay.t_stop", "need t_stop > 0 and count >= 3")
    if decay.noise_rel < 0:
        raise ValidationError("decay.noise_rel", "must be >= 0")

    io_sec = _section(raw, "io", text, {"input", "output"})
    paths = {}
    for key in ("input", "output"):
        if io_sec.get(key) is not None:
            path = Path(io_sec[key])
            paths[key] = path if path.is_absolute() else base_dir / path
    if "input" in paths and not paths["input"].exists():
        raise ValidationError("io.input", f"file {paths['input']} does not exist")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ParseError("seed must be an integer", _line_of(text, "seed"), "seed")

    return RunConfig(
        model=model, quadrature=quadrature,
        field_grid=_grid(grids.get("field"), "field", text),
        detuning_grid=_grid(grids.get("detuning"), "detuning", text),
        fixed_b=fixed_b, fit=fit, shift=shift, decay=decay,
        input=paths.get("input"), output=paths.get("output"), seed=seed,
    )


def load_config(path):
    """Read and validate a JSON run configuration.

    Raises
    ------
    ParseError
        Malformed JSON or wrong value types; carries the line number.
    ValidationError
        Any invariant violation; ``exc.field`` names the offending key.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, path.parent)


# --------------------------------------------------------------------------
# CSV

def _atomic_write(path, header, columns):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp",
                               dir=path.parent if str(path.parent) else ".")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in zip(*columns):
                fh.write(",".join(FLOAT_FORMAT.format(float(v)) for v in row) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, columns):
    """Write numeric columns with a header row, atomically."""
    _atomic_write(path, tuple(header), [np.asarray(c, dtype=float) for c in columns])


def _read_table(path, allowed_headers):
    path = Path(path)
    try:
        with open(path, encoding="ascii", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise SchemaError(f"{path}: not an ASCII CSV file") from None
    if not rows:
        raise SchemaError(f"{path}: empty file, header row required")
    header = tuple(h.strip() for h in rows[0])
    match = next((h for h in allowed_headers if header == h), None)
    if match is None:
        for h in allowed_headers:
            if header[:len(h)] == h and len(header) > len(h):
                raise SchemaError(f"{path}: unexpected column {header[len(h)]!r}")
        expected = " or ".join(",".join(h) for h in allowed_headers)
        raise SchemaError(f"{path}: header {','.join(header)!r} does not match {expected}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(match):
            raise SchemaError(f"{path}: line {lineno} has {len(row)} fields, expected {len(match)}")
        try:
            data.append([float(v) for v in row])
        except ValueError:
            raise SchemaError(f"{path}: line {lineno} is not numeric") from None
    if not data:
        raise SchemaError(f"{path}: no data rows")
    arr = np.array(data, dtype=float)
    if np.any(np.diff(arr[:, 0]) <= 0):
        bad = int(np.argmax(np.diff(arr[:, 0]) <= 0)) + 3
        raise MonotonicityError(f"{path}: {match[0]} not strictly increasing at line {bad}")
    return match, arr


def spectrum_header(kind):
    return (AxisKind(kind).column, RATE_COLUMN)


def write_spectrum_csv(spec, path):
    write_csv(path, spectrum_header(spec.axis_kind), [spec.axis, spec.rates])


def read_spectrum_csv(path):
    headers = tuple(spectrum_header(k) for k in AxisKind)
    header, arr = _read_table(path, headers)
    kind = AxisKind.FIELD if header[0] == AxisKind.FIELD.column else AxisKind.DETUNING
    try:
        return Spectrum(kind, arr[:, 0], arr[:, 1])
    except ValidationError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def write_trace_csv(trace, path):
    write_csv(path, TRACE_COLUMNS, [trace.times, trace.densities])


def read_trace_csv(path):
    _, arr = _read_table(path, (TRACE_COLUMNS,))
    try:
        return DecayTrace(arr[:, 0], arr[:, 1], arr[0, 1])
    except ValidationError as exc:
        raise SchemaError(f"{path}: {exc}") from None
