"""Parameter sweeps and figure reproductions.

A :class:`SweepSpec` names one axis, the values to visit and the methods to
evaluate at each value. Figures are lists of labelled specs whose results are
stacked into one table. Output is CSV with a single ``#``-prefixed JSON
metadata line, or JSON carrying the same metadata.

Configuration is layered: figure defaults, then a flat JSON mapping, then
command-line flags. Power may be given in dBm (``pt_dbm``) and frequency in
GHz (``freq_ghz``); everything is converted to SI units on entry.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime as _dt
import enum
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import __version__
from .analytic import (
    Fading,
    NoiseParams,
    RadarParams,
    max_range_noise_only,
    max_range_nofading,
    max_range_with_noise,
    pd_nofading,
    pd_rayleigh,
    range_at_pd,
)
from .antenna import Cone, PlanarArray, pattern_metadata
from .errors import DomainError, ValidationError
from .montecarlo import (
    DEFAULT_CALIBRATION_SAMPLES,
    DEFAULT_TRIALS,
    calibrate_threshold,
    collect_interference,
    default_radius,
    detection_trials,
    estimate_dm,
    required_samples,
    threshold_bounds,
)
from .rng import Stream

log = logging.getLogger(__name__)


class Axis(str, enum.Enum):
    D = "d"
    LAMBDA = "lambda"
    PHI = "phi"
    PFA = "pfa"
    ALPHA = "alpha"


class Quantity(str, enum.Enum):
    PD = "pd"
    DM = "dm"


class Method(str, enum.Enum):
    ANALYTIC = "analytic"
    ANALYTIC_NOISE = "analytic_noise"
    NOISE_ONLY = "noise_only"
    MC_STRONGEST = "mc_strongest"
    MC_AGGREGATE = "mc_aggregate"

    @property
    def simulated(self) -> bool:
        return self in (Method.MC_STRONGEST, Method.MC_AGGREGATE)


_AXIS_FIELD = {Axis.LAMBDA: "lam", Axis.PHI: "phi", Axis.PFA: "pfa", Axis.ALPHA: "alpha"}


def dbm_to_watts(dbm: float) -> float:
    return 10 ** ((dbm - 30) / 10)


def watts_to_dbm(w: float) -> float:
    return 10 * math.log10(w) + 30


def make_pattern(kind: str, phi: float):
    if kind == "cone":
        return Cone(phi)
    if kind == "array":
        return PlanarArray()
    raise ValidationError(f"unknown pattern {kind!r}; expected 'cone' or 'array'", keys=["pattern"])


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: an axis, the values it visits and the methods evaluated at each.

    ``distance`` is the target distance for ``pd`` sweeps along axes other than
    ``d``. ``level`` is the detection rate that defines the range under fading.
    Simulated methods run only at ``mc_values`` when that is given.
    """

    axis: Axis
    values: tuple[float, ...]
    quantity: Quantity = Quantity.DM
    params: RadarParams = RadarParams()
    noise: NoiseParams = NoiseParams()
    methods: tuple[Method, ...] = (Method.ANALYTIC,)
    pattern: str = "cone"
    seed: int = 0
    calibration_samples: int = DEFAULT_CALIBRATION_SAMPLES
    trials: int = DEFAULT_TRIALS
    distance: float | None = None
    level: float = 0.5
    mc_values: tuple[float, ...] | None = None
    workers: int = 1
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "quantity", Quantity(self.quantity))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.mc_values is not None:
            object.__setattr__(self, "mc_values", tuple(float(v) for v in self.mc_values))
        bad = []
        if not self.values:
            bad.append("values")
        if not self.methods or len(set(self.methods)) != len(self.methods):
            bad.append("methods")
        if self.pattern not in ("cone", "array"):
            bad.append("pattern")
        if self.axis is Axis.D and self.quantity is not Quantity.PD:
            bad.append("quantity")
        if self.quantity is Quantity.PD:
            if self.axis is not Axis.D and not (self.distance and self.distance > 0):
                bad.append("distance")
            if any(m in (Method.ANALYTIC_NOISE, Method.NOISE_ONLY) for m in self.methods):
                bad.append("methods")
        if any(m in (Method.ANALYTIC_NOISE, Method.NOISE_ONLY) for m in self.methods) \
                and self.params.fading is not Fading.NONE:
            bad.append("fading")
        if self.axis is Axis.D and any(v <= 0 for v in self.values):
            bad.append("values")
        if not 0 < self.level < 1:
            bad.append("level")
        for name in ("calibration_samples", "trials", "workers"):
            if int(getattr(self, name)) < 1:
                bad.append(name)
        if bad:
            keys = sorted(set(bad))
            raise ValidationError(f"invalid sweep fields: {', '.join(keys)}", keys=keys)

    def params_at(self, x: float) -> RadarParams:
        if self.axis is Axis.D:
            return self.params
        try:
            return self.params.replace(**{_AXIS_FIELD[self.axis]: x})
        except DomainError as exc:
            raise ValidationError(str(exc), keys=["values"]) from exc

    def simulate_at(self, x: float) -> bool:
        return self.mc_values is None or any(math.isclose(x, v, rel_tol=1e-12) for v in self.mc_values)


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def where(self, series: str) -> "SweepResult":
        k = self.columns.index("series")
        return SweepResult(self.columns, [r for r in self.rows if r[k] == series], self.metadata)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.metadata, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [[v if not isinstance(v, float) or math.isfinite(v) else None for v in r] for r in self.rows]
        return json.dumps({"metadata": self.metadata, "columns": self.columns, "rows": rows},
                          sort_keys=True, indent=1)

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = self.to_json() if path.suffix == ".json" else self.to_csv()
        path.write_text(text)
        return path


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


# ---------------------------------------------------------------- evaluation

def _analytic(spec: SweepSpec, method: Method, p: RadarParams, d: float | None) -> float:
    if method is Method.ANALYTIC_NOISE:
        return max_range_with_noise(p, spec.noise)
    if method is Method.NOISE_ONLY:
        return max_range_noise_only(p, spec.noise)
    if spec.quantity is Quantity.PD:
        if p.fading is Fading.RAYLEIGH:
            return float(pd_rayleigh(d, p))
        return float(pd_nofading(d, p))
    if p.fading is Fading.RAYLEIGH:
        return range_at_pd(p, spec.level)
    return max_range_nofading(p)


@dataclass
class _Simulation:
    pattern: Any
    radius: float
    dist: Any
    batch: Any


def _simulate(spec: SweepSpec, p: RadarParams, stream: Stream) -> _Simulation:
    pattern = make_pattern(spec.pattern, p.phi)
    radius = default_radius(p)
    dist = collect_interference(p, pattern, spec.calibration_samples, stream.child(0), radius, spec.workers)
    batch = detection_trials(p, pattern, spec.trials, stream.child(1), radius, spec.workers)
    return _Simulation(pattern, radius, dist, batch)


def _simulated(spec: SweepSpec, method: Method, p: RadarParams, sim: _Simulation, d: float | None):
    if method is Method.MC_AGGREGATE:
        dist, batch = sim.dist, sim.batch
    else:
        dist, batch = sim.dist.strongest, sim.batch.strongest_only()
    theta = calibrate_threshold(dist, p)
    bounds = threshold_bounds(dist, p)
    if spec.quantity is Quantity.PD:
        est = batch.estimate_calibrated(d, theta, bounds)
    else:
        est = estimate_dm(theta, p, sim.pattern, None, spec.level, rtol=0.01, radius=sim.radius,
                          batch=batch, theta_bounds=bounds)
    return est.value, est.ci_low, est.ci_high


def _columns(spec: SweepSpec) -> list[str]:
    cols = [spec.axis.value]
    for m in spec.methods:
        cols.append(m.value)
        if m.simulated:
            cols += [f"{m.value}_lo", f"{m.value}_hi"]
    return cols


def _evaluate(spec: SweepSpec, stream: Stream, notes: list[str]) -> list[tuple]:
    nan = float("nan")
    simulated = [m for m in spec.methods if m.simulated]
    shared = None
    rows = []
    for i, x in enumerate(spec.values):
        p = spec.params_at(x)
        d = x if spec.axis is Axis.D else spec.distance
        row: list[Any] = [x]
        sim = None
        if simulated and spec.simulate_at(x):
            need = required_samples(p)
            if spec.calibration_samples < need:
                notes.append(f"{spec.label or 'sweep'}: no simulation at {spec.axis.value}={x:g}; "
                             f"calibration needs {need} samples, budget is {spec.calibration_samples}")
            elif spec.axis is Axis.D:
                # Every distance reuses one set of draws (common random numbers).
                shared = shared or _simulate(spec, p, stream.child(0))
                sim = shared
            else:
                sim = _simulate(spec, p, stream.child(i))
        for m in spec.methods:
            if not m.simulated:
                row.append(_analytic(spec, m, p, d))
            elif sim is None:
                row += [nan, nan, nan]
            else:
                row += list(_simulated(spec, m, p, sim, d))
        rows.append(tuple(row))
        log.info("%s %s=%g done", spec.label or "sweep", spec.axis.value, x)
    return rows


def run_custom(spec: SweepSpec, stream: Stream | None = None) -> SweepResult:
    """Evaluate one sweep. Rows follow ``spec.values`` in order."""
    start = time.perf_counter()
    stream = stream or Stream(spec.seed)
    notes: list[str] = []
    rows = _evaluate(spec, stream, notes)
    meta = _metadata("custom", [spec], notes, time.perf_counter() - start)
    return SweepResult(_columns(spec), rows, meta)


def run_series(figure: str, series: list[SweepSpec], seed: int, extra: dict | None = None) -> SweepResult:
    """Stack several labelled sweeps sharing an axis into one table."""
    start = time.perf_counter()
    notes: list[str] = []
    cols = None
    rows = []
    for spec in series:
        sc = _columns(spec)
        # Keyed by the series' own seed so that its manifest entry reruns it exactly.
        rows_k = _evaluate(spec, Stream(spec.seed), notes)
        if cols is None:
            cols = sc
        elif sc != cols:
            # Pad methods absent from this series.
            rows_k = [tuple(r[sc.index(c)] if c in sc else float("nan") for c in cols) for r in rows_k]
        rows += [(spec.label, *r) for r in rows_k]
    meta = _metadata(figure, series, notes, time.perf_counter() - start)
    if extra:
        meta.update(extra)
    return SweepResult(["series", *cols], rows, meta)


def _metadata(figure: str, series: list[SweepSpec], notes: list[str], runtime: float) -> dict:
    return {
        "figure": figure,
        "tool": "radarint",
        "version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "runtime_s": round(runtime, 3),
        "series": [spec_to_mapping(s) for s in series],
        "patterns": {s.label: pattern_metadata(make_pattern(s.pattern, s.params.phi)) for s in series},
        "notes": notes,
    }


# ------------------------------------------------------------ configuration

_PARAM_KEYS = {"lam", "cycle", "delta", "phi", "alpha", "pt", "pt_dbm", "freq", "freq_ghz",
               "kappa", "sigma", "pfa", "fading"}
_NOISE_KEYS = {"temp", "bandwidth", "noise_figure"}
_SPEC_KEYS = {"axis", "values", "start", "stop", "num", "scale", "quantity", "methods", "pattern",
              "seed", "calibration_samples", "trials", "distance", "level", "mc_values", "workers",
              "label"}
RUN_KEYS = {"out", "figure"}
KNOWN_KEYS = _PARAM_KEYS | _NOISE_KEYS | _SPEC_KEYS | RUN_KEYS


def spec_to_mapping(spec: SweepSpec) -> dict:
    """Flat mapping that :func:`apply_overrides` turns back into ``spec``."""
    out = {f.name: getattr(spec.params, f.name) for f in dataclasses.fields(spec.params)}
    out["fading"] = spec.params.fading.value
    out.update({f.name: getattr(spec.noise, f.name) for f in dataclasses.fields(spec.noise)})
    out.update(
        axis=spec.axis.value,
        values=list(spec.values),
        quantity=spec.quantity.value,
        methods=[m.value for m in spec.methods],
        pattern=spec.pattern,
        seed=spec.seed,
        calibration_samples=spec.calibration_samples,
        trials=spec.trials,
        distance=spec.distance,
        level=spec.level,
        mc_values=None if spec.mc_values is None else list(spec.mc_values),
        workers=spec.workers,
        label=spec.label,
    )
    return out


def _axis_values(m: Mapping) -> tuple[float, ...]:
    if "values" in m:
        vals = m["values"]
        if isinstance(vals, (int, float)):
            vals = [vals]
        return tuple(float(v) for v in vals)
    start, stop, num = float(m["start"]), float(m["stop"]), int(m["num"])
    scale = m.get("scale", "linear")
    if scale == "log":
        return tuple(np.geomspace(start, stop, num).tolist())
    if scale == "linear":
        return tuple(np.linspace(start, stop, num).tolist())
    raise ValueError(scale)


def apply_overrides(spec: SweepSpec | None, overrides: Mapping[str, Any]) -> SweepSpec:
    """Layer a flat key-value mapping on top of ``spec`` (or on the built-in defaults).

    Raises
    ------
    ValidationError
        Unknown keys or values that cannot be converted; ``keys`` names them.
    """
    overrides = {k: v for k, v in overrides.items() if v is not None}
    unknown = sorted(set(overrides) - KNOWN_KEYS)
    if unknown:
        raise ValidationError(f"unknown keys: {', '.join(unknown)}", keys=unknown)
    bad: list[str] = []
    base = spec_to_mapping(spec) if spec is not None else {}
    params = {f.name: base[f.name] for f in dataclasses.fields(RadarParams) if f.name in base}
    noise = {f.name: base[f.name] for f in dataclasses.fields(NoiseParams) if f.name in base}
    fields_ = {k: base[k] for k in _SPEC_KEYS if k in base}

    def convert(key, fn):
        try:
            return fn(overrides[key])
        except (TypeError, ValueError, KeyError):
            bad.append(key)
            return None

    for key in overrides:
        if key in ("lam", "phi", "alpha", "pt", "freq", "kappa", "sigma", "pfa"):
            params[key] = convert(key, float)
        elif key == "cycle":
            params["cycle"] = convert(key, _as_int)
        elif key == "delta":
            params["cycle"] = convert(key, lambda v: _as_int(round(1 / float(v)), exact=1 / float(v)))
        elif key == "pt_dbm":
            params["pt"] = convert(key, lambda v: dbm_to_watts(float(v)))
        elif key == "freq_ghz":
            params["freq"] = convert(key, lambda v: float(v) * 1e9)
        elif key == "fading":
            params["fading"] = convert(key, lambda v: Fading(str(v).lower()))
        elif key in _NOISE_KEYS:
            noise[key] = convert(key, float)
    if {"values", "start", "stop", "num", "scale"} & set(overrides):
        try:
            fields_["values"] = _axis_values(overrides)
        except (TypeError, ValueError, KeyError):
            bad.append("values")
    for key in ("axis", "quantity", "pattern", "label"):
        if key in overrides:
            fields_[key] = str(overrides[key])
    for key in ("seed", "calibration_samples", "trials", "workers"):
        if key in overrides:
            fields_[key] = convert(key, _as_int)
    for key in ("distance", "level"):
        if key in overrides:
            fields_[key] = convert(key, float)
    if "methods" in overrides:
        fields_["methods"] = convert("methods", lambda v: tuple(Method(x) for x in ([v] if isinstance(v, str) else v)))
    if "mc_values" in overrides:
        fields_["mc_values"] = convert("mc_values", lambda v: tuple(float(x) for x in v))
    if bad:
        keys = sorted(set(bad))
        raise ValidationError(f"invalid values for: {', '.join(keys)}", keys=keys)
    try:
        p = RadarParams(**params)
    except (DomainError, TypeError) as exc:
        keys = sorted(set(overrides) & _PARAM_KEYS) or ["params"]
        raise ValidationError(str(exc), keys=keys) from exc
    try:
        n = NoiseParams(**noise)
    except DomainError as exc:
        raise ValidationError(str(exc), keys=sorted(set(overrides) & _NOISE_KEYS)) from exc
    missing = [k for k in ("axis", "values") if k not in fields_]
    if missing:
        raise ValidationError(f"missing keys: {', '.join(missing)}", keys=missing)
    try:
        return SweepSpec(params=p, noise=n, **fields_)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(str(exc), keys=sorted(set(overrides) & _SPEC_KEYS)) from exc


def _as_int(v, exact=None) -> int:
    f = float(v)
    if f != int(f) or (exact is not None and not math.isclose(int(f), exact, rel_tol=1e-9)):
        raise ValueError(v)
    return int(f)


def load_config(path) -> dict:
    """Read a flat JSON object of configuration keys."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})", keys=["config"]) from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object", keys=["config"])
    return data


# ------------------------------------------------------------------ figures

FIG1_DISTANCES = tuple(np.linspace(2.0, 60.0, 30).tolist())
FIG2_DENSITIES = tuple(np.geomspace(1e-6, 1e-3, 7).tolist())
FIG2_BEAMWIDTHS = (math.pi / 3, math.pi / 6, math.pi / 12)
FIG3_BEAMWIDTHS = tuple(math.radians(x) for x in (1, 2, 3, 5, 7.5, 10, 15, 20, 30, 45, 60, 90))
FIG3_SIMULATED = tuple(math.radians(x) for x in (15, 30, 60, 90))
FIG3_FALSE_ALARMS = (0.1, 0.01, 0.001)
FIG4_FALSE_ALARMS = tuple(np.geomspace(1e-4, 0.5, 14).tolist()) + (0.9, 0.99, 0.999)
FIG4_DENSITIES = (1e-5, 1e-4)
FIG4_DISTANCES = (20.0, 30.0)
FIG5_DENSITIES = tuple(np.geomspace(1e-9, 1e-2, 15).tolist())
APPENDIX_POWER_DBM = 20.0

CHOSEN_VALUES = {
    "2": "beamwidths other than pi/6 are illustrative choices",
    "3": "false-alarm levels 0.1, 0.01, 0.001 are illustrative choices",
    "4": "target distances 20 m and 30 m are illustrative choices",
}


def figure_series(figure: int, mc_pattern: str = "cone") -> list[SweepSpec]:
    """Built-in series of a figure before any overrides."""
    base = RadarParams()
    mc = (Method.MC_AGGREGATE,)
    if figure == 1:
        families = [
            ("alpha=2,none,60GHz", base),
            ("alpha=3,rayleigh,2.4GHz", base.replace(alpha=3.0, fading=Fading.RAYLEIGH, freq=2.4e9)),
            ("alpha=4,rayleigh,2.4GHz", base.replace(alpha=4.0, fading=Fading.RAYLEIGH, freq=2.4e9)),
        ]
        return [SweepSpec(Axis.D, FIG1_DISTANCES, Quantity.PD, p, methods=(Method.ANALYTIC, *mc),
                          pattern=mc_pattern, label=lab) for lab, p in families]
    if figure == 2:
        out = [SweepSpec(Axis.LAMBDA, FIG2_DENSITIES, Quantity.DM, base.replace(phi=phi),
                         methods=(Method.ANALYTIC, *mc), label=f"cone,phi={phi:.6g}")
               for phi in FIG2_BEAMWIDTHS]
        out.append(SweepSpec(Axis.LAMBDA, FIG2_DENSITIES, Quantity.DM, base, methods=(Method.ANALYTIC, *mc),
                             pattern="array", label=f"array,phi={base.phi:.6g}"))
        return out
    if figure == 3:
        return [SweepSpec(Axis.PHI, FIG3_BEAMWIDTHS, Quantity.DM, base.replace(pfa=pfa),
                          methods=(Method.ANALYTIC, *mc), mc_values=FIG3_SIMULATED, pattern=mc_pattern,
                          label=f"pfa={pfa:g}") for pfa in FIG3_FALSE_ALARMS]
    if figure == 4:
        p = base.replace(alpha=3.0, fading=Fading.RAYLEIGH, freq=2.4e9)
        return [SweepSpec(Axis.PFA, FIG4_FALSE_ALARMS, Quantity.PD, p.replace(lam=lam), distance=d,
                          methods=(Method.ANALYTIC,), pattern=mc_pattern, label=f"lam={lam:g},d={d:g}")
                for lam in FIG4_DENSITIES for d in FIG4_DISTANCES]
    if figure == 5:
        p = base.replace(pt=dbm_to_watts(APPENDIX_POWER_DBM))
        return [SweepSpec(Axis.LAMBDA, FIG5_DENSITIES, Quantity.DM, p,
                          methods=(Method.ANALYTIC, Method.ANALYTIC_NOISE, Method.NOISE_ONLY),
                          pattern=mc_pattern, label="appendix")]
    raise ValidationError(f"figure must be 1..5, got {figure}", keys=["figure"])


def run_figure(figure: int, overrides: Mapping[str, Any] | None = None, seed: int = 0,
               mc_pattern: str = "cone") -> SweepResult:
    """Run a figure; ``overrides`` is applied to every series."""
    overrides = dict(overrides or {})
    seed = int(overrides.pop("seed", seed))
    overrides.pop("out", None)
    overrides.pop("figure", None)
    series = [apply_overrides(s, {**overrides, "seed": seed}) if overrides else
              dataclasses.replace(s, seed=seed) for s in figure_series(figure, mc_pattern)]
    extra = {"non_paper_values": CHOSEN_VALUES.get(str(figure))} if str(figure) in CHOSEN_VALUES else None
    return run_series(f"fig{figure}", series, seed, extra)


def run_fig1(overrides=None, **kw) -> SweepResult:
    """Detection probability against distance for the three channel families."""
    return run_figure(1, overrides, **kw)


def run_fig2(overrides=None, **kw) -> SweepResult:
    """Critical range against density for several beamwidths and the planar array."""
    return run_figure(2, overrides, **kw)


def run_fig3(overrides=None, **kw) -> SweepResult:
    """Critical range against beamwidth for three false-alarm levels."""
    return run_figure(3, overrides, **kw)


def run_fig4(overrides=None, **kw) -> SweepResult:
    """Detection probability against false-alarm rate (ROC) under Rayleigh fading."""
    return run_figure(4, overrides, **kw)


def run_fig5(overrides=None, **kw) -> SweepResult:
    """Critical range against density with receiver noise."""
    return run_figure(5, overrides, **kw)


def default_output_dir() -> Path:
    return Path(os.environ.get("RADARINT_OUTPUT_DIR", "."))
