"""Command-line entry point.

Exit status is 0 on success, 2 for invalid input and 3 when a numerical
routine fails to reach its tolerance. Output files go to ``--out`` or, when
that is omitted, to ``$RADARINT_OUTPUT_DIR`` (default: the current directory).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from . import analytic as an
from .antenna import pattern_metadata, write_pattern_csv
from .errors import DomainError, NumericalError, ResourceError, ValidationError
from .experiments import (
    KNOWN_KEYS,
    apply_overrides,
    default_output_dir,
    load_config,
    make_pattern,
    run_custom,
    run_figure,
)
from .field import sample_scene, window_criteria, write_scene_csv

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

ANALYTIC_OPS = ("threshold", "dm", "pd", "floor", "cdf", "range-at-pd", "noise-threshold",
                "noise-dm", "noise-only-dm", "window")

# Flag name -> config key. Flags left unset fall through to the config file and defaults.
PARAM_FLAGS = {
    "lam": float, "cycle": int, "delta": float, "phi": float, "alpha": float, "pt": float,
    "pt_dbm": float, "freq": float, "freq_ghz": float, "kappa": float, "sigma": float,
    "pfa": float, "fading": str, "temp": float, "bandwidth": float, "noise_figure": float,
}


def _add_param_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("system parameters (SI unless suffixed)")
    for name, kind in PARAM_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=None)
    ap.add_argument("--config", type=Path, help="flat JSON object of parameter keys")


def _layered(args, extra_keys=()) -> dict:
    merged = load_config(args.config) if getattr(args, "config", None) else {}
    for key in (*PARAM_FLAGS, *extra_keys):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _params(args) -> tuple[an.RadarParams, an.NoiseParams]:
    layered = _layered(args)
    for key in ("distance", "level", "value"):
        layered.pop(key, None)
    unknown = sorted(set(layered) - KNOWN_KEYS)
    if unknown:
        raise ValidationError(f"unknown keys: {', '.join(unknown)}", keys=unknown)
    spec = apply_overrides(None, {**{k: v for k, v in layered.items() if k in PARAM_FLAGS},
                                  "axis": "lambda", "values": [1.0]})
    return spec.params, spec.noise


def cmd_analytic(args) -> dict:
    p, n = _params(args)
    op = args.op
    out: dict = {"op": op}
    if op == "threshold":
        theta = an.detection_threshold(p)
        out.update(watts=theta, dbm=10 * math.log10(theta) + 30)
    elif op == "dm":
        out["meters"] = an.max_range_nofading(p)
    elif op == "pd":
        d = _required(args.distance, "distance")
        out["pd"] = float(an.pd_rayleigh(d, p) if p.fading is an.Fading.RAYLEIGH else an.pd_nofading(d, p))
    elif op == "floor":
        out["pd"] = an.pd_floor(p)
    elif op == "cdf":
        out["cdf"] = float(an.strongest_cdf(_required(args.value, "value"), p))
    elif op == "range-at-pd":
        out["meters"] = an.range_at_pd(p, args.level)
    elif op == "noise-threshold":
        theta = an.threshold_with_noise(p, n)
        out.update(watts=theta, dbm=10 * math.log10(theta) + 30, noise_watts=n.pn)
    elif op == "noise-dm":
        out["meters"] = an.max_range_with_noise(p, n)
    elif op == "noise-only-dm":
        out["meters"] = an.max_range_noise_only(p, n)
    elif op == "window":
        out.update(window_criteria(p, an.detection_threshold(p)))
    return out


def _required(value, name):
    if value is None:
        raise ValidationError(f"--{name} is required for this operation", keys=[name])
    return value


def _output_path(args, default_name: str) -> Path:
    if args.out is not None:
        return Path(args.out)
    return default_output_dir() / default_name


def cmd_figure(args) -> dict:
    overrides = _layered(args, extra_keys=("seed", "trials", "calibration_samples", "workers"))
    result = run_figure(args.number, overrides, mc_pattern=args.pattern)
    path = result.write(_output_path(args, f"fig{args.number}.csv"))
    return {"written": str(path), "rows": len(result.rows)}


def cmd_sweep(args) -> dict:
    mapping = load_config(args.spec)
    out = mapping.pop("out", None)
    for key in ("seed", "workers"):
        if getattr(args, key) is not None:
            mapping[key] = getattr(args, key)
    result = run_custom(apply_overrides(None, mapping))
    if args.out is None and out is not None:
        args.out = out
    path = result.write(_output_path(args, Path(args.spec).stem + ".csv"))
    return {"written": str(path), "rows": len(result.rows)}


def cmd_scene_dump(args) -> dict:
    p, _ = _params(args)
    scene = sample_scene(p, args.radius, args.seed)
    path = _output_path(args, "scene.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_scene_csv(scene, path)
    return {"written": str(path), "radars": len(scene)}


def cmd_pattern_dump(args) -> dict:
    p, _ = _params(args)
    pattern = make_pattern(args.pattern, p.phi)
    path = _output_path(args, f"pattern_{args.pattern}.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_pattern_csv(pattern, path)
    return {"written": str(path), "pattern": pattern_metadata(pattern)}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radarint", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analytic", help="evaluate a closed-form or quadrature quantity")
    a.add_argument("op", choices=ANALYTIC_OPS)
    a.add_argument("--distance", type=float, help="target distance in m (pd)")
    a.add_argument("--value", type=float, help="interference power in W (cdf)")
    a.add_argument("--level", type=float, default=0.5, help="detection level (range-at-pd)")
    _add_param_flags(a)
    a.set_defaults(func=cmd_analytic)

    f = sub.add_parser("figure", help="reproduce one of the five figures as a table")
    f.add_argument("number", type=int, choices=range(1, 6))
    f.add_argument("--out", type=Path)
    f.add_argument("--seed", type=int, help="root seed (default 0)")
    f.add_argument("--trials", type=int, help="detection cycles per simulated point")
    f.add_argument("--calibration-samples", dest="calibration_samples", type=int)
    f.add_argument("--pattern", choices=("cone", "array"), default="cone")
    f.add_argument("--workers", type=int)
    _add_param_flags(f)
    f.set_defaults(func=cmd_figure)

    s = sub.add_parser("sweep", help="run a sweep described by a JSON file")
    s.add_argument("--spec", type=Path, required=True)
    s.add_argument("--out", type=Path)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("scene-dump", help="write one sampled scene as CSV")
    d.add_argument("--radius", type=float, default=1000.0)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", type=Path)
    _add_param_flags(d)
    d.set_defaults(func=cmd_scene_dump)

    g = sub.add_parser("pattern-dump", help="write gain against angle as CSV")
    g.add_argument("--pattern", choices=("cone", "array"), default="cone")
    g.add_argument("--out", type=Path)
    _add_param_flags(g)
    g.set_defaults(func=cmd_pattern_dump)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except (ValidationError, DomainError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(result, indent=1, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
