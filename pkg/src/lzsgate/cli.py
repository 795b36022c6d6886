"""Command-line experiment runner.

    lzsgate run <config.yaml>        run one experiment and write its data file
    lzsgate validate <config.yaml>   check a config without running it
    lzsgate list-presets             show the built-in parameter sets

Exit codes: 0 success, 1 invalid config, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._backend import BACKEND
from .core import TWO_PI, DecayRates, DriveParams, Units
from .dynamics import propagate
from .gate import AdiabaticPulse, run_cz_adiabatic, run_cz_coherent, run_cz_lzs
from .hamiltonians import Frame, instantaneous_spectrum
from .numerics import IntegrationError, IntegratorConfig
from .presets import PRESETS, list_presets
from .sweeps import AXES, MAP_CONFIG, METRICS, scan_2d, scan_time_deviation

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2

KINDS = ("trajectory", "spectrum", "gate", "time_scan", "grid_2d")
SCHEMES = ("lzs", "coherent", "adiabatic")
PARAM_FIELDS = ("v_dd", "a", "delta0", "omega", "phi")
SPECTRUM_SAMPLES = 2001

TOP_LEVEL = {"kind", "preset", "params", "overrides", "duration", "vt_over_2pi", "frame",
             "decay", "scheme", "pulse", "v_dd", "timing_error", "deviations", "metric",
             "axes", "ranges", "resolution", "samples", "integrator", "workers", "output"}


class ConfigError(ValueError):
    """Invalid config; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ExperimentConfig:
    kind: str
    output_path: Path
    output_format: str
    params: DriveParams | None = None
    duration: float | None = None
    frame: Frame = field(default_factory=Frame.lab)
    decay: DecayRates | None = None
    scheme: str = "lzs"
    pulse: AdiabaticPulse | None = None
    v_dd: float | None = None
    timing_error: float = 0.0
    deviations: np.ndarray | None = None
    metric: str = "fidelity"
    axes: tuple[str, str] = ("a", "delta0")
    ranges: tuple = ((-0.1, 0.1), (-0.1, 0.1))
    resolution: tuple[int, int] = (41, 41)
    samples: int = SPECTRUM_SAMPLES
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    workers: int = 1
    preset: str | None = None

    def resolved(self) -> dict:
        """Explicit config (no preset indirection) that reproduces this run."""
        out = {"kind": self.kind}
        if self.params is not None:
            out["params"] = self.params.to_dict()
        if self.duration is not None:
            out["duration"] = self.duration
        if self.kind in ("trajectory", "gate") and self.scheme == "lzs":
            out["frame"] = self.frame.label()
        out["decay"] = None if self.decay is None else self.decay.to_dict()
        if self.kind in ("gate", "time_scan"):
            out["scheme"] = self.scheme
        if self.pulse is not None:
            d = self.pulse.to_dict()
            d.pop("label", None)
            out["pulse"] = d
        if self.v_dd is not None:
            out["v_dd"] = self.v_dd
        if self.kind == "gate" and self.scheme == "adiabatic":
            out["timing_error"] = self.timing_error
        if self.deviations is not None:
            out["deviations"] = [float(x) for x in self.deviations]
        if self.kind in ("time_scan", "grid_2d"):
            out["metric"] = self.metric
        if self.kind == "grid_2d":
            out.update(axes=list(self.axes), ranges=[list(r) for r in self.ranges],
                       resolution=list(self.resolution), workers=self.workers)
        if self.kind == "spectrum":
            out["samples"] = self.samples
        out["integrator"] = {k: v for k, v in self.integrator.to_dict().items()
                             if not (isinstance(v, float) and math.isinf(v))}
        out["output"] = {"path": str(self.output_path), "format": self.output_format}
        return out


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def _number(value, path, *, positive=False, nonneg=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    if positive and not value > 0:
        raise ConfigError(path, "must be positive")
    if nonneg and not value >= 0:
        raise ConfigError(path, "must be >= 0")
    return value


def _mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(path, "expected a mapping")
    return value


def _choice(value, path, options):
    if value not in options:
        raise ConfigError(path, f"{value!r} is not one of {', '.join(options)}")
    return value


def _parse_params(raw: dict, preset) -> DriveParams | None:
    base = preset.params if preset is not None else None
    if "params" in raw:
        spec = _mapping(raw["params"], "params")
        unknown = set(spec) - set(PARAM_FIELDS) - {"units"}
        if unknown:
            raise ConfigError(f"params.{sorted(unknown)[0]}", "unknown field")
        values = {}
        for name in PARAM_FIELDS:
            if name in spec:
                values[name] = _number(spec[name], f"params.{name}")
            elif name == "phi":
                values[name] = 0.0
            else:
                raise ConfigError(f"params.{name}", "missing required field")
        units = spec.get("units", Units.DIMENSIONLESS.value)
        _choice(units, "params.units", [u.value for u in Units])
        try:
            base = DriveParams(**values, units=Units(units))
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None
    if "overrides" in raw:
        spec = _mapping(raw["overrides"], "overrides")
        if base is None:
            raise ConfigError("overrides", "needs a preset or params to override")
        changes = {}
        for name, value in spec.items():
            _choice(name, f"overrides.{name}", PARAM_FIELDS)
            changes[name] = _number(value, f"overrides.{name}")
        try:
            base = base.replace(**changes)
        except ValueError as exc:
            raise ConfigError("overrides", str(exc)) from None
    return base


def _parse_decay(raw: dict, preset, units: Units) -> DecayRates | None:
    spec = raw.get("decay", False)
    if spec is False or spec is None:
        return None
    if spec is True:
        if preset is None or preset.decay is None:
            raise ConfigError("decay", "decay: true needs a preset with lifetimes")
        return preset.decay
    spec = _mapping(spec, "decay")
    rates = {}
    for name in ("gamma_g", "gamma_e", "gamma_01", "gamma_10"):
        if name in spec and spec[name] is not None:
            rates[name] = _number(spec[name], f"decay.{name}", nonneg=True)
        elif name in ("gamma_g", "gamma_e"):
            raise ConfigError(f"decay.{name}", "missing required field")
    unit = spec.get("units", units.value)
    _choice(unit, "decay.units", [u.value for u in Units])
    return DecayRates(**rates, units=Units(unit))


def _parse_integrator(raw: dict, kind: str) -> IntegratorConfig:
    base = MAP_CONFIG if kind == "grid_2d" else IntegratorConfig()
    spec = _mapping(raw.get("integrator", {}) or {}, "integrator")
    changes = {}
    for name, value in spec.items():
        path = f"integrator.{name}"
        if name == "method":
            changes[name] = _choice(value, path, ("rk45", "rk4"))
        elif name in ("rel_tol", "abs_tol", "max_step"):
            changes[name] = _number(value, path, positive=True)
        elif name == "sample_interval":
            changes[name] = None if value is None else _number(value, path, positive=True)
        else:
            raise ConfigError(path, "unknown field")
    try:
        return base.replace(**changes)
    except ValueError as exc:
        raise ConfigError("integrator", str(exc)) from None


def _parse_duration(raw: dict, preset, params) -> float | None:
    if "duration" in raw and "vt_over_2pi" in raw:
        raise ConfigError("duration", "give either duration or vt_over_2pi, not both")
    if "duration" in raw:
        return _number(raw["duration"], "duration", positive=True)
    if "vt_over_2pi" in raw:
        if params is None:
            raise ConfigError("vt_over_2pi", "needs drive parameters to convert")
        return _number(raw["vt_over_2pi"], "vt_over_2pi", positive=True) * TWO_PI / params.v_dd
    return None if preset is None else preset.duration


def _parse_deviations(value) -> np.ndarray:
    if isinstance(value, dict):
        for key in ("start", "stop", "num"):
            if key not in value:
                raise ConfigError(f"deviations.{key}", "missing required field")
        num = value["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 1:
            raise ConfigError("deviations.num", "must be a positive integer")
        devs = np.linspace(_number(value["start"], "deviations.start"),
                           _number(value["stop"], "deviations.stop"), num)
    elif isinstance(value, list) and value:
        devs = np.array([_number(v, f"deviations[{i}]") for i, v in enumerate(value)])
    else:
        raise ConfigError("deviations", "expected {start, stop, num} or a non-empty list")
    if np.any(np.abs(devs) >= 0.5):
        raise ConfigError("deviations", "values must lie in (-0.5, 0.5)")
    return devs


def parse_config(raw, base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a config mapping; raises :class:`ConfigError` naming the bad field."""
    raw = _mapping(raw, "<root>")
    unknown = set(raw) - TOP_LEVEL
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    if "kind" not in raw:
        raise ConfigError("kind", "missing required field")
    kind = _choice(raw["kind"], "kind", KINDS)

    preset = None
    if "preset" in raw:
        if raw["preset"] not in PRESETS:
            raise ConfigError("preset", f"unknown preset {raw['preset']!r}")
        preset = PRESETS[raw["preset"]]

    out = _mapping(raw.get("output"), "output") if "output" in raw else None
    if out is None or "path" not in out:
        raise ConfigError("output.path", "missing required field")
    path = Path(str(out["path"]))
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    default_fmt = "json" if path.suffix == ".json" or kind == "gate" else "csv"
    fmt = _choice(out.get("format", default_fmt), "output.format", ("csv", "json"))

    scheme = _choice(raw.get("scheme", "lzs"), "scheme", SCHEMES)
    if scheme == "adiabatic" and kind not in ("gate", "time_scan"):
        raise ConfigError("scheme", "the adiabatic scheme applies to gate and time_scan only")
    if preset is not None and preset.kind == "pulse" and scheme != "adiabatic":
        raise ConfigError("scheme", f"preset {preset.name} is an adiabatic pulse; "
                          "set scheme: adiabatic")

    params = _parse_params(raw, preset)
    units = params.units if params is not None else (preset.units if preset else Units.RAD_PER_US)
    cfg = ExperimentConfig(kind=kind, output_path=path, output_format=fmt, params=params,
                           preset=preset.name if preset else None, scheme=scheme)
    cfg.integrator = _parse_integrator(raw, kind)
    cfg.decay = _parse_decay(raw, preset, units)
    if "frame" in raw:
        try:
            cfg.frame = Frame.parse(raw["frame"])
        except ValueError as exc:
            raise ConfigError("frame", str(exc)) from None
    if "workers" in raw:
        w = raw["workers"]
        if isinstance(w, bool) or not isinstance(w, int) or w < 1:
            raise ConfigError("workers", "must be a positive integer")
        cfg.workers = w

    if scheme == "adiabatic":
        if "pulse" in raw:
            spec = _mapping(raw["pulse"], "pulse")
            vals = {}
            for name in ("s1", "s2", "total_t", "t1", "t2"):
                if name not in spec:
                    raise ConfigError(f"pulse.{name}", "missing required field")
                vals[name] = _number(spec[name], f"pulse.{name}")
            try:
                cfg.pulse = AdiabaticPulse(**vals, units=Units(spec.get("units", "rad/us")))
            except ValueError as exc:
                raise ConfigError("pulse", str(exc)) from None
        elif preset is not None and preset.pulse is not None:
            cfg.pulse = preset.pulse
        else:
            raise ConfigError("pulse", "adiabatic scheme needs a pulse or a pulse preset")
        if "v_dd" in raw:
            cfg.v_dd = _number(raw["v_dd"], "v_dd", positive=True)
        elif preset is not None and preset.v_dd is not None:
            cfg.v_dd = preset.v_dd
        else:
            raise ConfigError("v_dd", "missing required field")
        cfg.timing_error = _number(raw.get("timing_error", 0.0), "timing_error")
        if not -0.5 < cfg.timing_error < 0.5:
            raise ConfigError("timing_error", "must lie in (-0.5, 0.5)")
        cfg.params = None
    else:
        if params is None:
            raise ConfigError("params", "missing drive parameters (give params or a preset)")
        cfg.duration = _parse_duration(raw, preset, params)
        if cfg.duration is None:
            if kind == "spectrum":
                cfg.duration = params.drive_period
            elif scheme == "coherent":
                cfg.duration = TWO_PI / params.v_dd
            else:
                raise ConfigError("duration", "missing required field")

    if kind == "spectrum":
        n = raw.get("samples", SPECTRUM_SAMPLES)
        if isinstance(n, bool) or not isinstance(n, int) or n < 2:
            raise ConfigError("samples", "must be an integer >= 2")
        cfg.samples = n
    if kind in ("time_scan", "grid_2d"):
        cfg.metric = _choice(raw.get("metric", "fidelity"), "metric", METRICS)
    if kind == "time_scan":
        if "deviations" not in raw:
            raise ConfigError("deviations", "missing required field")
        cfg.deviations = _parse_deviations(raw["deviations"])
    if kind == "grid_2d":
        if scheme != "lzs":
            raise ConfigError("scheme", "2D maps use the lzs scheme")
        axes = raw.get("axes", list(cfg.axes))
        if not (isinstance(axes, list) and len(axes) == 2):
            raise ConfigError("axes", "expected two axis names")
        for i, a in enumerate(axes):
            _choice(a, f"axes[{i}]", AXES)
        if axes[0] == axes[1]:
            raise ConfigError("axes", "axes must differ")
        cfg.axes = tuple(axes)
        ranges = raw.get("ranges", [list(r) for r in cfg.ranges])
        if not (isinstance(ranges, list) and len(ranges) == 2
                and all(isinstance(r, list) and len(r) == 2 for r in ranges)):
            raise ConfigError("ranges", "expected [[lo, hi], [lo, hi]]")
        cfg.ranges = tuple(tuple(_number(v, f"ranges[{i}][{j}]") for j, v in enumerate(r))
                           for i, r in enumerate(ranges))
        res = raw.get("resolution", list(cfg.resolution))
        if isinstance(res, int) and not isinstance(res, bool):
            res = [res, res]
        if not (isinstance(res, list) and len(res) == 2
                and all(isinstance(n, int) and not isinstance(n, bool) and n >= 2 for n in res)):
            raise ConfigError("resolution", "expected two integers >= 2")
        cfg.resolution = tuple(res)
    if cfg.frame.kind.value != "lab" and cfg.params is not None and cfg.params.phi != 0:
        raise ConfigError("frame", "a nonzero drive phase needs the lab frame")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return parse_config(raw, path.parent)


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------

def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _columns_json(names, columns) -> str:
    return json.dumps({n: [float(v) for v in c] for n, c in zip(names, columns)}, indent=1)


def _render(cfg: ExperimentConfig) -> tuple[str, dict]:
    """Data file text plus a summary for the sidecar; may raise IntegrationError."""
    ic = cfg.integrator
    if cfg.kind == "trajectory":
        traj = propagate(cfg.params, cfg.frame, cfg.decay, None, cfg.duration, ic)
        summary = {"rows": len(traj), "p_g_final": float(traj.p_g[-1]),
                   "phase_g_final_over_pi": float(traj.phase_g[-1] / math.pi)}
        if cfg.output_format == "csv":
            return traj.to_csv(), summary
        rows = traj.rows().T
        return _columns_json(("t", "p_g", "p_e", "phase_g_over_pi", "norm"), rows), summary
    if cfg.kind == "spectrum":
        ts = np.linspace(0.0, cfg.duration, cfg.samples)
        sp = instantaneous_spectrum(cfg.params, ts)
        cols = (ts, sp.e_plus, sp.e_minus)
        summary = {"min_gap": float(np.min(sp.gap))}
        if cfg.output_format == "csv":
            buf = io.StringIO()
            np.savetxt(buf, np.column_stack(cols), fmt="%.12g", delimiter=",",
                       header="t,e_plus,e_minus", comments="")
            return buf.getvalue(), summary
        return _columns_json(("t", "e_plus", "e_minus"), cols), summary
    if cfg.kind == "gate":
        if cfg.scheme == "lzs":
            res = run_cz_lzs(cfg.params, cfg.decay, cfg.duration, ic, cfg.frame)
        elif cfg.scheme == "coherent":
            res = run_cz_coherent(cfg.params.v_dd, cfg.decay, cfg.duration, ic,
                                  cfg.params.units)
        else:
            res = run_cz_adiabatic(cfg.pulse, cfg.v_dd, cfg.decay, ic, cfg.timing_error)
        summary = {"fidelity": res.fidelity}
        if cfg.output_format == "json":
            return res.to_json() + "\n", summary
        d = res.to_dict()
        header = "amp_00_re,amp_00_im,amp_01_re,amp_01_im,amp_10_re,amp_10_im," \
                 "amp_11_re,amp_11_im,fidelity"
        vals = [*d["amp_00"], *d["amp_01"], *d["amp_10"], *d["amp_11"], d["fidelity"]]
        return header + "\n" + ",".join("%.12g" % v for v in vals) + "\n", summary
    if cfg.kind == "time_scan":
        base = cfg.pulse if cfg.scheme == "adiabatic" else cfg.params
        grid = scan_time_deviation(cfg.scheme, base, cfg.deviations, duration=cfg.duration,
                                   v_dd=cfg.v_dd, decay=cfg.decay, cfg=ic, metric=cfg.metric)
    else:
        grid = scan_2d(cfg.params, cfg.duration, cfg.axes, cfg.ranges, cfg.resolution,
                       decay=cfg.decay, metric=cfg.metric, cfg=ic, workers=cfg.workers)
    summary = {"cells": int(grid.data.size), "missing_cells": grid.missing,
               "min": float(np.nanmin(grid.data)) if grid.missing < grid.data.size else None,
               "max": float(np.nanmax(grid.data)) if grid.missing < grid.data.size else None}
    if grid.missing:
        flat = np.flatnonzero(np.isnan(grid.data.ravel()))
        summary["missing_indices"] = [int(i) for i in flat[:20]]
    text = grid.to_csv() if cfg.output_format == "csv" else grid.to_json() + "\n"
    return text, summary


def run_experiment(cfg: ExperimentConfig, stream=sys.stdout) -> int:
    """Run a validated config; returns the process exit code."""
    start = time.perf_counter()
    try:
        text, summary = _render(cfg)
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    wall = time.perf_counter() - start
    _atomic_write(cfg.output_path, text)
    sidecar = cfg.output_path.with_name(cfg.output_path.name + ".meta.json")
    meta = {"tool": "lzsgate", "version": __version__, "backend": BACKEND,
            "preset": cfg.preset, "resolved_config": cfg.resolved(),
            "wall_time_s": round(wall, 6), "summary": summary}
    _atomic_write(sidecar, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {cfg.output_path} ({wall:.2f} s)", file=stream)
    if summary.get("missing_cells"):
        print(f"numerical failure: {summary['missing_cells']} cells missing "
              f"(first flat indices {summary['missing_indices']})", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lzsgate", description="Driven Forster-resonance dynamics and CZ gate experiments.")
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="validate an experiment config")
    p_val.add_argument("config")
    sub.add_parser("list-presets", help="list built-in parameter sets")
    args = parser.parse_args(argv)

    if args.verb == "list-presets":
        for line in list_presets():
            print(line)
        return EXIT_OK
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.verb == "validate":
        print(f"ok: {cfg.kind} -> {cfg.output_path}")
        return EXIT_OK
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
