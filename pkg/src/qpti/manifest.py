"""Experiment manifests: one JSON document describes one run.

Parsing is strict: unknown keys are hard errors, every model invariant is
checked before any computation or file output, and all defaults are
resolved at parse time so the manifest echoed next to the outputs is the
complete recipe. parse(emit(m)) round-trips exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .propagator import EvolutionSettings
from .protocol import BjProtocolConfig, IsingProtocolConfig, default_settings

__all__ = ["ManifestError", "RunManifest", "parse_manifest", "manifest_from_dict", "emit_manifest"]

KINDS = (
    "bj-scan",
    "bj-scaling",
    "ising-scan",
    "ising-scaling",
    "roundtrip",
    "optimize-recombination",
    "splitting-state",
)

_BJ_MODEL_KEYS = {
    "family",
    "n_particles",
    "omega_f",
    "chi",
    "omega0",
    "beta1",
    "beta2",
    "omega_end",
    "phase",
    "pulse_axis",
    "pulse_angle",
}
_ISING_MODEL_KEYS = {
    "family",
    "n_spins",
    "tau",
    "b0",
    "j0",
    "tau_prime",
    "power",
    "interaction_range",
    "phase",
    "allow_large",
}
_SETTINGS_KEYS = {"dt", "norm_tolerance"}
_GRID_KEYS = {"min", "max", "points"}
_OPTIMIZER_KEYS = {"grid_points", "refine"}

# keys permitted at the top level, by kind
_COMMON_KEYS = {"kind", "model", "settings", "output_dir", "workers"}
_KIND_KEYS = {
    "bj-scan": _COMMON_KEYS | {"phases", "phase_grid", "probe_delta", "optimizer", "chi_over_n_hz"},
    "ising-scan": _COMMON_KEYS | {"phases", "phase_grid", "probe_delta"},
    "bj-scaling": _COMMON_KEYS
    | {"n_values", "scan_points", "optimizer", "probe_delta", "chi_over_n_hz"},
    "ising-scaling": _COMMON_KEYS | {"n_values", "scan_points", "optimizer"},
    "roundtrip": _COMMON_KEYS | {"chi_over_n_hz"},
    "optimize-recombination": _COMMON_KEYS | {"optimizer", "probe_delta", "chi_over_n_hz"},
    "splitting-state": _COMMON_KEYS | {"chi_over_n_hz"},
}


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class RunManifest:
    kind: str
    config: BjProtocolConfig | IsingProtocolConfig
    settings: EvolutionSettings
    phases: tuple[float, ...] | None = None
    n_values: tuple[int, ...] | None = None
    probe_delta: float | None = None
    scan_points: int = 21
    optimizer_grid: int = 21
    optimizer_refine: tuple[int, ...] = (81, 41)
    output_dir: str | None = None
    workers: int = 1
    chi_over_n_hz: float | None = None

    @property
    def family(self) -> str:
        return "bj" if isinstance(self.config, BjProtocolConfig) else "ising"


def _expect(cond, msg):
    if not cond:
        raise ManifestError(msg)


def _check_keys(section: dict, allowed: set, where: str):
    _expect(isinstance(section, dict), f"{where} must be a JSON object")
    for k in section:
        if k not in allowed:
            raise ManifestError(f"unknown key '{k}' in {where}")


def _number(d, key, where, default=None, required=False, allow_none=False):
    if key not in d:
        if required:
            raise ManifestError(f"missing required key '{key}' in {where}")
        return default
    v = d[key]
    if v is None and allow_none:
        return None
    _expect(
        isinstance(v, (int, float)) and not isinstance(v, bool),
        f"'{key}' in {where} must be a number",
    )
    return float(v)


def _integer(d, key, where, default=None, required=False):
    if key not in d:
        if required:
            raise ManifestError(f"missing required key '{key}' in {where}")
        return default
    v = d[key]
    _expect(isinstance(v, int) and not isinstance(v, bool), f"'{key}' in {where} must be an integer")
    return int(v)


def _parse_model(kind: str, model: dict):
    _expect(isinstance(model, dict), "'model' must be a JSON object")
    family = model.get("family")
    _expect(family in ("bj", "ising"), "model.family must be 'bj' or 'ising'")
    if kind.startswith("bj-"):
        _expect(family == "bj", f"kind {kind} requires model.family 'bj', got '{family}'")
    if kind.startswith("ising-"):
        _expect(family == "ising", f"kind {kind} requires model.family 'ising', got '{family}'")
    if kind == "optimize-recombination":
        _expect(family == "bj", "optimize-recombination applies to the bj family only")

    try:
        if family == "bj":
            _check_keys(model, _BJ_MODEL_KEYS, "model")
            cfg = BjProtocolConfig(
                n_particles=_integer(model, "n_particles", "model", required=True),
                omega_f=_number(model, "omega_f", "model", required=True),
                chi=_number(model, "chi", "model", default=-1.0),
                omega0=_number(model, "omega0", "model", default=11.0),
                beta1=_number(model, "beta1", "model", default=0.1),
                beta2=_number(model, "beta2", "model", default=0.005),
                omega_end=_number(model, "omega_end", "model", allow_none=True),
                phase=_number(model, "phase", "model", default=0.0),
                pulse_axis=model.get("pulse_axis", "x"),
                pulse_angle=_number(model, "pulse_angle", "model", default=math.pi / 2.0),
            )
        else:
            _check_keys(model, _ISING_MODEL_KEYS, "model")
            rng = model.get("interaction_range")
            if rng is not None:
                rng = _integer(model, "interaction_range", "model")
            allow_large = model.get("allow_large", False)
            _expect(isinstance(allow_large, bool), "model.allow_large must be a boolean")
            cfg = IsingProtocolConfig(
                n_spins=_integer(model, "n_spins", "model", required=True),
                tau=_number(model, "tau", "model", required=True),
                b0=_number(model, "b0", "model", default=1.0),
                j0=_number(model, "j0", "model", default=-1.0),
                tau_prime=_number(model, "tau_prime", "model", allow_none=True),
                power=_number(model, "power", "model", default=3.0),
                interaction_range=rng,
                phase=_number(model, "phase", "model", default=0.0),
                allow_large=allow_large,
            )
    except ManifestError:
        raise
    except (ValueError, TypeError) as exc:
        raise ManifestError(f"invalid model: {exc}") from exc

    if family == "bj" and kind != "splitting-state" and cfg.omega_f == cfg.omega0:
        raise ManifestError(
            "omega_f == omega0 (no-sweep marker) is only meaningful for splitting-state"
        )
    return cfg


def _parse_phases(data: dict, config) -> tuple[float, ...]:
    has_list = "phases" in data
    has_grid = "phase_grid" in data
    _expect(not (has_list and has_grid), "give either 'phases' or 'phase_grid', not both")
    if has_list:
        raw = data["phases"]
        _expect(
            isinstance(raw, list) and len(raw) > 0,
            "'phases' must be a non-empty list of numbers",
        )
        out = []
        for i, v in enumerate(raw):
            _expect(
                isinstance(v, (int, float)) and not isinstance(v, bool),
                f"phases[{i}] must be a number",
            )
            out.append(float(v))
        return tuple(out)
    n = config.n_particles if hasattr(config, "n_particles") else config.n_spins
    if has_grid:
        grid = data["phase_grid"]
        _check_keys(grid, _GRID_KEYS, "phase_grid")
        lo = _number(grid, "min", "phase_grid", required=True)
        hi = _number(grid, "max", "phase_grid", required=True)
        points = _integer(grid, "points", "phase_grid", required=True)
        _expect(points >= 2 and hi > lo, "phase_grid needs points >= 2 and max > min")
    else:
        # default: half a fringe of the uncorrected sinusoid, centred on 0
        lo, hi, points = -math.pi / (2 * n), math.pi / (2 * n), 41
    return tuple(float(p) for p in np.linspace(lo, hi, points))


def _parse_optimizer(data: dict):
    opt = data.get("optimizer")
    if opt is None:
        return 21, (81, 41)
    _check_keys(opt, _OPTIMIZER_KEYS, "optimizer")
    grid = _integer(opt, "grid_points", "optimizer", default=21)
    _expect(grid >= 2, "optimizer.grid_points must be >= 2")
    refine = opt.get("refine", [81, 41])
    _expect(
        isinstance(refine, list) and all(isinstance(r, int) and not isinstance(r, bool) and r >= 2 for r in refine),
        "optimizer.refine must be a list of integers >= 2",
    )
    return grid, tuple(refine)


def manifest_from_dict(data: dict) -> RunManifest:
    _expect(isinstance(data, dict), "manifest must be a JSON object")
    kind = data.get("kind")
    _expect(kind in KINDS, f"kind must be one of {', '.join(KINDS)}; got {kind!r}")
    _check_keys(data, _KIND_KEYS[kind], "manifest")
    _expect("model" in data, "missing required key 'model' in manifest")
    config = _parse_model(kind, data["model"])

    settings_raw = data.get("settings", {})
    _check_keys(settings_raw, _SETTINGS_KEYS, "settings")
    base = default_settings(config)
    dt = _number(settings_raw, "dt", "settings", default=base.dt)
    _expect(dt > 0.0, "settings.dt must be positive")
    norm_tol = _number(settings_raw, "norm_tolerance", "settings", default=base.norm_tolerance)
    _expect(norm_tol > 0.0, "settings.norm_tolerance must be positive")
    settings = EvolutionSettings(dt=dt, norm_tolerance=norm_tol)

    phases = None
    if kind in ("bj-scan", "ising-scan"):
        phases = _parse_phases(data, config)

    n_values = None
    if kind in ("bj-scaling", "ising-scaling"):
        raw = data.get("n_values")
        _expect(
            isinstance(raw, list) and len(raw) >= 3,
            "scaling needs 'n_values', a list of at least 3 integers",
        )
        for v in raw:
            _expect(isinstance(v, int) and not isinstance(v, bool), "n_values must be integers")
        _expect(list(raw) == sorted(set(raw)), "n_values must be strictly increasing")
        n_values = tuple(int(v) for v in raw)

    probe_delta = _number(data, "probe_delta", "manifest", allow_none=True)
    if probe_delta is not None:
        _expect(probe_delta > 0.0, "probe_delta must be positive")

    scan_points = _integer(data, "scan_points", "manifest", default=21)
    _expect(scan_points >= 5, "scan_points must be >= 5")

    optimizer_grid, optimizer_refine = _parse_optimizer(data)

    workers = _integer(data, "workers", "manifest", default=1)
    _expect(workers >= 1, "workers must be >= 1")

    output_dir = data.get("output_dir")
    if output_dir is not None:
        _expect(isinstance(output_dir, str) and output_dir, "output_dir must be a non-empty string")

    chi_hz = _number(data, "chi_over_n_hz", "manifest", allow_none=True)
    if chi_hz is not None:
        _expect(chi_hz > 0.0, "chi_over_n_hz must be positive")

    return RunManifest(
        kind=kind,
        config=config,
        settings=settings,
        phases=phases,
        n_values=n_values,
        probe_delta=probe_delta,
        scan_points=scan_points,
        optimizer_grid=optimizer_grid,
        optimizer_refine=optimizer_refine,
        output_dir=output_dir,
        workers=workers,
        chi_over_n_hz=chi_hz,
    )


def parse_manifest(path: str) -> RunManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    return manifest_from_dict(data)


def emit_manifest(m: RunManifest) -> dict:
    """Fully resolved dict form; manifest_from_dict(emit_manifest(m)) == m."""
    if m.family == "bj":
        c = m.config
        model = {
            "family": "bj",
            "n_particles": c.n_particles,
            "omega_f": c.omega_f,
            "chi": c.chi,
            "omega0": c.omega0,
            "beta1": c.beta1,
            "beta2": c.beta2,
            "omega_end": c.omega_end,
            "phase": c.phase,
            "pulse_axis": c.pulse_axis,
            "pulse_angle": c.pulse_angle,
        }
    else:
        c = m.config
        model = {
            "family": "ising",
            "n_spins": c.n_spins,
            "tau": c.tau,
            "b0": c.b0,
            "j0": c.j0,
            "tau_prime": c.tau_prime,
            "power": c.power,
            "interaction_range": c.interaction_range,
            "phase": c.phase,
            "allow_large": c.allow_large,
        }
    out = {
        "kind": m.kind,
        "model": model,
        "settings": {"dt": m.settings.dt, "norm_tolerance": m.settings.norm_tolerance},
        "workers": m.workers,
    }
    if m.phases is not None:
        out["phases"] = list(m.phases)
    if m.n_values is not None:
        out["n_values"] = list(m.n_values)
        out["scan_points"] = m.scan_points
    if m.probe_delta is not None:
        out["probe_delta"] = m.probe_delta
    needs_optimizer = m.kind in ("bj-scaling", "ising-scaling", "optimize-recombination") or (
        m.kind == "bj-scan" and m.config.omega_end is None
    )
    if needs_optimizer:
        out["optimizer"] = {"grid_points": m.optimizer_grid, "refine": list(m.optimizer_refine)}
    if m.output_dir is not None:
        out["output_dir"] = m.output_dir
    if m.chi_over_n_hz is not None:
        out["chi_over_n_hz"] = m.chi_over_n_hz
    return out
