"""Batch front-end: one manifest in, deterministic CSV artifacts out.

Every experiment kind is a subcommand taking the same flags. Numeric
output files never contain timestamps; wall-clock information goes to
run.log only, so re-running a manifest yields byte-identical CSV bodies.

Exit codes: 0 success, 2 manifest/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import analysis
from .manifest import KINDS, ManifestError, RunManifest, emit_manifest, parse_manifest
from .propagator import GroundStateError, IntegrationError
from .protocol import (
    BjPhaseRunner,
    BjProtocolConfig,
    IsingPhaseRunner,
    roundtrip,
    splitting_state,
)

NUMERICAL_ERRORS = (
    IntegrationError,
    GroundStateError,
    analysis.FitError,
    analysis.OptimizationError,
    analysis.ScalingError,
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return format(float(value), ".17g")


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


class RunLog:
    """Append-only log; the one artifact allowed to carry timestamps."""

    def __init__(self, path: Path):
        self._fh = open(path, "w", encoding="utf-8")

    def write(self, message: str):
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self._fh.write(f"{stamp} {message}\n")
        self._fh.flush()

    def close(self):
        self._fh.close()


def _seconds_note(time_units: float, n: int, chi_over_n_hz: float) -> str:
    secs = time_units / (chi_over_n_hz * n)
    return f"{time_units:g} time units = {secs:.3g} s at chi/N = {chi_over_n_hz:g} Hz, N = {n}"


def _scaling_task(args):
    config, n, settings, scan_points, optimizer_grid, refine = args
    return analysis.compute_scaling_row(
        config,
        n,
        settings,
        scan_points=scan_points,
        optimizer_grid=optimizer_grid,
        refine=refine,
    )


def _scaling_rows(m: RunManifest, log: RunLog):
    tasks = [
        (m.config, n, m.settings, m.scan_points, m.optimizer_grid, m.optimizer_refine)
        for n in m.n_values
    ]
    if m.workers <= 1:
        return [_scaling_task(t) for t in tasks]
    log.write(f"fanning out {len(tasks)} sizes over {m.workers} workers")
    with ProcessPoolExecutor(max_workers=m.workers) as pool:
        return list(pool.map(_scaling_task, tasks))


def _execute_scan(m: RunManifest, out_dir: Path, log: RunLog):
    if m.family == "bj":
        runner = BjPhaseRunner(m.config, m.settings)
        if m.config.omega_end is None:
            opt = analysis.optimize_recombination(
                runner,
                grid_points=m.optimizer_grid,
                refine=m.optimizer_refine,
                probe_delta=m.probe_delta,
            )
            log.write(
                f"optimized omega_end = {opt.omega_end!r} "
                f"(delta_phi = {opt.delta_phi:.6g}, {len(opt.evaluations)} evaluations)"
            )
            runner = runner.with_omega_end(opt.omega_end)
    else:
        runner = IsingPhaseRunner(m.config, m.settings)
    records = analysis.scan_phase(runner, m.phases, delta=m.probe_delta)
    _write_csv(
        out_dir / "scan.csv",
        ["phi", "mean", "second_moment", "delta_phi", "norm_drift", "parity_drift"],
        [
            (r.phi, r.mean, r.second_moment, r.delta_phi, r.norm_drift, r.parity_drift)
            for r in records
        ],
    )
    finite = [r for r in records if math.isfinite(r.delta_phi)]
    if finite:
        best = min(finite, key=lambda r: r.delta_phi)
        log.write(f"scan minimum delta_phi = {best.delta_phi:.6g} at phi = {best.phi:.6g}")
    log.write(f"max norm drift = {max(r.norm_drift for r in records):.3e}")
    log.write(f"max parity drift = {max(r.parity_drift for r in records):.3e}")
    if m.chi_over_n_hz is not None and m.family == "bj":
        tau = runner.split_duration
        log.write("splitting sweep: " + _seconds_note(tau, m.config.n_particles, m.chi_over_n_hz))
    return f"scan.csv ({len(records)} rows)"


def _execute_scaling(m: RunManifest, out_dir: Path, log: RunLog):
    rows = _scaling_rows(m, log)
    result = analysis.scaling_fit_from_rows(rows)
    knob = "omega_end_opt" if m.family == "bj" else "tau"
    csv_rows = [
        (
            r.n,
            r.delta_phi_min,
            r.omega_end if m.family == "bj" else r.tau,
            r.fit_amplitude,
            r.fit_stretch,
        )
        for r in result.rows
    ]
    csv_rows.append(("summary", result.fit.slope, result.fit.slope_err, result.fit.intercept, None))
    _write_csv(
        out_dir / "scaling.csv",
        ["n", "delta_phi_min", knob, "fit_A", "fit_c"],
        csv_rows,
    )
    log.write(
        f"scaling fit: slope = {result.fit.slope:.6g} +/- {result.fit.slope_err:.2g}, "
        f"intercept = {result.fit.intercept:.6g}"
    )
    if m.chi_over_n_hz is not None and m.family == "bj":
        cfg = m.config
        tau = (cfg.omega0 - cfg.omega_c) / cfg.beta1 + (cfg.omega_c - cfg.omega_f) / cfg.beta2
        for r in result.rows:
            log.write(f"N={r.n}: splitting " + _seconds_note(tau, r.n, m.chi_over_n_hz))
    return f"scaling.csv ({len(result.rows)} sizes, slope {result.fit.slope:.4g})"


def _execute_roundtrip(m: RunManifest, out_dir: Path, log: RunLog):
    result = roundtrip(m.config, m.settings)
    _write_csv(
        out_dir / "roundtrip.csv",
        ["fidelity", "duration_split", "duration_recombine"],
        [(result.fidelity, result.duration_split, result.duration_recombine)],
    )
    log.write(f"roundtrip fidelity = {result.fidelity:.12g}")
    if m.chi_over_n_hz is not None and m.family == "bj":
        n = m.config.n_particles
        log.write("split: " + _seconds_note(result.duration_split, n, m.chi_over_n_hz))
        log.write("recombine: " + _seconds_note(result.duration_recombine, n, m.chi_over_n_hz))
    return f"roundtrip.csv (fidelity {result.fidelity:.6f})"


def _execute_optimize(m: RunManifest, out_dir: Path, log: RunLog):
    runner = BjPhaseRunner(m.config, m.settings)
    result = analysis.optimize_recombination(
        runner,
        grid_points=m.optimizer_grid,
        refine=m.optimizer_refine,
        probe_delta=m.probe_delta,
    )
    rows = []
    marked = False
    for omega, val in result.evaluations:
        hit = not marked and omega == result.omega_end and val == result.delta_phi
        rows.append((omega, val, 1 if hit else 0))
        marked = marked or hit
    _write_csv(out_dir / "optimize.csv", ["omega_end", "delta_phi", "is_optimum"], rows)
    log.write(
        f"optimum omega_end = {result.omega_end!r}, delta_phi = {result.delta_phi:.6g} "
        f"({len(result.evaluations)} evaluations)"
    )
    return f"optimize.csv (optimum at omega_end = {result.omega_end:.6g})"


def _execute_splitting_state(m: RunManifest, out_dir: Path, log: RunLog):
    state = splitting_state(m.config, m.settings)
    _write_csv(
        out_dir / "state.csv",
        ["index", "re", "im"],
        [(i, z.real, z.imag) for i, z in enumerate(state)],
    )
    if m.family == "bj":
        from .collective_spin import jz_moments

        mean, second = jz_moments(state)
    else:
        from .ising import mz_diagonal, mz_moments

        mean, second = mz_moments(state, mz_diagonal(m.config.n_spins, allow_large=True))
    log.write(f"splitting state moments: mean = {mean:.6g}, second = {second:.6g}")
    return f"state.csv ({state.shape[0]} amplitudes)"


_EXECUTORS = {
    "bj-scan": _execute_scan,
    "ising-scan": _execute_scan,
    "bj-scaling": _execute_scaling,
    "ising-scaling": _execute_scaling,
    "roundtrip": _execute_roundtrip,
    "optimize-recombination": _execute_optimize,
    "splitting-state": _execute_splitting_state,
}


def execute(m: RunManifest) -> str:
    """Run a fully validated manifest; returns a one-line result summary."""
    if m.output_dir is None:
        raise ManifestError("no output directory: set output_dir in the manifest or pass --out")
    out_dir = Path(m.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.resolved.json", "w", encoding="utf-8") as fh:
        json.dump(emit_manifest(m), fh, indent=2, sort_keys=True)
        fh.write("\n")
    log = RunLog(out_dir / "run.log")
    try:
        log.write(f"kind = {m.kind}, workers = {m.workers}, dt = {m.settings.dt!r}")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            summary = _EXECUTORS[m.kind](m, out_dir, log)
        for w in caught:
            log.write(f"warning: {w.message}")
        log.write(f"done: {summary}")
        return summary
    finally:
        log.close()


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--manifest", required=True, help="path to the JSON manifest")
    p.add_argument("--out", help="output directory (overrides manifest output_dir)")
    p.add_argument("--workers", type=int, help="worker count (overrides QPTI_WORKERS and manifest)")
    p.add_argument("--dt", type=float, help="integrator step override")
    p.add_argument(
        "--seedless",
        action="store_true",
        help="assert the run uses no randomness anywhere (always true; for CI invocations)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpti",
        description="Adiabatic quantum-phase-transition interferometry simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _add_common_flags(sub.add_parser(kind, help=f"run a {kind} manifest"))
    plot = sub.add_parser("plot-script", help="emit a gnuplot script for an executed manifest")
    plot.add_argument("--manifest", required=True)
    plot.add_argument("--out", help="directory holding the CSVs (defaults to manifest output_dir)")
    return parser


def _resolve_workers(args, m: RunManifest) -> int:
    if args.workers is not None:
        if args.workers < 1:
            raise ManifestError("--workers must be >= 1")
        return args.workers
    env = os.environ.get("QPTI_WORKERS")
    if env is not None:
        try:
            value = int(env)
        except ValueError as exc:
            raise ManifestError(f"QPTI_WORKERS must be an integer, got {env!r}") from exc
        if value < 1:
            raise ManifestError("QPTI_WORKERS must be >= 1")
        return value
    return m.workers


def _apply_overrides(args, m: RunManifest) -> RunManifest:
    changes = {}
    if args.out is not None:
        changes["output_dir"] = args.out
    changes["workers"] = _resolve_workers(args, m)
    if args.dt is not None:
        if args.dt <= 0.0:
            raise ManifestError("--dt must be positive")
        changes["settings"] = replace(m.settings, dt=args.dt)
    return replace(m, **changes)


def _plot_script(args) -> int:
    try:
        m = parse_manifest(args.manifest)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or m.output_dir
    if out is None:
        print("error: no output directory known; pass --out", file=sys.stderr)
        return 2
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    script = _gnuplot_for(m)
    path = out_dir / "plot.gp"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(script)
    print(f"wrote {path}")
    return 0


def _gnuplot_for(m: RunManifest) -> str:
    lines = [
        "# generated by qpti plot-script; run with: gnuplot plot.gp",
        'set datafile separator ","',
        "set key left top",
    ]
    if m.kind.endswith("-scan"):
        n = m.config.n_particles if m.family == "bj" else m.config.n_spins
        lines += [
            'set terminal pngcairo size 900,600; set output "scan.png"',
            'set xlabel "phi"; set ylabel "mean"',
            f'plot "scan.csv" using 1:2 with points title "signal", '
            f'"" using 1:2 smooth csplines with lines title "interpolation"',
            'set output "uncertainty.png"',
            'set ylabel "delta phi"; set logscale y',
            f'plot "scan.csv" using 1:4 with linespoints title "delta phi", '
            f"{1.0 / n:.6g} with lines title \"1/N\"",
        ]
    elif m.kind.endswith("-scaling"):
        lines += [
            'set terminal pngcairo size 900,600; set output "scaling.png"',
            'set xlabel "N"; set ylabel "delta phi min"',
            "set logscale xy",
            'plot "scaling.csv" using 1:2 with points pt 7 title "measured", '
            '1/x with lines title "Heisenberg 1/N", 1/sqrt(x) with lines title "SQL"',
        ]
    elif m.kind == "optimize-recombination":
        lines += [
            'set terminal pngcairo size 900,600; set output "optimize.png"',
            'set xlabel "omega_end"; set ylabel "delta phi"; set logscale y',
            'plot "optimize.csv" using 1:2 with points title "objective"',
        ]
    elif m.kind == "splitting-state":
        lines += [
            'set terminal pngcairo size 900,600; set output "state.png"',
            'set xlabel "basis index"; set ylabel "|amplitude|^2"',
            'plot "state.csv" using 1:($2*$2+$3*$3) with impulses title "population"',
        ]
    else:  # roundtrip: single number, nothing worth plotting
        lines += ["# roundtrip produces a single fidelity value; see roundtrip.csv"]
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "plot-script":
        return _plot_script(args)
    try:
        m = parse_manifest(args.manifest)
        if m.kind != args.command:
            raise ManifestError(
                f"manifest kind '{m.kind}' does not match subcommand '{args.command}'"
            )
        m = _apply_overrides(args, m)
        if m.output_dir is None:
            raise ManifestError(
                "no output directory: set output_dir in the manifest or pass --out"
            )
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seedless:
        print("seedless: this toolkit draws no random numbers; outputs are fully deterministic")
    try:
        summary = execute(m)
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(f"{m.kind}: wrote {summary} in {m.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
