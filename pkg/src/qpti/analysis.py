"""Phase scans, error-propagation precision, fringe fits, endpoint
optimization, and precision-scaling studies.

The phase uncertainty is error propagation through the readout signal,

    delta_phi = sqrt(<O^2> - <O>^2) / |d<O>/dphi|,

with the derivative taken by central difference. Fringes are fitted to
A sin(N phi / c); the minimum uncertainty at phi = 0 combines the fit
with the directly measured noise floor B = <O^2>|_(phi=0) as
sqrt(B) c / (A N).

Runners are duck-typed: anything with run_many(phis) -> outcomes is
scanned in one batch; a plain callable phi -> outcome is evaluated
point by point. Outcomes need .mean, .second_moment and (for scan
records) .norm_drift / .parity_drift.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.optimize

__all__ = [
    "PhaseScanRecord",
    "SinusoidFit",
    "ScalingRow",
    "ScalingFit",
    "ScalingStudyResult",
    "OptimizationResult",
    "FitError",
    "OptimizationError",
    "ScalingError",
    "default_probe_delta",
    "derivative_floor",
    "stretch_estimate",
    "phase_uncertainty",
    "scan_phase",
    "fit_sinusoid",
    "min_uncertainty",
    "optimize_recombination",
    "compute_scaling_row",
    "scaling_study",
    "scaling_fit_from_rows",
    "fit_power_law",
]


class FitError(RuntimeError):
    pass


class OptimizationError(RuntimeError):
    def __init__(self, message, evaluations=None):
        super().__init__(message)
        self.evaluations = evaluations or []


class ScalingError(RuntimeError):
    """Per-size failure during a scaling study; .rows holds completed sizes."""

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = rows or []


@dataclass(frozen=True)
class PhaseScanRecord:
    phi: float
    mean: float
    second_moment: float
    delta_phi: float
    norm_drift: float
    parity_drift: float


@dataclass(frozen=True)
class SinusoidFit:
    """Fit of mean(phi) = amplitude * sin(n phi / stretch)."""

    amplitude: float
    stretch: float
    rms_residual: float
    window: float
    n_points: int


@dataclass(frozen=True)
class ScalingRow:
    n: int
    delta_phi_min: float
    fit_amplitude: float
    fit_stretch: float
    omega_end: float | None = None
    tau: float | None = None


@dataclass(frozen=True)
class ScalingFit:
    """Power-law fit delta_phi_min ~ exp(intercept) * N^slope (natural logs)."""

    points: tuple[tuple[float, float], ...]
    slope: float
    intercept: float
    slope_err: float


@dataclass(frozen=True)
class ScalingStudyResult:
    rows: tuple[ScalingRow, ...]
    fit: ScalingFit


@dataclass(frozen=True)
class OptimizationResult:
    omega_end: float
    delta_phi: float
    evaluations: tuple[tuple[float, float], ...]


def default_probe_delta(n: int) -> float:
    # The fringe frequency grows with N, so the probe step must shrink.
    return min(1e-3, 0.01 / n)


def derivative_floor(n: int) -> float:
    return 1e-12 * n


def stretch_estimate(omega_f: float, omega_c: float = 1.0) -> float:
    """Quadratic-fluctuation estimate of the fringe stretch c(omega_f).

    Exact in the N -> infinity limit; finite N pushes c slightly higher.
    Useful as a fit seed and for sizing scan windows.
    """
    x = omega_f / omega_c
    if not 0.0 <= x < 1.0:
        raise ValueError("stretch estimate needs 0 <= omega_f < omega_c")
    return 1.0 / math.sqrt(1.0 - x * x)


def _particle_number(runner, n):
    if n is not None:
        return int(n)
    got = getattr(runner, "n_particles", None)
    if got is None:
        raise ValueError("runner exposes no n_particles; pass n= explicitly")
    return int(got)


def _run_batch(runner, phis):
    """One outcome per phi, batched when the runner supports it."""
    if hasattr(runner, "run_many"):
        return list(runner.run_many(phis))
    return [runner(float(p)) for p in phis]


def phase_uncertainty(runner, phi: float, delta: float | None = None, n: int | None = None) -> float:
    """Error-propagation uncertainty at one working point.

    Returns math.inf when the signal slope is below the floor (the
    readout carries no first-order phase information there).
    """
    n = _particle_number(runner, n)
    if delta is None:
        delta = default_probe_delta(n)
    if delta <= 0.0:
        raise ValueError("finite-difference step must be positive")
    lo, mid, hi = _run_batch(runner, [phi - delta, phi, phi + delta])
    return _uncertainty_from_probes(lo, mid, hi, delta, n)


def _uncertainty_from_probes(lo, mid, hi, delta, n) -> float:
    deriv = (hi.mean - lo.mean) / (2.0 * delta)
    if abs(deriv) < derivative_floor(n):
        return math.inf
    spread = math.sqrt(max(mid.second_moment - mid.mean**2, 0.0))
    return spread / abs(deriv)


def scan_phase(runner, phis, delta: float | None = None, n: int | None = None) -> list[PhaseScanRecord]:
    """One PhaseScanRecord per grid point, in input order.

    The whole scan (grid plus the two finite-difference probes per point)
    goes through the runner in a single batch. If that batch fails, the
    scan degrades to point-by-point evaluation, records the failing
    points as NaN rows, and keeps going.
    """
    phis = [float(p) for p in phis]
    n = _particle_number(runner, n)
    if delta is None:
        delta = default_probe_delta(n)
    all_phis = phis + [p - delta for p in phis] + [p + delta for p in phis]
    try:
        outs = _run_batch(runner, all_phis)
    except Exception as exc:  # degrade to per-point, keep scanning
        warnings.warn(f"batched scan failed ({exc}); retrying point by point", RuntimeWarning)
        return _scan_pointwise(runner, phis, delta, n)
    p = len(phis)
    records = []
    for i, phi in enumerate(phis):
        mid, lo, hi = outs[i], outs[p + i], outs[2 * p + i]
        records.append(
            PhaseScanRecord(
                phi=phi,
                mean=mid.mean,
                second_moment=mid.second_moment,
                delta_phi=_uncertainty_from_probes(lo, mid, hi, delta, n),
                norm_drift=getattr(mid, "norm_drift", 0.0),
                parity_drift=getattr(mid, "parity_drift", 0.0),
            )
        )
    return records


def _scan_pointwise(runner, phis, delta, n) -> list[PhaseScanRecord]:
    records = []
    for phi in phis:
        try:
            lo, mid, hi = _run_batch(runner, [phi - delta, phi, phi + delta])
            records.append(
                PhaseScanRecord(
                    phi=phi,
                    mean=mid.mean,
                    second_moment=mid.second_moment,
                    delta_phi=_uncertainty_from_probes(lo, mid, hi, delta, n),
                    norm_drift=getattr(mid, "norm_drift", 0.0),
                    parity_drift=getattr(mid, "parity_drift", 0.0),
                )
            )
        except Exception as exc:  # record the hole, keep scanning
            warnings.warn(f"scan point phi={phi} failed: {exc}", RuntimeWarning)
            records.append(
                PhaseScanRecord(phi, math.nan, math.nan, math.inf, math.nan, math.nan)
            )
    return records


def fit_sinusoid(
    records,
    n: int,
    window: float | None = None,
    c_guess: float = 1.0,
    fix_stretch: bool = False,
) -> SinusoidFit:
    """Least-squares fit of mean(phi) = A sin(n phi / c) inside |phi| <= window.

    Deterministic: the seed amplitude is the extremal mean, the seed
    stretch comes from the first positive-side zero crossing (falling
    back to c_guess). fix_stretch pins c = c_guess and solves the then
    linear problem exactly.
    """
    if c_guess <= 0.0:
        raise ValueError("c_guess must be positive")
    if window is None:
        window = math.pi * c_guess / (2.0 * n)
    pts = [
        (r.phi, r.mean)
        for r in records
        if abs(r.phi) <= window * (1.0 + 1e-12) and math.isfinite(r.mean)
    ]
    if len(pts) < 5:
        raise FitError(f"need >= 5 finite records inside |phi| <= {window}, got {len(pts)}")
    phis = np.array([p for p, _ in pts])
    means = np.array([m for _, m in pts])

    if fix_stretch:
        s = np.sin(n * phis / c_guess)
        denom = float(s @ s)
        if denom == 0.0:
            raise FitError("degenerate fit: sin(n phi / c) vanishes on every point")
        a = float(s @ means) / denom
        resid = a * s - means
        return SinusoidFit(a, c_guess, _rms(resid), window, len(pts))

    a0 = float(means[np.argmax(np.abs(means))])
    if a0 == 0.0:
        a0 = 1e-12
    c0 = _zero_crossing_stretch(phis, means, n) or c_guess

    def residual(params):
        a, c = params
        return a * np.sin(n * phis / c) - means

    sol = scipy.optimize.least_squares(
        residual,
        x0=[a0, c0],
        bounds=([-np.inf, 0.05 * c0], [np.inf, 20.0 * c0]),
        xtol=1e-12,
        ftol=1e-12,
        gtol=1e-12,
        max_nfev=400,
    )
    if not sol.success:
        raise FitError(f"sinusoid fit did not converge: {sol.message}")
    a, c = float(sol.x[0]), float(sol.x[1])
    if c < 0.051 * c0 or c > 19.9 * c0:
        raise FitError(f"fitted stretch c={c} pinned at the search bound; fit unreliable")
    return SinusoidFit(a, c, _rms(sol.fun), window, len(pts))


def _rms(x) -> float:
    return float(np.sqrt(np.mean(np.asarray(x) ** 2)))


def _zero_crossing_stretch(phis, means, n):
    """Seed c from the first sign change at phi > 0: half period pi c / n."""
    order = np.argsort(phis)
    phis, means = phis[order], means[order]
    pos = phis > 0
    p, m = phis[pos], means[pos]
    for i in range(len(p) - 1):
        if m[i] != 0.0 and m[i] * m[i + 1] < 0.0:
            # linear interpolation of the crossing point
            t = m[i] / (m[i] - m[i + 1])
            zero = p[i] + t * (p[i + 1] - p[i])
            return n * zero / math.pi
    return None


def min_uncertainty(amplitude: float, noise_floor: float, stretch: float, n: int) -> float:
    """sqrt(B) c / (A N) with B the second moment at the phi = 0 working point."""
    if amplitude <= 0.0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    if noise_floor < 0.0:
        raise ValueError(f"noise floor must be non-negative, got {noise_floor}")
    if stretch <= 0.0:
        raise ValueError(f"stretch must be positive, got {stretch}")
    return math.sqrt(noise_floor) * stretch / (amplitude * n)


# -- recombination-endpoint optimization --------------------------------------


def optimize_recombination(
    runner,
    omega_ends=None,
    grid_points: int = 21,
    refine=(81, 41),
    probe_delta: float | None = None,
) -> OptimizationResult:
    """Minimize phase_uncertainty(phi=0) over the recombination endpoint.

    The endpoint is the sweep stop omega_end for a Josephson runner
    (candidates over (omega_c, omega0]) and the early-stop time tau_prime
    for an Ising runner (candidates over (tau/2, tau]); the result's
    omega_end field carries whichever one was optimized. Scans an
    ascending candidate grid in one shared evolution per round (each
    candidate is a snapshot stop), then re-grids around the incumbent
    with the given refinement sizes. The objective oscillates on a scale
    much finer than the initial spacing, so the refinement rounds do the
    real work of landing on a good endpoint; ties go to the smaller
    endpoint.
    """
    cfg = runner.config
    n = runner.n_particles
    if hasattr(runner, "omega_end_scan"):
        domain_lo, domain_hi, scan = cfg.omega_c, cfg.omega0, runner.omega_end_scan
    else:
        domain_lo, domain_hi, scan = cfg.tau / 2.0, cfg.tau, runner.tau_prime_scan
    if probe_delta is None:
        probe_delta = 0.01 / n
    if omega_ends is None:
        if grid_points < 2:
            raise ValueError("need at least 2 grid points")
        edges = np.linspace(domain_lo, domain_hi, grid_points + 1)
        omega_ends = edges[1:]  # half-open (domain_lo, domain_hi]
    omega_ends = np.asarray(omega_ends, dtype=float)

    evaluations: list[tuple[float, float]] = []
    best_omega, best_value = math.nan, math.inf

    def scan_round(cands):
        nonlocal best_omega, best_value
        cands = np.unique(cands)
        per_omega = scan([-probe_delta, 0.0, probe_delta], cands)
        for omega, (lo, mid, hi) in zip(cands, per_omega):
            val = _uncertainty_from_probes(lo, mid, hi, probe_delta, n)
            evaluations.append((float(omega), val))
            # strict < plus ascending candidates implements the smaller-
            # omega tie break
            if val < best_value or (val == best_value and omega < best_omega):
                best_omega, best_value = float(omega), val
        return cands

    cands = scan_round(omega_ends)
    for points in refine:
        spacing = np.min(np.diff(cands)) if len(cands) > 1 else (domain_hi - domain_lo) / 20
        lo = max(best_omega - spacing, domain_lo + 1e-9)
        hi = min(best_omega + spacing, domain_hi)
        if math.isinf(best_value):
            break  # nothing to refine around
        cands = scan_round(np.linspace(lo, hi, points))

    if math.isinf(best_value):
        raise OptimizationError(
            "objective is infinite at every candidate (signal slope below floor)",
            evaluations,
        )
    return OptimizationResult(best_omega, best_value, tuple(evaluations))


# -- scaling studies -----------------------------------------------------------


def fit_power_law(ns, values) -> ScalingFit:
    """Slope and intercept of ln(value) vs ln(n) by linear least squares."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.shape != values.shape or ns.size < 3:
        raise ValueError("need >= 3 (n, value) pairs of matching shape")
    if not (np.all(np.isfinite(values)) and np.all(values > 0.0) and np.all(ns > 0.0)):
        raise ValueError("power-law fit needs finite positive data")
    x, y = np.log(ns), np.log(values)
    coeffs, cov = np.polyfit(x, y, 1, cov=True)
    return ScalingFit(
        points=tuple(zip(ns.tolist(), values.tolist())),
        slope=float(coeffs[0]),
        intercept=float(coeffs[1]),
        slope_err=float(math.sqrt(max(cov[0, 0], 0.0))),
    )


def compute_scaling_row(
    config,
    n: int,
    settings=None,
    scan_points: int = 21,
    optimizer_grid: int = 21,
    refine=(81, 41),
    c_guess: float | None = None,
) -> ScalingRow:
    """The full per-size pipeline: (optimize,) scan, fit, phi = 0 uncertainty.

    This is the unit of work a scaling study fans out over; calling it
    for one size is independent of every other size.
    """
    from .protocol import (
        BjProtocolConfig,
        BjPhaseRunner,
        IsingProtocolConfig,
        IsingPhaseRunner,
    )
    from dataclasses import replace

    is_bj = isinstance(config, BjProtocolConfig)
    if not is_bj and not isinstance(config, IsingProtocolConfig):
        raise TypeError(f"unknown config type {type(config)!r}")
    if c_guess is None:
        c_guess = stretch_estimate(config.omega_f, config.omega_c) if is_bj else 1.0
    if is_bj:
        cfg_n = replace(config, n_particles=int(n))
        runner = BjPhaseRunner(cfg_n, settings)
        if cfg_n.omega_end is None:
            opt = optimize_recombination(runner, grid_points=optimizer_grid, refine=refine)
            omega_end = opt.omega_end
        else:
            omega_end = cfg_n.omega_end
    else:
        cfg_n = replace(config, n_spins=int(n))
        runner = IsingPhaseRunner(cfg_n, settings)
        if cfg_n.tau_prime is None:
            opt = optimize_recombination(runner, grid_points=optimizer_grid, refine=refine)
            runner = runner.with_tau_prime(opt.omega_end)
        omega_end = None
    return _scaling_row(runner, int(n), omega_end, scan_points, c_guess, is_bj)


def scaling_study(
    config,
    ns,
    settings=None,
    scan_points: int = 21,
    optimizer_grid: int = 21,
    refine=(81, 41),
    c_guess: float | None = None,
) -> ScalingStudyResult:
    """delta_phi_min versus particle number, with per-size fringe fits.

    Josephson configs get a fresh omega_end optimization per size unless
    the template pins one; Ising configs likewise re-optimize the
    recombination stop tau_prime unless the template pins it (all sizes
    share the template's tau). The returned fit is ln(delta_phi_min)
    against ln(N).
    """
    rows: list[ScalingRow] = []
    for n in ns:
        try:
            rows.append(
                compute_scaling_row(
                    config,
                    int(n),
                    settings,
                    scan_points=scan_points,
                    optimizer_grid=optimizer_grid,
                    refine=refine,
                    c_guess=c_guess,
                )
            )
        except Exception as exc:
            raise ScalingError(f"size N={n} failed: {exc}", rows) from exc
    return scaling_fit_from_rows(rows)


def scaling_fit_from_rows(rows) -> ScalingStudyResult:
    rows = sorted(rows, key=lambda r: r.n)
    vals = [r.delta_phi_min for r in rows]
    if not all(math.isfinite(v) and v > 0.0 for v in vals):
        raise ScalingError("non-finite delta_phi_min; cannot fit scaling", rows)
    fit = fit_power_law([r.n for r in rows], vals)
    return ScalingStudyResult(tuple(rows), fit)


def _scaling_row(runner, n, omega_end, scan_points, c_guess, is_bj) -> ScalingRow:
    """Fringe scan, sinusoid fit and direct phi = 0 uncertainty in one batch."""
    delta = default_probe_delta(n)
    window = math.pi * c_guess / (2.0 * n)
    grid = np.linspace(-window, window, scan_points)
    phis = list(grid) + [-delta, 0.0, delta]
    if is_bj:
        outs = runner.run_many(phis, omega_end=omega_end)
    else:
        outs = runner.run_many(phis)
    records = [
        PhaseScanRecord(float(p), o.mean, o.second_moment, math.nan, o.norm_drift, o.parity_drift)
        for p, o in zip(grid, outs[:scan_points])
    ]
    lo, mid, hi = outs[scan_points:]
    dphi = _uncertainty_from_probes(lo, mid, hi, delta, n)
    fit = fit_sinusoid(records, n, window=window, c_guess=c_guess, fix_stretch=not is_bj)
    return ScalingRow(
        n=n,
        delta_phi_min=dphi,
        fit_amplitude=fit.amplitude,
        fit_stretch=fit.stretch,
        omega_end=omega_end,
        # the recombination stop actually used, tau unless stopped early
        tau=None if is_bj else runner.config.tau_prime_resolved,
    )
