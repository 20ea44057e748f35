"""Piecewise-linear drive schedules for the two sweep protocols.

A schedule maps time to a scalar drive amplitude. All protocol sweeps in this
package are continuous piecewise-linear ramps, so one small type covers both
models: the Josephson drive Omega(t) is a two-stage ramp through the critical
point, and the Ising protocol uses one schedule for the transverse field B(t)
and one for the coupling prefactor J(t).

Time is measured in units of 1/|chi| (Josephson) or the user's B, J units
(Ising); builders below only do arithmetic, unit choices live with the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "PiecewiseLinearSchedule",
    "constant_schedule",
    "bj_splitting_schedule",
    "bj_recombination_schedule",
    "ising_splitting_schedules",
    "ising_recombination_schedules",
]


@dataclass(frozen=True)
class PiecewiseLinearSchedule:
    """Continuous piecewise-linear function of time on [0, duration].

    segments is a tuple of (t0, t1, v0, v1): on [t0, t1] the value ramps
    linearly from v0 to v1. Segments must tile [0, duration] in order and
    join continuously; zero-length segments are rejected.
    """

    segments: tuple[tuple[float, float, float, float], ...]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        prev_t1 = 0.0
        prev_v1 = None
        for t0, t1, v0, v1 in self.segments:
            if not (t1 > t0):
                raise ValueError(f"segment [{t0}, {t1}] has non-positive length")
            if abs(t0 - prev_t1) > 1e-12 * max(1.0, abs(t1)):
                raise ValueError("segments must tile the time axis without gaps")
            if prev_v1 is not None and not math.isclose(v0, prev_v1, rel_tol=1e-12, abs_tol=1e-12):
                raise ValueError("schedule must be continuous across segment joins")
            prev_t1, prev_v1 = t1, v1
        if abs(self.segments[0][0]) > 1e-12:
            raise ValueError("schedule must start at t = 0")

    @property
    def duration(self) -> float:
        return self.segments[-1][1]

    @property
    def breakpoints(self) -> np.ndarray:
        """Times where the slope may change, including both endpoints."""
        pts = [self.segments[0][0]] + [s[1] for s in self.segments]
        return np.asarray(pts)

    def value(self, t: float) -> float:
        """Evaluate at time t; t outside [0, duration] is a domain error."""
        if t < -1e-12 or t > self.duration + 1e-12:
            raise ValueError(f"t = {t} outside schedule domain [0, {self.duration}]")
        for t0, t1, v0, v1 in self.segments:
            if t <= t1 or t1 == self.duration:
                # Exact endpoint values at the joins, no roundoff from the slope.
                if t <= t0:
                    return v0
                if t >= t1:
                    return v1
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        raise AssertionError("unreachable")

    def values(self, times: np.ndarray) -> np.ndarray:
        """Vectorized evaluation (same interpolant as value(), looser endpoint care)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if times.size and (times.min() < -1e-12 or times.max() > self.duration + 1e-12):
            raise ValueError("times outside schedule domain")
        xp = self.breakpoints
        fp = np.asarray([self.segments[0][2]] + [s[3] for s in self.segments])
        return np.interp(times, xp, fp)

    def __call__(self, t: float) -> float:
        return self.value(t)

    def reversed(self) -> "PiecewiseLinearSchedule":
        """Time-mirrored schedule: value(t) == original(duration - t)."""
        tau = self.duration
        segs = [(tau - t1, tau - t0, v1, v0) for t0, t1, v0, v1 in reversed(self.segments)]
        return PiecewiseLinearSchedule(tuple(segs))


def constant_schedule(value: float, duration: float) -> PiecewiseLinearSchedule:
    return PiecewiseLinearSchedule(((0.0, float(duration), float(value), float(value)),))


def bj_splitting_schedule(
    omega0: float, omega_c: float, omega_f: float, beta1: float, beta2: float
) -> PiecewiseLinearSchedule:
    """Two-stage linear ramp of the Josephson drive through the critical point.

    Stage 1 runs Omega from omega0 down to omega_c at rate beta1 (duration
    tau_c = (omega0 - omega_c)/beta1), stage 2 continues to omega_f at the
    slower rate beta2. Requires omega0 > omega_c > omega_f >= 0 and positive
    rates.
    """
    if not (omega0 > omega_c > omega_f >= 0.0):
        raise ValueError(
            f"need omega0 > omega_c > omega_f >= 0, got {omega0}, {omega_c}, {omega_f}"
        )
    if beta1 <= 0.0 or beta2 <= 0.0:
        raise ValueError("sweep rates beta1, beta2 must be positive")
    tau_c = (omega0 - omega_c) / beta1
    tau = tau_c + (omega_c - omega_f) / beta2
    return PiecewiseLinearSchedule(
        (
            (0.0, tau_c, omega0, omega_c),
            (tau_c, tau, omega_c, omega_f),
        )
    )


def bj_recombination_schedule(
    omega_f: float, omega_c: float, omega_end: float, beta1: float, beta2: float
) -> PiecewiseLinearSchedule:
    """Mirror ramp back up: omega_f -> omega_c at beta2, then -> omega_end at beta1.

    With omega_end = omega0 this is exactly the time-reverse of the splitting
    schedule. omega_end may stop anywhere in (omega_c, omega0] territory; the
    caller picks it (often by optimization).
    """
    if not (omega_end > omega_c > omega_f >= 0.0):
        raise ValueError(
            f"need omega_end > omega_c > omega_f >= 0, got {omega_end}, {omega_c}, {omega_f}"
        )
    if beta1 <= 0.0 or beta2 <= 0.0:
        raise ValueError("sweep rates beta1, beta2 must be positive")
    t_c = (omega_c - omega_f) / beta2
    tau = t_c + (omega_end - omega_c) / beta1
    return PiecewiseLinearSchedule(
        (
            (0.0, t_c, omega_f, omega_c),
            (t_c, tau, omega_c, omega_end),
        )
    )


def ising_splitting_schedules(
    b0: float, j0: float, tau: float
) -> tuple[PiecewiseLinearSchedule, PiecewiseLinearSchedule]:
    """Transverse-field Ising beam-splitting sweep, returns (B(t), J(t)).

    Stage 1 on [0, tau/2]: B held at b0 while the coupling prefactor ramps
    0 -> j0. Stage 2 on [tau/2, tau]: coupling held at j0 while B ramps
    b0 -> 0. Requires b0 > 0, j0 < 0 (ferromagnetic), tau > 0.
    """
    _check_ising_params(b0, j0, tau)
    half = tau / 2.0
    b = PiecewiseLinearSchedule(((0.0, half, b0, b0), (half, tau, b0, 0.0)))
    j = PiecewiseLinearSchedule(((0.0, half, 0.0, j0), (half, tau, j0, j0)))
    return b, j


def ising_recombination_schedules(
    b0: float, j0: float, tau: float, tau_prime: float | None = None
) -> tuple[PiecewiseLinearSchedule, PiecewiseLinearSchedule]:
    """Recombination sweep, returns (B(t), J(t)) on [0, tau_prime].

    Stage 1 on [0, tau/2] mirrors the splitting: J held at j0, B ramps
    0 -> b0. Stage 2 ramps the coupling back down at rate 2|j0|/tau,
    J(t) = 2 j0 (1 - t/tau), reaching 0 at t = tau. tau_prime in
    (tau/2, tau] stops the ramp early at J(tau_prime); default is tau.
    """
    _check_ising_params(b0, j0, tau)
    if tau_prime is None:
        tau_prime = tau
    if not (tau / 2.0 < tau_prime <= tau):
        raise ValueError(f"tau_prime must lie in (tau/2, tau], got {tau_prime}")
    half = tau / 2.0
    j_end = 2.0 * j0 * (1.0 - tau_prime / tau)
    b = PiecewiseLinearSchedule(((0.0, half, 0.0, b0), (half, tau_prime, b0, b0)))
    j = PiecewiseLinearSchedule(((0.0, half, j0, j0), (half, tau_prime, j0, j_end)))
    return b, j


def _check_ising_params(b0: float, j0: float, tau: float) -> None:
    if b0 <= 0.0:
        raise ValueError(f"transverse field b0 must be positive, got {b0}")
    if j0 >= 0.0:
        raise ValueError(f"coupling j0 must be negative (ferromagnetic), got {j0}")
    if tau <= 0.0:
        raise ValueError(f"sweep duration tau must be positive, got {tau}")
