"""End-to-end interferometry protocols on the two sweep models.

A run is always the same five-stage pipeline:

    prepare ground state -> splitting sweep -> phase imprint exp(-i phi G)
    -> recombination sweep -> readout (optional pulse, then moments)

with G = Jz for the Josephson model and G = Mz for the Ising chain. The
interrogation phase phi enters only through the imprint, so scanning phi
can reuse one splitting evolution and push all imprinted copies through
recombination as one column batch; every column's arithmetic is identical
to a standalone run.

States are never renormalized anywhere in the pipeline; norm and parity
drifts ride along as diagnostics and the readout moments are taken on the
raw final state.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import collective_spin as cs
from . import ising
from .propagator import (
    EvolutionSettings,
    LinearCombinationGenerator,
    evolve,
    fidelity,
    ground_state,
)
from .schedules import (
    bj_recombination_schedule,
    bj_splitting_schedule,
    ising_recombination_schedules,
    ising_splitting_schedules,
)

__all__ = [
    "BjProtocolConfig",
    "IsingProtocolConfig",
    "ProtocolOutcome",
    "RoundtripResult",
    "BjPhaseRunner",
    "IsingPhaseRunner",
    "run_bj",
    "run_ising",
    "splitting_state",
    "roundtrip",
    "default_settings",
]

PARITY_DRIFT_WARN = 1e-6


@dataclass(frozen=True)
class BjProtocolConfig:
    """Josephson-model protocol parameters in units with hbar = 1, |chi| = 1 natural.

    omega_end = None means "to be chosen", typically by
    analysis.optimize_recombination; run_bj requires a concrete value.
    omega_f == omega0 is accepted as an explicit no-sweep marker used only
    by splitting_state.
    """

    n_particles: int
    omega_f: float
    chi: float = -1.0
    omega0: float = 11.0
    beta1: float = 0.1
    beta2: float = 0.005
    omega_end: float | None = None
    phase: float = 0.0
    pulse_axis: str = "x"
    pulse_angle: float = math.pi / 2.0

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ValueError(f"n_particles must be a positive integer, got {self.n_particles}")
        if self.chi >= 0.0:
            raise ValueError(f"chi must be negative (attractive), got {self.chi}")
        if self.omega0 <= self.omega_c:
            raise ValueError(
                f"omega0 = {self.omega0} must exceed the critical drive {self.omega_c}"
            )
        no_sweep = self.omega_f == self.omega0
        if not no_sweep and not (0.0 <= self.omega_f < self.omega_c):
            raise ValueError(
                f"omega_f = {self.omega_f} must lie in [0, omega_c = {self.omega_c}) "
                "(or equal omega0 for the no-sweep case)"
            )
        if self.omega_end is not None and not (self.omega_end > self.omega_c):
            raise ValueError(f"omega_end = {self.omega_end} must exceed omega_c = {self.omega_c}")
        if self.pulse_axis not in ("x", "y", "z"):
            raise ValueError(f"pulse_axis must be x, y or z, got {self.pulse_axis!r}")
        if self.beta1 <= 0.0 or self.beta2 <= 0.0:
            raise ValueError("sweep rates beta1, beta2 must be positive")

    @property
    def omega_c(self) -> float:
        return abs(self.chi)

    @property
    def dim(self) -> int:
        return self.n_particles + 1


@dataclass(frozen=True)
class IsingProtocolConfig:
    """Transverse-field Ising protocol parameters.

    tau_prime = None means recombine over the full mirror duration tau.
    """

    n_spins: int
    tau: float
    b0: float = 1.0
    j0: float = -1.0
    tau_prime: float | None = None
    power: float = 3.0
    interaction_range: int | None = None
    phase: float = 0.0
    allow_large: bool = False

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins}")
        if self.n_spins > ising.MAX_SPINS and not self.allow_large:
            raise ValueError(
                f"n_spins = {self.n_spins} exceeds the cap of {ising.MAX_SPINS}; "
                "set allow_large=True to override"
            )
        if self.b0 <= 0.0:
            raise ValueError(f"b0 must be positive, got {self.b0}")
        if self.j0 >= 0.0:
            raise ValueError(f"j0 must be negative, got {self.j0}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.tau_prime is not None and not (self.tau / 2.0 < self.tau_prime <= self.tau):
            raise ValueError(f"tau_prime must lie in (tau/2, tau], got {self.tau_prime}")
        if self.power <= 0.0:
            raise ValueError("coupling power must be positive")
        if self.interaction_range is not None and self.interaction_range < 1:
            raise ValueError("interaction_range must be >= 1 when given")

    @property
    def dim(self) -> int:
        return 2**self.n_spins

    @property
    def tau_prime_resolved(self) -> float:
        return self.tau if self.tau_prime is None else self.tau_prime


@dataclass(frozen=True)
class ProtocolOutcome:
    """Readout moments and integrity diagnostics of one protocol run.

    final_state, when kept, is the state after recombination but before
    the readout pulse.
    """

    phase: float
    mean: float
    second_moment: float
    norm_drift: float
    parity_drift: float
    final_state: np.ndarray | None = None
    min_ground_population: float | None = None

    @property
    def variance(self) -> float:
        return max(self.second_moment - self.mean**2, 0.0)


@dataclass(frozen=True)
class RoundtripResult:
    fidelity: float
    duration_split: float
    duration_recombine: float


def default_settings(config) -> EvolutionSettings:
    """Default step sizes: dt = 1e-3 in the model's natural time unit."""
    if isinstance(config, BjProtocolConfig):
        return EvolutionSettings(dt=1e-3 / abs(config.chi))
    if isinstance(config, IsingProtocolConfig):
        return EvolutionSettings(dt=1e-3 / max(config.b0, abs(config.j0)))
    raise TypeError(f"unknown config type {type(config)!r}")


def _check_outcome(outcome: ProtocolOutcome, half_n: float) -> ProtocolOutcome:
    # Moment sanity: Jz (or Mz) is bounded by N/2 on the physical space.
    limit = half_n**2 * (1.0 + 1e-9) + 1e-12
    if not (0.0 <= outcome.second_moment <= limit):
        raise RuntimeError(
            f"second moment {outcome.second_moment} outside [0, {half_n**2}]; "
            "evolution produced an unphysical state"
        )
    if outcome.second_moment - outcome.mean**2 < -1e-9 * max(half_n**2, 1.0):
        raise RuntimeError("negative variance beyond roundoff; unphysical state")
    if outcome.parity_drift > PARITY_DRIFT_WARN:
        warnings.warn(
            f"parity drift {outcome.parity_drift:.3e} exceeds {PARITY_DRIFT_WARN:.0e}; "
            "sweep may be under-resolved",
            RuntimeWarning,
            stacklevel=3,
        )
    return outcome


# -- Josephson model ---------------------------------------------------------


def _bj_split_generator(config: BjProtocolConfig):
    sched = bj_splitting_schedule(
        config.omega0, config.omega_c, config.omega_f, config.beta1, config.beta2
    )
    gen = _bj_generator(config, sched)
    return gen, sched.duration


def _bj_recombination_generator(config: BjProtocolConfig, omega_end: float):
    sched = bj_recombination_schedule(
        config.omega_f, config.omega_c, omega_end, config.beta1, config.beta2
    )
    gen = _bj_generator(config, sched)
    return gen, sched.duration


def _bj_generator(config: BjProtocolConfig, omega_schedule):
    n = config.n_particles
    minus_jx = cs.angular_momentum(n, "x").scaled(-1.0)
    chi_jz2 = cs.jz_squared(n).scaled(config.chi / n)
    return LinearCombinationGenerator(
        [(omega_schedule, minus_jx), (1.0, chi_jz2)], check_hermitian=False
    )


def _bj_prepare(config: BjProtocolConfig) -> np.ndarray:
    h0 = cs.build_bj_hamiltonian(config.n_particles, config.omega0, config.chi)
    return ground_state(h0).state


def _bj_readout_column(config: BjProtocolConfig, col: np.ndarray):
    """Pulse then Jz moments for one state vector."""
    if config.pulse_angle != 0.0:
        col = cs.apply_rotation_pulse(col, config.pulse_axis, config.pulse_angle)
    return cs.jz_moments(col)


class BjPhaseRunner:
    """Phase-scan engine for the Josephson protocol.

    Prepares and splits once, then serves any number of interrogation
    phases (and recombination endpoints) from the cached split state.
    Calling it with a single phi matches a standalone run_bj bit for bit.
    """

    def __init__(self, config: BjProtocolConfig, settings: EvolutionSettings | None = None):
        if config.omega_f == config.omega0:
            raise ValueError("runner needs a sweeping config (omega_f < omega_c)")
        self.config = config
        self.settings = settings if settings is not None else default_settings(config)
        self._prep: np.ndarray | None = None
        self._split: np.ndarray | None = None
        self._split_duration: float | None = None

    @property
    def n_particles(self) -> int:
        return self.config.n_particles

    @property
    def prepared_state(self) -> np.ndarray:
        if self._prep is None:
            self._prep = _bj_prepare(self.config)
        return self._prep

    @property
    def split_state(self) -> np.ndarray:
        if self._split is None:
            gen, tau = _bj_split_generator(self.config)
            self._split = evolve(self.prepared_state, gen, 0.0, tau, self.settings)
            self._split_duration = tau
        return self._split

    @property
    def split_duration(self) -> float:
        _ = self.split_state
        return self._split_duration

    def with_omega_end(self, omega_end: float) -> "BjPhaseRunner":
        """Runner for a different recombination endpoint, sharing the caches.

        The prepared and split states do not depend on omega_end, and both
        are treated as immutable once computed, so sharing is safe.
        """
        new = BjPhaseRunner(replace(self.config, omega_end=omega_end), self.settings)
        new._prep = self._prep
        new._split = self._split
        new._split_duration = self._split_duration
        return new

    def _imprint_batch(self, phis) -> np.ndarray:
        phis = np.asarray(phis, dtype=float)
        m = np.arange(self.config.dim) - self.n_particles / 2.0
        return np.exp(-1j * np.outer(m, phis)) * self.split_state[:, None]

    def _split_parity_drift(self) -> float:
        # Parity is conserved by the sweep ([H, Pi] = 0); any change across
        # the splitting evolution is pure integration error.
        p0 = cs.parity_expectation(self.prepared_state)
        s = self.split_state
        p1 = cs.parity_expectation(s / np.linalg.norm(s))
        return abs(p1 - p0)

    def _outcomes(
        self, states: np.ndarray, phis, parity_in: np.ndarray, keep_states: bool
    ) -> list[ProtocolOutcome]:
        # The imprint rotates parity legitimately (to cos(N phi) on an ideal
        # cat), so drift compares against the post-imprint value, plus the
        # drift already accumulated during splitting. Everything here is
        # computed one column at a time so results do not depend on how
        # phases were batched.
        drift0 = self._split_parity_drift()
        out = []
        half_n = self.n_particles / 2.0
        for i, phi in enumerate(np.atleast_1d(phis)):
            # contiguous copy so reductions cannot depend on batch layout
            col = np.ascontiguousarray(states[:, i])
            nrm2 = float(np.real(np.vdot(col, col)))
            parity = cs.parity_expectation(col / math.sqrt(nrm2))
            mean, second = _bj_readout_column(self.config, col)
            outcome = ProtocolOutcome(
                phase=float(phi),
                mean=float(mean),
                second_moment=float(second),
                norm_drift=float(abs(nrm2 - 1.0)),
                parity_drift=float(drift0 + abs(parity - parity_in[i])),
                final_state=col.copy() if keep_states else None,
            )
            out.append(_check_outcome(outcome, half_n))
        return out

    def _imprint_parities(self, batch: np.ndarray) -> np.ndarray:
        nrm2 = float(np.real(np.vdot(self.split_state, self.split_state)))
        return np.array(
            [
                cs.parity_expectation(np.ascontiguousarray(batch[:, i])) / nrm2
                for i in range(batch.shape[1])
            ]
        )

    def run_many(
        self,
        phis,
        omega_end: float | None = None,
        keep_states: bool = False,
    ) -> list[ProtocolOutcome]:
        omega_end = self.config.omega_end if omega_end is None else omega_end
        if omega_end is None:
            raise ValueError("omega_end is unset; optimize it or pass one explicitly")
        batch = self._imprint_batch(phis)
        parity_in = self._imprint_parities(batch)
        gen, tau_p = _bj_recombination_generator(self.config, omega_end)
        batch = evolve(batch, gen, 0.0, tau_p, self.settings)
        return self._outcomes(batch, phis, parity_in, keep_states)

    def __call__(self, phi: float) -> ProtocolOutcome:
        return self.run_many([float(phi)])[0]

    def omega_end_scan(
        self, phis, omega_ends, keep_states: bool = False
    ) -> list[list[ProtocolOutcome]]:
        """Outcomes at every (omega_end, phi) pair from one recombination pass.

        omega_ends must be strictly increasing; each becomes a forced stop
        (hence step boundary) along the shared trajectory toward the
        largest endpoint.
        """
        omega_ends = np.asarray(omega_ends, dtype=float)
        if omega_ends.ndim != 1 or omega_ends.size == 0:
            raise ValueError("need a non-empty 1-d array of omega_end candidates")
        if np.any(np.diff(omega_ends) <= 0.0):
            raise ValueError("omega_end candidates must be strictly increasing")
        if omega_ends[0] <= self.config.omega_c:
            raise ValueError("omega_end candidates must exceed omega_c")
        cfg = self.config
        sched = bj_recombination_schedule(
            cfg.omega_f, cfg.omega_c, float(omega_ends[-1]), cfg.beta1, cfg.beta2
        )
        gen = _bj_generator(cfg, sched)
        t_c = (cfg.omega_c - cfg.omega_f) / cfg.beta2
        stop_times = t_c + (omega_ends - cfg.omega_c) / cfg.beta1
        batch = self._imprint_batch(phis)
        parity_in = self._imprint_parities(batch)
        results = []
        t_prev = 0.0
        for t_stop in stop_times:
            batch = evolve(batch, gen, t_prev, float(t_stop), self.settings)
            results.append(self._outcomes(batch, phis, parity_in, keep_states))
            t_prev = float(t_stop)
        return results


def run_bj(
    config: BjProtocolConfig,
    settings: EvolutionSettings | None = None,
    keep_state: bool = False,
    adiabaticity_samples: int = 0,
) -> ProtocolOutcome:
    """One full Josephson interferometer run at config.phase."""
    if config.omega_f == config.omega0:
        raise ValueError("run_bj needs a sweeping config; omega_f == omega0 is prepare-only")
    if config.omega_end is None:
        raise ValueError(
            "config.omega_end is unset; choose one (e.g. analysis.optimize_recombination)"
        )
    runner = BjPhaseRunner(config, settings)
    if adiabaticity_samples > 0:
        min_pop = _bj_split_with_sampling(runner, adiabaticity_samples)
    else:
        min_pop = None
    outcome = runner.run_many([config.phase], keep_states=keep_state)[0]
    if min_pop is not None:
        outcome = replace(outcome, min_ground_population=min_pop)
    return outcome


def _bj_split_with_sampling(runner: BjPhaseRunner, samples: int) -> float:
    """Run the splitting stage stopping to measure ground-state population.

    Tracks the population of the instantaneous parity-even lowest state;
    the minimum over samples is the adiabaticity witness. Fills the
    runner's split-state cache as a side effect.
    """
    cfg = runner.config
    gen, tau = _bj_split_generator(cfg)
    times = np.linspace(0.0, tau, samples + 1)[1:]
    psi = runner.prepared_state
    t_prev = 0.0
    min_pop = 1.0
    for t in times:
        psi = evolve(psi, gen, t_prev, float(t), runner.settings)
        pop = _even_ground_population(gen, float(t), psi)
        min_pop = min(min_pop, pop)
        t_prev = float(t)
    runner._split = psi
    runner._split_duration = tau
    return min_pop


def _even_ground_population(gen, t: float, psi: np.ndarray) -> float:
    import scipy.linalg

    diag_stack, off_stack = gen.banded_representation()
    coefs = gen.coefficients(t)
    diag = np.real(coefs @ diag_stack)
    off = np.real(coefs @ off_stack)
    w, v = scipy.linalg.eigh_tridiagonal(diag, off, select="i", select_range=(0, 1))
    # Project the lowest pair onto the even-parity sector. Past the critical
    # point the pair goes degenerate and the raw eigenvectors are arbitrary
    # mixtures of the two cat combinations; the even member is only
    # well-defined through the parity projector (1 + Pi)/2.
    pi_op = cs.parity_operator_dense(diag.shape[0] - 1)
    even = 0.5 * (v.astype(complex) + pi_op @ v)
    norms = np.linalg.norm(even, axis=0)
    col = 0 if norms[0] > 1e-6 else 1
    u = even[:, col] / norms[col]
    nrm2 = float(np.real(np.vdot(psi, psi)))
    return float(np.abs(np.vdot(u, psi)) ** 2 / nrm2)


# -- Ising model --------------------------------------------------------------


def _ising_operators(config: IsingProtocolConfig):
    coupling = ising.coupling_diagonal(
        config.n_spins,
        power=config.power,
        interaction_range=config.interaction_range,
        allow_large=config.allow_large,
    )
    return ising.DiagonalOperator(coupling), ising.FlipSumOperator(config.n_spins, scale=-1.0)


def _ising_generator(config: IsingProtocolConfig, b_sched, j_sched):
    coupling_op, flip_op = _ising_operators(config)
    return LinearCombinationGenerator(
        [(j_sched, coupling_op), (b_sched, flip_op)], check_hermitian=False
    )


class IsingPhaseRunner:
    """Phase-scan engine for the Ising protocol; mirrors BjPhaseRunner."""

    def __init__(self, config: IsingProtocolConfig, settings: EvolutionSettings | None = None):
        self.config = config
        self.settings = settings if settings is not None else default_settings(config)
        self._mz = ising.mz_diagonal(config.n_spins, allow_large=config.allow_large)
        self._split: np.ndarray | None = None

    @property
    def n_particles(self) -> int:
        return self.config.n_spins

    @property
    def prepared_state(self) -> np.ndarray:
        return ising.coherent_x_state(self.config.n_spins, allow_large=self.config.allow_large)

    @property
    def split_state(self) -> np.ndarray:
        if self._split is None:
            cfg = self.config
            b_sched, j_sched = ising_splitting_schedules(cfg.b0, cfg.j0, cfg.tau)
            gen = _ising_generator(cfg, b_sched, j_sched)
            self._split = evolve(self.prepared_state, gen, 0.0, cfg.tau, self.settings)
        return self._split

    def _split_parity_drift(self) -> float:
        s = self.split_state
        p1 = ising.global_flip_parity(s / np.linalg.norm(s))
        return abs(p1 - 1.0)  # coherent x state has parity exactly +1

    def with_tau_prime(self, tau_prime: float) -> "IsingPhaseRunner":
        """Runner for a different recombination stop, sharing the split cache.

        The split state does not depend on tau_prime and is treated as
        immutable once computed, so sharing is safe.
        """
        new = IsingPhaseRunner(replace(self.config, tau_prime=float(tau_prime)), self.settings)
        new._split = self._split
        return new

    def _imprint_batch(self, phis) -> np.ndarray:
        phis_arr = np.asarray(phis, dtype=float)
        return np.exp(-1j * np.outer(self._mz, phis_arr)) * self.split_state[:, None]

    def _imprint_parities(self, batch: np.ndarray) -> list[float]:
        nrm2_split = float(np.real(np.vdot(self.split_state, self.split_state)))
        return [
            ising.global_flip_parity(np.ascontiguousarray(batch[:, i])) / nrm2_split
            for i in range(batch.shape[1])
        ]

    def _outcomes(
        self, states: np.ndarray, phis, parity_in, keep_states: bool
    ) -> list[ProtocolOutcome]:
        drift0 = self._split_parity_drift()
        out = []
        half_n = self.config.n_spins / 2.0
        for i, phi in enumerate(np.atleast_1d(phis)):
            col = np.ascontiguousarray(states[:, i])
            nrm2 = float(np.real(np.vdot(col, col)))
            parity = ising.global_flip_parity(col) / nrm2
            mean, second = ising.mz_moments(col, self._mz)
            outcome = ProtocolOutcome(
                phase=float(phi),
                mean=float(mean),
                second_moment=float(second),
                norm_drift=float(abs(nrm2 - 1.0)),
                parity_drift=float(drift0 + abs(parity - parity_in[i])),
                final_state=col.copy() if keep_states else None,
            )
            out.append(_check_outcome(outcome, half_n))
        return out

    def run_many(self, phis, keep_states: bool = False) -> list[ProtocolOutcome]:
        cfg = self.config
        phis_arr = np.asarray(phis, dtype=float)
        batch = self._imprint_batch(phis_arr)
        parity_in = self._imprint_parities(batch)
        b_sched, j_sched = ising_recombination_schedules(
            cfg.b0, cfg.j0, cfg.tau, cfg.tau_prime_resolved
        )
        gen = _ising_generator(cfg, b_sched, j_sched)
        batch = evolve(batch, gen, 0.0, cfg.tau_prime_resolved, self.settings)
        return self._outcomes(batch, phis_arr, parity_in, keep_states)

    def __call__(self, phi: float) -> ProtocolOutcome:
        return self.run_many([float(phi)])[0]

    def tau_prime_scan(
        self, phis, tau_primes, keep_states: bool = False
    ) -> list[list[ProtocolOutcome]]:
        """Outcomes at every (tau_prime, phi) pair from one recombination pass.

        The stage-2 ramp J(t) = 2 j0 (1 - t/tau) does not depend on where
        it stops, so every early stop is a prefix of the shared trajectory.
        tau_primes must be strictly increasing; each becomes a forced stop
        (hence step boundary) on the way to the largest one.
        """
        tau_primes = np.asarray(tau_primes, dtype=float)
        if tau_primes.ndim != 1 or tau_primes.size == 0:
            raise ValueError("need a non-empty 1-d array of tau_prime candidates")
        if np.any(np.diff(tau_primes) <= 0.0):
            raise ValueError("tau_prime candidates must be strictly increasing")
        cfg = self.config
        if tau_primes[0] <= cfg.tau / 2.0 or tau_primes[-1] > cfg.tau:
            raise ValueError("tau_prime candidates must lie in (tau/2, tau]")
        b_sched, j_sched = ising_recombination_schedules(
            cfg.b0, cfg.j0, cfg.tau, float(tau_primes[-1])
        )
        gen = _ising_generator(cfg, b_sched, j_sched)
        batch = self._imprint_batch(phis)
        parity_in = self._imprint_parities(batch)
        results = []
        t_prev = 0.0
        for t_stop in tau_primes:
            batch = evolve(batch, gen, t_prev, float(t_stop), self.settings)
            results.append(self._outcomes(batch, phis, parity_in, keep_states))
            t_prev = float(t_stop)
        return results


def run_ising(
    config: IsingProtocolConfig,
    settings: EvolutionSettings | None = None,
    keep_state: bool = False,
) -> ProtocolOutcome:
    """One full Ising interferometer run at config.phase; Mz measured directly."""
    runner = IsingPhaseRunner(config, settings)
    return runner.run_many([config.phase], keep_states=keep_state)[0]


# -- shared entry points -------------------------------------------------------


def splitting_state(config, settings: EvolutionSettings | None = None) -> np.ndarray:
    """State after the splitting sweep only (no imprint, no recombination)."""
    if isinstance(config, BjProtocolConfig):
        if config.omega_f == config.omega0:
            return _bj_prepare(config)
        return BjPhaseRunner(config, settings).split_state
    if isinstance(config, IsingProtocolConfig):
        return IsingPhaseRunner(config, settings).split_state
    raise TypeError(f"unknown config type {type(config)!r}")


def roundtrip(config, settings: EvolutionSettings | None = None) -> RoundtripResult:
    """Split then immediately recombine with the full inverse sweep at phi = 0.

    Returns the fidelity between the prepared state and the state after
    recombination (before any readout pulse), with the two sweep durations.
    """
    if isinstance(config, BjProtocolConfig):
        cfg = replace(config, phase=0.0, omega_end=config.omega0, pulse_angle=0.0)
        runner = BjPhaseRunner(cfg, settings)
        out = runner.run_many([0.0], keep_states=True)[0]
        gen, tau_p = _bj_recombination_generator(cfg, cfg.omega0)
        return RoundtripResult(
            fidelity=fidelity(runner.prepared_state, out.final_state),
            duration_split=runner.split_duration,
            duration_recombine=tau_p,
        )
    if isinstance(config, IsingProtocolConfig):
        cfg = replace(config, phase=0.0, tau_prime=None)
        runner = IsingPhaseRunner(cfg, settings)
        out = runner.run_many([0.0], keep_states=True)[0]
        return RoundtripResult(
            fidelity=fidelity(runner.prepared_state, out.final_state),
            duration_split=cfg.tau,
            duration_recombine=cfg.tau,
        )
    raise TypeError(f"unknown config type {type(config)!r}")
