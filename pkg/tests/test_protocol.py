import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg

from conftest import dense_bj_hamiltonian, dense_evolve, dense_ising_hamiltonian
from qpti import analysis
from qpti import collective_spin as cs
from qpti import ising
from qpti.propagator import EvolutionSettings, fidelity
from qpti.protocol import (
    BjPhaseRunner,
    BjProtocolConfig,
    IsingPhaseRunner,
    IsingProtocolConfig,
    default_settings,
    roundtrip,
    run_bj,
    run_ising,
    splitting_state,
)
from qpti.schedules import bj_recombination_schedule, bj_splitting_schedule

# Small, quick Josephson config: full physics, sub-second runs.
FAST = BjProtocolConfig(
    n_particles=8, omega_f=0.0, omega0=3.0, beta1=0.5, beta2=0.05, omega_end=3.0
)

# Very slow sweep at N = 4: the interferometer is near-ideal, so the
# fringe must be A sin(4 phi) with stretch within 2% of 1 and the split
# state must be close to the even cat.
SLOW4 = BjProtocolConfig(n_particles=4, omega_f=0.0, beta1=0.01, beta2=0.0005, omega_end=11.0)
SLOW4_SETTINGS = EvolutionSettings(dt=5e-3)


@pytest.fixture(scope="module")
def fast_runner():
    return BjPhaseRunner(FAST)


@pytest.fixture(scope="module")
def slow4_runner():
    return BjPhaseRunner(SLOW4, SLOW4_SETTINGS)


@pytest.fixture(scope="module")
def slow4_outcomes(slow4_runner):
    phis = np.linspace(-math.pi / 8, math.pi / 8, 9)
    return phis, slow4_runner.run_many(phis)


@pytest.fixture(scope="module")
def ising5_runner():
    return IsingPhaseRunner(IsingProtocolConfig(n_spins=5, tau=20.0))


class TestConfigs:
    def test_bj_defaults(self):
        cfg = BjProtocolConfig(n_particles=10, omega_f=0.5)
        assert cfg.omega_c == 1.0
        assert cfg.dim == 11
        assert cfg.omega0 == 11.0
        assert cfg.beta1 == 0.1 and cfg.beta2 == 0.005
        assert cfg.pulse_axis == "x" and cfg.pulse_angle == pytest.approx(math.pi / 2)
        assert cfg.omega_end is None

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_particles": 0, "omega_f": 0.0},
            {"n_particles": 4, "omega_f": 0.0, "chi": 0.5},
            {"n_particles": 4, "omega_f": 0.0, "omega0": 0.5},
            {"n_particles": 4, "omega_f": 1.0},
            {"n_particles": 4, "omega_f": -0.1},
            {"n_particles": 4, "omega_f": 0.0, "omega_end": 0.5},
            {"n_particles": 4, "omega_f": 0.0, "pulse_axis": "q"},
            {"n_particles": 4, "omega_f": 0.0, "beta1": 0.0},
            {"n_particles": 4, "omega_f": 0.0, "beta2": -1.0},
        ],
    )
    def test_bj_validation(self, kwargs):
        with pytest.raises(ValueError):
            BjProtocolConfig(**kwargs)

    def test_bj_no_sweep_marker_allowed(self):
        cfg = BjProtocolConfig(n_particles=4, omega_f=11.0)
        assert cfg.omega_f == cfg.omega0
        with pytest.raises(ValueError):
            BjPhaseRunner(cfg)
        with pytest.raises(ValueError):
            run_bj(replace(cfg, omega_end=4.0))

    def test_ising_defaults(self):
        cfg = IsingProtocolConfig(n_spins=5, tau=10.0)
        assert cfg.dim == 32
        assert cfg.tau_prime_resolved == 10.0
        assert replace(cfg, tau_prime=7.0).tau_prime_resolved == 7.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_spins": 0, "tau": 10.0},
            {"n_spins": 15, "tau": 10.0},
            {"n_spins": 4, "tau": -1.0},
            {"n_spins": 4, "tau": 10.0, "b0": 0.0},
            {"n_spins": 4, "tau": 10.0, "j0": 0.1},
            {"n_spins": 4, "tau": 10.0, "tau_prime": 5.0},
            {"n_spins": 4, "tau": 10.0, "tau_prime": 11.0},
            {"n_spins": 4, "tau": 10.0, "power": 0.0},
            {"n_spins": 4, "tau": 10.0, "interaction_range": 0},
        ],
    )
    def test_ising_validation(self, kwargs):
        with pytest.raises(ValueError):
            IsingProtocolConfig(**kwargs)

    def test_ising_cap_override(self):
        cfg = IsingProtocolConfig(n_spins=15, tau=1.0, allow_large=True)
        assert cfg.dim == 2**15

    def test_default_settings(self):
        assert default_settings(BjProtocolConfig(4, 0.0)).dt == pytest.approx(1e-3)
        assert default_settings(BjProtocolConfig(4, 0.0, chi=-2.0)).dt == pytest.approx(5e-4)
        assert default_settings(IsingProtocolConfig(4, 10.0)).dt == pytest.approx(1e-3)
        assert default_settings(IsingProtocolConfig(4, 10.0, b0=2.0)).dt == pytest.approx(5e-4)
        with pytest.raises(TypeError):
            default_settings(object())


class TestBjRunner:
    def test_prepared_state_is_strong_drive_ground_state(self, fast_runner):
        prep = fast_runner.prepared_state
        h = cs.build_bj_hamiltonian(FAST.n_particles, FAST.omega0, FAST.chi)
        e = cs.expectation(prep, h)
        w = np.linalg.eigvalsh(h.to_dense())
        assert e == pytest.approx(w[0], abs=1e-10)
        # at strong drive the ground state is close to the coherent state
        assert fidelity(prep, cs.coherent_state_x(FAST.n_particles)) > 0.9

    def test_split_duration(self, fast_runner):
        want = (3.0 - 1.0) / 0.5 + 1.0 / 0.05
        assert fast_runner.split_duration == pytest.approx(want)

    def test_zero_phase_signal_vanishes(self, fast_runner):
        out = fast_runner(0.0)
        assert abs(out.mean) < 1e-6
        assert out.norm_drift < 1e-8
        assert out.parity_drift < 1e-6

    def test_antisymmetry_and_even_moment(self, fast_runner):
        outs = fast_runner.run_many([-0.2, 0.2, -0.07, 0.07])
        assert outs[0].mean == pytest.approx(-outs[1].mean, abs=1e-8)
        assert outs[2].mean == pytest.approx(-outs[3].mean, abs=1e-8)
        assert outs[0].second_moment == pytest.approx(outs[1].second_moment, abs=1e-8)

    def test_batch_matches_single_bitwise(self, fast_runner):
        phis = [0.05, -0.11, 0.23]
        batch = fast_runner.run_many(phis)
        for phi, got in zip(phis, batch):
            one = fast_runner(phi)
            assert got.mean == one.mean
            assert got.second_moment == one.second_moment
            assert got.norm_drift == one.norm_drift
            assert got.parity_drift == one.parity_drift

    def test_run_bj_matches_runner(self, fast_runner):
        out = run_bj(replace(FAST, phase=0.13))
        ref = fast_runner(0.13)
        assert out.mean == ref.mean
        assert out.second_moment == ref.second_moment

    def test_run_bj_requires_omega_end(self):
        with pytest.raises(ValueError, match="omega_end"):
            run_bj(replace(FAST, omega_end=None))

    def test_with_omega_end_shares_caches(self, fast_runner):
        other = fast_runner.with_omega_end(2.0)
        assert other.split_state is fast_runner.split_state
        fresh = BjPhaseRunner(replace(FAST, omega_end=2.0))
        a, b = other(0.1), fresh(0.1)
        assert a.mean == b.mean
        assert a.second_moment == b.second_moment

    def test_run_many_omega_end_fallbacks(self, fast_runner):
        with pytest.raises(ValueError, match="omega_end"):
            BjPhaseRunner(replace(FAST, omega_end=None)).run_many([0.0])
        via_arg = fast_runner.run_many([0.1], omega_end=2.5)
        via_cfg = fast_runner.with_omega_end(2.5).run_many([0.1])
        assert via_arg[0].mean == via_cfg[0].mean

    def test_omega_end_scan_matches_individual_runs(self, fast_runner):
        phis = [0.0, 0.1]
        stops = np.array([2.0, 2.5, 3.0])
        scanned = fast_runner.omega_end_scan(phis, stops)
        assert len(scanned) == 3
        for omega, row in zip(stops, scanned):
            direct = fast_runner.run_many(phis, omega_end=float(omega))
            for got, want in zip(row, direct):
                assert got.mean == pytest.approx(want.mean, abs=1e-12)
                assert got.second_moment == pytest.approx(want.second_moment, abs=1e-12)

    def test_omega_end_scan_validation(self, fast_runner):
        with pytest.raises(ValueError):
            fast_runner.omega_end_scan([0.0], np.array([]))
        with pytest.raises(ValueError):
            fast_runner.omega_end_scan([0.0], np.array([2.5, 2.0]))
        with pytest.raises(ValueError):
            fast_runner.omega_end_scan([0.0], np.array([0.5, 2.0]))

    def test_keep_states_returns_pre_pulse_state(self, fast_runner):
        out = fast_runner.run_many([0.17], keep_states=True)[0]
        state = out.final_state
        assert state is not None
        assert abs(np.vdot(state, state).real - 1.0) < 1e-8
        pulsed = cs.apply_rotation_pulse(state, FAST.pulse_axis, FAST.pulse_angle)
        mean, second = cs.jz_moments(pulsed)
        assert out.mean == pytest.approx(mean, abs=1e-12)
        assert out.second_moment == pytest.approx(second, abs=1e-12)
        assert fast_runner.run_many([0.17])[0].final_state is None

    def test_adiabaticity_diagnostic(self):
        slow = replace(FAST, beta1=0.2, beta2=0.02)
        out = run_bj(slow, adiabaticity_samples=8)
        assert out.min_ground_population is not None
        assert 0.0 < out.min_ground_population <= 1.0 + 1e-9
        assert out.min_ground_population > 0.95
        # sampling must not change the measured outcome
        plain = run_bj(slow)
        assert plain.min_ground_population is None
        assert out.mean == pytest.approx(plain.mean, abs=1e-10)
        assert out.second_moment == pytest.approx(plain.second_moment, abs=1e-10)

    def test_default_rates_stay_adiabatic(self):
        # instantaneous even-sector ground population along the default sweep
        cfg = BjProtocolConfig(n_particles=12, omega_f=0.0, omega_end=11.0)
        out = run_bj(cfg, adiabaticity_samples=12)
        assert out.min_ground_population > 0.99


class TestBjAgainstDenseOracle:
    def test_split_state_matches_dense_exponential(self, slow4_runner):
        sched = bj_splitting_schedule(
            SLOW4.omega0, SLOW4.omega_c, SLOW4.omega_f, SLOW4.beta1, SLOW4.beta2
        )
        want = dense_evolve(
            lambda t: dense_bj_hamiltonian(4, sched.value(t)),
            slow4_runner.prepared_state,
            0.0,
            sched.duration,
            SLOW4_SETTINGS.dt,
            breakpoints=sched.breakpoints,
        )
        got = slow4_runner.split_state
        assert fidelity(got / np.linalg.norm(got), want / np.linalg.norm(want)) > 1 - 1e-10
        np.testing.assert_allclose(got, want, atol=1e-8)

    def test_full_pipeline_matches_dense_oracle(self, fast_runner):
        phi = 0.3
        split_sched = bj_splitting_schedule(
            FAST.omega0, FAST.omega_c, FAST.omega_f, FAST.beta1, FAST.beta2
        )
        rec_sched = bj_recombination_schedule(
            FAST.omega_f, FAST.omega_c, FAST.omega_end, FAST.beta1, FAST.beta2
        )
        n = FAST.n_particles
        dt = fast_runner.settings.dt
        psi = dense_evolve(
            lambda t: dense_bj_hamiltonian(n, split_sched.value(t)),
            fast_runner.prepared_state, 0.0, split_sched.duration, dt,
            breakpoints=split_sched.breakpoints,
        )
        psi = cs.apply_phase_imprint(psi, phi)
        psi = dense_evolve(
            lambda t: dense_bj_hamiltonian(n, rec_sched.value(t)),
            psi, 0.0, rec_sched.duration, dt, breakpoints=rec_sched.breakpoints,
        )
        psi = cs.apply_rotation_pulse(psi, FAST.pulse_axis, FAST.pulse_angle)
        mean, second = cs.jz_moments(psi / np.linalg.norm(psi))
        out = fast_runner(phi)
        assert out.mean == pytest.approx(mean, abs=1e-8)
        assert out.second_moment == pytest.approx(second, abs=1e-8)

    def test_step_halving_self_oracle_default_rates(self):
        # splitting sweep at the default step against a 16x finer reference
        cfg = BjProtocolConfig(n_particles=4, omega_f=0.0)
        coarse = splitting_state(cfg)
        fine = splitting_state(cfg, EvolutionSettings(dt=1e-3 / 16))
        assert fidelity(coarse, fine) > 1 - 1e-10


class TestSlowSweepPhysics:
    def test_split_state_close_to_even_cat(self, slow4_runner):
        split = slow4_runner.split_state
        assert fidelity(split, cs.cat_state(4, +1)) > 0.95

    def test_fringe_is_cat_sinusoid(self, slow4_outcomes):
        phis, outs = slow4_outcomes
        records = [
            analysis.PhaseScanRecord(float(p), o.mean, o.second_moment, 0.0, 0.0, 0.0)
            for p, o in zip(phis, outs)
        ]
        fit = analysis.fit_sinusoid(records, n=4, window=math.pi / 8)
        assert abs(fit.stretch - 1.0) < 0.02
        assert fit.rms_residual < 0.05 * abs(fit.amplitude)
        # ideal cat contrast: |A| = sqrt(N)/2 (Heisenberg point A/sqrt(B) = 1)
        assert abs(fit.amplitude) > 0.9 * math.sqrt(4) / 2.0

    def test_fringe_periodicity(self, slow4_runner, slow4_outcomes):
        phis, outs = slow4_outcomes
        period = 2.0 * math.pi / 4
        shifted = slow4_runner.run_many([phis[2] + period, phis[6] + period])
        assert shifted[0].mean == pytest.approx(outs[2].mean, abs=2e-3)
        assert shifted[1].mean == pytest.approx(outs[6].mean, abs=2e-3)

    def test_parity_drift_small_across_sweeps(self, slow4_outcomes):
        _, outs = slow4_outcomes
        assert max(o.parity_drift for o in outs) < 1e-6
        assert max(o.norm_drift for o in outs) < 1e-8


class TestIsingRunner:
    def test_prepared_state(self, ising5_runner):
        np.testing.assert_allclose(
            ising5_runner.prepared_state, ising.coherent_x_state(5), atol=0
        )

    def test_zero_phase_signal_vanishes(self, ising5_runner):
        out = ising5_runner(0.0)
        assert abs(out.mean) < 1e-6
        assert out.norm_drift < 1e-8
        assert out.parity_drift < 1e-6

    def test_antisymmetry(self, ising5_runner):
        outs = ising5_runner.run_many([-0.15, 0.15])
        assert outs[0].mean == pytest.approx(-outs[1].mean, abs=1e-8)
        assert outs[0].second_moment == pytest.approx(outs[1].second_moment, abs=1e-8)

    def test_batch_matches_single_bitwise(self, ising5_runner):
        phis = [0.04, -0.09]
        batch = ising5_runner.run_many(phis)
        for phi, got in zip(phis, batch):
            one = ising5_runner(phi)
            assert got.mean == one.mean
            assert got.second_moment == one.second_moment
            assert got.norm_drift == one.norm_drift
            assert got.parity_drift == one.parity_drift

    def test_run_ising_matches_runner(self, ising5_runner):
        out = run_ising(IsingProtocolConfig(n_spins=5, tau=20.0, phase=0.08))
        ref = ising5_runner(0.08)
        assert out.mean == ref.mean
        assert out.second_moment == ref.second_moment

    def test_keep_state(self, ising5_runner):
        out = ising5_runner.run_many([0.1], keep_states=True)[0]
        assert out.final_state is not None
        mz = ising.mz_diagonal(5)
        mean, second = ising.mz_moments(out.final_state, mz)
        assert out.mean == pytest.approx(mean, abs=1e-12)
        assert out.second_moment == pytest.approx(second, abs=1e-12)

    def test_split_against_dense_oracle(self):
        cfg = IsingProtocolConfig(n_spins=3, tau=4.0)
        runner = IsingPhaseRunner(cfg)
        from qpti.schedules import ising_splitting_schedules

        b_sched, j_sched = ising_splitting_schedules(cfg.b0, cfg.j0, cfg.tau)
        want = dense_evolve(
            lambda t: dense_ising_hamiltonian(3, j_sched.value(t), b_sched.value(t)),
            runner.prepared_state, 0.0, cfg.tau, runner.settings.dt,
            breakpoints=[cfg.tau / 2.0],
        )
        np.testing.assert_allclose(runner.split_state, want, atol=1e-9)

    def test_early_recombination_stop(self):
        full = run_ising(IsingProtocolConfig(n_spins=4, tau=8.0, phase=0.1))
        early = run_ising(IsingProtocolConfig(n_spins=4, tau=8.0, tau_prime=6.0, phase=0.1))
        # different endpoint, different readout; both physical
        assert early.norm_drift < 1e-8
        assert early.second_moment != pytest.approx(full.second_moment, abs=1e-12)

    def test_with_tau_prime_shares_split_cache(self):
        base = IsingPhaseRunner(IsingProtocolConfig(n_spins=4, tau=8.0))
        _ = base.split_state
        early = base.with_tau_prime(6.0)
        assert early._split is base._split
        assert early.config.tau_prime_resolved == 6.0
        direct = run_ising(IsingProtocolConfig(n_spins=4, tau=8.0, tau_prime=6.0, phase=0.1))
        via = early.run_many([0.1])[0]
        assert via.mean == direct.mean
        assert via.second_moment == direct.second_moment

    def test_tau_prime_scan_matches_individual_runs(self):
        runner = IsingPhaseRunner(IsingProtocolConfig(n_spins=4, tau=8.0))
        phis = [0.0, 0.1]
        stops = np.array([5.0, 6.5, 8.0])
        scanned = runner.tau_prime_scan(phis, stops)
        assert len(scanned) == 3
        for tp, row in zip(stops, scanned):
            direct = runner.with_tau_prime(float(tp)).run_many(phis)
            for got, want in zip(row, direct):
                assert got.mean == pytest.approx(want.mean, abs=1e-12)
                assert got.second_moment == pytest.approx(want.second_moment, abs=1e-12)

    def test_tau_prime_scan_validation(self):
        runner = IsingPhaseRunner(IsingProtocolConfig(n_spins=3, tau=8.0))
        with pytest.raises(ValueError):
            runner.tau_prime_scan([0.0], np.array([]))
        with pytest.raises(ValueError):
            runner.tau_prime_scan([0.0], np.array([6.0, 5.0]))
        with pytest.raises(ValueError):
            runner.tau_prime_scan([0.0], np.array([3.5, 6.0]))  # at or below tau/2
        with pytest.raises(ValueError):
            runner.tau_prime_scan([0.0], np.array([6.0, 8.5]))  # beyond tau


class TestSplittingStates:
    def test_bj_marker_returns_prepared_state(self):
        marker = BjProtocolConfig(n_particles=6, omega_f=11.0)
        state = splitting_state(marker)
        h = cs.build_bj_hamiltonian(6, 11.0)
        w = np.linalg.eigvalsh(h.to_dense())
        assert cs.expectation(state, h) == pytest.approx(w[0], abs=1e-10)
        assert fidelity(state, cs.coherent_state_x(6)) > 0.98

    def test_bj_split_matches_runner(self, fast_runner):
        state = splitting_state(FAST)
        np.testing.assert_array_equal(state, fast_runner.split_state)

    def test_ising_ghz_formation_deep_adiabatic(self):
        # tau = 40 splitting: fidelity with GHZ maximized over the relative
        # phase theta is ((|a| + |b|)^2)/2 for branch amplitudes a, b
        state = splitting_state(IsingProtocolConfig(n_spins=3, tau=40.0))
        best = (abs(state[0]) + abs(state[-1])) ** 2 / 2.0
        assert best > 0.99

    def test_ising_macroscopic_superposition_witness(self, ising5_runner):
        state = ising5_runner.split_state
        mz = ising.mz_diagonal(5)
        _, second = ising.mz_moments(state / np.linalg.norm(state), mz)
        assert second > 0.9 * (5 / 2.0) ** 2

    def test_type_validation(self):
        with pytest.raises(TypeError):
            splitting_state(object())


class TestRoundtrips:
    def test_bj_default_rates(self):
        cfg = BjProtocolConfig(n_particles=20, omega_f=0.0)
        res = roundtrip(cfg)
        assert res.fidelity > 0.99
        assert res.duration_split == pytest.approx(300.0)
        assert res.duration_recombine == pytest.approx(300.0)

    def test_ising_adiabatic(self):
        res = roundtrip(IsingProtocolConfig(n_spins=5, tau=20.0))
        assert res.fidelity > 0.99
        assert res.duration_split == pytest.approx(20.0)

    def test_monotone_in_sweep_slowness(self):
        base = replace(FAST, omega_end=None)
        fids = []
        for scale in (4.0, 1.0, 0.25):
            cfg = replace(base, beta1=FAST.beta1 * scale, beta2=FAST.beta2 * scale)
            fids.append(roundtrip(cfg).fidelity)
        assert fids[0] <= fids[1] + 1e-9 <= fids[2] + 2e-9
        assert fids[0] < 0.9  # fast quench visibly breaks the return trip
        assert fids[2] > 0.98

    def test_roundtrip_ignores_phase_and_pulse(self):
        cfg = replace(FAST, phase=0.4, pulse_angle=1.1)
        res = roundtrip(cfg)
        ref = roundtrip(replace(FAST, omega_end=None))
        assert res.fidelity == pytest.approx(ref.fidelity, abs=1e-12)

    def test_type_validation(self):
        with pytest.raises(TypeError):
            roundtrip(object())
