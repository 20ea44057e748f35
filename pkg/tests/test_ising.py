import math

import numpy as np
import pytest

from conftest import dense_flip_sum, dense_ising_coupling, dense_ising_hamiltonian
from qpti import ising


def brute_force_coupling(n, power=3.0, interaction_range=None):
    """Per-basis-state pair loop over explicit bit arithmetic."""
    dim = 2**n
    out = np.zeros(dim)
    for k in range(dim):
        acc = 0.0
        for i in range(n):
            zi = 1.0 if (k >> (n - 1 - i)) & 1 == 0 else -1.0
            for j in range(i + 1, n):
                if interaction_range is not None and (j - i) > interaction_range:
                    continue
                zj = 1.0 if (k >> (n - 1 - j)) & 1 == 0 else -1.0
                acc += zi * zj / (j - i) ** power
        out[k] = acc
    return out


class TestDiagonals:
    def test_site_z_two_and_three_spins(self):
        # site 0 is the most significant bit; bit 0 means z = +1
        z2 = ising.site_z_values(2)
        np.testing.assert_array_equal(z2[0], [1, 1, -1, -1])
        np.testing.assert_array_equal(z2[1], [1, -1, 1, -1])
        z3 = ising.site_z_values(3)
        np.testing.assert_array_equal(z3[0], [1, 1, 1, 1, -1, -1, -1, -1])
        np.testing.assert_array_equal(z3[2], [1, -1, 1, -1, 1, -1, 1, -1])

    def test_coupling_two_spins_literal(self):
        # single pair at distance 1: z0 z1 = [+1, -1, -1, +1]
        np.testing.assert_allclose(ising.coupling_diagonal(2), [1.0, -1.0, -1.0, 1.0])

    def test_coupling_three_spins_literal(self):
        # pairs: (0,1) and (1,2) at weight 1, (0,2) at weight 1/8
        want = np.array(
            [
                1 + 1 + 1 / 8,  # uuu
                1 - 1 - 1 / 8,  # uud
                -1 - 1 + 1 / 8,  # udu
                -1 + 1 - 1 / 8,  # udd
            ]
        )
        got = ising.coupling_diagonal(3)
        np.testing.assert_allclose(got[:4], want)
        # global flip symmetry: complement index has the same coupling energy
        np.testing.assert_allclose(got, got[::-1])

    @pytest.mark.parametrize("n, rng_", [(2, None), (4, None), (5, None), (5, 1), (6, 2)])
    def test_coupling_against_brute_force(self, n, rng_):
        got = ising.coupling_diagonal(n, interaction_range=rng_)
        want = brute_force_coupling(n, interaction_range=rng_)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_nearest_neighbor_range(self):
        # range 1 drops the 1/8 long bond entirely
        got = ising.coupling_diagonal(3, interaction_range=1)
        assert got[0] == pytest.approx(2.0)
        with pytest.raises(ValueError):
            ising.coupling_diagonal(3, interaction_range=0)

    def test_power_scaling(self):
        flat = ising.coupling_diagonal(3, power=0.0)
        # all three pairs at weight 1
        assert flat[0] == pytest.approx(3.0)

    def test_mz_diagonal(self):
        np.testing.assert_allclose(ising.mz_diagonal(2), [1.0, 0.0, 0.0, -1.0])
        mz3 = ising.mz_diagonal(3)
        assert mz3[0] == pytest.approx(1.5)
        assert mz3[-1] == pytest.approx(-1.5)

    def test_spin_cap(self):
        with pytest.raises(ValueError):
            ising.coupling_diagonal(ising.MAX_SPINS + 1)
        diag = ising.mz_diagonal(ising.MAX_SPINS + 1, allow_large=True)
        assert diag.shape[0] == 2 ** (ising.MAX_SPINS + 1)
        with pytest.raises(ValueError):
            ising.coherent_x_state(0)


class TestOperators:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
    def test_flip_sum_matches_kronecker(self, n):
        dense = dense_flip_sum(n)
        op = ising.FlipSumOperator(n)
        rng = np.random.default_rng(n)
        x = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        np.testing.assert_allclose(op.matvec(x), dense @ x, atol=1e-10)
        batch = rng.normal(size=(2**n, 3)) + 1j * rng.normal(size=(2**n, 3))
        np.testing.assert_allclose(op.matvec(batch), dense @ batch, atol=1e-10)

    def test_flip_sum_triplets_rebuild_dense(self):
        n = 3
        rows, cols, vals = ising.FlipSumOperator(n, scale=0.7).coo_triplets()
        rebuilt = np.zeros((8, 8), dtype=complex)
        for r, c, v in zip(rows, cols, vals):
            rebuilt[r, c] += v
        np.testing.assert_allclose(rebuilt, 0.7 * dense_flip_sum(n), atol=1e-12)

    @pytest.mark.parametrize("n", [2, 4, 6])
    def test_hamiltonian_action_matches_dense(self, n):
        coupling = ising.coupling_diagonal(n)
        dense = dense_ising_hamiltonian(n, j_coef=-0.8, b_coef=0.6)
        rng = np.random.default_rng(2 * n)
        x = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        got = ising.apply_ising_hamiltonian(x, -0.8, 0.6, coupling)
        np.testing.assert_allclose(got, dense @ x, atol=1e-10)

    def test_coupling_matches_kronecker_diagonal(self):
        for n in (2, 3, 5):
            dense = dense_ising_coupling(n)
            np.testing.assert_allclose(
                ising.coupling_diagonal(n), np.diag(dense).real, atol=1e-12
            )

    def test_hamiltonian_action_validation(self):
        coupling = ising.coupling_diagonal(3)
        with pytest.raises(ValueError):
            ising.apply_ising_hamiltonian(np.zeros(4, dtype=complex), 1.0, 1.0, coupling)
        with pytest.raises(ValueError):
            ising.apply_ising_hamiltonian(np.zeros(6, dtype=complex), 1.0, 1.0, np.zeros(6))

    def test_diagonal_operator(self):
        diag = np.array([1.0, -2.0, 0.5, 0.0])
        op = ising.DiagonalOperator(diag)
        assert op.dim == 4
        assert op.norm_bound() == 2.0
        x = np.arange(4, dtype=complex)
        np.testing.assert_array_equal(op.matvec(x), diag * x)


class TestStatesAndReadout:
    def test_coherent_x_is_flip_sum_top_eigenvector(self):
        n = 5
        state = ising.coherent_x_state(n)
        np.testing.assert_allclose(
            ising.FlipSumOperator(n).matvec(state), n * state, atol=1e-12
        )
        assert np.linalg.norm(state) == pytest.approx(1.0)

    def test_ghz_moments(self):
        n = 4
        mz = ising.mz_diagonal(n)
        mean, second = ising.mz_moments(ising.ghz_state(n), mz)
        assert mean == pytest.approx(0.0, abs=1e-12)
        assert second == pytest.approx((n / 2.0) ** 2, abs=1e-12)

    def test_coherent_moments(self):
        # product state along x: <Mz> = 0, <Mz^2> = N/4
        for n in (2, 5):
            mz = ising.mz_diagonal(n)
            mean, second = ising.mz_moments(ising.coherent_x_state(n), mz)
            assert mean == pytest.approx(0.0, abs=1e-12)
            assert second == pytest.approx(n / 4.0, abs=1e-12)

    def test_phase_imprint_on_ghz(self):
        # GHZ picks up relative phase N*phi between the two branches
        n, phi = 5, 0.21
        mz = ising.mz_diagonal(n)
        out = ising.apply_phase_mz(ising.ghz_state(n), phi, mz)
        rel = out[-1] / out[0]
        assert rel == pytest.approx(np.exp(1j * n * phi), abs=1e-12)

    def test_phase_imprint_batch_matches_columns(self):
        n = 3
        mz = ising.mz_diagonal(n)
        rng = np.random.default_rng(9)
        batch = rng.normal(size=(8, 4)) + 1j * rng.normal(size=(8, 4))
        out = ising.apply_phase_mz(batch, 0.37, mz)
        for i in range(4):
            np.testing.assert_array_equal(out[:, i], ising.apply_phase_mz(batch[:, i], 0.37, mz))

    def test_global_flip_parity(self):
        n = 4
        assert ising.global_flip_parity(ising.coherent_x_state(n)) == pytest.approx(1.0)
        # GHZ with relative phase theta: <X̄> = cos(theta)
        for theta in (0.0, 0.4, math.pi / 2, math.pi):
            got = ising.global_flip_parity(ising.ghz_state(n, relative_phase=theta))
            assert got == pytest.approx(math.cos(theta), abs=1e-12)

    def test_global_flip_parity_batch(self):
        n = 3
        states = np.stack(
            [ising.ghz_state(n, relative_phase=t) for t in (0.0, 0.7, 2.0)], axis=1
        )
        got = ising.global_flip_parity(states)
        np.testing.assert_allclose(got, np.cos([0.0, 0.7, 2.0]), atol=1e-12)

    def test_parity_conserved_by_hamiltonian(self):
        # [H, X̄] = 0: H action commutes with index reversal
        n = 5
        coupling = ising.coupling_diagonal(n)
        rng = np.random.default_rng(1)
        x = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        hx = ising.apply_ising_hamiltonian(x, -1.0, 0.7, coupling)
        xh = ising.apply_ising_hamiltonian(x[::-1], -1.0, 0.7, coupling)[::-1]
        np.testing.assert_allclose(hx, xh, atol=1e-12)
