"""Transverse-field Ising chain in the full 2^N computational basis.

Site i of an N-site open chain maps to bit position N-1-i of the basis
index, so site 0 is the most significant bit and reshaping a state vector
to shape (2,)*N puts site i on axis i. Bit value 0 means spin up (z = +1).

The Hamiltonian is H(t) = J(t) * sum_{i<j} z_i z_j / |i-j|^p  -  B(t) * sum_i x_i
with p = 3 by default (optionally truncated to a finite interaction range;
range 1 recovers the nearest-neighbor chain). The zz part is diagonal and
the transverse part is a sum of single-bit flips, so the Hamiltonian never
needs to be materialized; everything works through diagonals and flips.

Exact diagonalization cost grows as 4^N, so particle numbers above
MAX_SPINS = 14 are refused unless the caller explicitly overrides the cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_SPINS",
    "DiagonalOperator",
    "FlipSumOperator",
    "coupling_diagonal",
    "mz_diagonal",
    "apply_ising_hamiltonian",
    "coherent_x_state",
    "ghz_state",
    "apply_phase_mz",
    "mz_moments",
    "global_flip_parity",
    "site_z_values",
]

MAX_SPINS = 14


def _check_spins(n: int, allow_large: bool = False) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"spin count must be a positive integer, got {n}")
    if n > MAX_SPINS and not allow_large:
        raise ValueError(
            f"n = {n} exceeds the practical cap of {MAX_SPINS} spins "
            "(4^N exact diagonalization); pass allow_large=True to override"
        )


def site_z_values(n: int) -> np.ndarray:
    """Array (n, 2^n): z eigenvalue (+/-1) of each site for every basis index."""
    k = np.arange(2**n)
    bits = (k[None, :] >> (n - 1 - np.arange(n)[:, None])) & 1
    return 1.0 - 2.0 * bits


def coupling_diagonal(
    n: int,
    power: float = 3.0,
    interaction_range: int | None = None,
    allow_large: bool = False,
) -> np.ndarray:
    """Diagonal of sum_{i<j} z_i z_j / |i-j|^power on the open chain.

    interaction_range = r keeps only pairs with |i - j| <= r; None keeps all
    pairs. The J(t) prefactor is applied by the caller, not here.
    """
    _check_spins(n, allow_large)
    if interaction_range is not None and interaction_range < 1:
        raise ValueError("interaction_range must be >= 1 when given")
    z = site_z_values(n)
    diag = np.zeros(2**n)
    for i in range(n):
        for j in range(i + 1, n):
            dist = j - i
            if interaction_range is not None and dist > interaction_range:
                continue
            diag += z[i] * z[j] / dist**power
    return diag


def mz_diagonal(n: int, allow_large: bool = False) -> np.ndarray:
    """Diagonal of the half total magnetization Mz = (1/2) sum_i z_i."""
    _check_spins(n, allow_large)
    return 0.5 * site_z_values(n).sum(axis=0)


@dataclass(frozen=True)
class DiagonalOperator:
    """Hermitian operator that is diagonal in the computational basis."""

    diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", np.asarray(self.diag, dtype=float))

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return self.diag[:, None] * x if x.ndim == 2 else self.diag * x

    def norm_bound(self) -> float:
        return float(np.max(np.abs(self.diag))) if self.dim else 0.0

    def banded_parts(self) -> tuple[np.ndarray, np.ndarray]:
        return self.diag.astype(complex), np.zeros(max(self.dim - 1, 1), dtype=complex)

    def coo_triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = np.arange(self.dim)
        return idx, idx, self.diag.astype(complex)


@dataclass(frozen=True)
class FlipSumOperator:
    """scale * sum_i x_i: simultaneous single-site flips on every site."""

    n_spins: int
    scale: float = 1.0

    def __post_init__(self):
        _check_spins(self.n_spins, allow_large=True)

    @property
    def dim(self) -> int:
        return 2**self.n_spins

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        batch = x.shape[1:]
        t = x.reshape((2,) * self.n_spins + batch)
        out = np.zeros_like(t)
        for axis in range(self.n_spins):
            out += np.flip(t, axis=axis)
        return self.scale * out.reshape(x.shape)

    def norm_bound(self) -> float:
        return abs(self.scale) * self.n_spins

    def coo_triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        dim = self.dim
        k = np.arange(dim)
        rows = np.repeat(k, self.n_spins)
        masks = 1 << np.arange(self.n_spins)
        cols = (k[:, None] ^ masks[None, :]).ravel()
        vals = np.full(rows.shape[0], complex(self.scale))
        return rows, cols, vals


def apply_ising_hamiltonian(
    state: np.ndarray, j_coef: float, b_coef: float, coupling: np.ndarray
) -> np.ndarray:
    """Reference H(t) action: j_coef * coupling ⊙ state - b_coef * sum_i flip_i(state)."""
    state = np.asarray(state, dtype=complex)
    dim = coupling.shape[0]
    if state.shape[0] != dim:
        raise ValueError("state and coupling diagonal dimensions differ")
    n = dim.bit_length() - 1
    if 2**n != dim:
        raise ValueError("coupling diagonal length is not a power of two")
    flips = FlipSumOperator(n).matvec(state)
    if state.ndim == 2:
        return j_coef * coupling[:, None] * state - b_coef * flips
    return j_coef * coupling * state - b_coef * flips


def coherent_x_state(n: int, allow_large: bool = False) -> np.ndarray:
    """All spins along +x: the uniform superposition, ground state at J = 0."""
    _check_spins(n, allow_large)
    dim = 2**n
    return np.full(dim, dim**-0.5, dtype=complex)


def ghz_state(n: int, relative_phase: float = 0.0, allow_large: bool = False) -> np.ndarray:
    """(|all up> + e^{i theta} |all down>)/sqrt(2)."""
    _check_spins(n, allow_large)
    state = np.zeros(2**n, dtype=complex)
    state[0] = 1.0
    state[-1] = np.exp(1j * relative_phase)
    return state / np.sqrt(2.0)


def apply_phase_mz(state: np.ndarray, phi: float, mz_diag: np.ndarray) -> np.ndarray:
    """Interrogation phase exp(-i phi Mz); diagonal, hence exact."""
    state = np.asarray(state, dtype=complex)
    phases = np.exp(-1j * phi * mz_diag)
    if state.ndim == 2:
        return phases[:, None] * state
    return phases * state


def mz_moments(state: np.ndarray, mz_diag: np.ndarray) -> tuple[float, float]:
    """(<Mz>, <Mz^2>) of a normalized state."""
    w = np.abs(np.asarray(state)) ** 2
    return float(np.dot(mz_diag, w)), float(np.dot(mz_diag * mz_diag, w))


def global_flip_parity(state: np.ndarray) -> float | np.ndarray:
    """<X̄> with X̄ the simultaneous flip of every spin; conserved by H(t).

    Drift of this number across a sweep flags an integration problem. A
    (dim, k) batch yields one value per column.
    """
    state = np.asarray(state, dtype=complex)
    flipped = state[::-1]  # k -> complement of k is index reversal
    vals = np.real(np.sum(np.conj(state) * flipped, axis=0))
    return float(vals) if state.ndim == 1 else vals
