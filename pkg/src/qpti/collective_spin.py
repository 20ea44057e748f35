"""Collective spin (Dicke) basis tools for N two-mode bosons / N spin-1/2.

Everything here lives in the maximal-spin sector J = N/2. Basis states are
the Jz eigenstates |J, m> with m ascending from -J to +J, so a state is a
complex vector of length N + 1 and index k holds amplitude at m = -J + k.

Operators with bandwidth <= 1 in this basis (Jx, Jy, Jz, Jz^2 and the
Josephson Hamiltonian built from them) are stored banded: a real diagonal
plus the first upper off-diagonal, the lower one implied by Hermiticity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.special

__all__ = [
    "CollectiveOperator",
    "angular_momentum",
    "jz_squared",
    "build_bj_hamiltonian",
    "coherent_state_x",
    "cat_state",
    "apply_phase_imprint",
    "apply_rotation_pulse",
    "jz_moments",
    "expectation",
    "parity_expectation",
    "parity_operator_dense",
    "validate_state",
]

_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class CollectiveOperator:
    """Hermitian operator with bandwidth <= 1 in the Dicke basis.

    diag: real diagonal, length d. off: first upper off-diagonal, length
    d - 1 (complex allowed); the lower off-diagonal is its conjugate.
    """

    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        off = np.asarray(self.off, dtype=complex)
        if diag.ndim != 1 or off.ndim != 1 or off.shape[0] != diag.shape[0] - 1:
            raise ValueError("need diag of length d and off of length d - 1")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "off", off)

    @property
    def dim(self) -> int:
        return self.diag.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Apply to a vector (d,) or a stack of column vectors (d, k)."""
        x = np.asarray(x)
        if x.ndim == 1:
            y = self.diag * x
            y[:-1] += self.off * x[1:]
            y[1:] += np.conj(self.off) * x[:-1]
        else:
            y = self.diag[:, None] * x
            y[:-1] += self.off[:, None] * x[1:]
            y[1:] += np.conj(self.off)[:, None] * x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        a = np.diag(self.diag.astype(complex))
        a += np.diag(self.off, 1)
        a += np.diag(np.conj(self.off), -1)
        return a

    def norm_bound(self) -> float:
        """Gershgorin upper bound on the spectral radius."""
        radii = np.zeros(self.dim)
        radii[:-1] += np.abs(self.off)
        radii[1:] += np.abs(self.off)
        return float(np.max(np.abs(self.diag) + radii))

    def scaled(self, factor: float) -> "CollectiveOperator":
        return CollectiveOperator(self.diag * factor, self.off * factor)

    def plus(self, other: "CollectiveOperator") -> "CollectiveOperator":
        return CollectiveOperator(self.diag + other.diag, self.off + other.off)

    def banded_parts(self) -> tuple[np.ndarray, np.ndarray]:
        return self.diag.astype(complex), self.off

    def coo_triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        d = self.dim
        idx = np.arange(d)
        rows = np.concatenate([idx, idx[:-1], idx[1:]])
        cols = np.concatenate([idx, idx[1:], idx[:-1]])
        vals = np.concatenate([self.diag.astype(complex), self.off, np.conj(self.off)])
        keep = vals != 0.0
        # diagonal entries stay even when zero so the pattern is never empty
        keep[:d] = True
        return rows[keep], cols[keep], vals[keep]


def _m_values(n: int) -> np.ndarray:
    _check_n(n)
    j = n / 2.0
    return np.arange(n + 1) - j


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"particle number must be a positive integer, got {n}")


def _ladder_coeffs(n: int) -> np.ndarray:
    # c_k = sqrt(J(J+1) - m_k (m_k+1)) couples m_k to m_k + 1
    j = n / 2.0
    m = _m_values(n)[:-1]
    return np.sqrt(j * (j + 1.0) - m * (m + 1.0))


def angular_momentum(n: int, axis: str) -> CollectiveOperator:
    """Collective spin component Jx, Jy or Jz for N particles (J = N/2)."""
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {_AXES}, got {axis!r}")
    m = _m_values(n)
    d = n + 1
    if axis == "z":
        return CollectiveOperator(m, np.zeros(d - 1, dtype=complex))
    c = _ladder_coeffs(n)
    if axis == "x":
        return CollectiveOperator(np.zeros(d), 0.5 * c.astype(complex))
    # <m|Jy|m+1> = +i c/2 in ascending-m ordering
    return CollectiveOperator(np.zeros(d), 0.5j * c)


def jz_squared(n: int) -> CollectiveOperator:
    m = _m_values(n)
    return CollectiveOperator(m * m, np.zeros(n, dtype=complex))


def build_bj_hamiltonian(n: int, omega: float, chi: float = -1.0) -> CollectiveOperator:
    """Bosonic Josephson Hamiltonian -omega*Jx + (chi/N)*Jz^2 as a banded operator."""
    _check_n(n)
    m = _m_values(n)
    diag = (chi / n) * m * m
    off = -omega * 0.5 * _ladder_coeffs(n)
    return CollectiveOperator(diag, off.astype(complex))


def coherent_state_x(n: int) -> np.ndarray:
    """Spin coherent state fully polarized along +x, in the Jz basis.

    Amplitude at m = -J + k is 2^(-J) * sqrt(C(N, k)); this is the exact
    top eigenvector of Jx and the strong-drive ground state limit.
    """
    _check_n(n)
    k = np.arange(n + 1)
    # log-binomial for numerical range at large N
    log_c = scipy.special.gammaln(n + 1) - scipy.special.gammaln(k + 1) - scipy.special.gammaln(n - k + 1)
    amps = np.exp(0.5 * (log_c - n * np.log(2.0)))
    state = amps.astype(complex)
    return state / np.linalg.norm(state)


def cat_state(n: int, sign: int = 1) -> np.ndarray:
    """(|m=+J> + sign |m=-J>)/sqrt(2), the ideal split (cat) state."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    state = np.zeros(n + 1, dtype=complex)
    state[-1] = 1.0
    state[0] = float(sign)
    return state / np.sqrt(2.0)


def validate_state(state: np.ndarray, n: int | None = None, tol: float = 1e-8) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1:
        raise ValueError("state must be a 1-d complex vector")
    if n is not None and state.shape[0] != n + 1:
        raise ValueError(f"state has dimension {state.shape[0]}, expected {n + 1}")
    nrm = np.linalg.norm(state)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"state is not normalized, |norm - 1| = {abs(nrm - 1.0):.3e}")
    return state


def apply_phase_imprint(state: np.ndarray, phi: float) -> np.ndarray:
    """Interrogation phase: multiply amplitude at m by exp(-i phi m). Exact."""
    state = np.asarray(state, dtype=complex)
    n = state.shape[0] - 1
    phases = np.exp(-1j * phi * _m_values(n))
    if state.ndim == 1:
        return phases * state
    return phases[:, None] * state


@lru_cache(maxsize=32)
def _axis_eigensystem(n: int, axis: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors of J_axis, cached per (n, axis)."""
    op = angular_momentum(n, axis)
    if axis == "y":
        w, v = np.linalg.eigh(op.to_dense())
    else:
        w, v = scipy.linalg.eigh_tridiagonal(op.diag, op.off.real)
        v = v.astype(complex)
    return w, v


def apply_rotation_pulse(state: np.ndarray, axis: str, angle: float) -> np.ndarray:
    """Rotate by exp(-i angle J_axis), via the cached spectral decomposition.

    Unitary to machine precision; axis 'z' reduces to a phase imprint.
    """
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {_AXES}, got {axis!r}")
    state = np.asarray(state, dtype=complex)
    if axis == "z":
        return apply_phase_imprint(state, angle)
    n = state.shape[0] - 1
    w, v = _axis_eigensystem(n, axis)
    phases = np.exp(-1j * angle * w)
    if state.ndim == 1:
        return v @ (phases * (v.conj().T @ state))
    return v @ (phases[:, None] * (v.conj().T @ state))


def jz_moments(state: np.ndarray) -> tuple[float, float]:
    """(<Jz>, <Jz^2>) of a normalized state; exact sums over the diagonal basis."""
    state = np.asarray(state)
    m = _m_values(state.shape[0] - 1)
    w = np.abs(state) ** 2
    return float(np.dot(m, w)), float(np.dot(m * m, w))


def expectation(state: np.ndarray, op: CollectiveOperator) -> float:
    """<state|op|state> for a Hermitian banded operator (real up to roundoff)."""
    if state.shape[0] != op.dim:
        raise ValueError("state and operator dimensions differ")
    return float(np.real(np.vdot(state, op.matvec(state))))


@lru_cache(maxsize=32)
def _parity_signs_and_basis(n: int) -> tuple[np.ndarray, np.ndarray]:
    # Parity eigenvalue (-1)^(J - m_x) on the Jx eigenbasis; columns of v are
    # m_x ascending, so exponent J - m_x = N - k at column k.
    w, v = _axis_eigensystem(n, "x")
    signs = np.where((n - np.arange(n + 1)) % 2 == 0, 1.0, -1.0)
    return signs, v

def parity_expectation(state: np.ndarray) -> float:
    """<Pi> where Pi flips the spin direction about x; conserved by the sweep."""
    state = np.asarray(state, dtype=complex)
    n = state.shape[0] - 1
    signs, v = _parity_signs_and_basis(n)
    overlaps = v.conj().T @ state
    if state.ndim == 1:
        return float(np.dot(signs, np.abs(overlaps) ** 2))
    return np.real(np.einsum("k,kc->c", signs, np.abs(overlaps) ** 2))


def parity_operator_dense(n: int) -> np.ndarray:
    """Dense parity matrix, mainly for cross-checks against commutators."""
    signs, v = _parity_signs_and_basis(n)
    return (v * signs) @ v.conj().T
