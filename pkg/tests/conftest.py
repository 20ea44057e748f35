"""Shared independent oracles for the test suite.

Everything here is built from first principles (explicit ladder-operator
formulas, Kronecker products, dense matrix exponentials) without touching
the package's banded operators, kernels, or Taylor stepping, so tests can
compare the fast paths against genuinely independent references.
"""

import math

import numpy as np
import scipy.linalg


def dense_jx(n: int) -> np.ndarray:
    """Jx in the |J, m> basis, m ascending, from the ladder formula."""
    j = n / 2.0
    d = n + 1
    h = np.zeros((d, d), dtype=complex)
    for k in range(d - 1):
        m = -j + k
        c = math.sqrt(j * (j + 1) - m * (m + 1))
        h[k, k + 1] += 0.5 * c
        h[k + 1, k] += 0.5 * c
    return h


def dense_jy(n: int) -> np.ndarray:
    j = n / 2.0
    d = n + 1
    h = np.zeros((d, d), dtype=complex)
    for k in range(d - 1):
        m = -j + k
        c = math.sqrt(j * (j + 1) - m * (m + 1))
        h[k, k + 1] += 0.5j * c
        h[k + 1, k] += -0.5j * c
    return h


def dense_jz(n: int) -> np.ndarray:
    j = n / 2.0
    return np.diag(np.arange(n + 1) - j).astype(complex)


def dense_bj_hamiltonian(n: int, omega: float, chi: float = -1.0) -> np.ndarray:
    jz = dense_jz(n)
    return -omega * dense_jx(n) + (chi / n) * (jz @ jz)


_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_ID = np.eye(2, dtype=complex)


def _kron_site(op: np.ndarray, site: int, n: int) -> np.ndarray:
    mats = [_ID] * n
    mats[site] = op
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def dense_flip_sum(n: int) -> np.ndarray:
    """sum_i sigma_x^(i) with site 0 the most significant bit."""
    return sum(_kron_site(_SX, i, n) for i in range(n))


def dense_ising_coupling(n: int, power: float = 3.0, interaction_range=None) -> np.ndarray:
    out = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        for k in range(i + 1, n):
            if interaction_range is not None and (k - i) > interaction_range:
                continue
            out += _kron_site(_SZ, i, n) @ _kron_site(_SZ, k, n) / (k - i) ** power
    return out


def dense_ising_hamiltonian(n, j_coef, b_coef, power=3.0, interaction_range=None) -> np.ndarray:
    return j_coef * dense_ising_coupling(n, power, interaction_range) - b_coef * dense_flip_sum(n)


def dense_evolve(h_of_t, psi0, t0, t1, dt, breakpoints=()):
    """Midpoint-exponential reference propagator on dense matrices.

    Same discretization contract as the package (segments between
    breakpoints, steps of h = len/ceil(len/dt)), but each step uses an
    exact dense matrix exponential instead of a Taylor polynomial.
    """
    edges = [t0] + [float(b) for b in breakpoints if t0 < b < t1] + [t1]
    psi = np.array(psi0, dtype=complex)
    for a, b in zip(edges[:-1], edges[1:]):
        length = b - a
        steps = max(1, math.ceil(length / dt - 1e-9))
        h = length / steps
        for s in range(steps):
            mid = a + (s + 0.5) * h
            u = scipy.linalg.expm(-1j * h * h_of_t(mid))
            psi = u @ psi
    return psi


def overlap2(a: np.ndarray, b: np.ndarray) -> float:
    return abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real)
