"""Compiled inner loops for the midpoint-exponential integrator.

Both kernels march a batch of state columns through a fixed sequence of
steps. At step s the Hamiltonian is a fixed linear combination of operator
terms with scalar coefficients coefs[s, :]; the step propagator
exp(-i h H_mid) is applied as a truncated Taylor series whose term count
nterms[s] the caller derives from a spectral bound, so truncation never
depends on the state being propagated (batch composition cannot change
any column's arithmetic).

Two operator storage layouts: banded (diagonal + first off-diagonal,
Hermitian) and general CSR on a shared sparsity pattern. Same math either
way; the banded layout is just faster for the tridiagonal collective-spin
Hamiltonians.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def evolve_banded(psi, diag_stack, off_stack, coefs, h_steps, nterms):
    """psi: (d, k) complex, modified in place and returned.

    diag_stack: (T, d) complex per-term diagonals; off_stack: (T, d-1)
    complex per-term upper off-diagonals (lower = conjugate). coefs:
    (S, T) float; h_steps: (S,) float; nterms: (S,) int64.
    """
    d, kc = psi.shape
    nT = diag_stack.shape[0]
    diag = np.empty(d, np.complex128)
    off = np.empty(max(d - 1, 1), np.complex128)
    offc = np.empty(max(d - 1, 1), np.complex128)
    acc = np.empty_like(psi)
    term = np.empty_like(psi)
    buf = np.empty_like(psi)
    for s in range(coefs.shape[0]):
        for i in range(d):
            v = 0.0 + 0.0j
            for t in range(nT):
                v += coefs[s, t] * diag_stack[t, i]
            diag[i] = v
        for i in range(d - 1):
            v = 0.0 + 0.0j
            for t in range(nT):
                v += coefs[s, t] * off_stack[t, i]
            off[i] = v
            offc[i] = np.conj(v)
        h = h_steps[s]
        nt = nterms[s]
        for i in range(d):
            for c in range(kc):
                acc[i, c] = psi[i, c]
                term[i, c] = psi[i, c]
        for k in range(1, nt + 1):
            fac = -1j * h / k
            if d == 1:
                for c in range(kc):
                    buf[0, c] = diag[0] * term[0, c]
            else:
                for c in range(kc):
                    buf[0, c] = diag[0] * term[0, c] + off[0] * term[1, c]
                for i in range(1, d - 1):
                    for c in range(kc):
                        buf[i, c] = (
                            diag[i] * term[i, c]
                            + off[i] * term[i + 1, c]
                            + offc[i - 1] * term[i - 1, c]
                        )
                for c in range(kc):
                    buf[d - 1, c] = diag[d - 1] * term[d - 1, c] + offc[d - 2] * term[d - 2, c]
            for i in range(d):
                for c in range(kc):
                    tv = fac * buf[i, c]
                    term[i, c] = tv
                    acc[i, c] += tv
        for i in range(d):
            for c in range(kc):
                psi[i, c] = acc[i, c]
    return psi


@njit(cache=True)
def evolve_csr(psi, indptr, indices, data_stack, coefs, h_steps, nterms):
    """Same stepping as evolve_banded for CSR-stored terms.

    indptr/indices describe the union sparsity pattern; data_stack (T, nnz)
    holds each term's entries aligned on that pattern.
    """
    d, kc = psi.shape
    nnz = indices.shape[0]
    nT = data_stack.shape[0]
    data = np.empty(nnz, np.complex128)
    acc = np.empty_like(psi)
    term = np.empty_like(psi)
    buf = np.empty_like(psi)
    for s in range(coefs.shape[0]):
        for p in range(nnz):
            v = 0.0 + 0.0j
            for t in range(nT):
                v += coefs[s, t] * data_stack[t, p]
            data[p] = v
        h = h_steps[s]
        nt = nterms[s]
        for i in range(d):
            for c in range(kc):
                acc[i, c] = psi[i, c]
                term[i, c] = psi[i, c]
        for k in range(1, nt + 1):
            fac = -1j * h / k
            for i in range(d):
                for c in range(kc):
                    buf[i, c] = 0.0 + 0.0j
                for p in range(indptr[i], indptr[i + 1]):
                    dv = data[p]
                    j = indices[p]
                    for c in range(kc):
                        buf[i, c] += dv * term[j, c]
            for i in range(d):
                for c in range(kc):
                    tv = fac * buf[i, c]
                    term[i, c] = tv
                    acc[i, c] += tv
        for i in range(d):
            for c in range(kc):
                psi[i, c] = acc[i, c]
    return psi
