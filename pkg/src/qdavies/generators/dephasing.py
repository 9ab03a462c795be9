"""Density (dephasing) coupling ``A_j = a_j^† a_j`` in the single-particle sector.

In the eigenbasis ``A_j = u_j u_j^†`` with ``u_j`` the site-``j`` state,
i.e. ``U = modes^†`` and ``A_j[l, k] = U[l, j] conj(U[k, j])``.  With
``G[l, k] = Gamma(E_k - E_l)`` the Redfield dissipator is

    D(rho) = sum_j (At_j rho A_j + A_j rho At_j^† - A_j At_j rho - rho At_j^† A_j)

where ``At_j = G * A_j`` (elementwise).  This equals the four-index form
with coefficients ``(Gamma(E_k-E_l) + conj Gamma(E_m-E_n)) sum_j A_lk A_mn``
plus the matching Lamb-shift Hamiltonian.  The Davies generator keeps only
terms with ``E_k - E_l = E_m - E_n`` (Bohr frequencies clustered within
tolerance) and is stored as a sparse eigenbasis superoperator.
"""

from dataclasses import dataclass, replace
from functools import cached_property, lru_cache

import numpy as np
from scipy import sparse

from .. import bath
from .base import (Kind, Sector, GeneratorCoefficients, GeneratorError, cluster_labels,
                   degeneracy_tol, traceless_min_eigenvalue)

_CHUNK = 1 << 16


def bohr_matrix(ham):
    """``B[a, b] = E_a - E_b``."""
    e = ham.eigenvalues
    return e[:, None] - e[None, :]


def bohr_labels(ham):
    return cluster_labels(bohr_matrix(ham), degeneracy_tol(ham))


def site_vectors(ham):
    """``U[l, j]``: amplitude of eigenstate ``l`` on site ``j`` (conjugated)."""
    return ham.modes.conj().T


def dephasing_matrix_elements(ham):
    """Stack ``A[j, m, n] = <m| a_j^† a_j |n>`` in the eigenbasis."""
    U = site_vectors(ham)
    return np.einsum("mj,nj->jmn", U, U.conj())


def spectrum_matrix(ham, model):
    """``G[l, k] = Gamma(E_k - E_l)`` for the dephasing bath."""
    return bath.dephasing_gamma(model, -bohr_matrix(ham))


@dataclass(frozen=True, eq=False)
class DephasingGenerator(GeneratorCoefficients):
    spectrum: np.ndarray
    superop: object = None  # sparse eigenbasis dissipator for davies / secular kinds
    z: np.ndarray = None

    sector = Sector.SINGLE_PARTICLE

    @property
    def scale(self):
        return float(2.0 * np.max(np.abs(self.spectrum)))

    @property
    def max_rate(self):
        return float(2.0 * np.max(self.spectrum.real))

    @property
    def lamb_shift(self):
        """Eigenbasis Lamb-shift Hamiltonian ``(Z - Z^†) / 2i``."""
        if self.kind is not Kind.REDFIELD:
            raise GeneratorError("Lamb shift is folded into the superoperator for this kind")
        if not self.lamb_shift_hamiltonian:
            return np.zeros((self.n, self.n), dtype=complex)
        return (self.z - self.z.conj().T) / 2j

    @cached_property
    def _vectors(self):
        U = site_vectors(self.ham)
        z = self.z
        if z is not None and not self.lamb_shift_hamiltonian:
            z = 0.5 * (z + z.conj().T)
        return U, U.conj(), np.ascontiguousarray(U.conj().T), z

    def _sandwich(self, rho):
        U, Uc, Ud, _ = self._vectors
        t = U * (self.spectrum @ (Uc * (rho @ U)))
        return t @ Ud

    def dissipator_eigen(self, rho):
        if self.superop is not None:
            n = self.n
            return (self.superop @ rho.reshape(-1)).reshape(n, n)
        z = self._vectors[3]
        if np.array_equal(rho, rho.conj().T):
            # for Hermitian rho the h.c. half is the adjoint of the first
            x = self._sandwich(rho) - z @ rho
            return x + x.conj().T
        out = self._sandwich(rho)
        out += self._sandwich(rho.conj().T).conj().T
        out -= z @ rho + rho @ z.conj().T
        return out

    def apply_eigen(self, rho):
        e = self.ham.eigenvalues
        return -1j * (e[:, None] - e[None, :]) * rho + self.dissipator_eigen(rho)

    def coefficient_tensor(self):
        """``C[k, l, m, n] = (Gamma(E_k-E_l) + conj Gamma(E_m-E_n)) sum_j A_lk A_mn``.

        Non-resonant entries are zeroed for davies / secular kinds.
        """
        U = site_vectors(self.ham)
        G = self.spectrum
        g4 = np.einsum("lj,kj,mj,nj->klmn", U, U.conj(), U, U.conj())
        coef = G.T[:, :, None, None] + G.conj().T[None, None, :, :]
        c = coef * g4
        if self.kind is not Kind.REDFIELD:
            lab = bohr_labels(self.ham)
            c = np.where(lab[:, :, None, None] == lab[None, None, :, :], c, 0)
        return c

    def kossakowski_matrix(self):
        """Matrix over dyads ``|l><k|``: ``K[(l,k), (n,m)] = C[k,l,m,n]``."""
        n = self.n
        c = self.coefficient_tensor()
        return c.transpose(1, 0, 3, 2).reshape(n * n, n * n)

    def kossakowski_min_eigenvalue(self):
        return traceless_min_eigenvalue(self.kossakowski_matrix(), self.n)


def _model(model, J_int):
    return model if J_int is None else model.with_coupling(J_int)


def _z_matrix(U, G, mask=None):
    """``Z[m, k] = sum_l Gamma(E_k - E_l) sum_j A_j[m, l] A_j[l, k]``."""
    if mask is None:
        p = np.abs(U) ** 2
        s = p.T @ G  # s[j, k] = sum_l |U_lj|^2 G[l, k]
        return U @ (s * U.conj().T)
    t = np.einsum("lj,mj,kj->mkl", np.abs(U) ** 2, U, U.conj())
    return np.einsum("mkl,lk->mk", t * mask, G)


def build_redfield_dephasing(ham, model, J_int=None, lamb_shift=True):
    model = _model(model, J_int)
    G = spectrum_matrix(ham, model)
    z = _z_matrix(site_vectors(ham), G)
    return DephasingGenerator(Kind.REDFIELD, ham, model, G, z=z,
                              lamb_shift_hamiltonian=lamb_shift)


def _resonant_quadruples(labels):
    """All (k, l, m, n) with labels[k, l] == labels[m, n]."""
    n = labels.shape[0]
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_labels = flat[order]
    starts = np.flatnonzero(np.concatenate(([True], sorted_labels[1:] != sorted_labels[:-1])))
    ends = np.append(starts[1:], flat.size)
    sizes = ends - starts
    single = sizes == 1
    first = [order[starts[single]]] * 2  # singleton clusters pair with themselves
    alpha, beta = [first[0]], [first[1]]
    for s, e in zip(starts[~single], ends[~single]):
        members = order[s:e]
        alpha.append(np.repeat(members, members.size))
        beta.append(np.tile(members, members.size))
    alpha = np.concatenate(alpha)
    beta = np.concatenate(beta)
    k, l = np.divmod(alpha, n)
    m, nn = np.divmod(beta, n)
    return k, l, m, nn


def build_davies_dephasing(ham, model, J_int=None, lamb_shift=True):
    """Resonant part of the dephasing Redfield generator, built sparsely."""
    model = _model(model, J_int)
    n = ham.n_sites
    G = spectrum_matrix(ham, model)
    U = site_vectors(ham)
    lab = bohr_labels(ham)

    k, l, m, nn = _resonant_quadruples(lab)
    vals = np.empty(k.size, dtype=complex)
    for s in range(0, k.size, _CHUNK):
        sl = slice(s, s + _CHUNK)
        g4 = np.einsum("ij,ij,ij,ij->i", U[l[sl]], U[k[sl]].conj(), U[m[sl]], U[nn[sl]].conj())
        vals[sl] = (G[l[sl], k[sl]] + G[nn[sl], m[sl]].conj()) * g4
    # |l><k| rho |m><n| moves rho[k, m] to out[l, n]
    sandwich = sparse.csr_matrix((vals, (l * n + nn, k * n + m)), shape=(n * n, n * n))

    mask = lab[None, :, :] == lab[:, None, :]  # mask[m, k, l]: labels[k,l] == labels[m,l]
    z = _z_matrix(U, G, mask)
    if not lamb_shift:
        z = 0.5 * (z + z.conj().T)
    zs = sparse.csr_matrix(z)
    eye = sparse.identity(n, dtype=complex, format="csr")
    superop = sandwich - sparse.kron(zs, eye, format="csr") - sparse.kron(eye, zs.conj(), format="csr")
    superop.eliminate_zeros()
    return DephasingGenerator(Kind.DAVIES, ham, model, G, superop=superop.tocsr(), z=z,
                              lamb_shift_hamiltonian=lamb_shift)


def secular_truncate_dephasing(g):
    """Materialize the eigenbasis dissipator and keep Bohr-resonant entries."""
    if g.kind is not Kind.REDFIELD:
        raise GeneratorError("secular truncation expects a Redfield generator")
    n = g.n
    lab = bohr_labels(g.ham)
    dense = np.empty((n * n, n * n), dtype=complex)
    e = np.zeros((n, n), dtype=complex)
    for idx in range(n * n):
        e.flat[idx] = 1.0
        dense[:, idx] = g.dissipator_eigen(e).ravel()
        e.flat[idx] = 0.0
    flat = lab.ravel()
    keep = flat[:, None] == flat[None, :]
    superop = sparse.csr_matrix(np.where(keep, dense, 0))
    return replace(g, kind=Kind.SECULAR, superop=superop)


def four_index_oracle(ham, model, J_int=None, include_lamb=True):
    """Eigenbasis superoperator written term by term from the four-index
    Redfield form and its Lamb-shift Hamiltonian.  Slow; for N <= 4."""
    model = _model(model, J_int)
    n = ham.n_sites
    E = ham.eigenvalues
    A = dephasing_matrix_elements(ham)

    @lru_cache(maxsize=None)
    def Gam(w):
        return complex(bath.dephasing_gamma(model, np.array(w)))

    def ket_bra(a, b):
        x = np.zeros((n, n), dtype=complex)
        x[a, b] = 1.0
        return x

    terms = []
    hls = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            for m in range(n):
                for q in range(n):
                    g_sum = sum(A[j, l, k] * A[j, m, q] for j in range(n))
                    coef = (Gam(E[k] - E[l]) + np.conj(Gam(E[m] - E[q]))) * g_sum
                    lk = ket_bra(l, k)
                    mq = ket_bra(m, q)
                    terms.append((coef, lk, mq))
                    hls += (Gam(E[k] - E[l]) - np.conj(Gam(E[m] - E[q]))) / 2j * g_sum * (mq @ lk)
    if not include_lamb:
        hls[:] = 0
    out = np.zeros((n * n, n * n), dtype=complex)
    for idx in range(n * n):
        rho = np.zeros((n, n), dtype=complex)
        rho.flat[idx] = 1.0
        d = -1j * (hls @ rho - rho @ hls)
        for coef, lk, mq in terms:
            d += coef * (lk @ rho @ mq - 0.5 * (mq @ lk @ rho + rho @ mq @ lk))
        out[:, idx] = d.ravel()
    return out
