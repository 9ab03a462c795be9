"""Linear (exchange) dissipation in the eigenmode representation.

The dissipator is

    sum_mn K1[m,n] (c_m rho c_n^† - c_n^† c_m rho)
         + K2[m,n] (c_m^† rho c_n - c_n c_m^† rho) + h.c.

with ``K1[m,n] = S[m,n] Gamma_em(w_m)`` and
``K2[m,n] = conj(S[m,n]) Gamma_abs(w_m)``, where ``S = V diag(J_j^2) V^†``.
Coefficients are stored as ``channel = 2 K`` so that the Hermitian part of
a diagonal entry is the transition rate and the imaginary part carries the
Lamb shift.
"""

from dataclasses import dataclass, replace

import numpy as np

from .. import bath
from ..hamiltonians import sample_drive
from .base import (Kind, Sector, GeneratorCoefficients, GeneratorError, CouplingPattern,
                   cluster_labels, degeneracy_tol)

FOCK_MAX_SITES = 6


def overlap_matrix(ham, pattern):
    """``S[m, n] = sum_j J_j^2 V[m, j] conj(V[n, j])``."""
    w2 = np.asarray(pattern.weights if isinstance(pattern, CouplingPattern) else pattern,
                    dtype=float) ** 2
    if w2.size != ham.n_sites:
        raise GeneratorError(f"pattern has {w2.size} sites, Hamiltonian has {ham.n_sites}")
    V = ham.V
    return (V * w2[None, :]) @ V.conj().T


@dataclass(frozen=True, eq=False)
class LinearGenerator(GeneratorCoefficients):
    pattern: CouplingPattern
    channel1: np.ndarray
    channel2: np.ndarray

    sector = Sector.MODE_OCCUPATION

    @property
    def rates(self):
        """Per-mode (emission, absorption) rates from the channel diagonals."""
        return np.diag(self.channel1).real.copy(), np.diag(self.channel2).real.copy()

    @property
    def lamb_shift(self):
        """Per-mode energy shift ``S_mm (eta_em - eta_abs)``."""
        if not self.lamb_shift_hamiltonian:
            return np.zeros(self.n)
        return 0.5 * (np.diag(self.channel1).imag - np.diag(self.channel2).imag)

    @property
    def scale(self):
        return float(max(np.max(np.abs(self.channel1)), np.max(np.abs(self.channel2))))

    @property
    def max_rate(self):
        r1, r2 = self.rates
        return float(max(r1.max(), r2.max()))

    def _k(self):
        k1, k2 = 0.5 * self.channel1, 0.5 * self.channel2
        if not self.lamb_shift_hamiltonian:
            # keep only the parts entering the Kossakowski matrix
            k1 = 0.5 * (k1 + k1.conj().T)
            k2 = 0.5 * (k2 + k2.conj().T)
        return k1, k2

    def apply_eigen(self, r):
        """Time derivative of the mode-basis correlation matrix ``R[a,b] = <c_b^† c_a>``."""
        k1, k2 = self._k()
        sign = 1.0 if self.model.fermionic else -1.0
        y = k1.T + sign * k2.conj().T
        w = self.ham.eigenvalues
        out = -1j * (w[:, None] - w[None, :]) * r
        out -= y @ r + r @ y.conj().T
        out += k2 + k2.conj().T
        return out

    def kossakowski_matrix(self):
        """Block matrix over jump operators ``(c_1..c_N, c_1^†..c_N^†)``."""
        a = 0.5 * (self.channel1 + self.channel1.conj().T)
        b = 0.5 * (self.channel2 + self.channel2.conj().T)
        n = self.n
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, :n] = a
        out[n:, n:] = b
        return out

    def fock_superoperator(self):
        """Dense generator on the 2^N-dimensional fermionic Fock space (site basis)."""
        return fock_superoperator(self)


def _channel_coefficients(ham, model, pattern):
    model.check_frequencies(ham.eigenvalues)
    g_em, g_abs = bath.gamma_pair(model, ham.eigenvalues)
    eta_em, eta_abs = bath.eta_pair(model, ham.eigenvalues)
    em = np.asarray(g_em) + 2j * np.asarray(eta_em)
    ab = np.asarray(g_abs) + 2j * np.asarray(eta_abs)
    return em, ab


def _pattern(ham, pattern):
    if pattern is None:
        return CouplingPattern.uniform(ham.n_sites)
    if pattern.n_sites != ham.n_sites:
        raise GeneratorError(f"pattern has {pattern.n_sites} sites, Hamiltonian has {ham.n_sites}")
    return pattern


def build_redfield_linear(ham, model, pattern=None, lamb_shift=True):
    pattern = _pattern(ham, pattern)
    s = overlap_matrix(ham, pattern)
    em, ab = _channel_coefficients(ham, model, pattern)
    c1 = s * em[:, None]
    c2 = s.conj() * ab[:, None]
    return LinearGenerator(Kind.REDFIELD, ham, model, pattern, c1, c2,
                           lamb_shift_hamiltonian=lamb_shift)


def build_davies_linear(ham, model, pattern=None, lamb_shift=True):
    """Diagonal rates ``sum_j J_j^2 |V_mj|^2 gamma(w_m)``."""
    pattern = _pattern(ham, pattern)
    weights = (np.abs(ham.V) ** 2) @ (pattern.weights**2)
    em, ab = _channel_coefficients(ham, model, pattern)
    return LinearGenerator(Kind.DAVIES, ham, model, pattern, np.diag(weights * em),
                           np.diag(weights * ab), lamb_shift_hamiltonian=lamb_shift)


def secular_truncate_linear(g):
    """Drop couplings between modes whose frequencies differ beyond the
    degeneracy tolerance; blocks inside a degenerate cluster are kept."""
    labels = cluster_labels(g.ham.eigenvalues, degeneracy_tol(g.ham))
    keep = labels[:, None] == labels[None, :]
    return replace(g, kind=Kind.SECULAR, channel1=np.where(keep, g.channel1, 0),
                   channel2=np.where(keep, g.channel2, 0))


def instantaneous_davies(protocol, model, t, J_int=None, lamb_shift=True, left=False):
    """Davies generator of the instantaneous Hamiltonian ``h(t)``, uniform coupling."""
    if J_int is not None:
        model = model.with_coupling(J_int)
    ham = sample_drive(protocol, t, left)
    return build_davies_linear(ham, model, None, lamb_shift)


def jordan_wigner(n):
    """Site annihilation operators on the 2^n Fock space."""
    sz = np.diag([1.0, -1.0])
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])
    eye = np.eye(2)
    ops = []
    for j in range(n):
        factors = [sz] * j + [lower] + [eye] * (n - j - 1)
        op = factors[0]
        for f in factors[1:]:
            op = np.kron(op, f)
        ops.append(op.astype(complex))
    return ops


def _left(a):
    return np.kron(a, np.eye(a.shape[0]))


def _right(b):
    return np.kron(np.eye(b.shape[0]), b.T)


def fock_superoperator(g):
    if not g.model.fermionic:
        raise GeneratorError("Fock-space export is fermionic only")
    n = g.n
    if n > FOCK_MAX_SITES:
        raise GeneratorError(f"Fock-space export limited to N <= {FOCK_MAX_SITES}")
    a = jordan_wigner(n)
    Q = g.ham.modes
    c = [sum(Q[j, m].conjugate() * a[j] for j in range(n)) for m in range(n)]
    cd = [x.conj().T for x in c]
    H = sum(w * cd[m] @ c[m] for m, w in enumerate(g.ham.eigenvalues))
    k1, k2 = g._k()
    L = -1j * (_left(H) - _right(H))
    for m in range(n):
        for q in range(n):
            if k1[m, q] != 0:
                # K1 (c_m rho c_q^† - c_q^† c_m rho) + h.c.
                L += k1[m, q] * (_left(c[m]) @ _right(cd[q]) - _left(cd[q] @ c[m]))
                L += np.conj(k1[m, q]) * (_left(c[q]) @ _right(cd[m]) - _right(cd[m] @ c[q]))
            if k2[m, q] != 0:
                L += k2[m, q] * (_left(cd[m]) @ _right(c[q]) - _left(c[q] @ cd[m]))
                L += np.conj(k2[m, q]) * (_left(cd[q]) @ _right(c[m]) - _right(c[m] @ cd[q]))
    return L
