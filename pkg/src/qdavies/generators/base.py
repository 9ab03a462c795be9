from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .. import rng as _rng

DEGENERACY_RTOL = 1e-9
SUPEROPERATOR_MAX_DIM = 64


class Kind(str, Enum):
    REDFIELD = "redfield"
    DAVIES = "davies"
    SECULAR = "secular_truncation"


class Sector(str, Enum):
    MODE_OCCUPATION = "mode_occupation"
    SINGLE_PARTICLE = "single_particle"


class GeneratorError(ValueError):
    pass


def degeneracy_tol(ham):
    return DEGENERACY_RTOL * max(ham.norm, 1e-300)


def cluster_labels(values, tol):
    """Label values so that sorted neighbours closer than ``tol`` share a label."""
    values = np.asarray(values, dtype=float)
    flat = values.ravel()
    if flat.size == 0:
        return np.zeros(values.shape, dtype=np.intp)
    order = np.argsort(flat, kind="stable")
    jumps = np.concatenate(([0], (np.diff(flat[order]) > tol).astype(np.intp)))
    labels = np.empty(flat.size, dtype=np.intp)
    labels[order] = np.cumsum(jumps)
    return labels.reshape(values.shape)


@dataclass(frozen=True, eq=False)
class CouplingPattern:
    """Per-site coupling multipliers.

    The coupling of site ``j`` is ``model.coupling * weights[j]``.
    """

    weights: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("coupling weights must be a nonempty vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("coupling weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    @property
    def n_sites(self):
        return self.weights.size

    @property
    def is_uniform(self):
        return bool(np.all(self.weights == self.weights[0]))

    @property
    def sublattice_period(self):
        if self.label.startswith("sublattice:"):
            return int(self.label.split(":", 1)[1])
        return None

    @classmethod
    def uniform(cls, n, weight=1.0):
        return cls(np.full(n, float(weight)), "uniform")

    @classmethod
    def sublattice(cls, n, p):
        """Weight 1 on sites ``j = 0 (mod p)``, 0 elsewhere; ``p`` must divide ``n``."""
        if p < 1 or n % p:
            raise ValueError(f"sublattice period {p} must divide N={n}")
        return cls((np.arange(n) % p == 0).astype(float), f"sublattice:{p}")

    @classmethod
    def random(cls, n, seed=0):
        g = _rng.stream(seed, _rng.TAG_PATTERN, n)
        return cls(g.uniform(0.2, 1.5, size=n), "random")

    @classmethod
    def parse(cls, spec, n, seed=0):
        """``uniform`` | ``sublattice:p`` | ``random``."""
        if spec == "uniform":
            return cls.uniform(n)
        if spec == "random":
            return cls.random(n, seed)
        if spec.startswith("sublattice:"):
            return cls.sublattice(n, int(spec.split(":", 1)[1]))
        raise ValueError(f"unknown coupling pattern {spec!r}")

    def to_dict(self):
        return {"label": self.label, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["weights"], dtype=float), d.get("label", "custom"))


@dataclass(frozen=True, eq=False)
class GeneratorCoefficients:
    """Common surface of all generators.

    States are site-basis matrices.  For the mode-occupation sector the
    state is the one-body correlation matrix ``r[i, j] = <a_j^† a_i>``;
    for the single-particle sector it is the N x N density matrix.
    """

    kind: Kind
    ham: object
    model: object
    lamb_shift_hamiltonian: bool = field(default=True, kw_only=True)

    sector = None

    @property
    def n(self):
        return self.ham.n_sites

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        return self.ham.to_site(self.apply_eigen(self.ham.to_eigen(rho)))

    def __call__(self, rho):
        return self.apply(rho)

    def apply_eigen(self, rho_e):
        raise NotImplementedError

    def superoperator(self, basis="site"):
        """Dense matrix of the linear part of ``apply`` on row-major ``vec(rho)``.

        Exchange dissipation also has a constant source term; see
        :meth:`affine_term`.
        """
        n = self.n
        if n > SUPEROPERATOR_MAX_DIM:
            raise GeneratorError(f"superoperator export limited to dim <= {SUPEROPERATOR_MAX_DIM}")
        f = self.apply if basis == "site" else self.apply_eigen
        const = self.affine_term(basis).ravel()
        out = np.empty((n * n, n * n), dtype=complex)
        e = np.zeros((n, n), dtype=complex)
        for idx in range(n * n):
            e.flat[idx] = 1.0
            out[:, idx] = f(e).ravel() - const
            e.flat[idx] = 0.0
        return out

    def affine_term(self, basis="site"):
        """``apply(0)``: zero except for the exchange source term."""
        f = self.apply if basis == "site" else self.apply_eigen
        return f(np.zeros((self.n, self.n), dtype=complex))


def apply(g, rho):
    return g.apply(rho)


def traceless_min_eigenvalue(kmat, n):
    """Minimum eigenvalue of a dyad-basis Kossakowski matrix on the traceless subspace."""
    d = n * n
    e = np.zeros(d, dtype=complex)
    e[:: n + 1] = 1.0 / np.sqrt(n)
    # Householder reflection sending e to the first unit vector
    v = e.copy()
    v[0] -= 1.0
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        basis = np.eye(d, dtype=complex)[:, 1:]
    else:
        v /= nv
        refl = np.eye(d, dtype=complex) - 2.0 * np.outer(v, v.conj())
        basis = refl[:, 1:]
    sub = basis.conj().T @ kmat @ basis
    sub = 0.5 * (sub + sub.conj().T)
    return float(np.linalg.eigvalsh(sub)[0]) if sub.size else 0.0
