"""Quadratic single-particle Hamiltonians: builders, diagonalization, drives.

Conventions.  ``modes[:, m]`` is the site-basis eigenvector of mode ``m``,
so ``c_m^† = sum_j modes[j, m] a_j^†``.  The matrix ``V`` with
``a_j = sum_m V[m, j] c_m`` is therefore ``modes.T`` (row = mode,
column = site) and satisfies ``conj(V) h V.T = diag(omega)``.
"""

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as _rng

HERMITIAN_TOL = 1e-12


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    hopping: np.ndarray
    eigenvalues: np.ndarray
    modes: np.ndarray

    @property
    def n_sites(self):
        return self.hopping.shape[0]

    @property
    def V(self):
        return self.modes.T

    @property
    def norm(self):
        """Spectral norm of ``h``."""
        return float(np.max(np.abs(self.eigenvalues))) if self.n_sites else 0.0

    def to_site(self, x):
        """Eigenbasis matrix -> site basis."""
        return self.modes @ x @ self.modes.conj().T

    def to_eigen(self, x):
        """Site-basis matrix -> eigenbasis."""
        return self.modes.conj().T @ x @ self.modes

    def digest(self):
        return hashlib.sha256(np.ascontiguousarray(self.hopping, dtype=complex).tobytes()).hexdigest()


def hermitian_residual(h):
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def diagonalize(h, tol=HERMITIAN_TOL):
    """Eigendecomposition with ascending eigenvalues.

    Eigenvector phases are fixed so the largest-magnitude component of each
    column is real and positive.  Inside a degenerate cluster the basis is
    whatever LAPACK returns.
    """
    h = np.array(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] == 0:
        raise ValueError(f"hopping matrix must be square and nonempty, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("hopping matrix has non-finite entries")
    res = hermitian_residual(h)
    if res > tol * max(1.0, float(np.max(np.abs(h)))):
        raise NotHermitianError(f"hopping matrix is not Hermitian (residual {res:.3g})")
    h = 0.5 * (h + h.conj().T)
    try:
        w, q = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(w, kind="stable")
    w, q = w[order], q[:, order]
    pivot = np.argmax(np.abs(q), axis=0)
    phase = q[pivot, np.arange(q.shape[1])]
    q = q * (np.abs(phase) / phase)[None, :]
    return QuadraticHamiltonian(hopping=h, eigenvalues=w, modes=q)


def _generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return _rng.stream(seed, _rng.TAG_GUE)


def build_gue(n, J=1.0, seed=0):
    """Dirac-SYK2 hopping: GUE with ``E|h_ij|^2 = J^2 / n``.

    Diagonal entries are real Gaussians of variance ``J^2/n``; off-diagonal
    entries are complex with that total variance split evenly between the
    real and imaginary parts.
    """
    if n < 1:
        raise ValueError("GUE size must be >= 1")
    if not J > 0:
        raise ValueError("GUE scale J must be positive")
    g = _generator(seed)
    sigma = J / np.sqrt(n)
    h = np.zeros((n, n), dtype=complex)
    h[np.diag_indices(n)] = g.normal(0.0, sigma, size=n)
    iu = np.triu_indices(n, k=1)
    re = g.normal(0.0, sigma / np.sqrt(2), size=iu[0].size)
    im = g.normal(0.0, sigma / np.sqrt(2), size=iu[0].size)
    h[iu] = re + 1j * im
    h[(iu[1], iu[0])] = re - 1j * im
    return diagonalize(h)


def _add_bonds(h, site, neighbor, J):
    h[site, neighbor] += J
    h[neighbor, site] += J


def chain_hopping(n, J=1.0, periodic=True):
    """Nearest-neighbour chain.  For ``n = 2`` with periodic boundaries both
    bonds join the same pair, giving amplitude ``2J``."""
    h = np.zeros((n, n), dtype=complex)
    if n < 2:
        return h
    for j in range(n if periodic else n - 1):
        _add_bonds(h, j, (j + 1) % n, J)
    return h


def build_chain(n, J=1.0, periodic=True):
    return diagonalize(chain_hopping(n, J, periodic))


def anderson_hopping(L, W, J=1.0, seed=0, periodic=True):
    if L < 2:
        raise ValueError("Anderson lattice side must be >= 2")
    if W < 0:
        raise ValueError("disorder strength must be nonnegative")
    g = seed if isinstance(seed, np.random.Generator) else _rng.stream(seed, _rng.TAG_ANDERSON)
    n = L**3
    h = np.zeros((n, n), dtype=complex)
    h[np.diag_indices(n)] = g.uniform(-W, W, size=n)
    for x in range(L):
        for y in range(L):
            for z in range(L):
                i = x + L * (y + L * z)
                for dx, dy, dz in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                    xn, yn, zn = x + dx, y + dy, z + dz
                    if not periodic and (xn == L or yn == L or zn == L):
                        continue
                    k = xn % L + L * (yn % L + L * (zn % L))
                    _add_bonds(h, i, k, J)
    return h


def build_anderson3d(L, W, J=1.0, seed=0, periodic=True):
    """3D Anderson model on an ``L^3`` cubic lattice, on-site energies
    uniform in ``[-W, W]``.  Periodic boundaries by default."""
    return diagonalize(anderson_hopping(L, W, J, seed, periodic))


def inverse_participation_ratio(ham):
    return np.sum(np.abs(ham.modes) ** 4, axis=0)


BUILDERS = {
    "gue": lambda size, p, g: build_gue(size, p.get("J", 1.0), g),
    "anderson3d": lambda size, p, g: build_anderson3d(
        size, p["W"], p.get("J", 1.0), g, p.get("periodic", True)),
    "chain": lambda size, p, g: build_chain(size, p.get("J", 1.0), p.get("periodic", True)),
}


def build(family, size, params, generator):
    """Build a Hamiltonian by family name (``gue``, ``anderson3d``, ``chain``)."""
    try:
        builder = BUILDERS[family]
    except KeyError:
        raise ValueError(f"unknown model family {family!r}; choose from {sorted(BUILDERS)}") from None
    return builder(size, params, generator)


class DriveProtocol:
    """Time-dependent hopping matrix defined by knots.

    ``mode`` is ``"piecewise-constant"`` (hold the left knot) or ``"linear"``
    (entrywise linear interpolation).  The protocol is defined on
    ``[0, duration]``; beyond the last knot the last matrix is held.
    """

    MODES = ("piecewise-constant", "linear")

    def __init__(self, times, matrices, mode="linear", duration=None):
        times = np.asarray(times, dtype=float)
        mats = np.asarray(matrices, dtype=complex)
        if mode not in self.MODES:
            raise ValueError(f"interpolation mode must be one of {self.MODES}")
        if times.ndim != 1 or times.size == 0 or mats.shape[0] != times.size:
            raise ValueError("need one matrix per knot time")
        if times[0] != 0.0:
            raise ValueError("first knot must be at t = 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("knot times must be strictly increasing")
        for t, m in zip(times, mats):
            if hermitian_residual(m) > HERMITIAN_TOL:
                raise NotHermitianError(f"knot at t={t} is not Hermitian")
        self.times = times
        self.matrices = mats
        self.mode = mode
        self.duration = float(times[-1] if duration is None else duration)
        if self.duration < times[-1]:
            raise ValueError("duration must cover the last knot")

    @classmethod
    def constant(cls, h, duration):
        return cls([0.0], [h], mode="piecewise-constant", duration=duration)

    def hopping_at(self, t, left=False):
        """``h(t)``; ``left=True`` takes the left limit at a knot."""
        if not 0.0 <= t <= self.duration:
            raise ValueError(f"t={t} outside protocol range [0, {self.duration}]")
        i = int(np.searchsorted(self.times, t, side="left" if left else "right")) - 1
        i = max(i, 0)
        if self.mode == "piecewise-constant" or i == len(self.times) - 1 or t == self.times[i]:
            return self.matrices[i].copy()
        t0, t1 = self.times[i], self.times[i + 1]
        s = (t - t0) / (t1 - t0)
        return (1.0 - s) * self.matrices[i] + s * self.matrices[i + 1]


def sample_drive(protocol, t, left=False):
    return diagonalize(protocol.hopping_at(t, left))


def _matrix_digest(h):
    return hashlib.sha256(np.ascontiguousarray(h, dtype=complex).tobytes()).hexdigest()


def save_hopping(path, h):
    """Write ``path`` as (row, col, re, im) CSV and ``path.json`` as header."""
    path = Path(path)
    h = np.asarray(h, dtype=complex)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for r, c in zip(*np.nonzero(h)):
            w.writerow([int(r), int(c), repr(float(h[r, c].real)), repr(float(h[r, c].imag))])
    header = {"n_sites": int(h.shape[0]), "hermitian_residual": hermitian_residual(h),
              "sha256": _matrix_digest(h)}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(header, indent=2))
    return path


def load_hopping(path):
    path = Path(path)
    header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    n = int(header["n_sites"])
    h = np.zeros((n, n), dtype=complex)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            h[int(row["row"]), int(row["col"])] = complex(float(row["re"]), float(row["im"]))
    if _matrix_digest(h) != header["sha256"]:
        raise ValueError(f"{path}: matrix hash does not match header")
    if hermitian_residual(h) > HERMITIAN_TOL:
        raise NotHermitianError(f"{path}: stored matrix is not Hermitian")
    return h
