"""Time evolution under a generator, trace distance and thermal states.

States are site-basis matrices.  In the single-particle sector this is the
N x N density matrix.  In the mode-occupation sector it is the one-body
correlation matrix ``r[i, j] = <a_j^† a_i>``, whose eigenvalues are
occupation numbers and whose trace is the particle number.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bath
from .generators import Kind, Sector, instantaneous_davies
from .generators.serialize import generator_digest

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
TRACE_DRIFT_ABORT = 1e-6
PSD_ABORT = -1e-6
STEP_FACTOR = 0.05


class EvolutionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated state in a declared sector."""

    matrix: np.ndarray
    sector: Sector = Sector.SINGLE_PARTICLE
    fermionic: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "sector", Sector(self.sector))
        problems = validate_state(m, self.sector, self.fermionic)
        if problems:
            raise ValueError("invalid state: " + "; ".join(problems))

    @property
    def dim(self):
        return self.matrix.shape[0]


def validate_state(m, sector=Sector.SINGLE_PARTICLE, fermionic=True):
    """List of violated invariants (empty if valid)."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        return [f"expected a nonempty square matrix, got shape {m.shape}"]
    problems = []
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > HERMITIAN_TOL:
        problems.append(f"not Hermitian (residual {herm:.3g})")
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if ev[0] < -PSD_TOL:
        problems.append(f"negative eigenvalue {ev[0]:.3g}")
    if Sector(sector) is Sector.SINGLE_PARTICLE:
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            problems.append(f"trace {tr!r} is not 1")
    elif fermionic and ev[-1] > 1.0 + PSD_TOL:
        problems.append(f"fermionic occupation {ev[-1]:.3g} exceeds 1")
    return problems


def localized_state(n, site=0):
    """``a_site^† |0><0| a_site`` in the single-particle sector."""
    rho = np.zeros((n, n), dtype=complex)
    rho[site, site] = 1.0
    return rho


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, N, N)
    generator_kind: str
    sector: Sector
    basis: str = "site"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size

    def final(self):
        return self.states[-1]

    def occupations(self):
        """Diagonals of the stored states."""
        return np.real(np.einsum("tii->ti", self.states))

    def to_csv(self, path, observable="full"):
        """Write ``t`` plus observable columns; sidecar ``path.json`` holds metadata."""
        path = Path(path)
        n = self.states.shape[1]
        if observable == "occupations":
            header = ["t"] + [f"n_{i}" for i in range(n)]
            rows = np.column_stack([self.times, self.occupations()])
        elif observable == "full":
            header = ["t"] + [f"{part}_{i}_{j}" for i in range(n) for j in range(n)
                              for part in ("re", "im")]
            flat = self.states.reshape(len(self), -1)
            inter = np.empty((len(self), 2 * n * n))
            inter[:, 0::2] = flat.real
            inter[:, 1::2] = flat.imag
            rows = np.column_stack([self.times, inter])
        else:
            raise ValueError(f"unknown observable {observable!r}")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(x)) for x in row])
        side = {"generator_kind": self.generator_kind, "sector": self.sector.value,
                "basis": self.basis, "observable": observable, **self.meta}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=2, sort_keys=True))
        return path


def default_step(g):
    h = max(g.ham.norm, 1e-300)
    rate = max(g.max_rate, 1e-300)
    return min(STEP_FACTOR / h, STEP_FACTOR / rate)


def _substeps(grid, step):
    """Number of RK4 steps per grid interval; ``step`` must divide each interval."""
    dts = np.diff(grid)
    if np.any(dts <= 0):
        raise ValueError("time grid must be strictly increasing")
    counts = np.maximum(np.rint(dts / step).astype(int), 1)
    bad = np.abs(counts * step - dts) > 1e-9 * np.maximum(dts, 1.0)
    if np.any(bad):
        raise ValueError(f"step {step} does not divide grid spacing {dts[bad][0]}")
    return counts


def _resolve_step(grid, step, fallback):
    """Explicit steps must divide the grid; the default is shrunk until it does."""
    if step is not None:
        if not step > 0:
            raise ValueError("step must be positive")
        return step, _substeps(grid, step)
    dts = np.diff(grid)
    if np.any(dts <= 0):
        raise ValueError("time grid must be strictly increasing")
    counts = np.maximum(np.ceil(dts / fallback - 1e-9).astype(int), 1)
    if dts.size and np.allclose(dts, dts[0], rtol=1e-12, atol=0):
        return dts[0] / counts[0], counts
    return None, counts  # nonuniform grid: per-interval step dt / count


def _rk4(f, x, t, h):
    # later stages take left limits so a drive switching at a step boundary
    # acts only from that boundary on
    k1 = f(t, x, False)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1, True)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2, True)
    k4 = f(t + h, x + h * k3, True)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _Monitor:
    """Trace-drift and positivity bookkeeping at output points.

    ``psd_abort=None`` records the minimum eigenvalue without aborting;
    Redfield dynamics that is not completely positive needs this.
    """

    def __init__(self, x0, sector, fermionic, psd_abort):
        self.sector = sector
        self.fermionic = fermionic
        self.psd_abort = psd_abort
        self.tr0 = np.trace(x0).real
        self.max_drift = 0.0
        self.min_eigenvalue = float(np.linalg.eigvalsh(_hermitize(x0))[0])

    def __call__(self, x, t):
        drift = abs(np.trace(x).real - self.tr0)
        if self.sector is Sector.SINGLE_PARTICLE:
            self.max_drift = max(self.max_drift, drift)
            if drift > TRACE_DRIFT_ABORT:
                raise EvolutionError(f"trace drift {drift:.3g} at t={t:.6g}; reduce the step")
        ev = np.linalg.eigvalsh(_hermitize(x))
        self.min_eigenvalue = min(self.min_eigenvalue, float(ev[0]))
        if self.psd_abort is None:
            return
        if ev[0] < self.psd_abort:
            raise EvolutionError(f"state lost positivity (eigenvalue {ev[0]:.3g}) at t={t:.6g}")
        if self.sector is Sector.MODE_OCCUPATION and self.fermionic and ev[-1] > 1.0 - self.psd_abort:
            raise EvolutionError(f"fermionic occupation {ev[-1]:.3g} exceeds 1 at t={t:.6g}")

    def summary(self):
        return {"max_trace_drift": self.max_drift, "min_eigenvalue": self.min_eigenvalue}


def _integrate(f, x0, grid, steps, counts, monitor, snapshot):
    x = np.array(x0, dtype=complex)
    out = np.empty((grid.size,) + x.shape, dtype=complex)
    out[0] = snapshot(x)
    t = float(grid[0])
    for i, n_sub in enumerate(counts):
        h = (grid[i + 1] - grid[i]) / n_sub if steps is None else steps
        for s in range(n_sub):
            x = _rk4(f, x, t + s * h, h)
        t = float(grid[i + 1])
        monitor(x, t)
        out[i + 1] = snapshot(x)
    return out


def _hermitize(x):
    return 0.5 * (x + x.conj().T)


def evolve(g, rho0, grid, step=None, basis="site", check_initial=True, psd_abort=PSD_ABORT):
    """Fixed-step RK4 on ``d rho / dt = g(rho)`` sampled at ``grid``.

    Integration runs in the eigenbasis of ``g.ham``.  ``basis`` selects how
    snapshots are stored (``"site"`` or ``"eigen"``).  Snapshots are
    re-Hermitized; the integrator state is not.
    """
    grid = np.asarray(grid, dtype=float)
    rho0 = np.asarray(rho0.matrix if isinstance(rho0, DensityMatrix) else rho0, dtype=complex)
    fermionic = g.model.fermionic
    if check_initial:
        problems = validate_state(rho0, g.sector, fermionic)
        if problems:
            raise ValueError("invalid initial state: " + "; ".join(problems))
    if rho0.shape != (g.n, g.n):
        raise ValueError(f"state shape {rho0.shape} does not match generator dimension {g.n}")
    step, counts = _resolve_step(grid, step, default_step(g))
    ham = g.ham
    if basis == "site":
        def snapshot(x):
            return _hermitize(ham.to_site(x))
    elif basis == "eigen":
        snapshot = _hermitize
    else:
        raise ValueError("basis must be 'site' or 'eigen'")
    x0 = _hermitize(ham.to_eigen(rho0)) if np.allclose(rho0, rho0.conj().T, rtol=0, atol=HERMITIAN_TOL) \
        else ham.to_eigen(rho0)
    monitor = _Monitor(x0, g.sector, fermionic, psd_abort)
    states = _integrate(lambda t, x, left: g.apply_eigen(x), x0, grid, step, counts, monitor, snapshot)
    meta = {"generator_digest": generator_digest(ham, g.model), "step": step,
            "trace_drift_abort": TRACE_DRIFT_ABORT, "psd_abort": psd_abort, **monitor.summary()}
    return Trajectory(grid, states, g.kind.value, g.sector, basis, meta)


def evolve_driven(protocol, model, J_int, rho0, grid, step=None, lamb_shift=True):
    """RK4 under the instantaneous Davies generator of a drive, in the
    mode-occupation sector.  Each stage rebuilds the generator at its time.

    Knots of a piecewise-constant protocol should fall on step boundaries.
    """
    grid = np.asarray(grid, dtype=float)
    rho0 = np.asarray(rho0.matrix if isinstance(rho0, DensityMatrix) else rho0, dtype=complex)
    if grid[0] < 0 or grid[-1] > protocol.duration:
        raise ValueError("protocol duration must cover the time grid")
    if J_int is not None:
        model = model.with_coupling(J_int)
    problems = validate_state(rho0, Sector.MODE_OCCUPATION, model.fermionic)
    if problems:
        raise ValueError("invalid initial state: " + "; ".join(problems))
    g0 = instantaneous_davies(protocol, model, float(grid[0]), None, lamb_shift)
    h_max = max(float(np.max(np.abs(np.linalg.eigvalsh(m)))) for m in protocol.matrices)
    fallback = min(STEP_FACTOR / max(h_max, 1e-300), STEP_FACTOR / max(g0.max_rate, 1e-300))
    step, counts = _resolve_step(grid, step, fallback)

    def rhs(t, x, left):
        g = instantaneous_davies(protocol, model, min(t, protocol.duration), None, lamb_shift, left)
        return g.apply(x)

    monitor = _Monitor(rho0, Sector.MODE_OCCUPATION, model.fermionic, PSD_ABORT)
    states = _integrate(rhs, rho0, grid, step, counts, monitor, _hermitize)
    meta = {"step": step, "protocol_mode": protocol.mode, "duration": protocol.duration,
            **monitor.summary()}
    return Trajectory(grid, states, "instantaneous_davies", Sector.MODE_OCCUPATION, "site", meta)


def occupation_relaxation(g, n0, times):
    """Closed-form mode occupations ``n_m(t)`` under a linear Davies generator.

    Returns an array of shape ``(len(times), N)``.
    """
    if g.kind is not Kind.DAVIES or g.sector is not Sector.MODE_OCCUPATION:
        raise ValueError("closed-form relaxation needs a linear Davies generator")
    if not g.model.fermionic:
        raise ValueError("closed-form relaxation is implemented for fermions")
    r1, r2 = g.rates
    total = r1 + r2
    with np.errstate(invalid="ignore", divide="ignore"):
        n_inf = np.where(total > 0, r2 / total, np.asarray(n0, dtype=float))
    t = np.asarray(times, dtype=float)[:, None]
    with np.errstate(invalid="ignore"):
        decay = np.where(total > 0, np.exp(-total * t), 1.0)  # t = inf allowed
    return n_inf + (np.asarray(n0, dtype=float) - n_inf) * decay


def trace_distance(a, b):
    """Schatten-1 norm of ``a - b`` (no 1/2 prefactor)."""
    a = np.asarray(a.matrix if isinstance(a, DensityMatrix) else a)
    b = np.asarray(b.matrix if isinstance(b, DensityMatrix) else b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def trace_distance_curve(states_a, states_b):
    d = np.asarray(states_a) - np.asarray(states_b)
    d = 0.5 * (d + np.conj(np.swapaxes(d, -1, -2)))
    return np.sum(np.abs(np.linalg.eigvalsh(d)), axis=-1)


def gibbs_state(ham, model, sector=Sector.SINGLE_PARTICLE, basis="site"):
    """Thermal state of ``ham`` at the bath's ``beta`` and ``mu``.

    Mode-occupation sector: correlation matrix with occupations ``f(w_m)``.
    Single-particle sector: ``exp(-beta (w_m - mu))`` normalized over the N
    one-particle states.
    """
    sector = Sector(sector)
    w = ham.eigenvalues
    if sector is Sector.MODE_OCCUPATION:
        model.check_frequencies(w)
        diag = bath.distribution(model, w)
    else:
        x = -model.beta * (w - w.min())
        diag = np.exp(x)
        diag /= diag.sum()
    d = np.diag(diag.astype(complex))
    return ham.to_site(d) if basis == "site" else d


__all__ = ["DensityMatrix", "Trajectory", "EvolutionError", "evolve", "evolve_driven",
           "occupation_relaxation", "trace_distance", "trace_distance_curve", "gibbs_state",
           "localized_state", "validate_state", "default_step"]
