"""Structural checks on generators: Redfield/Davies equivalence, KMS,
detailed balance, complete positivity, Gibbs stationarity and the
secular versus non-secular scaling of dephasing matrix elements.

Every tolerance used here is a module-level constant.
"""

import datetime
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__, bath
from . import hamiltonians as hams
from . import rng as _rng
from .dynamics import gibbs_state
from .generators import (CouplingPattern, GeneratorError, Kind, Sector, build_davies_linear,
                         build_redfield_linear, dephasing_matrix_elements,
                         kossakowski_min_eigenvalue)
from .generators.serialize import generator_digest

EQUIVALENCE_RTOL = 1e-12
KMS_TOL = 1e-12
DETAILED_BALANCE_RTOL = 1e-10
CP_TOL = 1e-12
STATIONARITY_RTOL = 1e-10
ETH_QUADRUPLES = 2000


@dataclass(frozen=True)
class Check:
    """One report line.  ``passed`` is None for measurements without a verdict."""

    name: str
    passed: object
    residual: float
    tolerance: float
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "residual": self.residual,
                "tolerance": self.tolerance, "detail": self.detail}


@dataclass
class CertificationReport:
    checks: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *checks):
        self.checks.extend(checks)
        return self

    @property
    def passed(self):
        return all(c.passed is not False for c in self.checks)

    def to_dict(self):
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks],
                "metadata": self.metadata}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self):
        lines = [f"{'check':<40} {'verdict':<8} {'residual':>12} {'tolerance':>12}"]
        for c in self.checks:
            verdict = "-" if c.passed is None else ("PASS" if c.passed else "FAIL")
            lines.append(f"{c.name:<40} {verdict:<8} {c.residual:>12.3e} {c.tolerance:>12.3e}")
        return "\n".join(lines)


def _meta(ham, model, **extra):
    out = {"generator_digest": generator_digest(ham, model), "model": model.to_dict(),
           "n_sites": ham.n_sites, "version": __version__,
           "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    out.update(extra)
    return out


def _channel_residual(a, b):
    return float(max(np.max(np.abs(a.channel1 - b.channel1)),
                     np.max(np.abs(a.channel2 - b.channel2))))


def check_equivalence(ham, model, pattern=None, lamb_shift=True):
    """Largest Redfield minus Davies coefficient.

    Uniform patterns are compared to the Davies generator of the same
    pattern; ``sublattice:p`` patterns to ``1/p`` times the uniform Davies
    generator.  Other patterns get no verdict.
    """
    pattern = CouplingPattern.uniform(ham.n_sites) if pattern is None else pattern
    red = build_redfield_linear(ham, model, pattern, lamb_shift)
    p = pattern.sublattice_period
    if p is not None:
        ref = build_davies_linear(ham, model, CouplingPattern.uniform(ham.n_sites), lamb_shift)
        ref = replace(ref, channel1=ref.channel1 / p, channel2=ref.channel2 / p)
        name = f"equivalence[sublattice:{p}]"
    else:
        ref = build_davies_linear(ham, model, pattern, lamb_shift)
        name = f"equivalence[{pattern.label}]"
    residual = _channel_residual(red, ref)
    tol = EQUIVALENCE_RTOL * max(ref.scale, red.scale)
    verdict = residual <= tol if (pattern.is_uniform or p is not None) else None
    return Check(name, verdict, residual, tol)


def check_kms(model, omega):
    """KMS residual of the exchange rates on a frequency grid."""
    omega = np.asarray(omega, dtype=float)
    res = float(np.max(bath.kms_residual(model, omega))) if omega.size else 0.0
    return Check("kms", res <= KMS_TOL, res, KMS_TOL)


def _vacuum_plus_one(g):
    """Jump operators and Gibbs state on span{|0>, c_m^†|0>} in the site basis.

    Index 0 is the vacuum; index ``1 + j`` is ``a_j^†|0>``.
    """
    n = g.n
    Q = np.eye(n + 1, dtype=complex)
    Q[1:, 1:] = g.ham.modes
    w = g.ham.eigenvalues
    x = g.model.beta * (w - g.model.mu)
    # Boltzmann weights of |0> and c_m^†|0> relative to the lowest one
    logs = np.concatenate(([0.0], -x))
    p = np.exp(logs - logs.max())
    p /= p.sum()
    rho = Q @ np.diag(p) @ Q.conj().T
    lowers = []
    for m in range(n):
        e = np.zeros((n + 1, n + 1), dtype=complex)
        e[0, m + 1] = 1.0
        lowers.append(Q @ e @ Q.conj().T)
    return Q, rho, lowers, x


def check_detailed_balance(g):
    """Conditions (i)-(iii) for a linear Davies generator.

    (i) ``[rho_G, H_S + H_LS]``; (ii) each jump operator shifts energy by a
    definite amount, ``rho_G L = exp(+-beta(w - mu)) L rho_G``; (iii) the
    rate-ratio form of microscopic reversibility,
    ``exp(-beta(w - mu)/2) L1^† = L2``.
    """
    if g.kind is not Kind.DAVIES:
        raise GeneratorError("detailed balance is checked on Davies generators")
    if g.sector is not Sector.MODE_OCCUPATION:
        raise GeneratorError("detailed balance check covers linear (exchange) dissipation")
    Q, rho, lowers, x = _vacuum_plus_one(g)
    n = g.n
    energies = np.concatenate(([0.0], g.ham.eigenvalues + g.lamb_shift))
    h_tot = Q @ np.diag(energies) @ Q.conj().T
    r1, r2 = g.rates
    scale = max(g.scale, 1e-300)
    tol = DETAILED_BALANCE_RTOL * scale

    res_i = float(np.max(np.abs(rho @ h_tot - h_tot @ rho)))
    res_ii = 0.0
    res_iii = 0.0
    for m in range(n):
        c = lowers[m]
        L1 = np.sqrt(max(r1[m], 0.0)) * c
        L2 = np.sqrt(max(r2[m], 0.0)) * c.conj().T
        res_ii = max(res_ii,
                     float(np.max(np.abs(rho @ L1 - np.exp(x[m]) * L1 @ rho))),
                     float(np.max(np.abs(rho @ L2 - np.exp(-x[m]) * L2 @ rho))))
        res_iii = max(res_iii, float(np.max(np.abs(np.exp(-x[m] / 2) * L1.conj().T - L2))))
    return [Check("detailed_balance(i)", res_i <= tol, res_i, tol),
            Check("detailed_balance(ii)", res_ii <= tol, res_ii, tol),
            Check("detailed_balance(iii)", res_iii <= tol, res_iii, tol)]


def check_cp(g):
    val = kossakowski_min_eigenvalue(g)
    return Check("complete_positivity", val >= -CP_TOL, max(0.0, -val), CP_TOL,
                 f"min eigenvalue {val:.3e}")


def check_gibbs_stationarity(g):
    rho = gibbs_state(g.ham, g.model, g.sector, basis="eigen")
    res = float(np.max(np.abs(g.apply_eigen(rho))))
    tol = STATIONARITY_RTOL * max(g.max_rate, 1e-300)
    return Check("gibbs_stationarity", res <= tol, res, tol)


def certify_generator(g):
    """All checks that apply to ``g``."""
    report = CertificationReport(metadata=_meta(g.ham, g.model, kind=g.kind.value,
                                                sector=g.sector.value))
    if g.sector is Sector.MODE_OCCUPATION:
        report.add(check_kms(g.model, g.ham.eigenvalues))
        if g.kind is Kind.REDFIELD:
            report.add(check_equivalence(g.ham, g.model, g.pattern, g.lamb_shift_hamiltonian))
        if g.kind is Kind.DAVIES:
            report.add(*check_detailed_balance(g))
    report.add(check_cp(g), check_gibbs_stationarity(g))
    return report


@dataclass
class ScalingTable:
    family: str
    sizes: list
    secular: list
    nonsecular: list
    secular_slope: object = None
    nonsecular_slope: object = None

    @property
    def ratio(self):
        return [b / a for a, b in zip(self.secular, self.nonsecular)]

    def rows(self):
        return list(zip(self.sizes, self.secular, self.nonsecular, self.ratio))

    def to_dict(self):
        return {"family": self.family, "sizes": self.sizes, "secular": self.secular,
                "nonsecular": self.nonsecular, "ratio": self.ratio,
                "secular_slope": self.secular_slope, "nonsecular_slope": self.nonsecular_slope}


def _eth_hamiltonian(family, size, g, W):
    if family == "gue":
        return hams.build_gue(size, 1.0, g)
    if family in ("anderson", "anderson3d"):
        return hams.build_anderson3d(size, W, 1.0, g)
    raise ValueError(f"unknown family {family!r}")


def _nonsecular_indices(n, count, g):
    """Random (k, l, m, q) with (k, l) != (m, q) and not both diagonal."""
    out = []
    while len(out) < count:
        k, l, m, q = g.integers(0, n, size=4)
        if (k, l) == (m, q) or (k == l and m == q):
            continue
        out.append((k, l, m, q))
    return np.array(out).T


def eth_scaling_report(family="gue", sizes=(32, 64, 128), samples=50, seed=0, W=16.0,
                       quadruples=ETH_QUADRUPLES):
    """Sample averages of secular and non-secular dephasing coefficient sums.

    Matrix elements are scaled as ``N A_j`` so the secular sum
    ``sum_j |N A_j[k, l]|^2`` (averaged over ``k != l``; including the
    diagonal makes the average exactly ``N`` by unitarity) grows like ``N``.  The non-secular value is the
    RMS of ``sum_j N^2 A_j[l, k] A_j[m, q]`` over random non-resonant index
    quadruples.  For Anderson models ``sizes`` are side lengths ``L``.
    """
    sizes = [int(s) for s in sizes]
    if sorted(sizes) != sizes or not sizes:
        raise ValueError("sizes must be nonempty and ascending")
    sec, non = [], []
    n_sites = []
    for size in sizes:
        s_acc, n_acc = [], []
        for sample in range(samples):
            g = _rng.stream(seed, _rng.TAG_ETH, size, sample)
            ham = _eth_hamiltonian(family, size, g, W)
            n = ham.n_sites
            A = n * dephasing_matrix_elements(ham)  # A[j, m, n]
            sums = np.sum(np.abs(A) ** 2, axis=0)
            off = ~np.eye(n, dtype=bool)
            s_acc.append(float(np.mean(sums[off])))
            k, l, m, q = _nonsecular_indices(n, quadruples, g)
            vals = np.sum(A[:, l, k] * A[:, m, q], axis=0)
            n_acc.append(float(np.mean(np.abs(vals) ** 2)))
        n_sites.append(n)
        sec.append(float(np.mean(s_acc)))
        non.append(float(np.sqrt(np.mean(n_acc))))
    table = ScalingTable(family, n_sites, sec, non)
    if len(sizes) > 1:
        logn = np.log(n_sites)
        table.secular_slope = float(np.polyfit(logn, np.log(sec), 1)[0])
        table.nonsecular_slope = float(np.polyfit(logn, np.log(non), 1)[0])
    return table
