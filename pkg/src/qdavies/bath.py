"""Thermal bath spectra.

Rates are returned with the coupling factor ``J_int**2`` already applied,
so generator code never sees the bare density of states.

Two spectra are exposed:

* :func:`gamma_pair` -- linear (exchange) coupling ``a_j^† B + h.c.``.
  For a mode of frequency ``omega`` it returns the emission rate
  ``(1 -+ f) D J^2`` and the absorption rate ``f D J^2``.
* :func:`dephasing_rate` -- density coupling ``a_j^† a_j (d + d^†)``.
  A single function of the Bohr frequency, positive argument meaning the
  system loses energy.

The one-sided transform is ``Gamma = gamma/2 + i*eta`` where
``eta(w) = (1/2pi) P int gamma(x) / (w - x) dx``.
"""

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.special import expit

ETA_ABS_TOL = 1e-8
# Ohmic tails are cut where exp(-|x|/cutoff) < 1e-26.
_TAIL_CUTOFFS = 60.0


class DomainError(ValueError):
    """Occupation or rate requested outside its domain of definition."""


class QuadratureError(RuntimeError):
    def __init__(self, message, error_estimate=float("nan")):
        super().__init__(f"{message} (error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


class Statistics(str, Enum):
    FERMIONIC = "fermionic"
    BOSONIC = "bosonic"


@dataclass(frozen=True)
class OhmicDOS:
    """``D(w) = |w| exp(-|w| / cutoff)``."""

    cutoff: float = 10.0

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError(f"ohmic cutoff must be positive, got {self.cutoff}")

    def __call__(self, omega):
        a = np.abs(omega)
        return a * np.exp(-a / self.cutoff)

    def over_omega(self, omega):
        # D(w)/|w|, finite at w = 0
        return np.exp(-np.abs(omega) / self.cutoff)

    @property
    def support(self):
        c = _TAIL_CUTOFFS * self.cutoff
        return (-c, c)

    @property
    def breakpoints(self):
        return (0.0,)

    def to_dict(self):
        return {"type": "ohmic", "cutoff": self.cutoff}


@dataclass(frozen=True)
class TabulatedDOS:
    """Piecewise-linear density of states; zero outside the table."""

    omega: tuple
    dos: tuple

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        d = np.asarray(self.dos, dtype=float)
        if w.ndim != 1 or w.shape != d.shape or w.size < 2:
            raise ValueError("tabulated DOS needs two equal-length columns with >= 2 rows")
        if np.any(np.diff(w) <= 0):
            raise ValueError("tabulated DOS omega column must be strictly increasing")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("tabulated DOS values must be finite and nonnegative")
        object.__setattr__(self, "omega", tuple(float(x) for x in w))
        object.__setattr__(self, "dos", tuple(float(x) for x in d))

    def __call__(self, omega):
        return np.interp(omega, self.omega, self.dos, left=0.0, right=0.0)

    def over_omega(self, omega):
        omega = np.asarray(omega, dtype=float)
        w0 = self(0.0)
        if w0 > 0:
            with np.errstate(divide="ignore"):
                return np.where(omega == 0, np.inf, self(omega) / np.abs(omega))
        # one-sided slope of the segment starting at 0
        eps = 1e-9 * max(1.0, max(abs(self.omega[0]), abs(self.omega[-1])))
        slope = float(self(eps)) / eps
        safe = np.where(omega == 0, 1.0, omega)
        return np.where(omega == 0, slope, self(omega) / np.abs(safe))

    @property
    def support(self):
        return (self.omega[0], self.omega[-1])

    @property
    def breakpoints(self):
        return self.omega

    @classmethod
    def from_csv(cls, path):
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if i == 0:
                        continue  # header
                    raise ValueError(f"{path}: malformed row {i + 1}: {row!r}") from None
        if not rows:
            raise ValueError(f"{path}: no data rows")
        w, d = zip(*rows)
        return cls(w, d)

    def to_dict(self):
        return {"type": "tabulated", "omega": list(self.omega), "dos": list(self.dos)}


def dos_from_dict(d):
    d = dict(d)
    kind = d.pop("type")
    if kind == "ohmic":
        return OhmicDOS(**d)
    if kind == "tabulated":
        return TabulatedDOS(tuple(d["omega"]), tuple(d["dos"]))
    raise ValueError(f"unknown DOS type {kind!r}")


@dataclass(frozen=True)
class SpectralModel:
    statistics: Statistics = Statistics.FERMIONIC
    beta: float = 5.0
    mu: float = 0.0
    coupling: float = 0.2
    dos: object = field(default_factory=OhmicDOS)
    include_eta: bool = False

    def __post_init__(self):
        object.__setattr__(self, "statistics", Statistics(self.statistics))
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if not self.coupling >= 0:
            raise ValueError(f"coupling must be nonnegative, got {self.coupling}")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")

    @property
    def fermionic(self):
        return self.statistics is Statistics.FERMIONIC

    def with_coupling(self, coupling):
        return replace(self, coupling=float(coupling))

    def check_frequencies(self, omega):
        """Bosonic occupations need every frequency strictly above mu."""
        if not self.fermionic:
            omega = np.asarray(omega, dtype=float)
            if omega.size and omega.min() <= self.mu:
                raise DomainError(
                    f"bosonic bath needs mu < min frequency; mu={self.mu}, min={omega.min()}"
                )

    def to_dict(self):
        d = asdict(self)
        d["statistics"] = self.statistics.value
        d["dos"] = self.dos.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["dos"] = dos_from_dict(d["dos"])
        return cls(**d)


def reference_model(**overrides):
    """Bosonic Ohmic bath with J_int=0.2, w_c=10, beta=5, mu=0."""
    params = dict(statistics=Statistics.BOSONIC, beta=5.0, mu=0.0, coupling=0.2,
                  dos=OhmicDOS(10.0))
    params.update(overrides)
    return SpectralModel(**params)


def _scaled(model, omega):
    return model.beta * (np.asarray(omega, dtype=float) - model.mu)


def distribution(model, omega):
    """Fermi or Bose occupation ``1 / (exp(beta (w - mu)) +- 1)``."""
    x = _scaled(model, omega)
    if model.fermionic:
        return expit(-x)
    if np.any(x <= 0):
        raise DomainError(f"Bose occupation diverges for omega <= mu={model.mu}")
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(x)


def gamma_pair(model, omega):
    """Emission and absorption rates for a mode at ``omega``.

    Returns ``(gamma11(w), gamma22(-w))``: ``(1 -+ f) D J^2`` and ``f D J^2``.
    Cross spectra vanish identically and are not represented.
    """
    x = _scaled(model, omega)
    d = model.dos(omega) * model.coupling**2
    if model.fermionic:
        return expit(x) * d, expit(-x) * d
    if np.any(x <= 0):
        raise DomainError(f"Bose occupation diverges for omega <= mu={model.mu}")
    with np.errstate(over="ignore"):
        return -d / np.expm1(-x), d / np.expm1(x)


def kms_residual(model, omega):
    """``|gamma11(w) - exp(beta (w - mu)) gamma22(-w)| / max(gamma11, 1)``."""
    g11, g22 = gamma_pair(model, omega)
    with np.errstate(divide="ignore", over="ignore"):
        back = np.where(g22 > 0, np.exp(_scaled(model, omega) + np.log(g22)), 0.0)
    return np.abs(g11 - back) / np.maximum(g11, 1.0)


def dephasing_rate(model, omega):
    """Power spectrum for density coupling to a bath of modes at ``|w| > 0``.

    ``w > 0``: ``J^2 (1 -+ f(w)) D(w)``; ``w < 0``: ``J^2 f(|w|) D(|w|)``.
    The ``w -> 0`` value is the continuous limit (``J^2 D'(0) / beta`` for a
    bosonic Ohmic bath at ``mu = 0``).
    """
    omega = np.asarray(omega, dtype=float)
    a = np.abs(omega)
    j2 = model.coupling**2
    if model.fermionic:
        x = _scaled(model, a)
        occ = expit(-x)
        out = np.where(omega > 0, 1.0 - occ, occ) * model.dos(a)
        return j2 * out
    if model.mu > 0:
        raise DomainError("bosonic dephasing bath needs mu <= 0")
    x = model.beta * (a - model.mu)
    if model.mu < 0:
        with np.errstate(over="ignore"):
            n = 1.0 / np.expm1(x)
        return j2 * model.dos(a) * np.where(omega > 0, 1.0 + n, n)
    # mu = 0: D(a) n(a) = (D(a)/a) * a / expm1(beta a), finite as a -> 0
    safe = np.where(a == 0, 1.0, a)
    with np.errstate(over="ignore"):
        a_n = np.where(a == 0, 1.0 / model.beta, safe / np.expm1(model.beta * safe))
    emission = a_n + a  # a (1 + n)
    return j2 * model.dos.over_omega(a) * np.where(omega > 0, emission, a_n)


def principal_value(func, omega, lower, upper, breakpoints=(), epsabs=1e-10):
    """``(1/2pi) P int_lower^upper func(x) / (omega - x) dx`` by adaptive quadrature.

    The interval is split at ``breakpoints`` and at a window
    ``[omega - d, omega + d]``.  Inside the window QAWC (Cauchy weight)
    is used when ``func`` is smooth there; if a breakpoint sits at
    ``omega`` the window is folded instead,
    ``int_0^d (func(omega - t) - func(omega + t)) / t dt``.
    """
    omega = float(omega)
    if not lower < upper:
        raise ValueError("empty integration range")
    if not lower < omega < upper:
        # no singularity inside the range
        val, err = _quad(lambda x: func(x) / (omega - x), lower, upper,
                         _interior(breakpoints, lower, upper), epsabs)
        return val / (2 * math.pi)

    kinks = [b for b in breakpoints if lower < b < upper]
    dist = min([abs(omega - b) for b in kinks if b != omega] + [omega - lower, upper - omega])
    on_kink = any(b == omega for b in kinks)
    delta = min(1.0, 0.5 * dist)

    total, err_total = 0.0, 0.0
    if on_kink:
        val, err = _quad(lambda t: (func(omega - t) - func(omega + t)) / t, 0.0, delta, (), epsabs)
    else:
        val, err = _quad_cauchy(func, omega - delta, omega + delta, omega, epsabs)
        val = -val  # QAWC integrates f/(x - c)
    total += val
    err_total += err
    for a, b in ((lower, omega - delta), (omega + delta, upper)):
        val, err = _quad(lambda x: func(x) / (omega - x), a, b,
                         _interior(breakpoints, a, b), epsabs)
        total += val
        err_total += err
    if err_total > 100 * ETA_ABS_TOL * 2 * math.pi:
        raise QuadratureError("principal-value quadrature did not converge", err_total)
    return total / (2 * math.pi)


def _interior(points, a, b):
    return tuple(p for p in points if a < p < b) or None


def _quad(f, a, b, points, epsabs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(lambda x: float(f(x)), a, b, points=points, epsabs=epsabs,
                             epsrel=1e-12, limit=500, full_output=1)
    val, err, info = out[0], out[1], out[2]
    if len(out) > 3 and out[3] and err > 1e-6:
        raise QuadratureError(f"quad failed on [{a}, {b}]: {out[3]}", err)
    return val, err


def _quad_cauchy(f, a, b, c, epsabs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(lambda x: float(f(x)), a, b, weight="cauchy", wvar=c,
                             epsabs=epsabs, epsrel=1e-12, limit=500, full_output=1)
    val, err = out[0], out[1]
    if len(out) > 3 and out[3] and err > 1e-6:
        raise QuadratureError(f"QAWC failed on [{a}, {b}]: {out[3]}", err)
    return val, err


def _integration_range(model):
    lo, hi = model.dos.support
    if not model.fermionic:
        lo = max(lo, model.mu)
    return lo, hi


def eta_pair(model, omega):
    """Imaginary parts of the one-sided transforms at mode frequency ``omega``.

    Returns ``(eta_emission, eta_absorption)``; both zero unless
    ``model.include_eta``.  The absorption channel is evaluated at ``-omega``
    in the bath's own frequency, which flips the sign of its transform.
    For a bosonic bath the integral runs over ``x > mu`` only.
    """
    scalar = np.ndim(omega) == 0
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if not model.include_eta:
        z = np.zeros_like(omega)
        return (0.0, 0.0) if scalar else (z, z.copy())
    lo, hi = _integration_range(model)
    points = tuple(model.dos.breakpoints) + ((model.mu,) if not model.fermionic else ())

    def g11(x):
        return float(gamma_pair(model, x)[0])

    def g22(x):
        return float(gamma_pair(model, x)[1])

    em = np.array([principal_value(g11, w, lo, hi, points) for w in omega])
    ab = np.array([-principal_value(g22, w, lo, hi, points) for w in omega])
    if scalar:
        return float(em[0]), float(ab[0])
    return em, ab


def dephasing_eta(model, omega):
    """Lamb-shift part of the dephasing spectrum; zero unless ``include_eta``."""
    scalar = np.ndim(omega) == 0
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if not model.include_eta:
        return 0.0 if scalar else np.zeros_like(omega)
    lo, hi = model.dos.support
    lim = max(abs(lo), abs(hi))
    points = sorted({0.0, *(b for b in model.dos.breakpoints), *(-b for b in model.dos.breakpoints)})

    def g(x):
        return float(dephasing_rate(model, x))

    out = np.array([principal_value(g, w, -lim, lim, points) for w in omega])
    return float(out[0]) if scalar else out


def dephasing_gamma(model, omega):
    """Complex one-sided transform ``gamma/2 + i eta`` of the dephasing spectrum."""
    omega = np.asarray(omega, dtype=float)
    half = 0.5 * dephasing_rate(model, omega)
    if not model.include_eta:
        return half.astype(complex)
    flat = omega.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    eta = dephasing_eta(model, uniq)[inv].reshape(omega.shape)
    return half + 1j * eta
