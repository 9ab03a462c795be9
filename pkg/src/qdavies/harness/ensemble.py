"""Disorder ensembles comparing Davies and Redfield trajectories.

Each (size, sample) task builds its Hamiltonian from an index-derived RNG
stream, evolves both generators from the same initial state and records
the trace-distance curve.  Every task runs with BLAS limited to one thread,
in-process for a single worker and in a process pool otherwise.  Results
are merged in task order, so outputs do not depend on the worker count.
"""

import logging
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .. import __version__, bath, dynamics
from .. import hamiltonians as hams
from .. import rng as _rng
from ..generators import (CouplingPattern, build_davies_dephasing, build_davies_linear,
                          build_redfield_dephasing, build_redfield_linear)
from .config import EnsembleConfig

log = logging.getLogger(__name__)

THREADS_ENV = "QDAVIES_THREADS"
MAX_FAILURE_FRACTION = 0.10


class EnsembleError(RuntimeError):
    pass


@dataclass
class SampleResult:
    size: int
    sample: int
    curve: object = None
    redfield_min_eigenvalue: float = float("nan")
    max_trace_drift: float = float("nan")
    error: str = ""

    @property
    def ok(self):
        return not self.error


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    times: np.ndarray
    sizes: list
    n_sites: list
    mean: np.ndarray  # (n_sizes, n_times)
    std: np.ndarray
    n_ok: list
    failures: list = field(default_factory=list)
    redfield_min_eigenvalue: list = field(default_factory=list)
    max_trace_drift: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def max_mean(self):
        return self.mean.max(axis=1)

    @property
    def argmax(self):
        return self.mean.argmax(axis=1)

    @property
    def std_at_max(self):
        return self.std[np.arange(len(self.sizes)), self.argmax]


def default_threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise EnsembleError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if value < 1:
        raise EnsembleError(f"{THREADS_ENV} must be >= 1")
    return value


def spectral_model(cfg):
    b = cfg.bath
    return bath.SpectralModel(b["statistics"], beta=b["beta"], mu=b["mu"], coupling=b["J_int"],
                              dos=bath.OhmicDOS(b["cutoff"]), include_eta=b["include_eta"])


def sample_generator(cfg, size, sample):
    """RNG stream for one disorder realization."""
    return _rng.stream(cfg.seed, _rng.TAG_ENSEMBLE, size, sample)


def build_hamiltonian(cfg, size, sample):
    return hams.build(cfg.model_family, size, cfg.family_params, sample_generator(cfg, size, sample))


def _pattern(cfg, n, size, sample):
    spec = cfg.coupling["pattern"]
    if cfg.coupling["mode"] == "linear_uniform":
        return CouplingPattern.uniform(n)
    if isinstance(spec, list):
        if len(spec) != n:
            raise ValueError(f"pattern has {len(spec)} weights for {n} sites")
        return CouplingPattern(np.asarray(spec, dtype=float))
    return CouplingPattern.parse(spec, n, seed=cfg.seed * 1_000_003 + size * 1009 + sample)


def generators(cfg, ham, size, sample):
    """(Davies, Redfield) pair for one realization."""
    model = spectral_model(cfg)
    ls = cfg.coupling["lamb_shift"]
    if cfg.coupling["mode"] == "dephasing":
        return build_davies_dephasing(ham, model, None, ls), build_redfield_dephasing(ham, model, None, ls)
    pattern = _pattern(cfg, ham.n_sites, size, sample)
    return (build_davies_linear(ham, model, pattern, ls),
            build_redfield_linear(ham, model, pattern, ls))


def run_sample(cfg_dict, size, sample):
    """Worker entry point; never raises, failures come back as ``error``."""
    cfg = EnsembleConfig.from_dict(cfg_dict)
    try:
        with threadpool_limits(limits=1):
            return _run_sample(cfg, size, sample)
    except Exception as exc:  # recorded and excluded by the caller
        return SampleResult(size, sample, error=f"{type(exc).__name__}: {exc}")


def _run_sample(cfg, size, sample):
    ham = build_hamiltonian(cfg, size, sample)
    davies, redfield = generators(cfg, ham, size, sample)
    rho0 = dynamics.localized_state(ham.n_sites, cfg.initial_state["site"])
    grid = cfg.grid()
    step = cfg.step
    if step is None:
        step = min(dynamics.default_step(davies), dynamics.default_step(redfield))
        step = (grid[1] - grid[0]) / np.ceil((grid[1] - grid[0]) / step - 1e-9)
    d = dynamics.evolve(davies, rho0, grid, step, basis="eigen")
    r = dynamics.evolve(redfield, rho0, grid, step, basis="eigen", psd_abort=None)
    curve = dynamics.trace_distance_curve(d.states, r.states)
    drift = max(d.meta["max_trace_drift"], r.meta["max_trace_drift"])
    return SampleResult(size, sample, curve, r.meta["min_eigenvalue"], drift)


def aggregate(curves):
    """Mean and sample standard deviation (ddof=1; zero for one sample)."""
    curves = np.asarray(curves, dtype=float)
    mean = curves.mean(axis=0)
    if curves.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, curves.std(axis=0, ddof=1)


def _run_tasks(cfg, tasks, threads):
    cfg_dict = cfg.to_dict()
    if threads == 1:
        return [run_sample(cfg_dict, size, sample) for size, sample in tasks]
    methods = multiprocessing.get_all_start_methods()
    ctx = multiprocessing.get_context("fork" if "fork" in methods else "spawn")
    with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
        futures = [pool.submit(run_sample, cfg_dict, size, sample) for size, sample in tasks]
        return [f.result() for f in futures]


def run_ensemble(cfg, threads=None):
    """Run every (size, sample) task and aggregate trace-distance curves."""
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise EnsembleError("threads must be >= 1")
    tasks = [(size, sample) for size in cfg.sizes for sample in range(cfg.samples)]
    results = _run_tasks(cfg, tasks, min(threads, len(tasks)))
    failures = [r for r in results if not r.ok]
    if failures:
        log.warning("%d of %d samples failed and were excluded", len(failures), len(tasks))
    if len(failures) > MAX_FAILURE_FRACTION * len(tasks):
        detail = "; ".join(f"size {r.size} sample {r.sample}: {r.error}" for r in failures[:5])
        raise EnsembleError(f"{len(failures)} of {len(tasks)} samples failed ({detail})")

    means, stds, n_ok, min_eigs, drifts = [], [], [], [], []
    for size in cfg.sizes:
        ok = [r for r in results if r.size == size and r.ok]
        if not ok:
            raise EnsembleError(f"every sample failed for size {size}")
        mean, std = aggregate([r.curve for r in ok])
        means.append(mean)
        stds.append(std)
        n_ok.append(len(ok))
        min_eigs.append(float(min(r.redfield_min_eigenvalue for r in ok)))
        drifts.append(float(max(r.max_trace_drift for r in ok)))
    provenance = {"config_sha256": cfg.digest(), "version": __version__,
                  "schema_version": cfg.schema_version}
    return EnsembleResult(cfg, cfg.grid(), list(cfg.sizes), [cfg.n_sites(s) for s in cfg.sizes],
                          np.array(means), np.array(stds), n_ok,
                          [(r.size, r.sample, r.error) for r in failures], min_eigs, drifts,
                          provenance)
