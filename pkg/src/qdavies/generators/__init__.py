"""Generator assembly for linear (exchange) and dephasing dissipation."""

import numpy as np

from .base import (DEGENERACY_RTOL, SUPEROPERATOR_MAX_DIM, CouplingPattern, GeneratorCoefficients,
                   GeneratorError, Kind, Sector, apply, cluster_labels, degeneracy_tol,
                   traceless_min_eigenvalue)
from .dephasing import (DephasingGenerator, bohr_labels, build_davies_dephasing,
                        build_redfield_dephasing, dephasing_matrix_elements, four_index_oracle,
                        secular_truncate_dephasing)
from .linear import (LinearGenerator, build_davies_linear, build_redfield_linear,
                     fock_superoperator, instantaneous_davies, jordan_wigner, overlap_matrix,
                     secular_truncate_linear)


def secular_truncate(g):
    """Secular truncation of a Redfield generator in either sector."""
    if g.kind is not Kind.REDFIELD:
        raise GeneratorError("secular truncation expects a Redfield generator")
    if g.sector is Sector.MODE_OCCUPATION:
        return secular_truncate_linear(g)
    return secular_truncate_dephasing(g)


def kossakowski_matrix(g):
    return g.kossakowski_matrix()


def kossakowski_min_eigenvalue(g):
    """Smallest eigenvalue of the Kossakowski matrix (traceless part for dyads)."""
    if g.sector is Sector.SINGLE_PARTICLE:
        return g.kossakowski_min_eigenvalue()
    k = g.kossakowski_matrix()
    return float(np.linalg.eigvalsh(0.5 * (k + k.conj().T))[0])


def build(kind, coupling, ham, model, pattern=None, lamb_shift=True):
    """Build by name: ``kind`` in redfield/davies/secular_truncation,
    ``coupling`` in linear/dephasing."""
    kind = Kind(kind)
    if coupling == "linear":
        red = build_redfield_linear if kind is not Kind.DAVIES else build_davies_linear
        g = red(ham, model, pattern, lamb_shift)
    elif coupling == "dephasing":
        red = build_redfield_dephasing if kind is not Kind.DAVIES else build_davies_dephasing
        g = red(ham, model, None, lamb_shift)
    else:
        raise GeneratorError(f"unknown coupling {coupling!r}")
    return secular_truncate(g) if kind is Kind.SECULAR else g


from . import serialize  # noqa: E402  (needs build above)
