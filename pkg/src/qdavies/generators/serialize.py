"""JSON export of generators for the certify CLI and cross-implementation diffs.

Complex arrays are stored as ``{"re": [...], "im": [...]}`` nested lists.
The ``digest`` field hashes the hopping matrix and the bath model; loading
rebuilds the generator from those and refuses mismatched hashes.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from .. import bath
from ..hamiltonians import diagonalize
from .base import CouplingPattern, GeneratorError, Kind, Sector

FORMAT_VERSION = 1


def _pack(a):
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def _unpack(d):
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def generator_digest(ham, model):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ham.hopping, dtype=complex).tobytes())
    h.update(json.dumps(model.to_dict(), sort_keys=True).encode())
    return h.hexdigest()


def to_dict(g):
    out = {
        "format_version": FORMAT_VERSION,
        "kind": g.kind.value,
        "sector": g.sector.value,
        "frequencies": g.ham.eigenvalues.tolist(),
        "hopping": _pack(g.ham.hopping),
        "model": g.model.to_dict(),
        "lamb_shift_hamiltonian": bool(g.lamb_shift_hamiltonian),
        "digest": generator_digest(g.ham, g.model),
    }
    if g.sector is Sector.MODE_OCCUPATION:
        out["pattern"] = g.pattern.to_dict()
        out["channel1"] = _pack(g.channel1)
        out["channel2"] = _pack(g.channel2)
    else:
        out["spectrum"] = _pack(g.spectrum)
    return out


def from_dict(d):
    """Rebuild a generator from its export and check the stored coefficients."""
    from . import build

    if d.get("format_version") != FORMAT_VERSION:
        raise GeneratorError(f"unsupported generator format {d.get('format_version')!r}")
    ham = diagonalize(_unpack(d["hopping"]))
    model = bath.SpectralModel.from_dict(d["model"])
    if generator_digest(ham, model) != d["digest"]:
        raise GeneratorError("generator digest does not match hopping matrix and model")
    sector = Sector(d["sector"])
    coupling = "linear" if sector is Sector.MODE_OCCUPATION else "dephasing"
    pattern = CouplingPattern.from_dict(d["pattern"]) if "pattern" in d else None
    g = build(Kind(d["kind"]), coupling, ham, model, pattern, d["lamb_shift_hamiltonian"])
    stored = ([_unpack(d["channel1"]), _unpack(d["channel2"])] if coupling == "linear"
              else [_unpack(d["spectrum"])])
    fresh = [g.channel1, g.channel2] if coupling == "linear" else [g.spectrum]
    scale = max(g.scale, 1e-300)
    for a, b in zip(stored, fresh):
        if a.shape != b.shape or np.max(np.abs(a - b)) > 1e-10 * scale:
            raise GeneratorError("stored coefficients disagree with the rebuilt generator")
    return g


def save(g, path):
    path = Path(path)
    path.write_text(json.dumps(to_dict(g), indent=1))
    return path


def load(path):
    return from_dict(json.loads(Path(path).read_text()))
