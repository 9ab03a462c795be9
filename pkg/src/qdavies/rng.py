"""Seeded random streams.

All randomness goes through :func:`stream`, which builds a Philox
(counter-based) generator from ``SeedSequence(seed, spawn_key=keys)``.
The first key is a module tag; remaining keys identify the draw, e.g.
``(TAG_GUE, size, sample)``.  Distinct key tuples give statistically
independent streams, so ensemble samples can be generated in any order
or in parallel without changing their values.
"""

import numpy as np

TAG_GUE = 1
TAG_ANDERSON = 2
TAG_PATTERN = 3
TAG_ENSEMBLE = 4
TAG_ETH = 5
TAG_TEST = 99


def stream(seed, *keys):
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))
