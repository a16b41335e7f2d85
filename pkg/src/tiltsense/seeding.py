"""Deterministic seed derivation.

Every stochastic draw in a run pulls from a generator derived from the
master seed plus a structural key (stream tag, scan, azimuth, slot), so
results are reproducible and independent of evaluation order.
"""

from __future__ import annotations

import numpy as np

NOISE_STREAM = 0
PAYLOAD_STREAM = 1
SWEEP_STREAM = 2


def derive_seed(master_seed: int, *parts: int) -> np.random.SeedSequence:
    key = [int(master_seed)] + [int(p) for p in parts]
    if any(p < 0 for p in key):
        raise ValueError("seed key parts must be non-negative")
    return np.random.SeedSequence(key)


def derive_rng(master_seed: int, *parts: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *parts))
