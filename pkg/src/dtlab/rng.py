"""Deterministic derivation of independent random streams from one root seed.

Every sampler in the package draws from a stream addressed by (seed, path),
where ``path`` is a short tuple of small integers.  Distinct paths give
statistically independent streams, so block samplers and per-trial loops can
run in any order (or in parallel) without coordination and still reproduce
bit-identically from the root seed.

Path registry (first component), to keep callers collision-free:

====  =======================================
0     diagonal sampler
1     strictly-upper sampler
2     square Ginibre sampler
3     per-atom-block microstate perturbations
4     block-matrix assembly
5     dimension-scan rows
6     measure sampling
7     box-integral Monte Carlo
====  =======================================
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "derive_seed"]


def _seed_sequence(seed: int, path: tuple[int, ...]) -> np.random.SeedSequence:
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream addressed by (seed, path)."""
    return np.random.default_rng(_seed_sequence(seed, path))


def derive_seed(seed: int, *path: int) -> int:
    """Fresh integer seed derived from (seed, path), for nested samplers."""
    return int(_seed_sequence(seed, path).generate_state(1, np.uint64)[0])
