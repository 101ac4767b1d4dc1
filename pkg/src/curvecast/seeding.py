"""
Reproducible random streams.

All randomness comes from numpy's PCG64 bit generator (128-bit state, with
published reference outputs), seeded through ``numpy.random.SeedSequence``.
A batch item ``index`` under a master ``seed`` draws from
``derive_seed(seed, index)``, so batches can run in any order or in parallel
and still reproduce the sequential result.
"""

import numpy as np
from numpy.random import PCG64, Generator, SeedSequence


def derive_seed(seed, index):
    """Mix ``(seed, index)`` into a 64-bit child seed."""
    state = SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)
    return int(state[0])


def make_rng(seed):
    return Generator(PCG64(SeedSequence(int(seed))))
