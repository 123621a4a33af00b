"""Seed hierarchy helpers.

Every random stream in the package is derived from integer keys through
:class:`numpy.random.SeedSequence`, so a draw depends only on its position in
the hierarchy and never on execution order.
"""

import numpy as np


def derive_seed(*keys: int) -> int:
    """Collapse a tuple of non-negative integer keys into one 63-bit seed."""
    ss = np.random.SeedSequence([int(k) for k in keys])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def rng_for(*keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))
