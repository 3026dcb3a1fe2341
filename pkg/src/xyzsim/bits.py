"""Bit-indexing helpers for matrix-free operator application.

Basis convention used everywhere in this package: a computational basis
state of ``n_sites`` spins is labelled by an integer ``n`` in
``[0, 2**n_sites)``; bit ``j`` of ``n`` addresses site ``j`` and bit value
1 means spin up (+z eigenstate).  Site 0 is therefore the least
significant bit.

The arrays returned here are cached and marked read-only; do not mutate
them.
"""

from functools import lru_cache

import numpy as np


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@lru_cache(maxsize=None)
def flip_indices(n_sites: int, site: int) -> np.ndarray:
    """Index map n -> n with bit `site` flipped, as an int array of length 2**n_sites."""
    dim = 1 << n_sites
    return _frozen(np.arange(dim, dtype=np.intp) ^ (1 << site))


@lru_cache(maxsize=None)
def bit_values(n_sites: int, site: int) -> np.ndarray:
    """Boolean array b[n] = (bit `site` of n), i.e. True where site is spin up."""
    dim = 1 << n_sites
    return _frozen((np.arange(dim, dtype=np.uint64) >> np.uint64(site)) & np.uint64(1) != 0)


@lru_cache(maxsize=None)
def all_flip_indices(n_sites: int) -> np.ndarray:
    """Stacked flip_indices for every site, shape (n_sites, 2**n_sites)."""
    return _frozen(np.stack([flip_indices(n_sites, j) for j in range(n_sites)]))


@lru_cache(maxsize=None)
def all_bit_values(n_sites: int) -> np.ndarray:
    """Stacked bit_values for every site, shape (n_sites, 2**n_sites)."""
    return _frozen(np.stack([bit_values(n_sites, j) for j in range(n_sites)]))


@lru_cache(maxsize=None)
def up_counts(n_sites: int) -> np.ndarray:
    """Number of up spins (set bits) per basis state, as float64."""
    dim = 1 << n_sites
    return _frozen(np.bitwise_count(np.arange(dim, dtype=np.uint64)).astype(np.float64))


def n_sites_of(dim: int) -> int:
    """Invert dim = 2**n_sites, validating the power of two."""
    n = int(dim).bit_length() - 1
    if dim <= 0 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n
