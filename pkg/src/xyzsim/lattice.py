"""Lattice geometries: 1D chains and 2D rectangles with periodic boundaries.

Sites are indexed row-major: site = x + lx * y for x in [0, lx), y in [0, ly).
Bonds are unordered nearest-neighbour pairs stored as sorted (i, j) tuples
in a canonical (sorted) order.  Wrap-around bonds that coincide with an
interior bond (extent 2) are deduplicated by default; pass
``dedupe=False`` to keep the doubled coupling instead.
"""

from dataclasses import dataclass, field

from .errors import GeometryError, SizeLimitError

MAX_SITES = 16


@dataclass(frozen=True)
class LatticeGeometry:
    """Sites and nearest-neighbour bonds of a periodic (or open) lattice."""

    dims: tuple[int, int]
    n_sites: int
    bonds: tuple[tuple[int, int], ...]
    periodic: bool = True

    def degrees(self) -> list[int]:
        """Bond count per site (a doubled bond counts twice)."""
        deg = [0] * self.n_sites
        for i, j in self.bonds:
            deg[i] += 1
            deg[j] += 1
        return deg


def _canonical(pairs: list[tuple[int, int]], dedupe: bool) -> tuple[tuple[int, int], ...]:
    pairs = [(min(i, j), max(i, j)) for i, j in pairs]
    if dedupe:
        pairs = set(pairs)
    return tuple(sorted(pairs))


def build_chain(length: int, periodic: bool = True, *, dedupe: bool = True,
                max_sites: int = MAX_SITES) -> LatticeGeometry:
    """Chain of `length` sites; bonds connect i and (i+1) mod length."""
    if length < 2:
        raise GeometryError(f"chain needs at least 2 sites, got {length}")
    if length > max_sites:
        raise SizeLimitError(f"{length} sites exceeds the maximum of {max_sites}")
    last = length if periodic else length - 1
    pairs = [(i, (i + 1) % length) for i in range(last)]
    return LatticeGeometry((length, 1), length, _canonical(pairs, dedupe), periodic)


def build_rect(lx: int, ly: int, periodic: bool = True, *, dedupe: bool = True,
               max_sites: int = MAX_SITES) -> LatticeGeometry:
    """Rectangular lx-by-ly lattice with bonds along +x and +y."""
    if lx < 2 or ly < 1:
        raise GeometryError(f"rectangle needs lx >= 2 and ly >= 1, got {lx}x{ly}")
    n = lx * ly
    if n > max_sites:
        raise SizeLimitError(f"{lx}x{ly} = {n} sites exceeds the maximum of {max_sites}")

    def site(x: int, y: int) -> int:
        return x % lx + lx * (y % ly)

    pairs = []
    for y in range(ly):
        for x in range(lx):
            if periodic or x + 1 < lx:
                pairs.append((site(x, y), site(x + 1, y)))
            if (periodic and ly > 1) or y + 1 < ly:
                pairs.append((site(x, y), site(x, y + 1)))
    pairs = [(i, j) for i, j in pairs if i != j]
    return LatticeGeometry((lx, ly), n, _canonical(pairs, dedupe), periodic)
