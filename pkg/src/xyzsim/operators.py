"""Spin-1/2 operators on the full 2**N Hilbert space.

Conventions (fixed here, relied on by every other module):

* Basis states are integers; bit ``j`` addresses site ``j`` (site 0 is the
  least significant bit) and bit value 1 means spin up (+z eigenstate).
  Single-site matrices below are written in the ordering (down, up).
* ``sigma_y`` satisfies ``sigma_y |up> = +i |down>``, which together with
  ``sigma_pm = (sigma_x +- i sigma_y) / 2`` makes ``sigma_plus`` the raising
  and ``sigma_minus`` the lowering operator.

Operators are either scipy CSR matrices (canonical dense export via
``.toarray()``, row-major) or :class:`PauliString` terms applied matrix-free
through bit manipulation, which is what makes N up to 16 tractable for
trajectory states.
"""

from dataclasses import dataclass
from math import isfinite

import numpy as np
import scipy.sparse as sp

from .bits import bit_values, flip_indices, n_sites_of, up_counts
from .errors import DimensionMismatchError, SizeLimitError
from .lattice import MAX_SITES, LatticeGeometry

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

SINGLE_SITE = {
    "x": SIGMA_X,
    "y": SIGMA_Y,
    "z": SIGMA_Z,
    "+": SIGMA_PLUS,
    "-": SIGMA_MINUS,
    "i": IDENTITY_2,
}


@dataclass(frozen=True)
class Couplings:
    """XYZ exchange couplings and the local spin-flip rate (hbar = 1)."""

    jx: float
    jy: float
    jz: float
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("jx", "jy", "jz", "gamma"):
            value = getattr(self, name)
            if not isfinite(value):
                raise ValueError(f"coupling {name} must be finite, got {value}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True)
class PauliString:
    """coefficient * product of single-site factors, at most one per site.

    ``factors`` is a tuple of (site, axis) pairs with axis in
    {'x', 'y', 'z', '+', '-'}; an empty tuple is the scaled identity.
    """

    coefficient: complex = 1.0
    factors: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        sites = [site for site, _ in self.factors]
        if len(sites) != len(set(sites)):
            raise ValueError(f"duplicate site in Pauli string factors {self.factors}")
        for site, axis in self.factors:
            if axis not in ("x", "y", "z", "+", "-"):
                raise ValueError(f"unknown axis {axis!r}")
            if site < 0:
                raise IndexError(f"negative site index {site}")


def pauli_matrix(site: int, axis: str, n_sites: int, *, max_sites: int = MAX_SITES):
    """Single-site operator embedded in the 2**n_sites space, as sparse CSR.

    Built by tensoring identities around the 2x2 matrix, with site 0 on the
    least significant bit; this is the reference construction the matrix-free
    path is tested against.
    """
    if n_sites > max_sites:
        raise SizeLimitError(f"{n_sites} sites exceeds the maximum of {max_sites}")
    if not 0 <= site < n_sites:
        raise IndexError(f"site {site} out of range for {n_sites} sites")
    op = sp.csr_matrix(SINGLE_SITE[axis])
    left = sp.identity(1 << (n_sites - 1 - site), dtype=complex, format="csr")
    right = sp.identity(1 << site, dtype=complex, format="csr")
    return sp.kron(left, sp.kron(op, right, format="csr"), format="csr")


def string_permutation(ps: PauliString, n_sites: int) -> tuple[np.ndarray, np.ndarray]:
    """Column action of a Pauli string: ps|n> = amps[n] |perm[n]>.

    Every factor maps a basis state to (at most) one basis state, so the
    string is a phase-weighted permutation; '+'/'-' factors annihilate half
    the states, which shows up as amps[n] = 0.
    """
    dim = 1 << n_sites
    perm = np.arange(dim, dtype=np.intp)
    amps = np.full(dim, ps.coefficient, dtype=complex)
    for site, axis in ps.factors:
        if site >= n_sites:
            raise IndexError(f"site {site} out of range for {n_sites} sites")
        up = bit_values(n_sites, site)
        if axis == "x":
            perm = perm ^ (1 << site)
        elif axis == "y":
            amps = amps * np.where(up, 1j, -1j)
            perm = perm ^ (1 << site)
        elif axis == "z":
            amps = amps * np.where(up, 1.0, -1.0)
        elif axis == "+":
            amps = amps * ~up
            perm = perm ^ (1 << site)
        elif axis == "-":
            amps = amps * up
            perm = perm ^ (1 << site)
    return perm, amps


def apply_pauli_string(ps: PauliString, state: np.ndarray) -> np.ndarray:
    """Apply a Pauli string to a state vector without materializing a matrix."""
    n_sites = n_sites_of(state.shape[0])
    perm, amps = string_permutation(ps, n_sites)
    out = np.empty_like(state, dtype=complex)
    out[perm] = amps * state
    return out


def pauli_string_to_sparse(ps: PauliString, n_sites: int):
    """Sparse CSR matrix of a Pauli string (one nonzero per column)."""
    perm, amps = string_permutation(ps, n_sites)
    dim = 1 << n_sites
    cols = np.arange(dim, dtype=np.intp)
    keep = amps != 0
    return sp.csr_matrix((amps[keep], (perm[keep], cols[keep])), shape=(dim, dim))


def hamiltonian_terms(geom: LatticeGeometry, c: Couplings) -> list[PauliString]:
    """Bond terms J_a sigma^a_i sigma^a_j over nearest neighbours, a in x,y,z."""
    terms = []
    for i, j in geom.bonds:
        for axis, coupling in (("x", c.jx), ("y", c.jy), ("z", c.jz)):
            if coupling != 0.0:
                terms.append(PauliString(coupling, ((i, axis), (j, axis))))
    return terms


def build_hamiltonian(geom: LatticeGeometry, c: Couplings, *,
                      max_sites: int = MAX_SITES):
    """Anisotropic XYZ Heisenberg Hamiltonian on the lattice bonds, sparse CSR.

    Hermitian and traceless; commutes with :func:`z2_operator` because every
    bond term carries an even number of x and y factors.
    """
    n = geom.n_sites
    if n > max_sites:
        raise SizeLimitError(f"{n} sites exceeds the maximum of {max_sites}")
    dim = 1 << n
    h = sp.csr_matrix((dim, dim), dtype=complex)
    for i, j in geom.bonds:
        for axis, coupling in (("x", c.jx), ("y", c.jy), ("z", c.jz)):
            if coupling != 0.0:
                h = h + coupling * (pauli_matrix(i, axis, n) @ pauli_matrix(j, axis, n))
    return h.tocsr()


def number_operator_diagonal(n_sites: int) -> np.ndarray:
    """Diagonal of sum_j sigma^+_j sigma^-_j: the number of up spins."""
    return up_counts(n_sites)


def build_effective_hamiltonian(h, c: Couplings, n_sites: int):
    """Non-Hermitian H_eff = H - (i gamma / 2) sum_j sigma^+_j sigma^-_j.

    The anti-Hermitian part is diagonal in the computational basis with
    entry -(i gamma / 2) * (number of up spins).
    """
    dim = 1 << n_sites
    if h.shape != (dim, dim):
        raise DimensionMismatchError(f"H has shape {h.shape}, expected {(dim, dim)}")
    decay = sp.diags(-0.5j * c.gamma * up_counts(n_sites), format="csr")
    return (h + decay).tocsr()


def z2_operator(n_sites: int):
    """Pi-rotation of all spins about z: U = tensor of sigma^z over sites.

    Diagonal with entries (-1)**(number of down spins); U^2 = identity and
    U sigma^{x,y}_j U = -sigma^{x,y}_j.
    """
    down = n_sites - up_counts(n_sites)
    signs = np.where(down.astype(np.int64) % 2 == 0, 1.0, -1.0).astype(complex)
    return sp.diags(signs, format="csr")


def magnetization_x(n_sites: int):
    """Site-averaged transverse magnetization sum_j sigma^x_j / n_sites, CSR."""
    dim = 1 << n_sites
    op = sp.csr_matrix((dim, dim), dtype=complex)
    for j in range(n_sites):
        op = op + pauli_matrix(j, "x", n_sites)
    return (op / n_sites).tocsr()


def jump_operators(n_sites: int) -> list:
    """Lowering operator sigma^-_j for every site, as sparse CSR."""
    return [pauli_matrix(j, "-", n_sites) for j in range(n_sites)]


def state_mx(psi: np.ndarray, flips: np.ndarray | None = None) -> float:
    """Per-site <psi| sum_j sigma^x_j |psi> / N of a normalized pure state."""
    n_sites = n_sites_of(psi.shape[0])
    if flips is None:
        flips = np.stack([flip_indices(n_sites, j) for j in range(n_sites)])
    return float(np.real(np.sum(psi.conj()[None, :] * psi[flips])) / n_sites)
