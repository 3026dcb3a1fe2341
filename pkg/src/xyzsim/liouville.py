"""Vectorized Liouvillian superoperator, its spectrum, and the steady state.

Vectorization is column-stacking throughout: ``vec(rho) = rho.reshape(-1,
order="F")`` so that ``vec(A X B) = kron(B.T, A) vec(X)``.  Mixing
conventions silently transposes the dissipator, so every superoperator in
this package is built through :func:`build_liouvillian`.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .bits import n_sites_of, up_counts
from .errors import (
    ConvergenceError,
    DegenerateSteadyStateWarning,
    GapCandidateWarning,
    NoSteadyStateError,
    SizeLimitError,
)
from .operators import Couplings, pauli_matrix, z2_operator

MAX_SUPEROP_DIM = 4**7
MAX_DENSE_EIG_DIM = 4096


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stacked vec(rho)."""
    return rho.reshape(-1, order="F")


def unvectorize(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    dim = round(len(v) ** 0.5)
    return v.reshape(dim, dim, order="F")


def build_liouvillian(h, c: Couplings, n_sites: int, *,
                      max_dim: int = MAX_SUPEROP_DIM):
    """Sparse 4**N superoperator generating the spin-flip master equation.

    L = -i (I (x) H - H^T (x) I)
        + gamma sum_j [ conj(sm_j) (x) sm_j
                        - 1/2 (I (x) sp_j sm_j + (sp_j sm_j)^T (x) I) ]

    with sm_j the lowering operator on site j and (x) the Kronecker product
    matching the column-stacking convention above.
    """
    dim = 1 << n_sites
    if dim * dim > max_dim:
        raise SizeLimitError(
            f"superoperator dimension {dim * dim} exceeds the maximum of {max_dim}")
    if h.shape != (dim, dim):
        raise SizeLimitError(f"H has shape {h.shape}, expected {(dim, dim)}")
    eye = sp.identity(dim, dtype=complex, format="csr")
    h = sp.csr_matrix(h)
    liou = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    number = sp.diags(up_counts(n_sites).astype(complex), format="csr")
    liou = liou - 0.5 * c.gamma * (sp.kron(eye, number) + sp.kron(number.T, eye))
    for j in range(n_sites):
        sm = pauli_matrix(j, "-", n_sites)
        liou = liou + c.gamma * sp.kron(sm.conj(), sm)
    return liou.tocsr()


@dataclass
class LiouvillianSpectrum:
    """Complete eigendata of a Liouvillian, in units of the rates fed in.

    Eigenvalues are sorted by descending real part (steady state first).
    ``parities`` holds the Z2 symmetry sector (+1/-1) of each eigenmode and
    ``parity_residuals`` how cleanly the mode sits in that sector.
    """

    eigenvalues: np.ndarray
    steady_state: np.ndarray
    slow_mode: np.ndarray
    gap: float
    parities: np.ndarray
    parity_residuals: np.ndarray
    zero_tol: float


def _assign_parities(eigenvalues, eigenvectors, n_sites):
    """Z2 parity per eigenmode under the vectorized pi-rotation conjugation.

    The conjugation rho -> U rho U is diagonal in the vectorized basis, so
    parity is read off directly; inside a degenerate eigenvalue cluster the
    returned eigenvectors may mix sectors and are rotated into parity
    eigenvectors first.
    """
    u = z2_operator(n_sites).diagonal().real
    pdiag = np.kron(u, u)
    vecs = eigenvectors.copy()
    n = len(eigenvalues)
    scale = max(np.max(np.abs(eigenvalues)), 1.0)
    # cluster indices of (numerically) equal eigenvalues
    order = np.lexsort((eigenvalues.imag, eigenvalues.real))
    clusters, current = [], [order[0]]
    for a, b in zip(order, order[1:]):
        if abs(eigenvalues[b] - eigenvalues[a]) <= 1e-7 * scale:
            current.append(b)
        else:
            clusters.append(current)
            current = [b]
    clusters.append(current)

    parities = np.zeros(n)
    residuals = np.zeros(n)
    for idx in clusters:
        if len(idx) > 1:
            block = vecs[:, idx]
            mix, *_ = np.linalg.lstsq(block, pdiag[:, None] * block, rcond=None)
            sector, rot = np.linalg.eig(mix)
            vecs[:, idx] = block @ rot
        for i in idx:
            v = vecs[:, i]
            p = float(np.real(np.vdot(v, pdiag * v) / np.vdot(v, v)))
            p = 1.0 if p >= 0 else -1.0
            parities[i] = p
            residuals[i] = np.linalg.norm(pdiag * v - p * v) / np.linalg.norm(v)
    return parities, residuals, vecs


def full_spectrum(liou, *, gamma: float = 1.0, zero_tol: float | None = None,
                  dense_max: int = MAX_DENSE_EIG_DIM) -> LiouvillianSpectrum:
    """Dense diagonalization of the superoperator.

    The steady state is the (unique, up to the tolerance) eigenvector at
    eigenvalue zero normalized to unit trace; the gap is the smallest
    |Re| over the remaining eigenvalues.
    """
    dim = liou.shape[0]
    if dim > dense_max:
        raise SizeLimitError(
            f"superoperator dimension {dim} exceeds dense-eig maximum {dense_max}")
    if zero_tol is None:
        zero_tol = 1e-9 * gamma
    n_sites = n_sites_of(round(dim ** 0.5))

    dense = liou.toarray() if sp.issparse(liou) else np.asarray(liou)
    eigenvalues, eigenvectors = scipy.linalg.eig(dense)
    order = np.argsort(-eigenvalues.real, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]
    parities, residuals, eigenvectors = _assign_parities(
        eigenvalues, eigenvectors, n_sites)

    zero_mask = np.abs(eigenvalues) <= zero_tol
    if not zero_mask.any():
        closest = eigenvalues[np.argmin(np.abs(eigenvalues))]
        raise NoSteadyStateError(
            f"no eigenvalue within {zero_tol:.3e} of zero; closest is {closest:.3e}")
    if zero_mask.sum() > 1:
        warnings.warn(
            f"{int(zero_mask.sum())} eigenvalues within {zero_tol:.3e} of zero; "
            "steady state may be degenerate", DegenerateSteadyStateWarning)

    zero_idx = np.flatnonzero(zero_mask)
    traces = [abs(np.trace(unvectorize(eigenvectors[:, i]))) for i in zero_idx]
    steady_idx = zero_idx[int(np.argmax(traces))]
    rho_ss = unvectorize(eigenvectors[:, steady_idx])
    trace = np.trace(rho_ss)
    if abs(trace) < 1e-12:
        raise NoSteadyStateError("null eigenvector has (numerically) zero trace")
    rho_ss = rho_ss / trace
    rho_ss = 0.5 * (rho_ss + rho_ss.conj().T)

    nonzero = np.flatnonzero(~zero_mask)
    decay_rates = np.abs(eigenvalues[nonzero].real)
    slow_idx = nonzero[int(np.argmin(decay_rates))]
    gap = float(decay_rates.min())
    if gap < 10 * zero_tol:
        warnings.warn(
            f"slowest nonzero eigenvalue {eigenvalues[slow_idx]:.3e} lies within "
            f"10x zero_tol of the steady-state candidate "
            f"{eigenvalues[steady_idx]:.3e}; gap and steady state may be conflated",
            GapCandidateWarning)
    slow_mode = unvectorize(eigenvectors[:, slow_idx])
    slow_mode = slow_mode / np.linalg.norm(slow_mode)

    return LiouvillianSpectrum(eigenvalues, rho_ss, slow_mode, gap,
                               parities, residuals, zero_tol)


def steady_state_direct(liou, *, gamma: float = 1.0, tol: float = 1e-8) -> np.ndarray:
    """Steady state from the sparse linear system L vec(rho) = 0, Tr rho = 1.

    Row 0 of L (redundant: the diagonal rows of any trace-preserving
    generator sum to zero) is replaced by the trace constraint and the
    system solved directly.  Practical up to superoperator dimension 4**8,
    memory permitting.
    """
    dim2 = liou.shape[0]
    dim = round(dim2 ** 0.5)
    mat = sp.csr_matrix(liou).tolil()
    trace_row = np.zeros(dim2)
    trace_row[np.arange(dim) * dim + np.arange(dim)] = 1.0
    mat[0, :] = trace_row
    rhs = np.zeros(dim2, dtype=complex)
    rhs[0] = 1.0
    solution = scipy.sparse.linalg.spsolve(mat.tocsc(), rhs)
    rho = unvectorize(solution)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = np.linalg.norm(liou @ vectorize(rho))
    if residual > tol * max(gamma, 1e-300):
        raise ConvergenceError(
            f"steady-state residual {residual:.3e} exceeds {tol:.1e} * gamma")
    return rho
