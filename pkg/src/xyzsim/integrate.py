"""Deterministic density-matrix evolution under the spin-flip master equation.

The right-hand side  drho/dt = -i[H, rho] + gamma sum_j (sm_j rho sp_j
- 1/2 {sp_j sm_j, rho})  is applied in operator form on the 2**N x 2**N
matrix; the 4**N superoperator is never built here.  The dissipator uses
bit-indexed gathers: sm_j rho sp_j is rho with bit j of both indices
flipped, masked to the spin-down block.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bits import all_bit_values, all_flip_indices, n_sites_of, up_counts
from .errors import DimensionMismatchError, DivergenceError, StepSizeError
from .operators import Couplings, PauliString, magnetization_x, string_permutation

RK4_MAX_SITES = 10

_KETS = {
    "+z": np.array([0.0, 1.0], dtype=complex),
    "-z": np.array([1.0, 0.0], dtype=complex),
    "+x": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    "-x": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
    "+y": np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0),
    "-y": np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0),
}


@dataclass
class TimeSeries:
    """Recorded observables on a strictly increasing time grid (units 1/gamma)."""

    times: np.ndarray
    values: np.ndarray  # shape (len(times), len(labels))
    labels: tuple[str, ...]

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label)]


def product_pure_state(n_sites: int, direction: str) -> np.ndarray:
    """Normalized product state with every spin along `direction`."""
    if direction not in _KETS:
        raise ValueError(f"unknown direction {direction!r}; use one of {sorted(_KETS)}")
    psi = np.array([1.0], dtype=complex)
    for _ in range(n_sites):
        psi = np.kron(psi, _KETS[direction])
    return psi


def product_state(n_sites: int, direction: str) -> np.ndarray:
    """Density matrix of the product state along `direction`."""
    psi = product_pure_state(n_sites, direction)
    return np.outer(psi, psi.conj())


def expectation(state: np.ndarray, op) -> complex:
    """<op> for a pure state (1D array) or density matrix (2D array).

    `op` may be a sparse matrix, a dense matrix, or a PauliString (evaluated
    matrix-free).
    """
    dim = state.shape[0]
    if isinstance(op, PauliString):
        n_sites = n_sites_of(dim)
        perm, amps = string_permutation(op, n_sites)
        if state.ndim == 1:
            return complex(np.sum(state.conj()[perm] * (amps * state)))
        return complex(np.sum(amps * state[np.arange(dim), perm]))
    if op.shape[1] != dim:
        raise DimensionMismatchError(
            f"operator shape {op.shape} does not match state dimension {dim}")
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state))
    if sp.issparse(op):
        coo = op.tocoo()
        return complex(np.sum(coo.data * state[coo.col, coo.row]))
    return complex(np.einsum("nm,mn->", state, op))


class _MasterEquation:
    """Precomputed apparatus for the operator-form right-hand side."""

    def __init__(self, h, c: Couplings, n_sites: int):
        dim = 1 << n_sites
        if sp.issparse(h):
            # sparse matvec overhead dominates tiny systems
            self.h = h.toarray() if dim <= 64 else sp.csr_matrix(h)
        else:
            self.h = np.asarray(h, dtype=complex)
        self.gamma = c.gamma
        self.decay = 0.5 * c.gamma * (up_counts(n_sites)[:, None]
                                      + up_counts(n_sites)[None, :])
        flips = all_flip_indices(n_sites)
        ups = all_bit_values(n_sites)
        self.site_ix = [np.ix_(flips[j], flips[j]) for j in range(n_sites)]
        self.either_up = [ups[j][:, None] | ups[j][None, :] for j in range(n_sites)]

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        out = (-1j) * (self.h @ rho - rho @ self.h)
        if self.gamma != 0.0:
            out -= self.decay * rho
            for ix, up in zip(self.site_ix, self.either_up):
                jumped = rho[ix]
                jumped[up] = 0.0
                out += self.gamma * jumped
        return out

    def rk4_step(self, rho, dt):
        k1 = self.rhs(rho)
        k2 = self.rhs(rho + (0.5 * dt) * k1)
        k3 = self.rhs(rho + (0.5 * dt) * k2)
        k4 = self.rhs(rho + dt * k3)
        return rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def lindblad_rhs(rho: np.ndarray, h, c: Couplings) -> np.ndarray:
    """drho/dt = -i[H, rho] + gamma sum_j (sm_j rho sp_j - 1/2 {sp_j sm_j, rho})."""
    return _MasterEquation(h, c, n_sites_of(rho.shape[0])).rhs(rho)


def rk4_evolve(rho0: np.ndarray, h, c: Couplings, dt: float, t_max: float,
               record: dict | None = None, record_every: int = 1, *,
               trace_tol: float = 1e-6) -> TimeSeries:
    """Classic 4th-order Runge-Kutta integration of the master equation.

    Records Tr(rho O) for each named observable every `record_every` steps
    (the t=0 point is always included).  Trace drift beyond `trace_tol` at a
    record point raises StepSizeError; non-finite entries raise
    DivergenceError.  Stability guideline: dt <= 1e-2/gamma at couplings of
    a few gamma.
    """
    if dt <= 0 or t_max <= 0:
        raise ValueError("dt and t_max must be positive")
    n_sites = n_sites_of(rho0.shape[0])
    if n_sites > RK4_MAX_SITES:
        raise DimensionMismatchError(
            f"operator-form RK4 supports up to {RK4_MAX_SITES} sites, got {n_sites}")
    if record is None:
        record = {"mx": magnetization_x(n_sites)}
    equation = _MasterEquation(h, c, n_sites)

    n_steps = round(t_max / dt)
    labels = tuple(record)
    times = [0.0]
    rho = np.array(rho0, dtype=complex)
    rows = [_record_row(rho, record, 0.0, trace_tol)]
    for step in range(1, n_steps + 1):
        rho = equation.rk4_step(rho, dt)
        if step % record_every == 0:
            t = step * dt
            times.append(t)
            rows.append(_record_row(rho, record, t, trace_tol))
    return TimeSeries(np.array(times), np.array(rows), labels)


def _record_row(rho, record, t, trace_tol):
    trace = np.trace(rho)
    if not np.isfinite(trace):
        raise DivergenceError(f"non-finite density matrix at t = {t:g}")
    if abs(trace - 1.0) > trace_tol:
        raise StepSizeError(
            f"trace drifted to {trace:.8f} at t = {t:g}; reduce dt")
    row = []
    for label, op in record.items():
        value = expectation(rho, op)
        if abs(value.imag) > 1e-10:
            raise DivergenceError(
                f"observable {label!r} has imaginary part {value.imag:.3e} at t = {t:g}")
        row.append(value.real)
    return row
