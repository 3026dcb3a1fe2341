"""Stochastic pure-state unravelings of the spin-flip master equation.

Two protocols are provided, both driven by a counter-based Philox stream so
that trajectory k of an ensemble (key = base_seed + k) is an independent,
reproducible random sequence:

* quantum-jump Monte Carlo wave functions: deterministic non-Hermitian
  evolution under H_eff punctuated by sigma^- collapses whenever the decaying
  squared norm crosses a pre-drawn uniform threshold;
* the diffusive homodyne unraveling: an Euler-Maruyama update conditioned on
  continuous monitoring of the local sigma^x quadratures, with one Wiener
  increment per site per step (mean 0, variance dt) and renormalization
  after every step.

Averaging either ensemble reproduces the master-equation density matrix.
Single homodyne records, however, do not share the Liouvillian's Z2
symmetry and so resolve which transverse-magnetization branch the system
actually occupies.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bits import all_bit_values, all_flip_indices, n_sites_of, up_counts
from .errors import (
    DivergenceError,
    JumpChannelError,
    StepSizeError,
    TrajectoryError,
    XyzSimError,
)
from .operators import Couplings, build_effective_hamiltonian

RNG_IDENTITY = "numpy.random.Philox(key=seed), counter-based"

# below this dimension sparse matvec overhead dominates; use dense
_DENSE_DIM_MAX = 64
# Wiener increments are pre-drawn in blocks of this many steps (the stream
# order is identical to per-step draws, so results do not depend on it)
_NOISE_BLOCK = 256


@dataclass
class TrajectoryRecord:
    """One stochastic trajectory: per-site-averaged <sigma^x> over time."""

    seed: int
    times: np.ndarray
    mx: np.ndarray
    per_site: np.ndarray | None = None    # (n_rec, n_sites)
    jump_times: np.ndarray | None = None  # jump unraveling only
    states: np.ndarray | None = None      # (n_rec, dim), on request


@dataclass
class EnsembleResult:
    """Trajectory-averaged observables with per-time standard errors."""

    n_traj: int
    times: np.ndarray
    mean_mx: np.ndarray
    stderr_mx: np.ndarray | None  # None for a single trajectory
    records: list
    rho: np.ndarray | None = None  # (n_rec, dim, dim) reconstruction


def _scaled_generator(op, dim, scale):
    """scale * op, dense below the sparse-worthwhile cutoff."""
    if sp.issparse(op):
        return scale * (op.toarray() if dim <= _DENSE_DIM_MAX else sp.csr_matrix(op))
    return scale * np.asarray(op, dtype=complex)


def _rk4_advance(m, psi):
    """One RK4 step of dpsi = M psi per unit step, M = -i dt A prefolded."""
    k1 = m @ psi
    k2 = m @ (psi + 0.5 * k1)
    k3 = m @ (psi + 0.5 * k2)
    k4 = m @ (psi + k3)
    return psi + (k1 + 2.0 * (k2 + k3) + k4) / 6.0


def _record_grid(n_steps, record_every, dt):
    steps = np.arange(0, n_steps + 1, record_every)
    return steps, steps * dt


class _Recorder:
    def __init__(self, n_rec, n_sites, dim, keep_per_site, keep_states):
        self.mx = np.empty(n_rec)
        self.per_site = np.empty((n_rec, n_sites)) if keep_per_site else None
        self.states = np.empty((n_rec, dim), dtype=complex) if keep_states else None
        self.row = 0

    def add(self, site_sx, psi_normalized):
        self.mx[self.row] = site_sx.mean()
        if self.per_site is not None:
            self.per_site[self.row] = site_sx
        if self.states is not None:
            self.states[self.row] = psi_normalized
        self.row += 1


def mcwf_trajectory(psi0: np.ndarray, h_eff, c: Couplings, dt: float,
                    t_max: float, seed: int, *, record_every: int = 1,
                    keep_per_site: bool = False,
                    keep_states: bool = False) -> TrajectoryRecord:
    """Single quantum-jump Monte Carlo wave-function trajectory.

    The non-Hermitian segments are integrated with RK4 at the fixed step dt
    (the norm then decays with the physical weight, free of the spurious
    O(dt^2 <H^2>) inflation a first-order step adds).  A jump fires at the
    first step where ||psi||^2 falls below the pre-drawn uniform threshold;
    the decay site is drawn with probability proportional to
    gamma <psi|sp_j sm_j|psi>, the state collapses through sm_j, and a fresh
    threshold is drawn.  The recorded jump time interpolates the norm
    crossing linearly within the step.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    dim = psi0.shape[0]
    n_sites = n_sites_of(dim)
    m = _scaled_generator(h_eff, dim, -1j * dt)
    flips = all_flip_indices(n_sites)
    ups = all_bit_values(n_sites)
    ups_f = ups.astype(float)

    n_steps = round(t_max / dt)
    rec_steps, times = _record_grid(n_steps, record_every, dt)
    rec = _Recorder(len(rec_steps), n_sites, dim, keep_per_site, keep_states)

    psi = np.asarray(psi0, dtype=complex).copy()
    psi /= np.linalg.norm(psi)
    _record_state(rec, psi, 1.0, flips)
    threshold = rng.uniform()
    norm2_prev = 1.0
    jump_times = []

    for step in range(1, n_steps + 1):
        psi = _rk4_advance(m, psi)
        norm2 = np.vdot(psi, psi).real
        if not np.isfinite(norm2):
            raise DivergenceError(f"non-finite state at step {step}")
        if c.gamma > 0.0 and norm2 < threshold:
            weights = ups_f @ (psi.real**2 + psi.imag**2)
            total = weights.sum()
            if total <= 0.0:
                raise JumpChannelError(
                    f"norm crossed threshold at step {step} but all jump "
                    "channels have zero probability")
            pick = np.searchsorted(np.cumsum(weights), rng.uniform() * total)
            site = min(int(pick), n_sites - 1)
            frac = np.clip((norm2_prev - threshold) / (norm2_prev - norm2), 0.0, 1.0)
            jump_times.append((step - 1 + frac) * dt)
            psi = np.where(ups[site], 0.0, psi[flips[site]])
            psi /= np.linalg.norm(psi)
            norm2 = 1.0
            threshold = rng.uniform()
        norm2_prev = norm2
        if step % record_every == 0:
            _record_state(rec, psi, norm2, flips)

    return TrajectoryRecord(seed, times, rec.mx, rec.per_site,
                            np.array(jump_times), rec.states)


def _record_state(rec, psi, norm2, flips):
    psi_n = psi if norm2 == 1.0 else psi / np.sqrt(norm2)
    site_sx = (psi[flips] @ psi.conj()).real / norm2
    rec.add(site_sx, psi_n)


def homodyne_trajectory(psi0: np.ndarray, h, c: Couplings, dt: float,
                        t_max: float, seed: int, *, record_every: int = 1,
                        keep_per_site: bool = False,
                        keep_states: bool = False) -> TrajectoryRecord:
    """Single diffusive trajectory under homodyne monitoring of sigma^x.

    Euler-Maruyama update per step, with s_j = <sigma^x_j> recomputed from
    the current normalized state:

        dpsi = [ -i H dt
                 - (gamma/2) sum_j (sp_j sm_j - s_j sm_j + s_j^2/4) dt
                 + sqrt(gamma) sum_j (sm_j - s_j/2) dW_j ] psi,

    followed by renormalization.  dW_j are independent Gaussian increments
    of mean 0 and variance dt (one normal draw per site per step).
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    dim = psi0.shape[0]
    n_sites = n_sites_of(dim)
    m = _scaled_generator(h, dim, -1j * dt)
    flips = all_flip_indices(n_sites)
    ups = all_bit_values(n_sites)
    half_gdt = 0.5 * c.gamma * dt
    pop_decay = half_gdt * up_counts(n_sites)
    sqrt_dt = np.sqrt(dt)
    sqrt_gamma = np.sqrt(c.gamma)

    n_steps = round(t_max / dt)
    rec_steps, times = _record_grid(n_steps, record_every, dt)
    rec = _Recorder(len(rec_steps), n_sites, dim, keep_per_site, keep_states)

    psi = np.asarray(psi0, dtype=complex).copy()
    psi /= np.linalg.norm(psi)
    noise = np.empty((0, n_sites))
    noise_row = 0

    for step in range(n_steps + 1):
        shifted = psi[flips]                             # (n_sites, dim)
        site_sx = (shifted @ psi.conj()).real            # <sigma^x_j>
        if step % record_every == 0:
            rec.add(site_sx, psi)
        if step == n_steps:
            break
        if noise_row == noise.shape[0]:
            noise = rng.normal(0.0, sqrt_dt, (_NOISE_BLOCK, n_sites))
            noise_row = 0
        dw = noise[noise_row]
        noise_row += 1
        lowered = np.where(ups, 0.0, shifted)            # rows: sm_j psi
        coef = half_gdt * site_sx + sqrt_gamma * dw      # sm_j weights
        scalar = (1.0
                  - 0.25 * half_gdt * np.dot(site_sx, site_sx)
                  - 0.5 * sqrt_gamma * np.dot(dw, site_sx))
        psi = (scalar - pop_decay) * psi + m @ psi + coef @ lowered
        norm2 = np.vdot(psi, psi).real
        if not np.isfinite(norm2):
            raise DivergenceError(f"non-finite state at step {step + 1}")
        if norm2 < 1e-12:
            raise StepSizeError(
                f"norm collapsed to {np.sqrt(norm2):.3e} at step {step + 1}; reduce dt")
        psi /= np.sqrt(norm2)

    return TrajectoryRecord(seed, times, rec.mx, rec.per_site, None, rec.states)


_UNRAVELINGS = ("jump", "homodyne")


def _run_one(args):
    (unraveling, psi0, op, c, dt, t_max, seed, record_every,
     keep_per_site, keep_states) = args
    fn = mcwf_trajectory if unraveling == "jump" else homodyne_trajectory
    return fn(psi0, op, c, dt, t_max, seed, record_every=record_every,
              keep_per_site=keep_per_site, keep_states=keep_states)


def run_ensemble(psi0: np.ndarray, h, c: Couplings, dt: float, t_max: float,
                 n_traj: int, unraveling: str, base_seed: int, *,
                 record_every: int = 1, keep_per_site: bool = False,
                 reconstruct: bool = False, n_workers: int = 1) -> EnsembleResult:
    """Independent trajectories seeded base_seed + k, with mean and stderr.

    Results are identical for any n_workers: trajectory k only ever sees its
    own stream and the reduction runs in index order.  With
    ``reconstruct=True`` the ensemble density matrix
    (1/N_T) sum_k |psi_k(t)><psi_k(t)| is accumulated at every record time.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if unraveling not in _UNRAVELINGS:
        raise ValueError(f"unraveling must be one of {_UNRAVELINGS}")
    dim = psi0.shape[0]
    n_sites = n_sites_of(dim)
    op = build_effective_hamiltonian(h, c, n_sites) if unraveling == "jump" else h
    keep_states = reconstruct

    tasks = [(unraveling, psi0, op, c, dt, t_max, base_seed + k, record_every,
              keep_per_site, keep_states) for k in range(n_traj)]
    records: list = [None] * n_traj
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = pool.map(_run_one, tasks, chunksize=1)
            for k in range(n_traj):
                try:
                    records[k] = next(outcomes)
                except XyzSimError as exc:
                    raise TrajectoryError(k, base_seed + k, str(exc)) from exc
    else:
        for k, task in enumerate(tasks):
            try:
                records[k] = _run_one(task)
            except XyzSimError as exc:
                raise TrajectoryError(k, base_seed + k, str(exc)) from exc

    times = records[0].times
    mx = np.stack([r.mx for r in records])
    mean = mx.mean(axis=0)
    stderr = mx.std(axis=0, ddof=1) / np.sqrt(n_traj) if n_traj > 1 else None

    rho = None
    if reconstruct:
        rho = np.zeros((len(times), dim, dim), dtype=complex)
        for r in records:
            rho += np.einsum("ti,tj->tij", r.states, r.states.conj())
            r.states = None  # free; the reconstruction is what was asked for
        rho /= n_traj

    return EnsembleResult(n_traj, times, mean, stderr, records, rho)
