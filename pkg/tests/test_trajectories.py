import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
import scipy.stats

from xyzsim.errors import JumpChannelError, StepSizeError, TrajectoryError
from xyzsim.integrate import product_pure_state, product_state, rk4_evolve
from xyzsim.lattice import build_chain
from xyzsim.operators import Couplings, build_effective_hamiltonian, build_hamiltonian
from xyzsim.trajectories import (
    homodyne_trajectory,
    mcwf_trajectory,
    run_ensemble,
)

NO_FIELD = sp.csr_matrix((2, 2), dtype=complex)
DAMPING = Couplings(0, 0, 0, 1.0)


def effective(h, c, n_sites):
    return build_effective_hamiltonian(h, c, n_sites)


class TestJumpUnraveling:
    def test_gamma_zero_matches_schroedinger(self):
        c = Couplings(1.8, 2.2, 2.0, 0.0)
        h = build_hamiltonian(build_chain(3), c)
        psi0 = product_pure_state(3, "+x")
        record = mcwf_trajectory(psi0, h, c, 1e-3, 2.0, seed=5, record_every=200)
        assert record.jump_times.size == 0
        dense = h.toarray()
        for t, mx in zip(record.times, record.mx):
            psi_t = scipy.linalg.expm(-1j * dense * t) @ psi0
            expected = np.mean([np.vdot(psi_t, sx).real for sx in _sx_apply(psi_t)])
            assert abs(mx - expected) < 1e-7

    def test_single_spin_jump_statistics(self):
        # amplitude damping from |up>: exactly one jump, exponential times
        h_eff = effective(NO_FIELD, DAMPING, 1)
        psi0 = product_pure_state(1, "+z")
        jump_times = []
        for k in range(1500):
            record = mcwf_trajectory(psi0, h_eff, DAMPING, 2e-2, 8.0,
                                     seed=3000 + k, record_every=400)
            assert record.jump_times.size <= 1
            if record.jump_times.size:
                jump_times.append(record.jump_times[0])
        # all but a fraction exp(-8) jump within the window
        assert len(jump_times) > 1480
        result = scipy.stats.kstest(jump_times, "expon", args=(0, 1.0))
        assert result.pvalue > 0.01

    @pytest.mark.slow
    def test_single_spin_jump_statistics_full_scale(self):
        h_eff = effective(NO_FIELD, DAMPING, 1)
        psi0 = product_pure_state(1, "+z")
        jump_times = []
        for k in range(10_000):
            record = mcwf_trajectory(psi0, h_eff, DAMPING, 1e-2, 10.0,
                                     seed=40_000 + k, record_every=1000)
            if record.jump_times.size:
                jump_times.append(record.jump_times[0])
        result = scipy.stats.kstest(jump_times, "expon", args=(0, 1.0))
        assert result.pvalue > 0.01

    def test_deterministic_given_seed(self):
        c = Couplings(1.8, 2.2, 2.0, 1.0)
        h_eff = effective(build_hamiltonian(build_chain(3), c), c, 3)
        psi0 = product_pure_state(3, "+x")
        a = mcwf_trajectory(psi0, h_eff, c, 1e-3, 3.0, seed=99, record_every=100)
        b = mcwf_trajectory(psi0, h_eff, c, 1e-3, 3.0, seed=99, record_every=100)
        assert np.array_equal(a.mx, b.mx)
        assert np.array_equal(a.jump_times, b.jump_times)

    def test_recorded_states_normalized(self):
        c = Couplings(1.8, 2.2, 2.0, 1.0)
        h_eff = effective(build_hamiltonian(build_chain(3), c), c, 3)
        record = mcwf_trajectory(product_pure_state(3, "+x"), h_eff, c, 1e-3, 2.0,
                                 seed=12, record_every=50, keep_states=True)
        norms = np.linalg.norm(record.states, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-12
        assert np.max(np.abs(record.mx)) <= 1.0 + 1e-12

    def test_dark_state_jump_inconsistency_raises(self):
        # uniform non-Hermitian decay with no matching channel: the norm
        # crosses the threshold while every jump weight is zero
        leaky = sp.diags(np.full(2, -0.25j), format="csr")
        psi0 = product_pure_state(1, "-z")
        with pytest.raises(JumpChannelError):
            mcwf_trajectory(psi0, leaky, DAMPING, 1e-2, 20.0, seed=3)


def _sx_apply(psi):
    from xyzsim.bits import all_flip_indices, n_sites_of

    flips = all_flip_indices(n_sites_of(psi.shape[0]))
    return psi[flips]


class TestHomodyneUnraveling:
    def test_gamma_zero_is_seed_independent(self):
        c = Couplings(1.8, 2.2, 2.0, 0.0)
        h = build_hamiltonian(build_chain(2), c)
        psi0 = product_pure_state(2, "+x")
        a = homodyne_trajectory(psi0, h, c, 1e-3, 1.0, seed=1, record_every=100)
        b = homodyne_trajectory(psi0, h, c, 1e-3, 1.0, seed=2, record_every=100)
        assert np.array_equal(a.mx, b.mx)

    def test_single_spin_mean_matches_closed_form(self):
        # reduced-scale statistical check; the acceptance suite covers the
        # interacting version at full scale
        psi0 = product_pure_state(1, "+z")
        szs = []
        for k in range(800):
            record = homodyne_trajectory(psi0, NO_FIELD, DAMPING, 5e-3, 2.0,
                                         seed=7000 + k, record_every=80,
                                         keep_states=True)
            szs.append(np.abs(record.states[:, 1])**2
                       - np.abs(record.states[:, 0])**2)
        szs = np.array(szs)
        mean = szs.mean(axis=0)
        stderr = szs.std(axis=0, ddof=1) / np.sqrt(len(szs))
        expected = 2.0 * np.exp(-record.times) - 1.0
        z = np.abs(mean - expected) / np.where(stderr > 0, stderr, np.inf)
        assert z.max() < 4.0

    def test_norm_renormalized_every_step(self):
        c = Couplings(0.9, 1.1, 1.0, 1.0)
        h = build_hamiltonian(build_chain(2), c)
        record = homodyne_trajectory(product_pure_state(2, "-z"), h, c, 1e-3, 1.0,
                                     seed=8, record_every=10, keep_states=True)
        norms = np.linalg.norm(record.states, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-12

    def test_deterministic_given_seed(self):
        c = Couplings(0.9, 1.1, 1.0, 1.0)
        h = build_hamiltonian(build_chain(2), c)
        psi0 = product_pure_state(2, "-z")
        a = homodyne_trajectory(psi0, h, c, 1e-3, 1.0, seed=77, record_every=50)
        b = homodyne_trajectory(psi0, h, c, 1e-3, 1.0, seed=77, record_every=50)
        assert np.array_equal(a.mx, b.mx)

    def test_mx_bounded(self):
        c = Couplings(0.9, 1.25, 1.0, 1.0)
        h = build_hamiltonian(build_chain(3), c)
        record = homodyne_trajectory(product_pure_state(3, "-z"), h, c, 1e-3, 5.0,
                                     seed=21, record_every=10)
        assert np.max(np.abs(record.mx)) <= 1.0 + 1e-12


class TestEnsemble:
    def test_single_trajectory_has_no_stderr(self):
        c = Couplings(0.9, 1.1, 1.0, 1.0)
        h = build_hamiltonian(build_chain(2), c)
        result = run_ensemble(product_pure_state(2, "+x"), h, c, 1e-2, 1.0, 1,
                              "jump", base_seed=5, record_every=10)
        assert result.stderr_mx is None
        assert np.array_equal(result.mean_mx, result.records[0].mx)

    def test_identical_seeds_zero_variance(self):
        c = Couplings(0.9, 1.1, 1.0, 1.0)
        h_eff = effective(build_hamiltonian(build_chain(2), c), c, 2)
        psi0 = product_pure_state(2, "+x")
        records = [mcwf_trajectory(psi0, h_eff, c, 1e-2, 1.0, seed=9,
                                   record_every=10) for _ in range(3)]
        for record in records[1:]:
            assert np.array_equal(record.mx, records[0].mx)

    def test_workers_match_sequential(self):
        c = Couplings(1.8, 2.2, 2.0, 1.0)
        h = build_hamiltonian(build_chain(2), c)
        psi0 = product_pure_state(2, "+x")
        kwargs = dict(record_every=20)
        seq = run_ensemble(psi0, h, c, 1e-2, 1.0, 6, "homodyne", 31, **kwargs)
        par = run_ensemble(psi0, h, c, 1e-2, 1.0, 6, "homodyne", 31,
                           n_workers=2, **kwargs)
        assert np.array_equal(seq.mean_mx, par.mean_mx)
        for a, b in zip(seq.records, par.records):
            assert np.array_equal(a.mx, b.mx)

    def test_reconstruction_matches_master_equation(self):
        # reduced-scale version of the 5/sqrt(N_T) entrywise contract
        n_traj = 600
        c = Couplings(0.9, 1.1, 1.0, 1.0)
        h = build_hamiltonian(build_chain(2), c)
        result = run_ensemble(product_pure_state(2, "+x"), h, c, 2e-3, 2.0,
                              n_traj, "jump", base_seed=17, record_every=200,
                              reconstruct=True)
        from xyzsim.integrate import _MasterEquation

        eq = _MasterEquation(h, c, 2)
        rho = product_state(2, "+x")
        tolerance = 5.0 / np.sqrt(n_traj)
        step = 0
        for idx, t in enumerate(result.times):
            while step * 2e-3 < t - 1e-12:
                rho = eq.rk4_step(rho, 2e-3)
                step += 1
            assert np.max(np.abs(result.rho[idx] - rho)) < tolerance
            assert abs(np.trace(result.rho[idx]) - 1.0) < 1e-10

    @pytest.mark.slow
    def test_reconstruction_full_scale(self):
        n_traj = 5000
        c = Couplings(0.9, 1.1, 1.0, 1.0)
        h = build_hamiltonian(build_chain(2), c)
        result = run_ensemble(product_pure_state(2, "+x"), h, c, 1e-3, 4.0,
                              n_traj, "jump", base_seed=29, record_every=500,
                              reconstruct=True, n_workers=2)
        series = rk4_evolve(product_state(2, "+x"), h, c, 1e-3, 4.0,
                            record_every=500)
        from xyzsim.integrate import _MasterEquation

        eq = _MasterEquation(h, c, 2)
        rho = product_state(2, "+x")
        tolerance = 5.0 / np.sqrt(n_traj)
        for idx in range(1, len(result.times)):
            for _ in range(500):
                rho = eq.rk4_step(rho, 1e-3)
            assert np.max(np.abs(result.rho[idx] - rho)) < tolerance
        assert series.times.shape == result.times.shape

    def test_trajectory_error_carries_index(self):
        # a uniform leak decays the norm while |down> offers no jump channel
        leaky = sp.diags(np.full(2, -0.25j), format="csr")
        psi0 = product_pure_state(1, "-z")
        with pytest.raises(TrajectoryError) as info:
            run_ensemble(psi0, leaky, DAMPING, 1e-2, 40.0, 3, "jump",
                         base_seed=11)
        assert info.value.index == 0

    def test_bad_arguments(self):
        c = Couplings(0.9, 1.1, 1.0, 1.0)
        h = build_hamiltonian(build_chain(2), c)
        psi0 = product_pure_state(2, "+x")
        with pytest.raises(ValueError):
            run_ensemble(psi0, h, c, 1e-2, 1.0, 0, "jump", 1)
        with pytest.raises(ValueError):
            run_ensemble(psi0, h, c, 1e-2, 1.0, 2, "heterodyne", 1)
