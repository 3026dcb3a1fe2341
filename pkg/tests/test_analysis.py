import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xyzsim.analysis import (
    GapPoint,
    MagHistogram,
    bimodality,
    build_histogram,
    detect_modes,
    fit_decay,
    gap_sweep,
    integrated_autocorr_time,
)
from xyzsim.config import ExperimentConfig
from xyzsim.errors import (
    EmptyWindowError,
    FitWindowError,
    OscillatoryDecayError,
    UndefinedBimodalityError,
)
from xyzsim.integrate import TimeSeries
from xyzsim.trajectories import TrajectoryRecord


def series_of(times, values):
    return TimeSeries(np.asarray(times, dtype=float),
                      np.asarray(values, dtype=float)[:, None], ("mx",))


def record_of(times, mx, seed=0):
    return TrajectoryRecord(seed, np.asarray(times, dtype=float),
                            np.asarray(mx, dtype=float))


class TestFitDecay:
    def test_exact_exponential(self):
        t = np.linspace(5.0, 50.0, 200)
        fit = fit_decay(series_of(t, 0.7 * np.exp(-0.3 * t)), t_start=5.0)
        assert abs(fit.rate - 0.3) < 1e-10 * 0.3
        assert abs(fit.amplitude - 0.7) < 1e-10
        assert fit.residual < 1e-12
        assert fit.r_squared > 1.0 - 1e-12

    def test_negative_amplitude_recovered(self):
        t = np.linspace(2.0, 30.0, 100)
        fit = fit_decay(series_of(t, -0.4 * np.exp(-1.1 * t)), t_start=2.0)
        assert abs(fit.rate - 1.1) < 1e-10
        assert abs(fit.amplitude + 0.4) < 1e-10

    def test_single_spin_coherence_rate(self):
        import scipy.sparse as sp

        from xyzsim.integrate import product_state, rk4_evolve
        from xyzsim.operators import Couplings

        series = rk4_evolve(product_state(1, "+x"),
                            sp.csr_matrix((2, 2), dtype=complex),
                            Couplings(0, 0, 0, 1.0), 1e-3, 20.0, record_every=100)
        fit = fit_decay(series, t_start=5.0)
        assert abs(fit.rate - 0.5) < 1e-4

    def test_oscillatory_window_rejected(self):
        t = np.linspace(0.0, 30.0, 400)
        values = np.exp(-0.2 * t) * np.cos(2.0 * t)
        with pytest.raises(OscillatoryDecayError):
            fit_decay(series_of(t, values), t_start=5.0)

    def test_too_few_points(self):
        t = np.linspace(0.0, 10.0, 30)
        with pytest.raises(FitWindowError):
            fit_decay(series_of(t, np.exp(-t)), t_start=9.0)

    def test_floor_truncation(self):
        t = np.linspace(0.0, 40.0, 400)
        values = np.exp(-2.0 * t)  # hits 1e-12 around t = 13.8
        fit = fit_decay(series_of(t, values), t_start=1.0)
        assert fit.t_end < 14.5
        assert abs(fit.rate - 2.0) < 1e-6

    def test_explicit_end(self):
        t = np.linspace(0.0, 30.0, 300)
        fit = fit_decay(series_of(t, np.exp(-0.5 * t)), t_start=2.0, t_end=10.0)
        assert fit.t_end <= 10.0


class TestBimodality:
    def test_two_delta_peaks(self):
        samples = np.array([0.6, -0.6] * 500)
        assert bimodality(samples) == pytest.approx(1.0, abs=1e-12)

    def test_gaussian_third(self):
        rng = np.random.default_rng(31)
        samples = rng.normal(0.0, 0.2, size=200_000)
        assert bimodality(samples) == pytest.approx(1.0 / 3.0, abs=0.005)

    def test_uniform_five_ninths(self):
        rng = np.random.default_rng(32)
        samples = rng.uniform(-1.0, 1.0, size=200_000)
        assert bimodality(samples) == pytest.approx(5.0 / 9.0, abs=0.005)

    def test_all_zero_undefined(self):
        with pytest.raises(UndefinedBimodalityError):
            bimodality(np.zeros(100))

    @given(st.lists(st.floats(-1.0, 1.0).filter(lambda v: v == 0.0 or abs(v) > 1e-6),
                    min_size=5, max_size=60))
    @settings(max_examples=60, deadline=None)
    def test_sign_flip_and_permutation_invariance(self, values):
        samples = np.asarray(values)
        if np.all(samples == 0.0):
            return
        b = bimodality(samples)
        assert bimodality(-samples) == pytest.approx(b, rel=1e-12)
        rng = np.random.default_rng(33)
        assert bimodality(rng.permutation(samples)) == pytest.approx(b, rel=1e-12)
        assert 0.0 < b <= 1.0 + 1e-12

    def test_monotone_in_peak_separation(self):
        rng = np.random.default_rng(34)
        noise = rng.normal(0.0, 1.0, size=100_000)
        signs = rng.choice([-1.0, 1.0], size=noise.size)
        values = [bimodality(signs * ratio + noise)
                  for ratio in (0.0, 0.5, 1.0, 2.0, 4.0)]
        assert np.all(np.diff(values) > 0)

    def test_binned_approximation_close(self):
        rng = np.random.default_rng(35)
        samples = np.clip(rng.normal(0.45, 0.1, 40_000)
                          * rng.choice([-1, 1], 40_000), -1, 1)
        records = [record_of(np.arange(samples.size), samples)]
        hist = build_histogram(records, t_s=-1.0, n_bins=80)
        direct = bimodality(hist)
        hist.samples = None
        binned = bimodality(hist)
        width = hist.bin_edges[1] - hist.bin_edges[0]
        assert abs(binned - direct) < 10.0 * width**2


class TestHistogram:
    def test_constant_zero_records(self):
        records = [record_of([0, 1, 2, 3], [0, 0, 0, 0])]
        hist = build_histogram(records, t_s=0.5, n_bins=41)
        occupied = np.flatnonzero(hist.probabilities)
        assert occupied.size == 1
        assert abs(hist.bin_centers()[occupied[0]]) < 0.05
        assert hist.sample_count == 3  # strictly t > t_s

    def test_symmetric_peaks(self):
        records = [record_of(np.arange(1000), np.full(1000, 0.5)),
                   record_of(np.arange(1000), np.full(1000, -0.5), seed=1)]
        hist = build_histogram(records, t_s=-1.0, n_bins=40)
        assert np.isclose(hist.probabilities.sum(), 1.0, atol=1e-12)
        peaks = np.flatnonzero(hist.probabilities > 0)
        assert peaks.size == 2
        assert np.isclose(hist.probabilities[peaks[0]],
                          hist.probabilities[peaks[1]])

    def test_empty_window(self):
        with pytest.raises(EmptyWindowError):
            build_histogram([record_of([0, 1], [0.1, 0.2])], t_s=5.0, n_bins=10)

    def test_sources_and_normalization(self):
        rng = np.random.default_rng(36)
        records = [record_of(np.arange(50), rng.uniform(-1, 1, 50), seed=s)
                   for s in (3, 4)]
        hist = build_histogram(records, t_s=10.0, n_bins=13)
        assert hist.sources == (3, 4)
        assert np.isclose(hist.probabilities.sum(), 1.0, atol=1e-12)
        assert hist.sample_count == 2 * 39


class TestDetectModes:
    def test_bimodal(self):
        rng = np.random.default_rng(37)
        samples = rng.normal(0.5, 0.08, 50_000) * rng.choice([-1, 1], 50_000)
        hist = build_histogram([record_of(np.arange(samples.size), samples)],
                               t_s=-1.0, n_bins=41)
        modes = detect_modes(hist)
        assert len(modes) == 2
        assert np.isclose(abs(modes[0]), 0.5, atol=0.1)
        assert np.isclose(modes[0], -modes[1], atol=1e-12)

    def test_monomodal(self):
        rng = np.random.default_rng(38)
        samples = rng.normal(0.0, 0.15, 50_000)
        hist = build_histogram([record_of(np.arange(samples.size), samples)],
                               t_s=-1.0, n_bins=41)
        modes = detect_modes(hist)
        assert len(modes) == 1
        assert abs(modes[0]) < 0.1


class TestAutocorrTime:
    def test_iid_near_one(self):
        rng = np.random.default_rng(39)
        tau = integrated_autocorr_time(rng.normal(size=20_000))
        assert 0.8 < tau < 1.3

    def test_ar1_matches_theory(self):
        rng = np.random.default_rng(40)
        phi = 0.9
        x = np.empty(200_000)
        x[0] = 0.0
        noise = rng.normal(size=x.size)
        for i in range(1, x.size):
            x[i] = phi * x[i - 1] + noise[i]
        expected = (1 + phi) / (1 - phi)  # = 19
        tau = integrated_autocorr_time(x)
        assert 0.7 * expected < tau < 1.3 * expected


class TestGapSweep:
    def test_rk4_sweep_matches_spectrum(self):
        base = ExperimentConfig(lx=2, ly=2, jx=0.9, jz=1.0, method="rk4",
                                dt=1e-3, t_max=25.0, record_every=20)
        fits = gap_sweep(base, [1.1])
        exact = gap_sweep(base.with_updates(method="spectrum"), [1.1])
        assert abs(fits[0].gap - exact[0].gap) / exact[0].gap < 0.02
        assert exact[0].fit is None
        assert fits[0].fit is not None

    def test_spectrum_reference_value_pinned(self):
        # regression oracle: dense diagonalization of the 2x2 lattice at
        # jx=0.9, jy=1.1, jz=1.0 (frozen at first computation)
        base = ExperimentConfig(lx=2, ly=2, jx=0.9, jz=1.0, method="spectrum")
        points = gap_sweep(base, [1.1])
        assert points[0].gap == pytest.approx(0.24010999600511, abs=1e-9)

    def test_single_spin_constant_rate(self):
        base = ExperimentConfig(lx=1, ly=1, jx=0.0, jz=0.0, method="spectrum")
        points = gap_sweep(base, [0.5, 1.0, 2.0])
        assert all(p.gap == pytest.approx(0.5, abs=1e-10) for p in points)
