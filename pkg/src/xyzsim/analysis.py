"""Decay-rate extraction and magnetization-distribution statistics.

The slowest relaxation rate is read off the exponential tail of the
transverse magnetization: past the transient, mx(t) - mx_ss follows
amplitude * exp(-rate * t), so a least-squares line through
(t, log |mx - steady|) recovers the rate.  The distribution side pools
per-site-averaged trajectory magnetizations collected after the system has
relaxed and summarizes how bimodal they are through the moment ratio
b = (second moment)^2 / (fourth moment): 1 for two narrow symmetric peaks,
1/3 for a zero-centered Gaussian.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .config import ExperimentConfig
from .errors import (
    EmptyWindowError,
    FitWindowError,
    OscillatoryDecayError,
    UndefinedBimodalityError,
)
from .integrate import TimeSeries, product_pure_state, product_state, rk4_evolve
from .liouville import build_liouvillian, full_spectrum
from .operators import build_hamiltonian
from .trajectories import EnsembleResult, run_ensemble

AMPLITUDE_FLOOR = 1e-12


@dataclass
class DecayFit:
    """Log-linear fit of an exponential tail: values ~ amplitude * exp(-rate t)."""

    rate: float
    amplitude: float
    t_start: float
    t_end: float
    residual: float   # rms of log-space residuals
    r_squared: float
    n_points: int


def fit_decay(series: TimeSeries, t_start: float, steady_value: float = 0.0, *,
              t_end: float | None = None, label: str = "mx",
              floor: float = AMPLITUDE_FLOOR) -> DecayFit:
    """Fit the exponential approach to `steady_value` past `t_start`.

    The window runs from t_start to t_end (end of data by default) and is
    truncated at the first point within `floor` of the steady value.  A sign
    change inside the window means the decay oscillates (complex slow
    eigenvalue) and a plain log-linear fit does not apply.
    """
    times = np.asarray(series.times)
    deviation = np.asarray(series.column(label), dtype=float) - steady_value
    mask = times >= t_start
    if t_end is not None:
        mask &= times <= t_end
    times, deviation = times[mask], deviation[mask]

    below = np.flatnonzero(np.abs(deviation) <= floor)
    if below.size:
        times, deviation = times[: below[0]], deviation[: below[0]]
    if len(times) < 10:
        raise FitWindowError(
            f"only {len(times)} usable points past t = {t_start:g}; need at least 10")
    signs = np.sign(deviation)
    if not (signs == signs[0]).all():
        raise OscillatoryDecayError(
            "windowed values change sign; fit the oscillation envelope instead "
            "or move t_start past the transient")

    log_dev = np.log(np.abs(deviation))
    slope, intercept = np.polyfit(times, log_dev, 1)
    predicted = slope * times + intercept
    residuals = log_dev - predicted
    total = np.sum((log_dev - log_dev.mean()) ** 2)
    r_squared = 1.0 - np.sum(residuals**2) / total if total > 0 else 1.0
    return DecayFit(
        rate=float(-slope),
        amplitude=float(signs[0] * np.exp(intercept)),
        t_start=float(times[0]),
        t_end=float(times[-1]),
        residual=float(np.sqrt(np.mean(residuals**2))),
        r_squared=float(r_squared),
        n_points=len(times),
    )


# --- config-driven runs -------------------------------------------------


def run_evolution(config: ExperimentConfig) -> TimeSeries:
    """Deterministic mx(t) for the configured lattice, couplings, and span."""
    geom = config.geometry()
    h = build_hamiltonian(geom, config.couplings())
    rho0 = product_state(geom.n_sites, config.initial_state or "+x")
    return rk4_evolve(rho0, h, config.couplings(), config.dt, config.t_max,
                      record_every=config.resolved_record_every(config.t_max))


def run_trajectory_ensemble(config: ExperimentConfig, *,
                            keep_per_site: bool = False) -> EnsembleResult:
    """Stochastic ensemble (jump or homodyne) for the configured experiment."""
    geom = config.geometry()
    h = build_hamiltonian(geom, config.couplings())
    default_dir = "-z" if config.method == "homodyne" else "+x"
    psi0 = product_pure_state(geom.n_sites, config.initial_state or default_dir)
    span = config.span()
    return run_ensemble(psi0, h, config.couplings(), config.dt, span,
                        config.n_traj, config.method, config.base_seed,
                        record_every=config.resolved_record_every(span),
                        keep_per_site=keep_per_site, n_workers=config.n_workers)


# --- Liouvillian gap sweep ----------------------------------------------


@dataclass
class GapPoint:
    jy: float
    gap: float
    gap_err: float | None  # bootstrap error for stochastic methods
    fit: DecayFit | None   # None when read from the exact spectrum


def _stochastic_gap(result: EnsembleResult, config: ExperimentConfig,
                    n_boot: int, noise_factor: float = 3.0):
    """Fit the ensemble-mean decay, stopping where the signal drowns in the
    standard error; the rate uncertainty comes from bootstrapping over
    trajectories."""
    noise = noise_factor * np.where(result.stderr_mx > 0, result.stderr_mx, np.inf)
    drowned = np.flatnonzero(
        (np.abs(result.mean_mx) <= noise) & (result.times >= config.fit_t_start))
    t_end = config.fit_t_end
    if drowned.size:
        t_noise = float(result.times[drowned[0]])
        t_end = t_noise if t_end is None else min(t_end, t_noise)
    series = TimeSeries(result.times, result.mean_mx[:, None], ("mx",))
    fit = fit_decay(series, config.fit_t_start, t_end=t_end)

    mx = np.stack([r.mx for r in result.records])
    rng = np.random.Generator(np.random.Philox(key=config.base_seed + 986743))
    rates = []
    for _ in range(n_boot):
        resampled = mx[rng.integers(0, len(mx), size=len(mx))].mean(axis=0)
        try:
            rates.append(fit_decay(TimeSeries(result.times, resampled[:, None], ("mx",)),
                                   fit.t_start, t_end=fit.t_end).rate)
        except (FitWindowError, OscillatoryDecayError):
            continue
    err = float(np.std(rates, ddof=1)) if len(rates) > 1 else None
    return fit, err


def gap_sweep(base_config: ExperimentConfig, jy_values, *,
              n_boot: int = 64) -> list[GapPoint]:
    """Slowest decay rate versus the jy coupling, holding everything else fixed.

    Deterministic (rk4) and stochastic (jump/homodyne) configs go through
    the tail fit of mx(t); method "spectrum" reads the gap from exact
    diagonalization instead and is the small-system reference.
    """
    points = []
    for jy in jy_values:
        config = base_config.with_updates(jy=float(jy))
        if config.method == "spectrum":
            geom = config.geometry()
            h = build_hamiltonian(geom, config.couplings())
            liou = build_liouvillian(h, config.couplings(), geom.n_sites)
            spectrum = full_spectrum(liou, gamma=config.gamma)
            points.append(GapPoint(float(jy), spectrum.gap, None, None))
        elif config.method == "rk4":
            series = run_evolution(config)
            fit = fit_decay(series, config.fit_t_start, t_end=config.fit_t_end)
            points.append(GapPoint(float(jy), fit.rate, None, fit))
        else:
            result = run_trajectory_ensemble(config)
            fit, err = _stochastic_gap(result, config, n_boot)
            points.append(GapPoint(float(jy), fit.rate, err, fit))
    return points


# --- magnetization distribution -----------------------------------------


@dataclass
class MagHistogram:
    """Pooled distribution of trajectory magnetizations after t_s."""

    bin_edges: np.ndarray
    probabilities: np.ndarray
    sample_count: int
    t_s: float
    sources: tuple[int, ...]          # contributing trajectory seeds
    samples: np.ndarray | None = None  # raw pooled samples (kept by default)
    autocorr_time: float | None = None  # diagnostic, in units of the record step

    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def integrated_autocorr_time(x: np.ndarray, window_factor: float = 5.0) -> float:
    """Integrated autocorrelation time with the usual self-consistent window."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 8:
        return float("nan")
    x = x - x.mean()
    var = np.dot(x, x) / n
    if var == 0:
        return float("nan")
    padded = np.fft.rfft(x, 2 * n)
    acf = np.fft.irfft(padded * padded.conj())[:n].real / (n * var)
    tau = 1.0
    for lag in range(1, n):
        tau += 2.0 * acf[lag]
        if lag >= window_factor * tau:
            break
    return float(max(tau, 1.0))


def build_histogram(records, t_s: float, n_bins: int, *,
                    keep_samples: bool = True) -> MagHistogram:
    """Pool mx samples for t > t_s across trajectory records and bin on [-1, 1]."""
    if n_bins < 2:
        raise ValueError(f"n_bins must be at least 2, got {n_bins}")
    chunks, taus = [], []
    for record in records:
        selected = record.mx[record.times > t_s]
        if selected.size:
            chunks.append(selected)
            taus.append(integrated_autocorr_time(selected))
    if not chunks:
        raise EmptyWindowError(f"no recorded samples after t_s = {t_s:g}")
    samples = np.concatenate(chunks)
    counts, edges = np.histogram(np.clip(samples, -1.0, 1.0),
                                 bins=n_bins, range=(-1.0, 1.0))
    finite_taus = [t for t in taus if np.isfinite(t)]
    return MagHistogram(
        bin_edges=edges,
        probabilities=counts / samples.size,
        sample_count=int(samples.size),
        t_s=float(t_s),
        sources=tuple(int(r.seed) for r in records),
        samples=samples if keep_samples else None,
        autocorr_time=float(np.mean(finite_taus)) if finite_taus else None,
    )


def bimodality(data) -> float:
    """Moment ratio b = (mean x^2)^2 / mean x^4 of magnetization samples.

    Accepts raw samples or a MagHistogram; the histogram's raw samples are
    used when kept (binned probabilities only as a fallback, which carries
    an O(bin width^2) bias).
    """
    if isinstance(data, MagHistogram):
        if data.samples is not None:
            x = data.samples
        else:
            centers = data.bin_centers()
            m2 = np.sum(data.probabilities * centers**2)
            m4 = np.sum(data.probabilities * centers**4)
            if m4 == 0:
                raise UndefinedBimodalityError("all probability mass at zero")
            return float(m2 * m2 / m4)
    else:
        x = np.asarray(data, dtype=float)
    m2 = np.mean(x**2)
    m4 = np.mean(x**4)
    if m4 == 0:
        raise UndefinedBimodalityError("all samples are exactly zero")
    return float(m2 * m2 / m4)


def detect_modes(hist: MagHistogram, *, min_prominence: float = 0.05) -> np.ndarray:
    """Mode positions of the sign-symmetrized distribution.

    The histogram is symmetrized, p(M) -> (p(M) + p(-M))/2, so that finite
    sampling of a symmetric distribution does not split or shift peaks, then
    local maxima with prominence above `min_prominence` of the tallest bin
    are reported (sorted by position).
    """
    symmetric = 0.5 * (hist.probabilities + hist.probabilities[::-1])
    peaks, _ = find_peaks(symmetric, prominence=min_prominence * symmetric.max())
    return hist.bin_centers()[peaks]


@dataclass
class BimodalityPoint:
    jy: float
    b: float
    sample_count: int
    histogram: MagHistogram


def bimodality_sweep(base_config: ExperimentConfig, jy_values) -> list[BimodalityPoint]:
    """Bimodality coefficient versus jy from homodyne sampling runs.

    Each point runs its configured ensemble, discards t <= t_s, and computes
    b from the raw pooled samples; the histogram is kept for export.
    t_s must be set explicitly for lattices too large for the exact spectrum;
    otherwise it defaults to three relaxation times of the gap at that jy.
    """
    points = []
    for jy in jy_values:
        config = base_config.with_updates(jy=float(jy))
        t_s = config.t_s if config.t_s is not None else _default_t_s(config)
        result = run_trajectory_ensemble(config)
        hist = build_histogram(result.records, t_s, config.n_bins)
        points.append(BimodalityPoint(float(jy), bimodality(hist),
                                      hist.sample_count, hist))
    return points


def _default_t_s(config: ExperimentConfig) -> float:
    geom = config.geometry()
    if (1 << (2 * geom.n_sites)) > 4096:
        raise EmptyWindowError(
            "t_s must be given explicitly: the lattice is too large to read "
            "the relaxation rate from the exact spectrum")
    h = build_hamiltonian(geom, config.couplings())
    liou = build_liouvillian(h, config.couplings(), geom.n_sites)
    return 3.0 / full_spectrum(liou, gamma=config.gamma).gap
