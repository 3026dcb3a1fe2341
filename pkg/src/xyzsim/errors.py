"""Exception types raised across the package."""


class XyzSimError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(XyzSimError):
    """Invalid lattice geometry request."""


class SizeLimitError(XyzSimError):
    """System size exceeds the configured maximum for the operation."""


class DimensionMismatchError(XyzSimError):
    """Operator and state dimensions are inconsistent."""


class NoSteadyStateError(XyzSimError):
    """No Liouvillian eigenvalue within tolerance of zero; numerical failure."""


class DegenerateSteadyStateWarning(UserWarning):
    """Several Liouvillian eigenvalues within tolerance of zero."""


class GapCandidateWarning(UserWarning):
    """Slowest nonzero eigenvalue is close to the zero threshold."""


class ConvergenceError(XyzSimError):
    """Iterative solve finished without reaching the required residual."""


class StepSizeError(XyzSimError):
    """Integration step too large for the requested accuracy."""


class DivergenceError(XyzSimError):
    """Integration produced non-finite values."""


class JumpChannelError(XyzSimError):
    """Jump triggered but every decay channel has zero probability."""


class TrajectoryError(XyzSimError):
    """A trajectory inside an ensemble failed; carries the trajectory index."""

    def __init__(self, index: int, seed: int, message: str):
        self.index = index
        self.seed = seed
        super().__init__(f"trajectory {index} (seed {seed}): {message}")


class FitWindowError(XyzSimError):
    """Fit window has too few points or values below the numerical floor."""


class OscillatoryDecayError(XyzSimError):
    """Windowed values change sign; a plain log-linear fit does not apply."""


class EmptyWindowError(XyzSimError):
    """No samples remain after the discard time."""


class UndefinedBimodalityError(XyzSimError):
    """All samples are exactly zero; the moment ratio is 0/0."""


class ConfigError(XyzSimError):
    """Experiment configuration is malformed or inconsistent."""
