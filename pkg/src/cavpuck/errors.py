"""Exception types shared across the package.

Every error raised on a bad model, bad data, or failed numerical step is a
subclass of CavpuckError so callers (and the CLI) can separate "your input is
wrong" from "the model could not deliver".
"""


class CavpuckError(Exception):
    pass


class OutOfRangeError(CavpuckError):
    """Temperature (or other abscissa) outside a model's validity range."""


class DegenerateFitError(CavpuckError):
    """Least-squares system is rank deficient (e.g. all temperatures equal)."""


class NotResonantError(CavpuckError):
    """Closed-form on-resonance expressions used away from resonance."""


class UnphysicalModeError(CavpuckError):
    """Eigen-solver produced a growing (negative decay) mode."""


class GridTooCoarseError(CavpuckError):
    """Frequency grid resolves a linewidth with fewer than 8 points."""


class PeaksNotResolvedError(CavpuckError):
    """Spectrum does not show the expected two-peaks-and-notch structure.

    ``single_peak_hz`` carries the strongest (or only) peak found, when any.
    """

    def __init__(self, message: str, single_peak_hz: float | None = None):
        super().__init__(message)
        self.single_peak_hz = single_peak_hz


class BandEdgeClippedError(CavpuckError):
    """A -3 dB crossing fell outside the measured/synthesized band."""


class NoConvergenceError(CavpuckError):
    """Iterative fit ran out of iterations.

    ``last_params`` and ``last_residual`` hold the final iterate so callers can
    inspect how close it got.
    """

    def __init__(self, message: str, last_params=None, last_residual: float | None = None):
        super().__init__(message)
        self.last_params = last_params
        self.last_residual = last_residual


class ScenarioError(CavpuckError):
    """Scenario file is malformed, inconsistent, or missing required entries."""
