"""Exception types shared across the toolkit."""


class SpecbankError(Exception):
    """Base class for all toolkit errors."""


class CutoffSingularityError(SpecbankError):
    """A frequency fell inside the guard band around a guide's cutoff."""

    def __init__(self, frequency_hz: float, cutoff_hz: float, guard: float):
        self.frequency_hz = frequency_hz
        self.cutoff_hz = cutoff_hz
        self.guard = guard
        super().__init__(
            f"frequency {frequency_hz:.6g} Hz is within {guard:.3g} relative of "
            f"the TE10 cutoff {cutoff_hz:.6g} Hz; attenuation diverges there"
        )


class GridMismatchError(SpecbankError):
    """Two networks were combined on different frequency grids."""


class SingularConnectionError(SpecbankError):
    """A port connection became resonant (|1 - Spp*Sqq| below tolerance)."""

    def __init__(self, frequency_hz: float, magnitude: float, tol: float):
        self.frequency_hz = frequency_hz
        super().__init__(
            f"singular connection at {frequency_hz:.6g} Hz: "
            f"|1 - Spp*Sqq| = {magnitude:.3g} < {tol:.3g}"
        )


class SingularSystemError(SpecbankError):
    """The brute-force network system was singular at some frequency."""

    def __init__(self, frequency_hz: float):
        self.frequency_hz = frequency_hz
        super().__init__(f"singular network system at {frequency_hz:.6g} Hz")


class TouchstoneError(SpecbankError):
    """Malformed Touchstone file or inconsistent port count."""


class SynthesisError(SpecbankError):
    """Channel synthesis failed to converge; carries the last iterate."""

    def __init__(self, message: str, last_design=None):
        self.last_design = last_design
        super().__init__(message)


class UnachievableBandwidthError(SynthesisError):
    """The requested half-power bandwidth cannot be realized."""


class BandEdgeError(SpecbankError):
    """A passband metric needed a half-power crossing outside the grid."""


class TimestreamError(SpecbankError):
    """Malformed timestream input; row is 1-based including the header."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(message if row is None else f"{message} (row {row})")


class PipelineError(SpecbankError):
    """Input data cannot be processed (too short, mismatched channels)."""


class ConfigError(SpecbankError):
    """Invalid configuration file content."""
