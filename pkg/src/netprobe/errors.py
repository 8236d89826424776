"""Exception and warning types shared across the package."""


class NetprobeError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(NetprobeError):
    """Malformed input: bad recipe parameters, broken file schema, bad indices."""


class NotPositiveDefinite(NetprobeError):
    """A quadratic-form matrix has a non-positive eigenvalue (unstable system)."""

    def __init__(self, min_eigenvalue: float, message: str | None = None):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            message or f"matrix is not positive definite (most negative eigenvalue {min_eigenvalue:.6g})"
        )


class DisconnectedNetwork(NetprobeError):
    """Sampled graph is disconnected and connectivity was required."""


class DegenerateContrast(NetprobeError):
    """Probe starts at the thermal fixed point: no decay signal to invert."""


class SignFlip(NetprobeError):
    """Occupation contrast changed sign between 0 and t: inversion invalid."""


class GridTooCoarse(NetprobeError):
    """Adjacent detected peaks are closer than the scan grid can resolve."""


class DegenerateSpacing(NetprobeError):
    """Two estimated eigenfrequencies coincide: mode weight is ill-defined."""


class RankDeficient(NetprobeError):
    """Matrix has a (near-)zero singular value: no unique orthogonal factor."""


class IncompleteSpectrum(NetprobeError):
    """Fewer eigenfrequencies detected than the known network size."""


class RegimeWarning(UserWarning):
    """Requested interaction time is outside the regime the formula assumes."""
