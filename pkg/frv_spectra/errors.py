"""
Exception hierarchy for frv_spectra.

Everything raised on purpose by the package derives from SpectraError. The
command-line front end maps InputError to exit code 2 and NumericalError to
exit code 1.
"""

from typing import Sequence


class SpectraError(RuntimeError):
    """Base class for all errors raised by frv_spectra."""


class InputError(SpectraError, ValueError):
    """The caller supplied data or parameters that violate a precondition."""


class NumericalError(SpectraError):
    """A numeric procedure failed to produce a trustworthy answer."""


class PanelParseError(InputError):
    """
    A panel file could not be parsed.

    Attributes:
        row (int | None): 1-based line number in the file, if known.
        column (str | None): Column header of the offending cell, if known.
    """

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} at {', '.join(location)}"
        super().__init__(message)
        self.row = row
        self.column = column


class RaggedPanelError(InputError):
    """Series in a panel do not share a common length."""


class ConstantSeriesError(InputError):
    """A series with zero sample variance cannot be standardized."""

    def __init__(self, label: str):
        super().__init__(f"Series {label!r} is constant and cannot be standardized")
        self.label = label


class TransformError(InputError):
    """A series transform cannot be applied (too short, non-positive under a log)."""


class StationarityError(InputError):
    """ARMA parameters violate weak stationarity."""


class LagError(InputError):
    """A lag does not leave a usable overlapping window."""


class DimensionError(InputError):
    """Matrix or panel dimensions are incompatible."""


class DensityNormalizationError(InputError):
    """A spectral density does not carry unit total mass."""


class ParameterError(InputError):
    """A benchmark or generator parameter is out of its allowed range."""


class BranchSelectionError(NumericalError):
    """
    No admissible Green's-function branch was found among polynomial roots.

    Attributes:
        z (complex): The point at which the selection failed.
        candidates (tuple[complex, ...]): The rejected candidates.
    """

    def __init__(self, z: complex, candidates: Sequence[complex], detail: str = ""):
        shown = ", ".join(f"{c:.6g}" for c in candidates)
        message = f"No physical root at z={z:.6g} among [{shown}]"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.z = z
        self.candidates = tuple(candidates)


class ConvergenceError(NumericalError):
    """
    An iterative procedure did not converge.

    Attributes:
        iterations (int): Iterations (or quadrature nodes) used.
        residual (float): Last residual or disagreement observed.
    """

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3g})")
        self.iterations = iterations
        self.residual = residual


class RankError(NumericalError):
    """Whitening retained no eigen-direction."""


class FitError(NumericalError):
    """Every start of a spectral fit failed."""
