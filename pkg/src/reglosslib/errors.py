"""Exception taxonomy shared by every module.

The CLI maps these onto exit codes: I/O and format problems exit 1,
no-solution / degenerate inputs exit 2, invalid flags exit 3.
"""


class RegLossError(Exception):
    """Base class for all library errors."""


class DimensionError(RegLossError):
    """Shapes or sizes incompatible with the requested operation."""


class ParameterError(RegLossError):
    """A parameter value outside its documented range."""


class DegenerateInputError(RegLossError):
    """Input is structurally empty (all-zero mask, zero-energy series, ...)."""


class NoSolutionError(RegLossError):
    """The feasible search region is empty."""


class CoverageError(RegLossError):
    """A warped image does not fully cover the requested output window."""


class RasterFormatError(RegLossError):
    """A raster file violates the portable float raster format."""
