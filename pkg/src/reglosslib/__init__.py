"""Fourier-domain online registration, misalignment-tolerant losses,
a polarized-light-imaging signal model, and the matching evaluation and
benchmark tooling.

Submodules
----------
image         raster primitives (padding, windowing, rotation, blur, noise)
registration  score maps, peak extraction, rigid registration, warping
losses        reconstruction / Gram-style / equivariance loss kernels
pli           sinusoid signal model, parameter fitting, augmentations, FOM
metrics       RMSE, SSIM, MI, instance F1, GLI images and profiles
bench         registration-robustness sweep harness
raster        portable float raster and 8-bit image I/O
"""

from . import bench, image, losses, metrics, pli, raster, registration
from .errors import (
    CoverageError,
    DegenerateInputError,
    DimensionError,
    NoSolutionError,
    ParameterError,
    RasterFormatError,
    RegLossError,
)
from .registration import AngleGrid, RigidTransform, ScoreMap

__version__ = "0.1.0"

__all__ = [
    "AngleGrid",
    "CoverageError",
    "DegenerateInputError",
    "DimensionError",
    "NoSolutionError",
    "ParameterError",
    "RasterFormatError",
    "RegLossError",
    "RigidTransform",
    "ScoreMap",
    "bench",
    "image",
    "losses",
    "metrics",
    "pli",
    "raster",
    "registration",
]
