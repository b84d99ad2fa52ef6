"""Real-to-complex FFT helpers for the correlation kernels.

numpy/scipy do not expose reusable FFT plans, so the plan-reuse idea is
realized differently: callers that evaluate many same-shape correlations
(the rotation sweep) precompute the static side's spectra once through
:class:`FixedSpectra` and reuse them, while pocketfft's internal twiddle
caches handle the rest. All functions here are pure and thread-safe.
"""

from __future__ import annotations

import numpy as np
import scipy.fft


def fast_shape(h: int, w: int) -> tuple[int, int]:
    """Smallest FFT-friendly shape >= (h, w) for real transforms."""
    return scipy.fft.next_fast_len(h, real=True), scipy.fft.next_fast_len(w, real=True)


def rfft2(a: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return scipy.fft.rfft2(a, s=shape)


def irfft2(spec: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return scipy.fft.irfft2(spec, s=shape)


def extract_linear(raw: np.ndarray, h_f: int, w_f: int, h_g: int, w_g: int) -> np.ndarray:
    """Pick the meaningful linear-correlation entries out of a circular raster.

    ``raw`` holds a circular correlation computed on a grid at least
    (h_f + h_g - 1, w_f + w_g - 1) large, indexed by shift modulo the grid.
    Returns the (h_f + h_g - 1, w_f + w_g - 1) raster whose row index
    ``i`` corresponds to the signed shift ``i - (h_g - 1)``.
    """
    rows = np.concatenate([raw[-(h_g - 1):, :], raw[: h_f, :]], axis=0) if h_g > 1 else raw[: h_f, :]
    out = np.concatenate([rows[:, -(w_g - 1):], rows[:, : w_f]], axis=1) if w_g > 1 else rows[:, : w_f]
    return np.ascontiguousarray(out)


class FixedSpectra:
    """Precomputed spectra of the non-rotating side of a masked score map.

    Holds F{f0}, F{f0^2} and F{M_f} on the padded grid so a rotation sweep
    pays the fixed-side transforms only once.
    """

    def __init__(self, f0: np.ndarray, mask: np.ndarray, pad: tuple[int, int]):
        self.pad = pad
        self.shape = f0.shape
        self.mask_sum = float(mask.sum())
        self.F_f = rfft2(f0, pad)
        self.F_f2 = rfft2(f0 * f0, pad)
        self.F_m = rfft2(mask, pad)
