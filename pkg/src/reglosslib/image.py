"""Deterministic raster primitives shared by every other module.

Images are plain numpy arrays in row-major order: shape (H, W) for a
single channel or (H, W, C) for multi-channel data. All math runs in
float64; masks are float64 arrays of {0, 1} so they can enter FFT
correlations directly. The default physical pixel pitch, where one is
needed, is 1.3 micrometers per pixel.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.ndimage

from .errors import DimensionError, ParameterError

DEFAULT_PIXEL_PITCH_UM = 1.3


def as_float_image(img: np.ndarray) -> np.ndarray:
    """Coerce to a float64 2-D or 3-D raster without copying when possible."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim not in (2, 3):
        raise DimensionError(f"expected a (H, W) or (H, W, C) raster, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"image must be at least 1x1, got shape {a.shape}")
    return a


def zero_pad(img: np.ndarray, target_h: int, target_w: int) -> tuple[np.ndarray, np.ndarray]:
    """Pad with zeros to (target_h, target_w), original pixels at the top-left.

    Returns
    -------
    padded : ndarray
        The padded image.
    mask : ndarray
        Float {0, 1} mask of the original (unpadded) footprint.
    """
    img = as_float_image(img)
    h, w = img.shape[:2]
    if target_h < h or target_w < w:
        raise DimensionError(f"pad target {(target_h, target_w)} smaller than image {(h, w)}")
    shape = (target_h, target_w) + img.shape[2:]
    padded = np.zeros(shape, dtype=np.float64)
    padded[:h, :w] = img
    mask = np.zeros((target_h, target_w), dtype=np.float64)
    mask[:h, :w] = 1.0
    return padded, mask


def hann_window(h: int, w: int) -> np.ndarray:
    """Separable 2-D Hann window, sin^2(pi*k/(N-1)) per axis.

    A length-1 axis degenerates to weight 1.0.
    """
    if h < 1 or w < 1:
        raise DimensionError(f"window must be at least 1x1, got {(h, w)}")

    def taps(n: int) -> np.ndarray:
        if n == 1:
            return np.ones(1)
        k = np.arange(n, dtype=np.float64)
        t = np.sin(np.pi * k / (n - 1)) ** 2
        t[0] = t[-1] = 0.0  # sin(pi) rounds to ~1e-16, the border ring is 0 exactly
        return t

    return np.outer(taps(h), taps(w))


def _rotation_coords(h: int, w: int, angle_deg: float) -> tuple[np.ndarray, np.ndarray]:
    # Inverse map: output (i, j) samples the source at center + R(theta) * offset,
    # chosen so rotate(img, 90) == np.rot90(img) exactly.
    theta = math.radians(angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
    di = np.arange(h, dtype=np.float64)[:, None] - cr
    dj = np.arange(w, dtype=np.float64)[None, :] - cc
    src_r = cr + c * di + s * dj
    src_c = cc - s * di + c * dj
    # Snap coordinates that are integer up to float fuzz so the exact-angle
    # cases (0, +-90, 180) reduce to index permutations with full masks.
    for a in (src_r, src_c):
        rounded = np.round(a)
        snap = np.abs(a - rounded) < 1e-9
        a[snap] = rounded[snap]
    return src_r, src_c


def rotate_bilinear(
    img: np.ndarray, angle_deg: float, fill: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate about the image center with bilinear interpolation.

    Returns the rotated image and a strict validity mask: a pixel is valid
    only if every sampling neighbor lies inside the source, so downstream
    masked registration never sees values interpolated against ``fill``.
    """
    img = as_float_image(img)
    if not math.isfinite(angle_deg):
        raise ParameterError("rotation angle must be finite")
    h, w = img.shape[:2]
    src_r, src_c = _rotation_coords(h, w, angle_deg)

    valid = (src_r >= 0.0) & (src_r <= h - 1) & (src_c >= 0.0) & (src_c <= w - 1)
    r0 = np.clip(np.floor(src_r).astype(np.intp), 0, h - 1)
    c0 = np.clip(np.floor(src_c).astype(np.intp), 0, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = np.clip(src_r - r0, 0.0, 1.0)
    fc = np.clip(src_c - c0, 0.0, 1.0)
    if img.ndim == 3:
        fr = fr[..., None]
        fc = fc[..., None]

    top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
    bot = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
    out = top * (1 - fr) + bot * fr
    vv = valid if img.ndim == 2 else valid[..., None]
    out = np.where(vv, out, float(fill))
    return out, valid.astype(np.float64)


def gaussian_blur(img: np.ndarray, sigma: float, kernel_size: int) -> np.ndarray:
    """Separable Gaussian blur with reflected (symmetric) borders.

    The kernel is exp(-k^2 / (2 sigma^2)) over k = -r..r normalized to sum
    one, r = (kernel_size - 1) // 2. sigma == 0 returns the input unchanged.
    """
    img = as_float_image(img)
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    if kernel_size % 2 != 1 or kernel_size < 1:
        raise ParameterError(f"kernel_size must be odd and positive, got {kernel_size}")
    if sigma == 0 or kernel_size == 1:
        return img.copy()
    r = (kernel_size - 1) // 2
    k = np.arange(-r, r + 1, dtype=np.float64)
    taps = np.exp(-(k ** 2) / (2.0 * sigma ** 2))
    taps /= taps.sum()
    out = scipy.ndimage.convolve1d(img, taps, axis=0, mode="reflect")
    out = scipy.ndimage.convolve1d(out, taps, axis=1, mode="reflect")
    return out


def add_gaussian_noise(
    img: np.ndarray,
    sigma: float,
    seed: int | np.random.Generator,
    clip: tuple[float, float] | None = None,
) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise, deterministic for a given seed.

    No clipping happens unless an explicit ``clip`` range is passed; 8-bit
    acquisition is mimicked by clip=(0, 255).
    """
    img = as_float_image(img)
    if sigma < 0:
        raise ParameterError("sigma must be >= 0")
    if sigma == 0:
        out = img.copy()
    else:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        out = img + rng.normal(0.0, sigma, size=img.shape)
    if clip is not None:
        np.clip(out, clip[0], clip[1], out=out)
    return out


def crop(img: np.ndarray, top: int, left: int, h: int, w: int) -> np.ndarray:
    """Exact sub-raster copy; the window must lie fully inside the image."""
    img = as_float_image(img)
    if h < 1 or w < 1:
        raise DimensionError("crop window must be at least 1x1")
    if top < 0 or left < 0 or top + h > img.shape[0] or left + w > img.shape[1]:
        raise DimensionError(
            f"crop window {(top, left, h, w)} outside image of shape {img.shape[:2]}"
        )
    return img[top : top + h, left : left + w].copy()


def downscale_mean(img: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean downscale by an integer factor.

    Trailing rows/columns that do not fill a complete factor x factor block
    are dropped.
    """
    img = as_float_image(img)
    if factor < 1 or int(factor) != factor:
        raise ParameterError(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    if factor == 1:
        return img.copy()
    h = (img.shape[0] // factor) * factor
    w = (img.shape[1] // factor) * factor
    if h == 0 or w == 0:
        raise DimensionError(f"image {img.shape[:2]} smaller than one {factor}x{factor} block")
    a = img[:h, :w]
    if a.ndim == 2:
        return a.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))
    return a.reshape(h // factor, factor, w // factor, factor, a.shape[2]).mean(axis=(1, 3))
