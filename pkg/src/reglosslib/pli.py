"""Polarized-light-imaging signal model.

Per-pixel parameters: transmittance (nonnegative mean intensity),
retardation (sin delta in [0, 1]) and in-plane direction (phi in
[0, pi), undefined where the retardation vanishes). Measured intensity
under a rotating polarizer at angle rho follows

    I(rho) = transmittance / 2 * (1 + sin(2 rho - 2 phi) * sin delta).

All operations are vectorized: scalars, per-pixel maps and whole stacks
go through the same code paths.

Orientation convention: image rows grow downward, rotations by positive
angles follow the same sense as ``image.rotate_bilinear`` (90 degrees
maps a horizontal structure onto a vertical one), and direction values
transform as phi' = (phi + angle) mod pi under rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, DimensionError, ParameterError
from .image import rotate_bilinear

DIRECTION_EPS = 1e-6  # below this retardation, phi carries no information


def default_angles(n: int = 9) -> np.ndarray:
    """n equidistant polarizer angles covering 180 degrees, in radians."""
    if n < 3:
        raise ParameterError("at least 3 angles are required")
    return np.arange(n) * (np.pi / n)


@dataclass
class PliParams:
    """Parameter maps (or scalars): transmittance, retardation, direction.

    ``direction_valid`` flags entries whose direction is meaningful; it is
    False wherever the retardation falls below 1e-6.
    """

    transmittance: np.ndarray
    retardation: np.ndarray
    direction: np.ndarray
    direction_valid: np.ndarray = field(default=None)

    def __post_init__(self):
        self.transmittance, self.retardation, self.direction = (
            np.asarray(a, dtype=np.float64)
            for a in np.broadcast_arrays(
                self.transmittance, self.retardation, self.direction
            )
        )
        if self.direction_valid is None:
            self.direction_valid = self.retardation >= DIRECTION_EPS
        else:
            self.direction_valid = np.asarray(self.direction_valid, dtype=bool)
        if np.any(self.transmittance < 0):
            raise ParameterError("transmittance must be nonnegative")
        if np.any((self.retardation < 0) | (self.retardation > 1)):
            raise ParameterError("retardation must lie in [0, 1]")

    def stack(self) -> np.ndarray:
        """(H, W, 3) raster with channels (transmittance, retardation, direction)."""
        return np.stack(
            [self.transmittance, self.retardation, np.where(self.direction_valid, self.direction, 0.0)],
            axis=-1,
        )

    @classmethod
    def from_stack(cls, a: np.ndarray) -> "PliParams":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 3 or a.shape[2] != 3:
            raise DimensionError(f"expected an (H, W, 3) parameter raster, got {a.shape}")
        return cls(a[..., 0], a[..., 1], np.mod(a[..., 2], np.pi))


def synthesize_series(params: PliParams, angles: np.ndarray | None = None) -> np.ndarray:
    """Intensities at the given polarizer angles; shape (n_angles, ...) where
    ... is the parameter shape. Values are nonnegative for valid parameters."""
    rho = default_angles() if angles is None else np.asarray(angles, dtype=np.float64)
    if rho.size < 1:
        raise ParameterError("need at least one angle")
    rho = rho.reshape((-1,) + (1,) * np.ndim(params.transmittance))
    return 0.5 * params.transmittance * (
        1.0 + np.sin(2.0 * rho - 2.0 * params.direction) * params.retardation
    )


def fit_params(
    intensities: np.ndarray, angles: np.ndarray | None = None
) -> PliParams:
    """Recover (transmittance, retardation, direction) by harmonic analysis.

    Requires at least three equidistant angles spanning 180 degrees. The
    transmittance is twice the series mean, the retardation is twice the
    relative first-harmonic amplitude (clamped into [0, 1]) and the
    direction is half the harmonic phase mapped into [0, pi).

    A 1-D series with zero transmittance raises a degenerate-input error;
    in stacked input such pixels are flagged instead (retardation 0,
    direction invalid).
    """
    series = np.asarray(intensities, dtype=np.float64)
    rho = default_angles(series.shape[0]) if angles is None else np.asarray(angles, dtype=np.float64)
    n = rho.size
    if n < 3:
        raise ParameterError("need at least 3 angles")
    if series.shape[0] != n:
        raise DimensionError(f"{series.shape[0]} intensities for {n} angles")
    spacing = np.diff(np.sort(rho))
    if not np.allclose(spacing, np.pi / n, atol=1e-9):
        raise ParameterError("angles must be equidistant over 180 degrees")

    rho_col = rho.reshape((-1,) + (1,) * (series.ndim - 1))
    mean = series.mean(axis=0)
    transmittance = 2.0 * mean
    # First harmonic of the 2*rho component.
    coeff = (2.0 / n) * np.sum(series * np.exp(-2.0j * rho_col), axis=0)
    amplitude = np.abs(coeff)

    zero_t = transmittance <= 0.0
    if series.ndim == 1 and zero_t:
        raise DegenerateInputError("series has zero transmittance")
    safe_t = np.where(zero_t, 1.0, transmittance)
    retardation = np.clip(2.0 * amplitude / safe_t, 0.0, 1.0)
    retardation = np.where(zero_t, 0.0, retardation)

    # coeff = (T sin_delta / 2) * (-i) * exp(-2 i phi)
    phase = np.angle(coeff * 1.0j)  # equals -2 phi modulo 2 pi
    direction = np.mod(-0.5 * phase, np.pi)
    valid = (retardation >= DIRECTION_EPS) & ~zero_t
    direction = np.where(valid, direction, 0.0)
    return PliParams(transmittance, retardation, direction, valid)


def to_triplet(params: PliParams) -> np.ndarray:
    """Reformulate as (T, sin_delta * cos 2 phi, sin_delta * sin 2 phi),
    removing the direction's circular wrap; stacked on the last axis."""
    two_phi = 2.0 * params.direction
    return np.stack(
        [
            params.transmittance,
            params.retardation * np.cos(two_phi),
            params.retardation * np.sin(two_phi),
        ],
        axis=-1,
    )


def from_triplet(triplet: np.ndarray) -> PliParams:
    """Inverse of to_triplet; recovers phi modulo pi exactly when sin_delta > 0."""
    t = np.asarray(triplet, dtype=np.float64)
    if t.shape[-1] != 3:
        raise DimensionError(f"triplet last axis must be 3, got {t.shape}")
    trans = t[..., 0]
    ret = np.hypot(t[..., 1], t[..., 2])
    phi = np.mod(0.5 * np.arctan2(t[..., 2], t[..., 1]), np.pi)
    valid = ret >= DIRECTION_EPS
    return PliParams(trans, np.clip(ret, 0.0, 1.0), np.where(valid, phi, 0.0), valid)


def transform_with_direction(params: PliParams, op: str, angle_deg: float = 0.0) -> PliParams:
    """Geometric transform of a parameter raster with direction correction.

    ``op`` is one of ``"rotate"`` (angle in degrees, arbitrary), ``"flip_h"``
    or ``"flip_v"``. Directions update as phi + angle (rotation),
    pi - phi (horizontal flip) and -phi (vertical flip), all modulo pi.
    Arbitrary-angle rotation interpolates the triplet representation so the
    direction's circular wrap never enters the interpolation.
    """
    if params.transmittance.ndim != 2:
        raise DimensionError("transform_with_direction expects (H, W) parameter maps")
    if op == "flip_h":
        return PliParams(
            params.transmittance[:, ::-1].copy(),
            params.retardation[:, ::-1].copy(),
            np.mod(np.pi - params.direction[:, ::-1], np.pi),
            params.direction_valid[:, ::-1].copy(),
        )
    if op == "flip_v":
        return PliParams(
            params.transmittance[::-1, :].copy(),
            params.retardation[::-1, :].copy(),
            np.mod(-params.direction[::-1, :], np.pi),
            params.direction_valid[::-1, :].copy(),
        )
    if op != "rotate":
        raise ParameterError(f"op must be 'rotate', 'flip_h' or 'flip_v', got {op!r}")

    alpha = np.deg2rad(angle_deg)
    triplet = to_triplet(params)
    rotated, valid = rotate_bilinear(triplet, angle_deg, fill=0.0)
    out = from_triplet(rotated)
    direction = np.mod(out.direction + alpha, np.pi)
    dvalid = out.direction_valid & (valid > 0)
    return PliParams(
        np.maximum(rotated[..., 0], 0.0),
        out.retardation,
        np.where(dvalid, direction, 0.0),
        dvalid,
    )


def scale_thickness_attenuation(params: PliParams, s: float) -> PliParams:
    """Scale section thickness and attenuation by a common factor.

    The phase retardation delta = arcsin(sin_delta) scales linearly with
    thickness (clamped to [0, pi/2]); the transmittance follows exponential
    attenuation against a unit incident intensity, so it is raised to the
    power s. The usual augmentation range is s in [0.5, 2]; values outside
    it are accepted with a warning.
    """
    if s <= 0:
        raise ParameterError(f"scale must be > 0, got {s}")
    if not 0.5 <= s <= 2.0:
        import warnings

        warnings.warn(f"thickness scale {s} outside the usual [0.5, 2] range", stacklevel=2)
    delta = np.arcsin(np.clip(params.retardation, 0.0, 1.0))
    new_ret = np.sin(np.clip(s * delta, 0.0, np.pi / 2.0))
    new_trans = np.power(params.transmittance, s)
    valid = params.direction_valid & (new_ret >= DIRECTION_EPS)
    return PliParams(new_trans, new_ret, np.where(valid, params.direction, 0.0), valid)


def _hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    h6 = (np.mod(h, 1.0)) * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def render_fom(params: PliParams) -> np.ndarray:
    """Fiber orientation map: hue encodes the direction (full hue circle over
    pi), saturation and brightness encode the retardation. Returns (H, W, 3)
    RGB in [0, 1]; zero-retardation pixels are black."""
    hue = np.mod(params.direction, np.pi) / np.pi
    sat = np.clip(params.retardation, 0.0, 1.0)
    return _hsv_to_rgb(hue, sat, sat)


def gamma_scale(img: np.ndarray, gamma: float) -> np.ndarray:
    """v -> v ** gamma for values in [0, 1]; used to brighten visualizations."""
    a = np.asarray(img, dtype=np.float64)
    if gamma <= 0:
        raise ParameterError(f"gamma must be > 0, got {gamma}")
    if a.size and (a.min() < 0.0 or a.max() > 1.0):
        raise ParameterError("gamma_scale expects values in [0, 1]")
    return np.power(a, gamma)
