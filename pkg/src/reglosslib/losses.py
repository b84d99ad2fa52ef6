"""Misalignment-tolerant loss kernels, as pure array computations.

Feature extraction is the caller's job: the style loss consumes feature
stacks (lists of layers, each layer N_l feature maps with K_l spatial
entries), the other losses consume rasters. Batch reductions use plain
means over caller-supplied batches; a single sample is the batch-size-1
case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, DimensionError, ParameterError
from .image import as_float_image
from .registration import RigidTransform, apply_rigid


@dataclass
class LossWeights:
    """Relative weights of the total loss: lam in [0, 1], eta >= 0,
    style_scale > 0 (default 1e4 brings the style term onto the
    reconstruction term's order of magnitude)."""

    lam: float = 0.5
    eta: float = 0.1
    style_scale: float = 1.0e4

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ParameterError(f"lambda must be in [0, 1], got {self.lam}")
        if self.eta < 0.0:
            raise ParameterError(f"eta must be >= 0, got {self.eta}")
        if self.style_scale <= 0.0:
            raise ParameterError(f"style_scale must be > 0, got {self.style_scale}")


def _as_layer(layer: np.ndarray) -> np.ndarray:
    a = np.asarray(layer, dtype=np.float64)
    if a.ndim < 2:
        raise DimensionError("a layer needs at least (N, K) dimensions")
    return a.reshape(a.shape[0], -1)


def reconstruction_loss(
    pred: np.ndarray,
    target: np.ndarray,
    transform: RigidTransform | None = None,
    target_mask: np.ndarray | None = None,
) -> float:
    """Mean absolute difference between the prediction and the aligned target.

    The target is warped by ``transform`` (identity when None) and cropped to
    the prediction's frame; the full-overlap policy is enforced by the warp,
    which raises a coverage error if padding would enter the comparison.
    """
    pred = as_float_image(pred)
    target = as_float_image(target)
    if pred.ndim != target.ndim or (pred.ndim == 3 and pred.shape[2] != target.shape[2]):
        raise DimensionError("prediction and target must have the same channel count")
    t = transform or RigidTransform(0, 0, 0.0, 0.0, "identity")
    aligned = apply_rigid(target, t, pred.shape[0], pred.shape[1])
    if target_mask is not None:
        mask_aligned = apply_rigid(as_float_image(target_mask), t, pred.shape[0], pred.shape[1])
        if not np.all(mask_aligned >= 1.0 - 1e-6):
            raise CoverageError("aligned target mask does not cover the prediction")
    return float(np.mean(np.abs(pred - aligned)))


def gram_matrix(layer: np.ndarray) -> np.ndarray:
    """Inner products between all pairs of feature maps: G_ij = sum_k F_ik F_jk.

    No normalization happens here; the style loss applies 1 / (K^2 N^2).
    """
    f = _as_layer(layer)
    if f.size == 0:
        raise DimensionError("layer must be non-empty")
    return f @ f.T


def gram_style_loss(a: list[np.ndarray], b: list[np.ndarray]) -> float:
    """Sum over layers of the normalized squared Gram-matrix distance.

    Each layer contributes sum_ij (G_ij - G'_ij)^2 / (K^2 N^2). Because the
    Gram matrix pools over spatial positions, the value is invariant under
    any common spatial permutation of one stack's feature maps.
    """
    if len(a) != len(b):
        raise DimensionError(f"stacks have {len(a)} vs {len(b)} layers")
    total = 0.0
    for la, lb in zip(a, b):
        fa = _as_layer(la)
        fb = _as_layer(lb)
        if fa.shape != fb.shape:
            raise DimensionError(f"layer shapes differ: {fa.shape} vs {fb.shape}")
        n, k = fa.shape
        d = gram_matrix(fa) - gram_matrix(fb)
        total += float(np.sum(d * d)) / (float(k) ** 2 * float(n) ** 2)
    return total


def rotate180(img: np.ndarray) -> np.ndarray:
    """Exact 180-degree rotation (index reversal on both spatial axes)."""
    img = as_float_image(img)
    return img[::-1, ::-1].copy()


def equivariance_loss(g_x: np.ndarray, g_omega_x: np.ndarray, reduction: str = "rms") -> float:
    """Mismatch between the rotated prediction and the prediction on the
    rotated input: ``reduction="rms"`` gives the per-pixel root mean square
    of rotate180(g_x) - g_omega_x (resolution independent), ``"l2"`` the raw
    Euclidean norm. Zero exactly when the generator commutes with the
    rotation on this sample.
    """
    g_x = as_float_image(g_x)
    g_omega_x = as_float_image(g_omega_x)
    if g_x.shape != g_omega_x.shape:
        raise DimensionError(f"shapes differ: {g_x.shape} vs {g_omega_x.shape}")
    diff = rotate180(g_x) - g_omega_x
    if reduction == "rms":
        return float(np.sqrt(np.mean(diff * diff)))
    if reduction == "l2":
        return float(np.sqrt(np.sum(diff * diff)))
    raise ParameterError(f"reduction must be 'rms' or 'l2', got {reduction!r}")


def total_loss(l_r: float, l_s: float, l_e: float, weights: LossWeights | None = None) -> float:
    """lam * l_r + (1 - lam) * style_scale * l_s + eta * l_e."""
    w = weights or LossWeights()
    for name, v in (("l_r", l_r), ("l_s", l_s), ("l_e", l_e)):
        if not np.isfinite(v) or v < 0:
            raise ParameterError(f"{name} must be finite and >= 0, got {v}")
    return w.lam * l_r + (1.0 - w.lam) * (w.style_scale * l_s) + w.eta * l_e
