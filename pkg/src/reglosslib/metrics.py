"""Evaluation battery: RMSE, SSIM, mutual information, instance-matching
F1 (global and size-binned), grey-level-index images and laminar profiles,
and the histological shrinkage correction for physical cell sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage
import scipy.optimize

from .errors import DegenerateInputError, DimensionError, ParameterError
from .image import DEFAULT_PIXEL_PITCH_UM, as_float_image, downscale_mean

DEFAULT_PIXEL_AREA_UM2 = DEFAULT_PIXEL_PITCH_UM ** 2


@dataclass
class MatchResult:
    """Instance matching counts; f1 = 2 tp / (2 tp + fp + fn) * 100, zero
    when there are no true positives."""

    tp: int
    fp: int
    fn: int

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        if self.tp == 0 or denom == 0:
            return 0.0
        return 200.0 * self.tp / denom


@dataclass
class ThresholdConfig:
    """Adaptive threshold: cell pixels are darker than the local mean over a
    ``window`` x ``window`` neighborhood minus ``offset`` (image in [0, 1])."""

    window: int = 101
    offset: float = 10.0 / 255.0


@dataclass
class GliProfile:
    gli_image: np.ndarray
    profiles: np.ndarray  # (n_profiles, H)
    average_profile: np.ndarray


def _prep_pair(a, b, mask):
    a = as_float_image(a)
    b = as_float_image(b)
    if a.shape != b.shape:
        raise DimensionError(f"shapes differ: {a.shape} vs {b.shape}")
    if mask is None:
        mask = np.ones(a.shape[:2], dtype=bool)
    else:
        mask = np.asarray(mask) > 0
        if mask.shape != a.shape[:2]:
            raise DimensionError("mask shape must match the images")
    if not mask.any():
        raise DegenerateInputError("mask selects no pixels")
    return a, b, mask


def rmse(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Root-mean-square error over the masked pixels, averaged over channels."""
    a, b, mask = _prep_pair(a, b, mask)
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    per_channel = [
        math.sqrt(float(np.mean((a[..., c][mask] - b[..., c][mask]) ** 2)))
        for c in range(a.shape[2])
    ]
    return float(np.mean(per_channel))


def _ssim_channel(x, y, mask, dynamic_range, k1, k2, sigma, truncate):
    cov_norm = 1.0  # population statistics
    filt = lambda im: scipy.ndimage.gaussian_filter(im, sigma, truncate=truncate)
    ux = filt(x)
    uy = filt(y)
    uxx = filt(x * x)
    uyy = filt(y * y)
    uxy = filt(x * y)
    vx = cov_norm * (uxx - ux * ux)
    vy = cov_norm * (uyy - uy * uy)
    vxy = cov_norm * (uxy - ux * uy)
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux ** 2 + uy ** 2 + c1) * (vx + vy + c2))
    radius = int(truncate * sigma + 0.5)
    interior = np.zeros(x.shape, dtype=bool)
    if x.shape[0] > 2 * radius and x.shape[1] > 2 * radius:
        interior[radius:-radius, radius:-radius] = True
    else:
        interior[:] = True
    sel = interior & mask
    if not sel.any():
        sel = mask
    return float(np.mean(s[sel]))


def ssim(
    a: np.ndarray,
    b: np.ndarray,
    mask: np.ndarray | None = None,
    dynamic_range: float | None = None,
    k1: float = 0.01,
    k2: float = 0.03,
    sigma: float = 1.5,
) -> float:
    """Mean local structural similarity over the masked region.

    Local statistics use a Gaussian window (sigma 1.5, radius 5, i.e. the
    classic 11 x 11 support). ``dynamic_range`` defaults to 1.0 when both
    images fit in [0, 1] and 255 otherwise. A border strip of the window
    radius is excluded, as is conventional.
    """
    a, b, mask = _prep_pair(a, b, mask)
    if dynamic_range is None:
        m = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 0.0)
        dynamic_range = 1.0 if m <= 1.0 + 1e-9 else 255.0
    if dynamic_range <= 0:
        raise ParameterError("dynamic_range must be > 0")
    truncate = 3.5  # radius 5 at sigma 1.5
    if a.ndim == 2:
        return _ssim_channel(a, b, mask, dynamic_range, k1, k2, sigma, truncate)
    vals = [
        _ssim_channel(a[..., c], b[..., c], mask, dynamic_range, k1, k2, sigma, truncate)
        for c in range(a.shape[2])
    ]
    return float(np.mean(vals))


def mutual_information(
    a: np.ndarray,
    b: np.ndarray,
    bins: int = 64,
    mask: np.ndarray | None = None,
) -> float:
    """Shannon mutual information (nats) of the joint intensity histogram.

    Each image is binned over its own masked intensity range; 64 bins by
    default. Nonnegative; zero when either marginal is constant.
    """
    if bins < 2:
        raise ParameterError("bins must be >= 2")
    a, b, mask = _prep_pair(a, b, mask)
    if a.ndim == 3:
        a = a.mean(axis=2)
        b = b.mean(axis=2)
    x = a[mask].ravel()
    y = b[mask].ravel()

    def edges(v):
        lo, hi = float(v.min()), float(v.max())
        if hi <= lo:
            hi = lo + 1.0
        return np.linspace(lo, hi, bins + 1)

    joint, _, _ = np.histogram2d(x, y, bins=[edges(x), edges(y)])
    p = joint / joint.sum()
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    nz = p > 0
    denom = np.outer(px, py)
    return float(np.sum(p[nz] * np.log(p[nz] / denom[nz])))


def _instance_areas(labels: np.ndarray) -> dict[int, int]:
    ids, counts = np.unique(labels, return_counts=True)
    return {int(i): int(c) for i, c in zip(ids, counts) if i > 0}


def _iou_matrix(pred: np.ndarray, target: np.ndarray, pred_ids, target_ids):
    """Dense IoU between the given instances, computed from the joint
    label histogram so it stays linear in the pixel count."""
    pi = {v: k for k, v in enumerate(pred_ids)}
    ti = {v: k for k, v in enumerate(target_ids)}
    iou = np.zeros((len(pred_ids), len(target_ids)))
    if not pred_ids or not target_ids:
        return iou
    both = (pred > 0) & (target > 0)
    pair, counts = np.unique(
        np.stack([pred[both], target[both]]), axis=1, return_counts=True
    )
    pred_areas = _instance_areas(pred)
    target_areas = _instance_areas(target)
    for (p, t), inter in zip(pair.T, counts):
        p, t = int(p), int(t)
        if p in pi and t in ti:
            union = pred_areas[p] + target_areas[t] - int(inter)
            iou[pi[p], ti[t]] = inter / union
    return iou


def _assign(iou: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """One-to-one matching maximizing total IoU among pairs at or above the
    threshold (optimal assignment, deterministic)."""
    if iou.size == 0:
        return []
    gated = np.where(iou >= threshold, iou, 0.0)
    rows, cols = scipy.optimize.linear_sum_assignment(gated, maximize=True)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if iou[r, c] >= threshold]


def match_instances(
    pred: np.ndarray,
    target: np.ndarray,
    min_area: float = 0.0,
    iou_threshold: float = 0.3,
) -> MatchResult:
    """Match predicted against target instances one-to-one by IoU.

    Instances smaller than ``min_area`` pixels are discarded on both sides
    first. tp counts matched pairs with IoU >= threshold under the optimal
    assignment; fp the unmatched predictions, fn the unmatched targets.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise DimensionError(f"shapes differ: {pred.shape} vs {target.shape}")
    if not 0.0 < iou_threshold < 1.0:
        raise ParameterError("iou_threshold must be in (0, 1)")
    pred_ids = sorted(i for i, area in _instance_areas(pred).items() if area >= min_area)
    target_ids = sorted(i for i, area in _instance_areas(target).items() if area >= min_area)
    pred_f = np.where(np.isin(pred, pred_ids), pred, 0)
    target_f = np.where(np.isin(target, target_ids), target, 0)
    iou = _iou_matrix(pred_f, target_f, pred_ids, target_ids)
    matches = _assign(iou, iou_threshold)
    tp = len(matches)
    return MatchResult(tp=tp, fp=len(pred_ids) - tp, fn=len(target_ids) - tp)


def apply_shrinkage(
    area_px: float,
    factor: float = 0.97,
    pixel_area: float = DEFAULT_PIXEL_AREA_UM2,
) -> float:
    """Physical in-plane area: pixels * um^2-per-pixel * 2-D shrinkage factor.

    Section-wise factors around 0.95..0.99 are typical; anything outside
    (0, 2) is rejected.
    """
    if not 0.0 < factor < 2.0:
        raise ParameterError(f"shrinkage factor must be in (0, 2), got {factor}")
    return float(area_px) * float(pixel_area) * float(factor)


def f1_by_size_bins(
    pred: np.ndarray,
    target: np.ndarray,
    bins: list[tuple[float, float]],
    shrinkage: float = 0.97,
    pixel_area: float = DEFAULT_PIXEL_AREA_UM2,
    iou_threshold: float = 0.3,
) -> list[MatchResult]:
    """Per-size-bin F1 with the modified true/false counting.

    Sizes are physical areas in um^2 after shrinkage correction; bins are
    half-open [lo, hi) intervals, disjoint and increasing. For each bin,
    tp and fp come from matching only the predicted cells inside the bin
    against all target cells, while fn comes from matching the target
    cells inside the bin against all predicted cells.
    """
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise DimensionError(f"shapes differ: {pred.shape} vs {target.shape}")
    for i in range(1, len(bins)):
        if bins[i][0] < bins[i - 1][1]:
            raise ParameterError("bins must be disjoint and increasing")

    pred_ids = sorted(_instance_areas(pred))
    target_ids = sorted(_instance_areas(target))
    pred_um2 = {
        i: apply_shrinkage(a, shrinkage, pixel_area) for i, a in _instance_areas(pred).items()
    }
    target_um2 = {
        i: apply_shrinkage(a, shrinkage, pixel_area) for i, a in _instance_areas(target).items()
    }
    iou = _iou_matrix(pred, target, pred_ids, target_ids)
    p_index = {v: k for k, v in enumerate(pred_ids)}
    t_index = {v: k for k, v in enumerate(target_ids)}

    results = []
    for lo, hi in bins:
        pred_in = [i for i in pred_ids if lo <= pred_um2[i] < hi]
        target_in = [i for i in target_ids if lo <= target_um2[i] < hi]
        # tp/fp: bin-restricted predictions vs all targets
        sub = iou[np.ix_([p_index[i] for i in pred_in], range(len(target_ids)))]
        tp = len(_assign(sub, iou_threshold))
        fp = len(pred_in) - tp
        # fn: bin-restricted targets vs all predictions
        sub_t = iou[np.ix_(range(len(pred_ids)), [t_index[i] for i in target_in])]
        matched_t = len(_assign(sub_t, iou_threshold))
        fn = len(target_in) - matched_t
        results.append(MatchResult(tp=tp, fp=fp, fn=fn))
    return results


def gli_image(
    stain: np.ndarray,
    threshold_cfg: ThresholdConfig | None = None,
    block: int = 16,
) -> np.ndarray:
    """Grey level index: fraction of cell-body pixels per block.

    The stain (grayscale in [0, 1]; RGB is converted by luminance) is
    segmented by an adaptive threshold (darker than the local mean minus an
    offset marks a cell pixel), then block-averaged. At the default 1.3 um
    input pitch and block 16 the output pitch is 20.8 um.
    """
    cfg = threshold_cfg or ThresholdConfig()
    a = as_float_image(stain)
    if a.ndim == 3:
        a = a @ np.array([0.299, 0.587, 0.114]) if a.shape[2] == 3 else a.mean(axis=2)
    local_mean = scipy.ndimage.uniform_filter(a, size=cfg.window, mode="reflect")
    cells = (a < local_mean - cfg.offset).astype(np.float64)
    return downscale_mean(cells, block)


def gli_profiles(
    gli: np.ndarray,
    n_profiles: int = 31,
    smooth_kernel: int = 3,
) -> GliProfile:
    """Columnar GLI profiles and their smoothed average.

    Samples ``n_profiles`` equally spaced columns (vertical profiles from the
    pial surface toward white matter; the caller crops to that extent),
    averages them into one profile and applies a centered mean filter.
    """
    a = as_float_image(gli)
    if a.ndim != 2:
        raise DimensionError("gli image must be single-channel")
    h, w = a.shape
    if w < n_profiles:
        raise ParameterError(f"image width {w} is narrower than {n_profiles} profiles")
    if smooth_kernel < 1 or smooth_kernel % 2 != 1:
        raise ParameterError("smooth_kernel must be odd and positive")
    cols = np.round(np.linspace(0, w - 1, n_profiles)).astype(int)
    profiles = a[:, cols].T  # (n_profiles, H)
    average = profiles.mean(axis=0)
    if smooth_kernel > 1:
        taps = np.full(smooth_kernel, 1.0 / smooth_kernel)
        average = scipy.ndimage.convolve1d(average, taps, mode="reflect")
    return GliProfile(gli_image=a, profiles=profiles, average_profile=average)
