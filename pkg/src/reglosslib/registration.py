"""Frequency-domain online registration head.

Score maps over all integer shifts for six metrics (circular CC/MSE,
masked CC/MSE, phase correlation, blur-invariant phase correlation),
constrained peak extraction, and translation / translation+rotation
rigid registration with a full-overlap policy.

Shift conventions
-----------------
Two families of maps exist and their native shift axes differ; every map
carries a ``origin`` raster index for shift (0, 0), and raster index
``(i, j)`` holds the score of shift ``(i - origin[0], j - origin[1])``.

* Masked (non-circular) maps, metrics ``cc`` and ``mse``: shift (a, b) is
  the placement of the moving image ``g`` inside the fixed image ``f``,
  i.e. the map entry compares ``f[v]`` against ``g[v - (a, b)]`` over the
  overlap of both footprints. The raster covers every placement with at
  least one overlapping pixel: a in [-(H_g - 1), H_f - 1].
* Circular maps, metrics ``cc_circ``, ``mse_circ``, ``pc``, ``bipc``:
  equal-shape periodic images; the map peaks at (a, b) when ``g`` equals
  ``f`` cyclically rolled by (a, b). Shifts cover the centered range
  a in [-(H // 2), H - 1 - H // 2].

``register_translation`` and ``register_rigid`` translate both families
into one output convention: ``(du, dv)`` is the displacement of the moving
image from its centered placement in the fixed frame (positive du moves
the content down, positive dv to the right). ``apply_rigid`` consumes the
same convention.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import raster as raster_io
from ._fft import FixedSpectra, extract_linear, fast_shape, irfft2, rfft2
from .errors import (
    CoverageError,
    DegenerateInputError,
    DimensionError,
    NoSolutionError,
    ParameterError,
)
from .image import as_float_image, hann_window, rotate_bilinear

MASKED_METRICS = ("cc", "mse")
CIRCULAR_METRICS = ("cc_circ", "mse_circ", "pc", "bipc")
ALL_METRICS = MASKED_METRICS + CIRCULAR_METRICS

SPECTRAL_FLOOR = 1e-12  # frequency bins below this magnitude are zeroed in PC/BIPC


@dataclass
class ScoreMap:
    """Registration objective evaluated over all integer shifts."""

    values: np.ndarray
    valid: np.ndarray
    origin: tuple[int, int]
    objective: str  # "maximize" | "minimize"
    metric: str
    overlap_counts: np.ndarray | None = None

    def shift_bounds(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Inclusive (lo, hi) signed-shift range per axis."""
        h, w = self.values.shape
        return (
            (-self.origin[0], h - 1 - self.origin[0]),
            (-self.origin[1], w - 1 - self.origin[1]),
        )

    def value_at(self, a: int, b: int) -> float:
        return float(self.values[self.origin[0] + a, self.origin[1] + b])

    def save(self, path: str | Path) -> None:
        """Write the raster as a portable float raster plus a JSON sidecar."""
        path = Path(path)
        raster_io.write_raster(path, self.values)
        sidecar = {
            "origin": list(self.origin),
            "metric": self.metric,
            "objective": self.objective,
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(sidecar, indent=2) + "\n"
        )


@dataclass
class RigidTransform:
    """Integer translation plus grid rotation, as estimated by the head."""

    du: int
    dv: int
    theta: float
    score: float
    metric: str

    def to_dict(self) -> dict:
        return {
            "du": int(self.du),
            "dv": int(self.dv),
            "theta": float(self.theta),
            "score": float(self.score),
            "metric": self.metric,
        }


@dataclass
class AngleGrid:
    """Inclusive arithmetic angle grid in degrees; always contains 0 when it brackets 0."""

    start: float = -7.5
    stop: float = 7.5
    step: float = 0.5

    def __post_init__(self):
        if self.step <= 0:
            raise ParameterError("angle step must be > 0")
        if self.stop < self.start:
            raise ParameterError("angle stop must be >= start")

    def angles(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        grid = self.start + self.step * np.arange(n)
        if self.start <= 0.0 <= self.stop and not np.any(np.abs(grid) < 1e-9):
            grid = np.sort(np.append(grid, 0.0))
        return grid


def _check_pair_2d(f: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    f = as_float_image(f)
    g = as_float_image(g)
    if f.ndim != 2 or g.ndim != 2:
        raise DimensionError("score maps operate on single-channel (H, W) images")
    return f, g


def _check_equal(f: np.ndarray, g: np.ndarray) -> None:
    if f.shape != g.shape:
        raise DimensionError(f"shapes differ: {f.shape} vs {g.shape}")


def _roll_center(raw: np.ndarray) -> np.ndarray:
    h, w = raw.shape
    return np.roll(raw, (h // 2, w // 2), axis=(0, 1))


# ---------------------------------------------------------------------------
# circular family


def circular_cross_correlation(f: np.ndarray, g: np.ndarray) -> ScoreMap:
    """Circular cross-correlation of equal-shape periodic images.

    Entry (a, b) equals sum_{u,v} f(u - a, v - b) g(u, v) with wraparound,
    so the map peaks at the cyclic roll taking f onto g.
    """
    f, g = _check_pair_2d(f, g)
    _check_equal(f, g)
    h, w = f.shape
    raw = irfft2(np.conj(rfft2(f, (h, w))) * rfft2(g, (h, w)), (h, w))
    return ScoreMap(
        values=_roll_center(raw),
        valid=np.ones((h, w), dtype=bool),
        origin=(h // 2, w // 2),
        objective="maximize",
        metric="cc_circ",
    )


def circular_mse(f: np.ndarray, g: np.ndarray) -> ScoreMap:
    """Mean squared difference under cyclic shifts, derived from the
    circular cross-correlation: (-2 (f*g)[a,b] + sum(f^2 + g^2)) / (H W)."""
    f, g = _check_pair_2d(f, g)
    _check_equal(f, g)
    h, w = f.shape
    cc = irfft2(np.conj(rfft2(f, (h, w))) * rfft2(g, (h, w)), (h, w))
    total = float(np.sum(f * f) + np.sum(g * g))
    raw = (total - 2.0 * cc) / (h * w)
    return ScoreMap(
        values=_roll_center(raw),
        valid=np.ones((h, w), dtype=bool),
        origin=(h // 2, w // 2),
        objective="minimize",
        metric="mse_circ",
    )


def _normalized_cross_power(f: np.ndarray, g: np.ndarray, windowed: bool) -> np.ndarray:
    h, w = f.shape
    if windowed:
        win = hann_window(h, w)
        f = f * win
        g = g * win
    spec = np.conj(rfft2(f, (h, w))) * rfft2(g, (h, w))
    mag = np.abs(spec)
    out = np.zeros_like(spec)
    keep = mag > SPECTRAL_FLOOR
    out[keep] = spec[keep] / mag[keep]
    return out


def phase_correlation(f: np.ndarray, g: np.ndarray, windowed: bool = True) -> ScoreMap:
    """Phase correlation: inverse transform of the unit-magnitude cross-power
    spectrum. A Hann window is applied to both images first unless disabled;
    near-zero spectral bins are floored to zero to keep the map finite."""
    f, g = _check_pair_2d(f, g)
    _check_equal(f, g)
    h, w = f.shape
    raw = irfft2(_normalized_cross_power(f, g, windowed), (h, w))
    return ScoreMap(
        values=_roll_center(raw),
        valid=np.ones((h, w), dtype=bool),
        origin=(h // 2, w // 2),
        objective="maximize",
        metric="pc",
    )


def bipc(f: np.ndarray, g: np.ndarray, windowed: bool = True) -> ScoreMap:
    """Blur-invariant phase correlation.

    Squaring the normalized cross-power spectrum cancels the 0/pi phase a
    centrally symmetric blur contributes, at the cost that the spatial peak
    lands at twice the shift modulo the grid. The returned map is re-indexed
    so entry (a, b) reads the squared-spectrum evidence at (2a, 2b); the
    two aliased candidates this creates per axis (a and a +- H/2) are
    resolved by scoring each with the masked cross-correlation of the
    (windowed) operands and marking only the winner of every alias class
    valid. When blur leaves the correlation evidence flat, the window's
    mass gradient biases the vote toward the smaller-|shift| candidate.
    """
    f, g = _check_pair_2d(f, g)
    _check_equal(f, g)
    h, w = f.shape
    if windowed:
        win = hann_window(h, w)
        f = f * win
        g = g * win
    q = _normalized_cross_power(f, g, windowed=False)
    braw = irfft2(q * q, (h, w))

    o = (h // 2, w // 2)
    shifts_r = np.arange(h) - o[0]
    shifts_c = np.arange(w) - o[1]
    values = braw[np.ix_((2 * shifts_r) % h, (2 * shifts_c) % w)]

    # Alias resolution: score every candidate shift with masked CC
    # (placement -shift); each entry must beat its aliases. The 25% overlap
    # floor keeps near-empty overlaps from dominating the vote.
    floor = max(1, int(math.ceil(0.25 * h * w)))
    mcc = masked_cc(f, np.ones_like(f), g, np.ones_like(g), min_overlap=floor)
    pr = (h - 1) - shifts_r[:, None]  # masked-map raster row of placement -a
    pc_ = (w - 1) - shifts_c[None, :]
    cand = np.where(mcc.valid[pr, pc_], mcc.values[pr, pc_], -np.inf)
    valid = np.ones((h, w), dtype=bool)
    if h % 2 == 0:
        valid &= cand >= np.roll(cand, h // 2, axis=0)
    if w % 2 == 0:
        valid &= cand >= np.roll(cand, w // 2, axis=1)
    if h % 2 == 0 and w % 2 == 0:
        valid &= cand >= np.roll(cand, (h // 2, w // 2), axis=(0, 1))
    return ScoreMap(
        values=values,
        valid=valid,
        origin=o,
        objective="maximize",
        metric="bipc",
    )


# ---------------------------------------------------------------------------
# masked family


def _masked_maps(
    f: np.ndarray,
    mf: np.ndarray,
    g: np.ndarray,
    mg: np.ndarray,
    want_mse: bool,
    fixed_spectra: FixedSpectra | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Numerator (or plain correlation) and overlap counts on the padded grid."""
    hf, wf = f.shape
    hg, wg = g.shape
    ph, pw = hf + hg - 1, wf + wg - 1
    pad = fast_shape(ph, pw)

    if fixed_spectra is None:
        fixed_spectra = FixedSpectra(f * mf, mf, pad)
    g0 = g * mg
    F_g = rfft2(g0, pad)
    F_mg = rfft2(mg, pad)
    if want_mse:
        F_g2 = rfft2(g0 * g0, pad)
        num_spec = (
            fixed_spectra.F_f2 * np.conj(F_mg)
            - 2.0 * fixed_spectra.F_f * np.conj(F_g)
            + fixed_spectra.F_m * np.conj(F_g2)
        )
    else:
        num_spec = fixed_spectra.F_f * np.conj(F_g)
    num = extract_linear(irfft2(num_spec, pad), hf, wf, hg, wg)
    counts = extract_linear(irfft2(fixed_spectra.F_m * np.conj(F_mg), pad), hf, wf, hg, wg)
    return num, np.round(counts)


def _masked_scoremap(
    f, mf, g, mg, min_overlap: int, metric: str, fixed_spectra: FixedSpectra | None = None
) -> ScoreMap:
    f, g = _check_pair_2d(f, g)
    mf = as_float_image(mf)
    mg = as_float_image(mg)
    if mf.shape != f.shape or mg.shape != g.shape:
        raise DimensionError("each mask must match its image's shape")
    if min_overlap < 1:
        raise ParameterError("min_overlap must be >= 1")
    if not np.any(mf > 0) or not np.any(mg > 0):
        raise DegenerateInputError("masks must contain at least one pixel")

    want_mse = metric == "mse"
    num, counts = _masked_maps(f, mf, g, mg, want_mse, fixed_spectra)
    if want_mse:
        np.maximum(num, 0.0, out=num)  # FFT roundoff can leave tiny negatives
    valid = counts >= min_overlap
    safe = np.maximum(counts, 1.0)
    values = np.where(valid, num / safe, 0.0)
    hg, wg = g.shape
    return ScoreMap(
        values=values,
        valid=valid,
        origin=(hg - 1, wg - 1),
        objective="minimize" if want_mse else "maximize",
        metric=metric,
        overlap_counts=counts,
    )


def masked_mse(
    f: np.ndarray,
    mf: np.ndarray,
    g: np.ndarray,
    mg: np.ndarray,
    min_overlap: int = 1,
) -> ScoreMap:
    """Overlap-normalized mean squared error over every placement of g in f.

    Values equal sum((f[v] - g[v - (a,b)])^2) / overlap over the pixels
    where both masks are one; placements with fewer than ``min_overlap``
    shared pixels are marked invalid.
    """
    return _masked_scoremap(f, mf, g, mg, min_overlap, "mse")


def masked_cc(
    f: np.ndarray,
    mf: np.ndarray,
    g: np.ndarray,
    mg: np.ndarray,
    min_overlap: int = 1,
) -> ScoreMap:
    """Masked cross-correlation divided by the per-placement overlap count."""
    return _masked_scoremap(f, mf, g, mg, min_overlap, "cc")


# ---------------------------------------------------------------------------
# peak extraction


def find_peak(
    score_map: ScoreMap,
    region: tuple[tuple[int, int], tuple[int, int]] | np.ndarray | None = None,
) -> tuple[int, int, float]:
    """Arg-optimum of the map restricted to valid entries inside ``region``.

    ``region`` is either an inclusive signed-shift range
    ``((a_lo, a_hi), (b_lo, b_hi))`` or a boolean raster aligned with the
    map. Ties break deterministically by smallest |a| + |b|, then smallest
    a, then smallest b. Returns (a, b, score).
    """
    feasible = np.asarray(score_map.valid, dtype=bool).copy()
    h, w = score_map.values.shape
    o = score_map.origin
    if region is not None:
        if isinstance(region, np.ndarray):
            if region.shape != (h, w):
                raise DimensionError("region mask shape must match the score map")
            feasible &= region.astype(bool)
        else:
            (a_lo, a_hi), (b_lo, b_hi) = region
            rows = np.arange(h) - o[0]
            cols = np.arange(w) - o[1]
            feasible &= ((rows >= a_lo) & (rows <= a_hi))[:, None]
            feasible &= ((cols >= b_lo) & (cols <= b_hi))[None, :]
    if not feasible.any():
        raise NoSolutionError("no valid score-map entry inside the requested region")

    vals = score_map.values
    if score_map.objective == "maximize":
        best = np.max(vals[feasible])
    else:
        best = np.min(vals[feasible])
    rr, cc = np.nonzero(feasible & (vals == best))
    a = rr - o[0]
    b = cc - o[1]
    order = np.lexsort((b, a, np.abs(a) + np.abs(b)))
    k = order[0]
    return int(a[k]), int(b[k]), float(best)


# ---------------------------------------------------------------------------
# rigid registration


def _centered_placement(hf: int, hg: int) -> int:
    return (hf - hg) // 2


def _mean_channels(img: np.ndarray) -> np.ndarray:
    img = as_float_image(img)
    return img.mean(axis=2) if img.ndim == 3 else img


def _embed_center(img: np.ndarray, shape: tuple[int, int], embed: str) -> tuple[np.ndarray, tuple[int, int]]:
    h, w = img.shape
    if embed == "center":
        off = ((shape[0] - h) // 2, (shape[1] - w) // 2)
    elif embed == "topleft":
        off = (0, 0)
    else:
        raise ParameterError(f"embed must be 'center' or 'topleft', got {embed!r}")
    out = np.zeros(shape, dtype=np.float64)
    out[off[0] : off[0] + h, off[1] : off[1] + w] = img
    return out, off


def _default_min_overlap(mf: np.ndarray, mg: np.ndarray) -> int:
    smaller = min(float(mf.sum()), float(mg.sum()))
    return max(1, int(math.ceil(0.25 * smaller)))


def _score_translation(
    fixed: np.ndarray,
    fmask: np.ndarray,
    moving: np.ndarray,
    mmask: np.ndarray,
    metric: str,
    windowed: bool,
    overlap: str,
    min_overlap: int | None,
    region_du: tuple[tuple[int, int], tuple[int, int]] | None,
    embed: str,
    fixed_spectra: FixedSpectra | None = None,
) -> tuple[int, int, float]:
    """Best (du, dv, score) in the centered-placement output convention."""
    hf, wf = fixed.shape
    hg, wg = moving.shape
    pcr = _centered_placement(hf, hg)
    pcc = _centered_placement(wf, wg)

    if overlap == "full":
        full_count = round(float(fmask.sum()))
        min_count = None
    elif overlap == "min_count":
        full_count = None
        min_count = min_overlap if min_overlap is not None else _default_min_overlap(fmask, mmask)
    else:
        raise ParameterError(f"overlap policy must be 'full' or 'min_count', got {overlap!r}")

    if metric in MASKED_METRICS:
        smap = _masked_scoremap(fixed, fmask, moving, mmask, 1, metric, fixed_spectra)
        if full_count is not None:
            smap.valid &= smap.overlap_counts >= full_count
        else:
            smap.valid &= smap.overlap_counts >= min_count
        region = None
        if region_du is not None:
            (du_lo, du_hi), (dv_lo, dv_hi) = region_du
            region = ((du_lo + pcr, du_hi + pcr), (dv_lo + pcc, dv_hi + pcc))
        a, b, score = find_peak(smap, region)
        return a - pcr, b - pcc, score

    if metric not in CIRCULAR_METRICS:
        raise ParameterError(f"unknown metric {metric!r}; expected one of {ALL_METRICS}")

    # Circular metrics: zero-embed both inputs on the common frame, then
    # impose the overlap policy through the mask correlation so that the
    # feasible placements match the masked family's. For PC/BIPC each image
    # is windowed at its own size first, so a smaller embedded image tapers
    # smoothly into the zero padding instead of contributing a sharp edge.
    shape = (max(hf, hg), max(wf, wg))
    fx, gx = fixed, moving
    if windowed and metric in ("pc", "bipc"):
        fx = fixed * hann_window(hf, wf)
        gx = moving * hann_window(hg, wg)
    f_e, off_f = _embed_center(fx, shape, embed)
    g_e, off_g = _embed_center(gx, shape, embed)
    if metric == "cc_circ":
        smap = circular_cross_correlation(f_e, g_e)
    elif metric == "mse_circ":
        smap = circular_mse(f_e, g_e)
    elif metric == "pc":
        smap = phase_correlation(f_e, g_e, windowed=False)
        smap.metric = "pc"
    else:
        smap = bipc(f_e, g_e, windowed=False)
        smap.metric = "bipc"

    # Map each circular shift (roll) to the placement of the original
    # moving image inside the fixed frame: p = (off_g - off_f) - roll.
    _, counts = _masked_maps(fixed, fmask, moving, mmask, False, fixed_spectra)
    h, w = smap.values.shape
    rolls_r = np.arange(h) - smap.origin[0]
    rolls_c = np.arange(w) - smap.origin[1]
    p_r = (off_g[0] - off_f[0]) - rolls_r
    p_c = (off_g[1] - off_f[1]) - rolls_c
    ir = p_r + (hg - 1)
    ic = p_c + (wg - 1)
    ok_r = (ir >= 0) & (ir < counts.shape[0])
    ok_c = (ic >= 0) & (ic < counts.shape[1])
    cgrid = np.zeros((h, w))
    cgrid[np.ix_(ok_r, ok_c)] = counts[np.ix_(ir[ok_r], ic[ok_c])]
    if full_count is not None:
        smap.valid &= cgrid >= full_count
    else:
        smap.valid &= cgrid >= min_count

    region = None
    if region_du is not None:
        # du = (off_g - off_f) - roll - p_center, so the roll range mirrors du
        (du_lo, du_hi), (dv_lo, dv_hi) = region_du
        kr = (off_g[0] - off_f[0]) - pcr
        kc = (off_g[1] - off_f[1]) - pcc
        region = ((kr - du_hi, kr - du_lo), (kc - dv_hi, kc - dv_lo))
    a, b, score = find_peak(smap, region)
    du = (off_g[0] - off_f[0]) - a - pcr
    dv = (off_g[1] - off_f[1]) - b - pcc
    return du, dv, score


def register_translation(
    fixed: np.ndarray,
    moving: np.ndarray,
    metric: str = "mse",
    *,
    fixed_mask: np.ndarray | None = None,
    moving_mask: np.ndarray | None = None,
    region: tuple[tuple[int, int], tuple[int, int]] | None = None,
    overlap: str = "min_count",
    min_overlap: int | None = None,
    windowed: bool = True,
    embed: str = "center",
) -> RigidTransform:
    """Translation-only registration of ``moving`` against ``fixed``.

    Multi-channel inputs are averaged over channels before scoring. For the
    circular metrics the smaller image is zero-embedded (centrally by
    default) to equalize shapes. ``region`` constrains (du, dv) inclusively.
    Returns a theta = 0 transform carrying the peak shift and score.
    """
    f2 = _mean_channels(fixed)
    g2 = _mean_channels(moving)
    fmask = np.ones_like(f2) if fixed_mask is None else as_float_image(fixed_mask)
    gmask = np.ones_like(g2) if moving_mask is None else as_float_image(moving_mask)
    metric = metric.lower()
    du, dv, score = _score_translation(
        f2, fmask, g2, gmask, metric, windowed, overlap, min_overlap, region, embed
    )
    return RigidTransform(du=du, dv=dv, theta=0.0, score=score, metric=metric)


def _strict_rotated_mask(mask: np.ndarray, angle: float) -> np.ndarray:
    rot, valid = rotate_bilinear(mask, angle, fill=0.0)
    return np.where((rot >= 1.0 - 1e-6) & (valid > 0), 1.0, 0.0)


def register_rigid(
    fixed: np.ndarray,
    moving: np.ndarray,
    metric: str = "mse",
    angles: AngleGrid | None = None,
    overlap: str = "full",
    *,
    fixed_mask: np.ndarray | None = None,
    moving_mask: np.ndarray | None = None,
    min_overlap: int | None = None,
    windowed: bool = True,
    embed: str = "center",
    threads: int = 1,
) -> RigidTransform:
    """Exhaustive search over a fixed rotation grid plus translation.

    For each grid angle the moving image and its mask are rotated about the
    moving image's center, a score map is computed and its constrained peak
    extracted; the globally best (angle, shift) wins. Under the ``full``
    policy only placements where the rotated moving footprint covers every
    fixed-mask pixel are feasible, so the loss side never sees padding.
    Ties break toward smaller |theta|, then the shift tie-break, then
    ascending theta.
    """
    angles = angles or AngleGrid()
    grid = angles.angles()
    if grid.size == 0:
        raise ParameterError("angle grid is empty")
    metric = metric.lower()

    f2 = _mean_channels(fixed)
    g2 = _mean_channels(moving)
    fmask = np.ones_like(f2) if fixed_mask is None else as_float_image(fixed_mask)
    gmask = np.ones_like(g2) if moving_mask is None else as_float_image(moving_mask)

    pad = fast_shape(f2.shape[0] + g2.shape[0] - 1, f2.shape[1] + g2.shape[1] - 1)
    fixed_spectra = FixedSpectra(f2 * fmask, fmask, pad)

    def eval_angle(theta: float):
        if abs(theta) < 1e-12:
            rot, rmask = g2, gmask
        else:
            rot, _ = rotate_bilinear(g2, theta, fill=0.0)
            rmask = _strict_rotated_mask(gmask, theta)
            if not np.any(rmask > 0):
                return None
        try:
            du, dv, score = _score_translation(
                f2, fmask, rot, rmask, metric, windowed, overlap, min_overlap,
                None, embed, fixed_spectra,
            )
        except NoSolutionError:
            return None
        return (theta, du, dv, score)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(eval_angle, grid))
    else:
        results = [eval_angle(t) for t in grid]

    best = None
    maximize = metric not in ("mse", "mse_circ")
    for res in results:
        if res is None:
            continue
        theta, du, dv, score = res
        key = (
            -score if maximize else score,
            abs(theta),
            abs(du) + abs(dv),
            du,
            dv,
            theta,
        )
        if best is None or key < best[0]:
            best = (key, RigidTransform(du=du, dv=dv, theta=float(theta), score=score, metric=metric))
    if best is None:
        raise NoSolutionError("no angle admits a feasible placement under the overlap policy")
    return best[1]


def apply_rigid(
    img: np.ndarray,
    transform: RigidTransform,
    out_h: int,
    out_w: int,
) -> np.ndarray:
    """Warp ``img`` by a registered transform and crop the aligned window.

    The image is rotated by ``transform.theta`` about its center, translated
    by (du, dv) and cropped to (out_h, out_w) centered on the fixed frame.
    A zero-angle integer transform degenerates to an exact slice copy.
    Raises CoverageError when interpolated or out-of-bounds pixels would
    enter the output window.
    """
    img = as_float_image(img)
    h, w = img.shape[:2]
    du, dv = int(transform.du), int(transform.dv)
    off_r = (h - out_h) // 2
    off_c = (w - out_w) // 2
    top = off_r - du
    left = off_c - dv
    if transform.theta == 0.0:
        if top < 0 or left < 0 or top + out_h > h or left + out_w > w:
            raise CoverageError(
                f"output window {(top, left, out_h, out_w)} exceeds the image frame"
            )
        return img[top : top + out_h, left : left + out_w].copy()
    rot, valid = rotate_bilinear(img, transform.theta, fill=0.0)
    if top < 0 or left < 0 or top + out_h > h or left + out_w > w:
        raise CoverageError(
            f"output window {(top, left, out_h, out_w)} exceeds the image frame"
        )
    window_valid = valid[top : top + out_h, left : left + out_w]
    if not np.all(window_valid > 0):
        raise CoverageError("rotation left out-of-bounds pixels inside the output window")
    return rot[top : top + out_h, left : left + out_w].copy()
