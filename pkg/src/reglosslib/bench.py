"""Registration-robustness benchmark.

Per trial: synthesize (or crop) a square target image, extract a smaller
moving tile at a random in-bounds offset, degrade the tile with noise or
blur, re-register it with each metric and record whether the recovered
shift lands within the hit threshold of the planted one. Every trial
derives its own RNG stream from (seed, metric, level, trial), so results
never depend on scheduling or thread count.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.ndimage

from .errors import NoSolutionError, ParameterError
from .image import add_gaussian_noise, gaussian_blur
from .raster import read_image
from .registration import register_translation

DEFAULT_METRICS = ("mse", "cc", "pc", "bipc")


@dataclass
class SweepConfig:
    target_size: int = 460
    tile_size: int = 260
    trials_per_level: int = 100
    hit_threshold: float = 5.0
    degradation: str = "noise"  # "noise" | "blur"
    levels: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    metrics: tuple = DEFAULT_METRICS
    seed: int = 0
    clip_8bit: bool = True
    hit_norm: str = "chebyshev"  # per-axis by default; "euclidean" via flag
    texture: str = "cell_blobs"
    source_dir: str | None = None
    fixed_source: bool = False

    def __post_init__(self):
        if self.tile_size >= self.target_size:
            raise ParameterError("tile_size must be smaller than target_size")
        if any(l < 0 for l in self.levels) or list(self.levels) != sorted(self.levels):
            raise ParameterError("levels must be nonnegative and ascending")
        if self.degradation not in ("noise", "blur"):
            raise ParameterError("degradation must be 'noise' or 'blur'")
        if self.hit_norm not in ("chebyshev", "euclidean"):
            raise ParameterError("hit_norm must be 'chebyshev' or 'euclidean'")


@dataclass
class TrialRecord:
    metric: str
    level: float
    trial: int
    true_du: int
    true_dv: int
    rec_du: int | None
    rec_dv: int | None
    hit: bool
    runtime_ms: float
    failed: bool = False  # registration raised no-solution


def generate_texture(
    h: int,
    w: int,
    style: str = "cell_blobs",
    seed: int | np.random.Generator = 0,
    *,
    n_blobs: int | None = None,
    blob_density: float = 0.01,
    background: float = 200.0,
    blob_depth: float = 10.0,
    blob_radius: tuple[float, float] = (2.0, 4.5),
    smooth: float = 1.6,
    source_dir: str | None = None,
) -> np.ndarray:
    """Deterministic synthetic test image in the 0..255 range.

    ``cell_blobs``: dark elliptical blobs, each ringed by a faint bright
    halo (like the diffraction halos around stained cell bodies), on a
    bright background. Every blob deposits zero net mass, so local mean
    brightness stays flat at all scales; the construction wraps at the
    borders, which keeps the statistics stationary right up to the edge.
    ``filtered_noise``: low-pass filtered white noise rescaled to span the
    intensity range. ``from_directory``: a random crop from a user-supplied
    image directory.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if style == "cell_blobs":
        field = np.zeros((h, w))
        count = n_blobs if n_blobs is not None else max(1, int(blob_density * h * w))
        for _ in range(count):
            cy = rng.uniform(0, h)
            cx = rng.uniform(0, w)
            ry = rng.uniform(*blob_radius)
            rx = rng.uniform(*blob_radius)
            theta = rng.uniform(0, np.pi)
            depth = rng.uniform(0.75, 1.0) * blob_depth
            c, s = np.cos(theta), np.sin(theta)
            # rasterize inside the blob's bounding box, wrapping at borders
            ext = 2.1 * max(ry, rx)
            ys = np.arange(int(cy - ext), int(cy + ext) + 2)
            xs = np.arange(int(cx - ext), int(cx + ext) + 2)
            yy = ys[:, None] - cy
            xx = xs[None, :] - cx
            u = (c * yy + s * xx) / ry
            v = (-s * yy + c * xx) / rx
            r2 = u * u + v * v
            core = np.clip((1.4 - r2) / 0.8, 0.0, 1.0)
            ring = np.clip(np.minimum((r2 - 1.2) / 0.8, (4.2 - r2) / 1.2), 0.0, 1.0)
            ring_sum = ring.sum()
            if ring_sum <= 0:
                continue
            blob = core - (core.sum() / ring_sum) * ring  # zero net mass
            field[np.ix_(ys % h, xs % w)] -= depth * blob
        if smooth > 0:
            field = scipy.ndimage.gaussian_filter(field, smooth, mode="wrap")
        return np.clip(background + field, 0.0, 255.0)
    if style == "filtered_noise":
        img = scipy.ndimage.gaussian_filter(rng.normal(size=(h, w)), 3.0, mode="wrap")
        lo, hi = img.min(), img.max()
        return (img - lo) / max(hi - lo, 1e-12) * 255.0
    if style == "from_directory":
        if not source_dir:
            raise ParameterError("from_directory needs source_dir")
        root = Path(source_dir)
        if not root.is_dir():
            raise ParameterError(f"source directory {source_dir} does not exist")
        files = sorted(
            p for p in root.iterdir() if p.suffix.lower() in (".png", ".tif", ".tiff")
        )
        if not files:
            raise ParameterError(f"no usable images in {source_dir}")
        img = read_image(files[int(rng.integers(len(files)))])
        if img.ndim == 3:
            img = img.mean(axis=2)
        if img.shape[0] < h or img.shape[1] < w:
            raise ParameterError(f"source image {img.shape} smaller than {(h, w)}")
        top = int(rng.integers(img.shape[0] - h + 1))
        left = int(rng.integers(img.shape[1] - w + 1))
        return img[top : top + h, left : left + w].astype(np.float64)
    raise ParameterError(f"unknown texture style {style!r}")


def _blur_kernel_size(sigma: float, tile: int) -> int:
    # smallest odd integer >= 2 sigma + 1 (one-sigma truncation per side),
    # capped at the tile size; wider truncation would let the reflected
    # border dominate the whole tile at the largest blur levels
    k = int(np.ceil(2.0 * sigma + 1.0))
    if k % 2 == 0:
        k += 1
    cap = tile if tile % 2 == 1 else tile - 1
    return min(k, cap)


def _run_trial(cfg: SweepConfig, metric: str, level_idx: int, trial: int) -> TrialRecord:
    level = float(cfg.levels[level_idx])
    mseq = {m: i for i, m in enumerate(cfg.metrics)}
    ss = np.random.SeedSequence(
        entropy=cfg.seed, spawn_key=(mseq[metric], level_idx, trial)
    )
    rng = np.random.default_rng(ss)
    # The planted geometry must not depend on the metric or level so that
    # fixed_source comparisons stay meaningful; texture/offset use a stream
    # derived only from (seed, trial).
    geo_rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(trial,)))
    if cfg.fixed_source:
        geo_rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(0,)))
    target = generate_texture(
        cfg.target_size, cfg.target_size, cfg.texture, geo_rng, source_dir=cfg.source_dir
    )
    if cfg.fixed_source:
        geo_rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, trial)))
    top = int(geo_rng.integers(cfg.target_size - cfg.tile_size + 1))
    left = int(geo_rng.integers(cfg.target_size - cfg.tile_size + 1))
    tile = target[top : top + cfg.tile_size, left : left + cfg.tile_size].copy()

    center = (cfg.target_size - cfg.tile_size) // 2
    true_du = top - center
    true_dv = left - center

    if cfg.degradation == "noise" and level > 0:
        tile = add_gaussian_noise(
            tile, level, rng, clip=(0.0, 255.0) if cfg.clip_8bit else None
        )
    elif cfg.degradation == "blur" and level > 0:
        tile = gaussian_blur(tile, level, _blur_kernel_size(level, cfg.tile_size))

    # The correlation metrics search under the head's containment policy
    # (the tile is known to lie fully inside the target, mirroring the
    # full-overlap restriction of the training head); PC and BIPC follow
    # their classic definition and take the unconstrained argmax.
    region = None
    if metric in ("mse", "cc", "mse_circ", "cc_circ"):
        region = ((-center, center), (-center, center))
    t0 = time.perf_counter()
    try:
        t = register_translation(
            target, tile, metric, overlap="min_count", region=region
        )
        rec_du, rec_dv = t.du, t.dv
        failed = False
    except NoSolutionError:
        rec_du = rec_dv = None
        failed = True
    runtime_ms = (time.perf_counter() - t0) * 1000.0

    if failed:
        hit = False
    else:
        ddu = abs(rec_du - true_du)
        ddv = abs(rec_dv - true_dv)
        if cfg.hit_norm == "chebyshev":
            hit = max(ddu, ddv) <= cfg.hit_threshold
        else:
            hit = float(np.hypot(ddu, ddv)) <= cfg.hit_threshold
    return TrialRecord(
        metric=metric,
        level=level,
        trial=trial,
        true_du=true_du,
        true_dv=true_dv,
        rec_du=rec_du,
        rec_dv=rec_dv,
        hit=hit,
        runtime_ms=runtime_ms,
        failed=failed,
    )


def run_sweep(cfg: SweepConfig, threads: int = 1) -> list[TrialRecord]:
    """All trials for every metric x level, deterministic for a fixed seed."""
    jobs = [
        (metric, li, trial)
        for metric in cfg.metrics
        for li in range(len(cfg.levels))
        for trial in range(cfg.trials_per_level)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda j: _run_trial(cfg, *j), jobs))
    else:
        records = [_run_trial(cfg, *j) for j in jobs]
    return records


def hit_rate(records: list[TrialRecord]) -> list[dict]:
    """Hits / trials per (metric, level) group, preserving first-seen order."""
    if not records:
        raise ParameterError("no records")
    groups: dict[tuple[str, float], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.metric, r.level), []).append(r)
    table = []
    for (metric, level), rs in groups.items():
        hits = sum(1 for r in rs if r.hit)
        table.append(
            {
                "metric": metric,
                "level": level,
                "trials": len(rs),
                "hits": hits,
                "rate": hits / len(rs),
                "mean_runtime_ms": float(np.mean([r.runtime_ms for r in rs])),
            }
        )
    return table


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def export_results(
    records: list[TrialRecord],
    fmt: str = "csv",
    path: str | Path | None = None,
    plot: str | Path | None = None,
    include_timings: bool = False,
) -> str:
    """Serialize the per-group summary as CSV or JSON; optionally plot SVG.

    Columns come in a stable order (metric, level, trials, hits, rate, and
    mean_runtime_ms only when timings are requested; wall-clock values are
    left out by default so outputs stay byte-reproducible).
    """
    table = hit_rate(records)
    columns = ["metric", "level", "trials", "hits", "rate"]
    if include_timings:
        columns.append("mean_runtime_ms")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in table:
            writer.writerow([_fmt(row[c]) for c in columns])
        text = buf.getvalue()
    elif fmt == "json":
        text = json.dumps([{c: row[c] for c in columns} for row in table], indent=2) + "\n"
    else:
        raise ParameterError(f"format must be 'csv' or 'json', got {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    if plot is not None:
        Path(plot).write_text(_svg_plot(table))
    return text


def _svg_plot(table: list[dict], width: int = 640, height: int = 420) -> str:
    """Minimal deterministic line plot: hit rate vs level, one line per metric."""
    metrics = []
    for row in table:
        if row["metric"] not in metrics:
            metrics.append(row["metric"])
    levels = sorted({row["level"] for row in table})
    lo, hi = (min(levels), max(levels)) if levels else (0.0, 1.0)
    span = (hi - lo) or 1.0
    m_left, m_bottom, m_top, m_right = 50, 40, 20, 20
    px = lambda lv: m_left + (lv - lo) / span * (width - m_left - m_right)
    py = lambda rate: height - m_bottom - rate * (height - m_top - m_bottom)
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{m_left}" y1="{py(0)}" x2="{width - m_right}" y2="{py(0)}" stroke="black"/>',
        f'<line x1="{m_left}" y1="{py(0)}" x2="{m_left}" y2="{py(1)}" stroke="black"/>',
        f'<text x="{m_left}" y="{height - 8}" font-size="12">level {_fmt(lo)} .. {_fmt(hi)}</text>',
        f'<text x="8" y="{py(1) + 4}" font-size="12">1.0</text>',
        f'<text x="8" y="{py(0) + 4}" font-size="12">0.0</text>',
    ]
    for k, metric in enumerate(metrics):
        pts = [
            (px(row["level"]), py(row["rate"]))
            for row in table
            if row["metric"] == metric
        ]
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        color = palette[k % len(palette)]
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - m_right - 90}" y="{m_top + 16 * (k + 1)}" '
            f'font-size="12" fill="{color}">{metric}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
