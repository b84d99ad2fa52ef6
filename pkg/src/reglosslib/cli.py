"""Command-line entry point.

Subcommands: register, sweep-noise, sweep-blur, loss, metrics, match-cells,
gli, pli (sim | fit | fom).

Exit codes: 0 success; 1 I/O or file-format problem; 2 no solution or
degenerate input; 3 invalid flags or parameter values.

Structured outputs are JSON (floats printed with 17 significant digits so
golden files round-trip losslessly), tables are CSV, maps use the portable
float raster format. Every run logs its resolved configuration: commands
that write an output file put a ``<out>.config.json`` sidecar next to it,
commands that print embed the configuration under the ``"config"`` key.
``--threads`` defaults to the REGLOSS_THREADS environment variable, then
to the available cores.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, losses, metrics, pli, raster, registration
from .errors import (
    CoverageError,
    DegenerateInputError,
    DimensionError,
    NoSolutionError,
    ParameterError,
    RasterFormatError,
    RegLossError,
)

EXIT_IO = 1
EXIT_NO_SOLUTION = 2
EXIT_BAD_FLAGS = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_FLAGS)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _to_json(obj, indent=0) -> str:
    """JSON text with every float at 17 significant digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {_to_json(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(f"{pad}  {_to_json(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    return json.dumps(obj)


def _emit(payload: dict, out: str | None, config: dict) -> None:
    if out:
        Path(out).write_text(_to_json(payload) + "\n")
        _sidecar(out, config)
    else:
        payload = dict(payload)
        payload["config"] = config
        print(_to_json(payload))


def _sidecar(out_path: str, config: dict) -> None:
    Path(str(out_path) + ".config.json").write_text(_to_json(config) + "\n")


def _threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("REGLOSS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParameterError(f"REGLOSS_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _parse_angles(spec: str) -> registration.AngleGrid:
    try:
        start, stop, step = (float(p) for p in spec.split(":"))
    except ValueError:
        raise ParameterError(f"--angles expects start:stop:step, got {spec!r}")
    if start == stop:
        return registration.AngleGrid(start, stop, max(step, 1e-9))
    return registration.AngleGrid(start, stop, step)


def _parse_overlap(spec: str):
    if spec == "full":
        return "full", None
    if spec.startswith("min"):
        try:
            return "min_count", int(spec[3:])
        except ValueError:
            pass
    raise ParameterError(f"--overlap expects 'full' or 'minN', got {spec!r}")


def _load_gray(path: str) -> np.ndarray:
    return raster.load_any(path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_register(args) -> int:
    fixed = _load_gray(args.fixed)
    moving = _load_gray(args.moving)
    grid = _parse_angles(args.angles)
    policy, min_overlap = _parse_overlap(args.overlap)
    config = {
        "subcommand": "register",
        "fixed": args.fixed,
        "moving": args.moving,
        "metric": args.metric,
        "angles": {"start": grid.start, "stop": grid.stop, "step": grid.step},
        "overlap": args.overlap,
        "windowed": not args.no_window,
        "embed": args.embed,
        "threads": _threads(args.threads),
    }
    if grid.start == grid.stop == 0.0:
        t = registration.register_translation(
            fixed,
            moving,
            args.metric,
            overlap=policy,
            min_overlap=min_overlap,
            windowed=not args.no_window,
            embed=args.embed,
        )
    else:
        t = registration.register_rigid(
            fixed,
            moving,
            args.metric,
            grid,
            policy,
            min_overlap=min_overlap,
            windowed=not args.no_window,
            embed=args.embed,
            threads=config["threads"],
        )
    _emit(t.to_dict(), args.out, config)
    if args.warped:
        out_h = args.warped_size or fixed.shape[0]
        out_w = args.warped_size or fixed.shape[1]
        warped = registration.apply_rigid(moving, t, out_h, out_w)
        raster.write_raster(args.warped, warped)
    return 0


def cmd_sweep(args, degradation: str) -> int:
    cfg = bench.SweepConfig(
        target_size=args.target_size,
        tile_size=args.tile_size,
        trials_per_level=args.trials,
        hit_threshold=args.hit_threshold,
        degradation=degradation,
        levels=tuple(args.levels),
        metrics=tuple(args.metrics),
        seed=args.seed,
        clip_8bit=args.clip if args.clip is not None else (degradation == "noise"),
        hit_norm=args.hit_norm,
        texture=args.texture,
        source_dir=args.source_dir,
        fixed_source=args.fixed_source,
    )
    threads = _threads(args.threads)
    records = bench.run_sweep(cfg, threads=threads)
    text = bench.export_results(
        records,
        fmt=args.format,
        path=args.out,
        plot=args.plot,
        include_timings=args.timings,
    )
    config = {"subcommand": f"sweep-{degradation}", "threads": threads, **cfg.__dict__}
    if args.out:
        _sidecar(args.out, config)
    else:
        sys.stdout.write(text)
    return 0


def cmd_loss(args) -> int:
    pred = _load_gray(args.prediction)
    target = _load_gray(args.target)
    transform = None
    if args.transform:
        spec = json.loads(Path(args.transform).read_text())
        transform = registration.RigidTransform(
            du=int(spec["du"]),
            dv=int(spec["dv"]),
            theta=float(spec["theta"]),
            score=float(spec.get("score", 0.0)),
            metric=str(spec.get("metric", "mse")),
        )
    weights = losses.LossWeights(lam=args.lam, eta=args.eta, style_scale=args.style_scale)
    config = {
        "subcommand": "loss",
        "prediction": args.prediction,
        "target": args.target,
        "transform": args.transform,
        "lambda": weights.lam,
        "eta": weights.eta,
        "style_scale": weights.style_scale,
        "style_features": "identity (image channels as one layer)",
    }

    t = transform or registration.RigidTransform(0, 0, 0.0, 0.0, "identity")
    aligned = registration.apply_rigid(target, t, pred.shape[0], pred.shape[1])
    l_r = losses.reconstruction_loss(pred, target, t)

    def identity_stack(img):
        a = img if img.ndim == 3 else img[:, :, None]
        return [np.moveaxis(a, 2, 0)]

    l_s = losses.gram_style_loss(identity_stack(aligned), identity_stack(pred))
    payload = {"l_r": l_r, "l_s": l_s}
    l_e = 0.0
    if args.pred_on_rotated:
        pred_rot = _load_gray(args.pred_on_rotated)
        l_e = losses.equivariance_loss(pred, pred_rot)
        payload["l_e"] = l_e
    payload["total"] = losses.total_loss(l_r, l_s, l_e, weights)
    _emit(payload, args.out, config)
    return 0


def cmd_metrics(args) -> int:
    a = _load_gray(args.image_a)
    b = _load_gray(args.image_b)
    mask = raster.load_any(args.mask) if args.mask else None
    config = {
        "subcommand": "metrics",
        "image_a": args.image_a,
        "image_b": args.image_b,
        "mask": args.mask,
        "bins": args.bins,
        "dynamic_range": args.dynamic_range,
    }
    payload = {
        "rmse": metrics.rmse(a, b, mask),
        "ssim": metrics.ssim(a, b, mask, dynamic_range=args.dynamic_range),
        "mutual_information": metrics.mutual_information(a, b, bins=args.bins, mask=mask),
    }
    _emit(payload, args.out, config)
    return 0


def cmd_match_cells(args) -> int:
    pred = raster.read_label_png(args.prediction)
    target = raster.read_label_png(args.target)
    # physical threshold converted to pixels through pitch and shrinkage
    min_area_px = args.min_area_um2 / (args.pixel_area * args.shrinkage)
    config = {
        "subcommand": "match-cells",
        "prediction": args.prediction,
        "target": args.target,
        "iou_threshold": args.iou,
        "min_area_um2": args.min_area_um2,
        "pixel_area_um2": args.pixel_area,
        "shrinkage": args.shrinkage,
        "bins_um2": args.bins,
    }
    res = metrics.match_instances(pred, target, min_area=min_area_px, iou_threshold=args.iou)
    payload = {"tp": res.tp, "fp": res.fp, "fn": res.fn, "f1": res.f1}
    if args.bins:
        edges = [float(x) for x in args.bins.split(",")]
        bins = list(zip(edges[:-1], edges[1:]))
        per_bin = metrics.f1_by_size_bins(
            pred,
            target,
            bins,
            shrinkage=args.shrinkage,
            pixel_area=args.pixel_area,
            iou_threshold=args.iou,
        )
        payload["bins"] = [
            {"lo": lo, "hi": hi, "tp": r.tp, "fp": r.fp, "fn": r.fn, "f1": r.f1}
            for (lo, hi), r in zip(bins, per_bin)
        ]
    _emit(payload, args.out, config)
    return 0


def cmd_gli(args) -> int:
    stain = _load_gray(args.stain)
    if stain.max() > 1.0 + 1e-9:
        stain = stain / 255.0
    cfg = metrics.ThresholdConfig(window=args.window, offset=args.offset)
    config = {
        "subcommand": "gli",
        "stain": args.stain,
        "window": cfg.window,
        "offset": cfg.offset,
        "block": args.block,
        "n_profiles": args.profiles,
        "smooth_kernel": args.smooth_kernel,
    }
    g = metrics.gli_image(stain, cfg, block=args.block)
    raster.write_raster(args.out, g)
    _sidecar(args.out, config)
    if args.profile_out:
        prof = metrics.gli_profiles(g, n_profiles=args.profiles, smooth_kernel=args.smooth_kernel)
        Path(args.profile_out).write_text(
            _to_json({"average_profile": list(prof.average_profile)}) + "\n"
        )
    return 0


def cmd_pli(args) -> int:
    if args.pli_command == "sim":
        params = pli.PliParams.from_stack(raster.read_raster(args.params))
        angles = pli.default_angles(args.angles)
        series = pli.synthesize_series(params, angles)
        config = {"subcommand": "pli sim", "params": args.params, "n_angles": args.angles}
        raster.write_raster(args.out, np.moveaxis(series, 0, 2))
        _sidecar(args.out, config)
        return 0
    if args.pli_command == "fit":
        stackraw = raster.read_raster(args.series)
        if stackraw.ndim != 3:
            raise DimensionError("pli fit expects a multi-channel series raster")
        series = np.moveaxis(stackraw, 2, 0)
        params = pli.fit_params(series)
        config = {"subcommand": "pli fit", "series": args.series, "n_angles": series.shape[0]}
        raster.write_raster(args.out, params.stack())
        _sidecar(args.out, config)
        return 0
    if args.pli_command == "fom":
        params = pli.PliParams.from_stack(raster.read_raster(args.params))
        rgb = pli.render_fom(params)
        if args.gamma != 1.0:
            rgb = pli.gamma_scale(rgb, args.gamma)
        config = {"subcommand": "pli fom", "params": args.params, "gamma": args.gamma}
        raster.write_image(args.out, rgb, scale=255.0)
        _sidecar(args.out, config)
        return 0
    raise ParameterError(f"unknown pli subcommand {args.pli_command!r}")


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="regloss", description=__doc__.split("\n")[0])
    parser.add_argument("--threads", type=int, default=None, help="worker thread cap")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="rigid registration of two rasters")
    p.add_argument("fixed")
    p.add_argument("moving")
    p.add_argument("--metric", default="mse", choices=sorted(registration.ALL_METRICS))
    p.add_argument("--angles", default="-7.5:7.5:0.5", help="start:stop:step degrees; 0:0:1 = translation only")
    p.add_argument("--overlap", default="full", help="'full' or 'minN' (N = pixel count)")
    p.add_argument("--no-window", action="store_true", help="disable the Hann window for pc/bipc")
    p.add_argument("--embed", default="center", choices=["center", "topleft"])
    p.add_argument("--out", help="transform JSON path (stdout when omitted)")
    p.add_argument("--warped", help="write the aligned moving image as a float raster")
    p.add_argument("--warped-size", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_register)

    for name in ("sweep-noise", "sweep-blur"):
        p = sub.add_parser(name, help=f"robustness sweep with {name.split('-')[1]} degradation")
        p.add_argument("--target-size", type=int, default=460)
        p.add_argument("--tile-size", type=int, default=260)
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--hit-threshold", type=float, default=5.0)
        p.add_argument(
            "--levels",
            type=float,
            nargs="+",
            default=[0.0, 5.0, 10.0, 15.0, 20.0, 25.0] if name == "sweep-noise" else [0.0, 10.0, 20.0, 30.0, 40.0, 50.0],
        )
        p.add_argument("--metrics", nargs="+", default=list(bench.DEFAULT_METRICS))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--clip", action=argparse.BooleanOptionalAction, default=None,
                       help="clip degraded tiles to 0..255 (default: on for noise, off for blur)")
        p.add_argument("--hit-norm", default="chebyshev", choices=["chebyshev", "euclidean"])
        p.add_argument("--texture", default="cell_blobs",
                       choices=["cell_blobs", "filtered_noise", "from_directory"])
        p.add_argument("--source-dir", default=None)
        p.add_argument("--fixed-source", action="store_true")
        p.add_argument("--format", default="csv", choices=["csv", "json"])
        p.add_argument("--out", default=None)
        p.add_argument("--plot", default=None, help="optional SVG line plot path")
        p.add_argument("--timings", action="store_true", help="include mean runtime column")
        p.add_argument("--threads", type=int, default=None)
        p.set_defaults(func=lambda a, d=name.split("-")[1]: cmd_sweep(a, d))

    p = sub.add_parser("loss", help="loss components between prediction and target")
    p.add_argument("prediction")
    p.add_argument("target")
    p.add_argument("--transform", help="transform JSON from the register subcommand")
    p.add_argument("--pred-on-rotated", help="prediction on the 180deg-rotated input, enables l_e")
    p.add_argument("--lam", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--style-scale", type=float, default=1.0e4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("metrics", help="RMSE / SSIM / mutual information")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--mask")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--dynamic-range", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("match-cells", help="instance-matching F1 between label masks")
    p.add_argument("prediction")
    p.add_argument("target")
    p.add_argument("--iou", type=float, default=0.3)
    p.add_argument("--min-area-um2", type=float, default=100.0)
    p.add_argument("--pixel-area", type=float, default=metrics.DEFAULT_PIXEL_AREA_UM2)
    p.add_argument("--shrinkage", type=float, default=0.97)
    p.add_argument("--bins", help="comma-separated um^2 bin edges for size-binned F1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_match_cells)

    p = sub.add_parser("gli", help="grey-level-index image and laminar profiles")
    p.add_argument("stain")
    p.add_argument("--window", type=int, default=101)
    p.add_argument("--offset", type=float, default=10.0 / 255.0)
    p.add_argument("--block", type=int, default=16)
    p.add_argument("--profiles", type=int, default=31)
    p.add_argument("--smooth-kernel", type=int, default=3)
    p.add_argument("--out", required=True, help="output float raster path")
    p.add_argument("--profile-out", help="optional averaged-profile JSON path")
    p.set_defaults(func=cmd_gli)

    p = sub.add_parser("pli", help="signal-model utilities")
    psub = p.add_subparsers(dest="pli_command", required=True)
    ps = psub.add_parser("sim", help="synthesize a measurement series from parameter maps")
    ps.add_argument("params", help="3-channel parameter raster")
    ps.add_argument("--angles", type=int, default=9)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_pli)
    pf = psub.add_parser("fit", help="recover parameter maps from a series raster")
    pf.add_argument("series")
    pf.add_argument("--out", required=True)
    pf.set_defaults(func=cmd_pli)
    pm = psub.add_parser("fom", help="render the orientation map as PNG")
    pm.add_argument("params")
    pm.add_argument("--gamma", type=float, default=1.0)
    pm.add_argument("--out", required=True)
    pm.set_defaults(func=cmd_pli)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RasterFormatError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NoSolutionError, DegenerateInputError, CoverageError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_FLAGS
    except RegLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION


if __name__ == "__main__":
    sys.exit(main())
