"""Array-in/array-out adapter over the registration head and loss kernels.

This package contains no numerics of its own: every function marshals
numpy arrays into ``reglosslib`` and returns plain dictionaries, so a
training loop can call the head without touching the library's richer
types. Contiguous float64 inputs pass through without copying; float32
(or non-contiguous) inputs are widened to float64 with one copy. The
kernels themselves run inside numpy/scipy, which drop the interpreter
lock during FFTs and filtering, so data-loader threads are not blocked;
this layer adds no locks of its own and is safe to call concurrently.

Errors surface as the primary component's exception taxonomy
(reglosslib.errors), re-exported here.

Parity fixtures produced by the primary component's command line live in
``regloss.fixtures``; the shipped tests check bit-identical agreement.
"""

from __future__ import annotations

import numpy as np

from reglosslib.errors import (  # noqa: F401  (re-exported taxonomy)
    CoverageError,
    DegenerateInputError,
    DimensionError,
    NoSolutionError,
    ParameterError,
    RegLossError,
)
from reglosslib import losses as _losses
from reglosslib import registration as _registration

__all__ = [
    "apply_rigid_py",
    "losses_py",
    "masked_score_map_py",
    "register_rigid_py",
    "fixture_path",
]

__version__ = "0.1.0"


def _as_view(a, name: str) -> np.ndarray:
    """Contiguous float64 view; widens 32-bit input with a documented copy."""
    arr = np.asarray(a)
    if arr.dtype == np.float64 and arr.flags.c_contiguous:
        return arr
    return np.ascontiguousarray(arr, dtype=np.float64)


def register_rigid_py(
    fixed,
    moving,
    metric: str = "mse",
    angle_grid: tuple[float, float, float] = (-7.5, 7.5, 0.5),
    overlap: str = "full",
    *,
    fixed_mask=None,
    moving_mask=None,
    threads: int = 1,
) -> dict:
    """Exhaustive rotation + translation registration; returns
    {"du", "dv", "theta", "score", "metric"}."""
    grid = _registration.AngleGrid(*angle_grid)
    t = _registration.register_rigid(
        _as_view(fixed, "fixed"),
        _as_view(moving, "moving"),
        metric,
        grid,
        overlap,
        fixed_mask=None if fixed_mask is None else _as_view(fixed_mask, "fixed_mask"),
        moving_mask=None if moving_mask is None else _as_view(moving_mask, "moving_mask"),
        threads=threads,
    )
    return t.to_dict()


def masked_score_map_py(fixed, fixed_mask, moving, moving_mask, metric: str = "mse",
                        min_overlap: int = 1) -> dict:
    """Masked score map over every placement of the moving image; returns
    {"values", "valid", "overlap_counts", "origin", "objective"}."""
    fn = _registration.masked_mse if metric == "mse" else _registration.masked_cc
    if metric not in ("mse", "cc"):
        raise ParameterError(f"masked score maps exist for 'mse' and 'cc', got {metric!r}")
    m = fn(
        _as_view(fixed, "fixed"),
        _as_view(fixed_mask, "fixed_mask"),
        _as_view(moving, "moving"),
        _as_view(moving_mask, "moving_mask"),
        min_overlap=min_overlap,
    )
    return {
        "values": m.values,
        "valid": m.valid,
        "overlap_counts": m.overlap_counts,
        "origin": tuple(m.origin),
        "objective": m.objective,
    }


def apply_rigid_py(img, transform: dict, out_h: int, out_w: int) -> np.ndarray:
    """Warp by a transform dict (as returned by register_rigid_py)."""
    t = _registration.RigidTransform(
        du=int(transform["du"]),
        dv=int(transform["dv"]),
        theta=float(transform["theta"]),
        score=float(transform.get("score", 0.0)),
        metric=str(transform.get("metric", "mse")),
    )
    return _registration.apply_rigid(_as_view(img, "img"), t, out_h, out_w)


def losses_py(
    pred,
    target,
    transform: dict | None = None,
    weights: dict | None = None,
    *,
    pred_on_rotated=None,
) -> dict:
    """Loss components of a (prediction, target) pair.

    Mirrors the primary component's loss command: the reconstruction term
    compares the prediction against the rigidly aligned target, the style
    term uses the image channels as a one-layer feature stack, and the
    equivariance term appears only when ``pred_on_rotated`` (the model's
    output on the 180-degree rotated input) is supplied.
    """
    w = _losses.LossWeights(**(weights or {}))
    pred = _as_view(pred, "pred")
    target = _as_view(target, "target")
    t = _registration.RigidTransform(0, 0, 0.0, 0.0, "identity")
    if transform is not None:
        t = _registration.RigidTransform(
            du=int(transform["du"]),
            dv=int(transform["dv"]),
            theta=float(transform["theta"]),
            score=float(transform.get("score", 0.0)),
            metric=str(transform.get("metric", "mse")),
        )
    l_r = _losses.reconstruction_loss(pred, target, t)
    aligned = _registration.apply_rigid(target, t, pred.shape[0], pred.shape[1])

    def identity_stack(img):
        a = img if img.ndim == 3 else img[:, :, None]
        return [np.moveaxis(a, 2, 0)]

    l_s = _losses.gram_style_loss(identity_stack(aligned), identity_stack(pred))
    out = {"l_r": l_r, "l_s": l_s}
    l_e = 0.0
    if pred_on_rotated is not None:
        l_e = _losses.equivariance_loss(pred, _as_view(pred_on_rotated, "pred_on_rotated"))
        out["l_e"] = l_e
    out["total"] = _losses.total_loss(l_r, l_s, l_e, w)
    return out


def fixture_path(name: str):
    """Path to a shipped parity fixture file."""
    from importlib import resources

    return resources.files(__name__) / "fixtures" / name
