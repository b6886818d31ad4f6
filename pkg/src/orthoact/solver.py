"""3D position from per-view heatmaps.

The decoded position maximizes ``prod_c (H_c[proj_c(p)] + eps)`` over the
workspace, where ``H_c[.]`` is bilinear sampling at the point's sub-pixel
projection into view ``c``. The product is evaluated as a sum of logs.

Search is a deterministic coarse-to-fine grid: ``coarse_n^3`` cell centers,
then ``refine_levels`` rounds of a local ``5^3`` grid whose spacing halves
each round. Ties go to the lexicographically first ``(x, y, z)`` grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .codec import (
    DEFAULT_SCHEME,
    AnnotatedView,
    AnnotationScheme,
    EndEffectorState,
    ScalarHeatmap,
    decode_gripper,
    decode_rotation_axes,
    extract_channel,
    refine_translation_px,
)
from .errors import (
    InvalidWorkspaceError,
    MissingRotationError,
    OrthoActError,
    ResourceLimitError,
    UnderdeterminedPositionError,
)
from .geometry import EulerRotation, OrthoCamera, Workspace, project_ortho

DEFAULT_EPS = 1e-3
DEFAULT_COARSE_N = 64
DEFAULT_REFINE_LEVELS = 6
BRUTEFORCE_LIMIT = 10 ** 7


@dataclass(frozen=True)
class SolverConfig:
    eps: float = DEFAULT_EPS
    coarse_n: int = DEFAULT_COARSE_N
    refine_levels: int = DEFAULT_REFINE_LEVELS

    def to_dict(self) -> dict:
        return {"eps": self.eps, "coarse_n": self.coarse_n, "refine_levels": self.refine_levels}


@dataclass(frozen=True, eq=False)
class PositionSolution:
    position: np.ndarray
    score: float
    per_view_px: list
    coarse_score: float = float("nan")


def _pad(values: np.ndarray) -> np.ndarray:
    h, w = values.shape
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = values
    return padded


def _bilinear_padded(padded: np.ndarray, u, v):
    h, w = padded.shape[0] - 2, padded.shape[1] - 2
    x = u - 0.5
    y = v - 0.5
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    xi = np.clip(x0.astype(np.int64) + 1, 0, w)
    yi = np.clip(y0.astype(np.int64) + 1, 0, h)
    v00 = padded[yi, xi]
    v01 = padded[yi, xi + 1]
    v10 = padded[yi + 1, xi]
    v11 = padded[yi + 1, xi + 1]
    out = (v00 * (1.0 - fx) + v01 * fx) * (1.0 - fy) + (v10 * (1.0 - fx) + v11 * fx) * fy
    inside = (u >= 0) & (u < w) & (v >= 0) & (v < h)
    return np.where(inside, out, 0.0)


def sample_bilinear(hm, u, v):
    """Bilinear interpolation between pixel centers.

    ``hm`` is a :class:`ScalarHeatmap` or a 2D array. Pixels beyond the
    border count as 0 and queries outside ``[0, W) x [0, H)`` return 0.
    Works on scalars or arrays of coordinates.
    """
    values = hm.values if isinstance(hm, ScalarHeatmap) else np.asarray(hm)
    out = _bilinear_padded(_pad(np.asarray(values, dtype=np.float64)),
                           np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64))
    if out.ndim == 0:
        return float(out)
    return out


def _check_inputs(heatmaps, cams, ws, eps):
    if not isinstance(ws, Workspace):
        ws = Workspace(*ws)
    if not eps > 0:
        raise ValueError("eps must be positive")
    heatmaps = list(heatmaps)
    cams = [hm.camera for hm in heatmaps] if cams is None else list(cams)
    if len(cams) != len(heatmaps):
        raise ValueError("need one camera per heatmap")
    return heatmaps, cams, ws


def grid_axes(ws: Workspace, n: int) -> list[np.ndarray]:
    """Cell-center coordinates of an ``n``-per-axis grid over ``ws``."""
    lo, size = ws.lo, ws.size
    return [lo[a] + (np.arange(n) + 0.5) * (size[a] / n) for a in range(3)]


def _log_term(padded, cam, pts, eps):
    u, v, _ = project_ortho(pts, cam)
    return np.log(_bilinear_padded(padded, u, v) + eps)


def _constant_view(hm, cam, ws) -> Optional[float]:
    """Value of a spatially uniform heatmap whose camera sees the whole workspace.

    Such a view multiplies every candidate by the same factor, so it is
    folded into the reported score but left out of comparisons.
    """
    values = hm.values
    first = values.flat[0]
    if not np.all(values == first):
        return None
    u, v, _ = project_ortho(ws.corners(), cam)
    # bilinear sampling stays exact only between the outermost pixel centers
    if np.all((u >= 0.5) & (u <= cam.width - 0.5) & (v >= 0.5) & (v <= cam.height - 0.5)):
        return float(first)
    return None


def _coarse_objective(heatmaps, cams, ws, eps, n):
    axes = grid_axes(ws, n)
    total = np.zeros((n, n, n))
    for hm, cam in zip(heatmaps, cams):
        R = cam.pose.rotation
        used = [bool(R[0, a] != 0 or R[1, a] != 0) for a in range(3)]
        # an unused axis has exactly-zero coefficients: evaluating it at a
        # single coordinate gives bitwise the same projections
        sub = [axes[a] if used[a] else axes[a][:1] for a in range(3)]
        X, Y, Z = np.meshgrid(*sub, indexing="ij")
        pts = np.stack([X, Y, Z], axis=-1)
        total = total + _log_term(hm, cam, pts, eps)
    return axes, total


def _split(heatmaps, cams, ws):
    active, constant = [], []
    for hm, cam in zip(heatmaps, cams):
        c = _constant_view(hm, cam, ws)
        if c is None:
            active.append((_pad(np.asarray(hm.values, dtype=np.float64)), cam))
        else:
            constant.append(c)
    return active, constant


def _final(position, active, constant, eps, cams, coarse_log):
    pt = np.asarray(position, dtype=np.float64)
    log_total = sum(float(_log_term(hm, cam, pt, eps)) for hm, cam in active)
    log_total += sum(math.log(c + eps) for c in constant)
    px = [project_ortho(pt, cam)[:2] for cam in cams]
    return PositionSolution(pt, math.exp(log_total), px, math.exp(coarse_log))


def solve_position(heatmaps: Sequence[ScalarHeatmap], cams: Optional[Sequence[OrthoCamera]],
                   ws: Workspace, eps: float = DEFAULT_EPS, coarse_n: int = DEFAULT_COARSE_N,
                   refine_levels: int = DEFAULT_REFINE_LEVELS) -> PositionSolution:
    """Coarse-to-fine argmax of the heatmap likelihood product over ``ws``."""
    heatmaps, cams, ws = _check_inputs(heatmaps, cams, ws, eps)
    if coarse_n < 8:
        raise ValueError("coarse_n must be >= 8")
    if refine_levels < 0:
        raise ValueError("refine_levels must be >= 0")
    active, constant = _split(heatmaps, cams, ws)
    const_log = sum(math.log(c + eps) for c in constant)

    if active:
        axes, total = _coarse_objective([a[0] for a in active], [a[1] for a in active],
                                        ws, eps, coarse_n)
        k = int(np.argmax(total))
        i, j, l = np.unravel_index(k, total.shape)
        best = np.array([axes[0][i], axes[1][j], axes[2][l]])
        best_val = float(total[i, j, l])
    else:
        axes = grid_axes(ws, coarse_n)
        best = np.array([axes[0][0], axes[1][0], axes[2][0]])
        best_val = 0.0
    coarse_log = best_val + const_log

    if active:
        lo, hi = ws.lo, ws.hi
        step0 = ws.size / coarse_n
        offs = np.arange(-2, 3, dtype=np.float64)
        for level in range(1, refine_levels + 1):
            step = step0 / (2.0 ** level)
            cand = [best[a] + offs * step[a] for a in range(3)]
            X, Y, Z = np.meshgrid(*cand, indexing="ij")
            pts = np.stack([X, Y, Z], axis=-1)
            vals = np.zeros(X.shape)
            for hm, cam in active:
                vals = vals + _log_term(hm, cam, pts, eps)
            inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
            vals = np.where(inside, vals, -np.inf)
            k = int(np.argmax(vals))
            if vals.flat[k] > best_val:
                best = pts.reshape(-1, 3)[k].copy()
                best_val = float(vals.flat[k])

    return _final(best, active, constant, eps, cams, coarse_log)


def solve_position_bruteforce(heatmaps: Sequence[ScalarHeatmap],
                              cams: Optional[Sequence[OrthoCamera]], ws: Workspace,
                              eps: float = DEFAULT_EPS, n: int = 64) -> PositionSolution:
    """Exhaustive argmax over an ``n^3`` cell-center grid (reference oracle).

    Evaluates every grid point through every view directly; only the tie
    rule (first in lexicographic order) is shared with :func:`solve_position`.
    """
    heatmaps, cams, ws = _check_inputs(heatmaps, cams, ws, eps)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n ** 3 > BRUTEFORCE_LIMIT:
        raise ResourceLimitError(f"{n}^3 grid exceeds {BRUTEFORCE_LIMIT} points")
    xs, ys, zs = grid_axes(ws, n)
    Y, Z = np.meshgrid(ys, zs, indexing="ij")
    best_val = -np.inf
    best = None
    for i, x in enumerate(xs):
        pts = np.stack([np.full(Y.shape, x), Y, Z], axis=-1)
        total = np.zeros(Y.shape)
        for hm, cam in zip(heatmaps, cams):
            u, v, _ = project_ortho(pts, cam)
            total = total + np.log(sample_bilinear(hm, u, v) + eps)
        k = int(np.argmax(total))
        if total.flat[k] > best_val:
            best_val = float(total.flat[k])
            j, l = np.unravel_index(k, total.shape)
            best = np.array([x, ys[j], zs[l]])
    px = [project_ortho(best, cam)[:2] for cam in cams]
    return PositionSolution(best, math.exp(best_val), px, math.exp(best_val))


def objective(heatmaps, cams, p, eps: float = DEFAULT_EPS) -> float:
    """Likelihood product at a single point."""
    cams = [hm.camera for hm in heatmaps] if cams is None else cams
    pt = np.asarray(p, dtype=np.float64)
    return math.exp(sum(float(_log_term(_pad(np.asarray(hm.values, dtype=np.float64)), cam, pt, eps))
                        for hm, cam in zip(heatmaps, cams)))


# -- full decoding -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecodedState:
    """Everything recovered from a set of annotated views.

    Rotation axes or the gripper that could not be read are recorded in
    ``failures`` (error kind per item) and left as ``None``.
    """

    position: np.ndarray
    score: float
    per_view_px: list
    rotation: dict
    gripper_open: Optional[bool]
    failures: dict

    def to_state(self) -> EndEffectorState:
        missing = [a for a in ("x", "y", "z") if self.rotation.get(a) is None]
        if missing:
            raise MissingRotationError(missing[0])
        return EndEffectorState(tuple(self.position),
                                EulerRotation(self.rotation["x"], self.rotation["y"],
                                              self.rotation["z"]),
                                self.gripper_open)

    def to_json(self) -> dict:
        rot = [self.rotation.get(a) for a in ("x", "y", "z")]
        return {
            "position": [float(v) for v in self.position],
            "rotation_euler_xyz": rot,
            "gripper_open": self.gripper_open,
            "score": float(self.score),
        }


def _check_observability(views, heatmaps, threshold):
    present = [v.camera for v, hm in zip(views, heatmaps) if float(hm.values.max()) > threshold]
    if not present:
        raise UnderdeterminedPositionError("no view shows a translation hotspot")
    rows = np.concatenate([c.pose.rotation[:2] for c in present])
    if np.linalg.matrix_rank(rows, tol=1e-9) < 3:
        raise UnderdeterminedPositionError(
            f"translation hotspots visible in {len(present)} view(s) do not constrain all axes")


def decode_views(views: Sequence[AnnotatedView], ws: Workspace,
                 scheme: AnnotationScheme = DEFAULT_SCHEME,
                 config: SolverConfig = SolverConfig(),
                 decode_rotation: bool = True, decode_gripper_state: bool = True) -> DecodedState:
    """Position via the likelihood product, then rotations and gripper.

    Raises :class:`UnderdeterminedPositionError` when the views that still
    carry a translation hotspot cannot fix all three coordinates.
    """
    heatmaps = [extract_channel(v, scheme.translation_color, scheme.acceptance_radius)
                for v in views]
    _check_observability(views, heatmaps, scheme.rotation_threshold)
    sol = solve_position(heatmaps, [v.camera for v in views], ws, config.eps, config.coarse_n,
                         config.refine_levels)
    failures: dict = {}
    rotation: dict = {}
    if decode_rotation:
        centers = [refine_translation_px(v, px, scheme) for v, px in zip(views, sol.per_view_px)]
        for axis, value in decode_rotation_axes(views, scheme, centers).items():
            if isinstance(value, OrthoActError):
                failures[f"rotation_{axis}"] = value.kind
                rotation[axis] = None
            else:
                rotation[axis] = value
    gripper = None
    if decode_gripper_state:
        try:
            gripper = decode_gripper(views, scheme)
        except OrthoActError as exc:
            failures["gripper"] = exc.kind
    return DecodedState(sol.position, sol.score, sol.per_view_px, rotation, gripper, failures)
