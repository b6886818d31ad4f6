"""Hotspot annotations: encode an end-effector state onto canonical views and read it back.

Each view receives

* a red translation Gaussian at the projected end-effector position,
* a rotation Gaussian for the Euler angle assigned to that view, placed on a
  circle of ``rotation_radius`` pixels around the translation pixel at screen
  angle ``theta`` (counterclockwise from image right; image y points down),
* a solid gripper disk in the top-left corner (white = open, magenta = closed).

Compositing: per pixel the strongest hotspot wins (max weight; earlier
hotspot on ties) and is alpha-blended over the prepared background with its
Gaussian weight. Painting a hotspot list twice gives the same image as
painting it once, and two annotations never sum into a new hue.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import MissingGripperError, MissingRotationError, OutOfFrameError
from .geometry import EulerRotation, OrthoCamera, Workspace, project_ortho, wrap_angle
from .renderer import RenderedView

NO_RECONSTRUCTION = "no_reconstruction"
RECONSTRUCTION = "reconstruction"
FADED_RECONSTRUCTION = "faded_reconstruction"
MODES = (NO_RECONSTRUCTION, RECONSTRUCTION, FADED_RECONSTRUCTION)
MODE_ALIASES = {"none": NO_RECONSTRUCTION, "full": RECONSTRUCTION, "faded": FADED_RECONSTRUCTION}
DEFAULT_MODE = FADED_RECONSTRUCTION
# Centroids weight each pixel by its score minus this fraction of the peak
# score. The flanks of a hotspot blend with the background and score
# differently over different backgrounds; the core does not.
CENTROID_FLOOR = 0.7

RED = (255, 0, 0)
YELLOW = (255, 255, 0)
GREEN = (0, 255, 0)
BLUE = (0, 0, 255)
WHITE = (255, 255, 255)
MAGENTA = (255, 0, 255)


def resolve_mode(mode: str) -> str:
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise ValueError(f"unknown background mode {mode!r}")
    return mode


@dataclass(frozen=True)
class AnnotationScheme:
    translation_color: tuple = RED
    # (view label, Euler axis, color)
    rotation_assignments: tuple = (
        ("front", "x", YELLOW),
        ("top", "z", BLUE),
        ("left", "y", GREEN),
        ("right", "y", GREEN),
    )
    rotation_radius: float = 30.0
    translation_sigma: float = 4.0
    rotation_sigma: float = 4.0
    gripper_center: tuple = (16.0, 16.0)
    gripper_radius: float = 8.0
    gripper_open_color: tuple = WHITE
    gripper_closed_color: tuple = MAGENTA
    acceptance_radius: float = 160.0
    rotation_window: float = 45.0
    rotation_threshold: float = 0.2

    def rotation_for(self, label: str):
        """``(axis, color)`` assigned to view ``label`` or ``None``."""
        for view, axis, color in self.rotation_assignments:
            if view == label:
                return axis, tuple(color)
        return None

    def views_for_axis(self, axis: str) -> list[str]:
        return [view for view, a, _ in self.rotation_assignments if a == axis]

    def to_dict(self) -> dict:
        return {
            "translation_color": list(self.translation_color),
            "rotation_assignments": [
                {"view": v, "axis": a, "color": list(c)} for v, a, c in self.rotation_assignments
            ],
            "rotation_radius": float(self.rotation_radius),
            "translation_sigma": float(self.translation_sigma),
            "rotation_sigma": float(self.rotation_sigma),
            "gripper_center": [float(v) for v in self.gripper_center],
            "gripper_radius": float(self.gripper_radius),
            "gripper_open_color": list(self.gripper_open_color),
            "gripper_closed_color": list(self.gripper_closed_color),
            "acceptance_radius": float(self.acceptance_radius),
            "rotation_window": float(self.rotation_window),
            "rotation_threshold": float(self.rotation_threshold),
        }

    @classmethod
    def from_dict(cls, d) -> "AnnotationScheme":
        return cls(
            translation_color=tuple(d["translation_color"]),
            rotation_assignments=tuple(
                (r["view"], r["axis"], tuple(r["color"])) for r in d["rotation_assignments"]
            ),
            rotation_radius=float(d["rotation_radius"]),
            translation_sigma=float(d["translation_sigma"]),
            rotation_sigma=float(d["rotation_sigma"]),
            gripper_center=tuple(d["gripper_center"]),
            gripper_radius=float(d["gripper_radius"]),
            gripper_open_color=tuple(d["gripper_open_color"]),
            gripper_closed_color=tuple(d["gripper_closed_color"]),
            acceptance_radius=float(d["acceptance_radius"]),
            rotation_window=float(d["rotation_window"]),
            rotation_threshold=float(d["rotation_threshold"]),
        )


DEFAULT_SCHEME = AnnotationScheme()


@dataclass(frozen=True)
class EndEffectorState:
    position: tuple
    rotation: EulerRotation = field(default_factory=EulerRotation)
    gripper_open: Optional[bool] = None

    def __post_init__(self):
        p = tuple(float(v) for v in np.asarray(self.position, dtype=np.float64).reshape(3))
        if not all(math.isfinite(v) for v in p):
            raise ValueError("position must be finite")
        object.__setattr__(self, "position", p)
        if not isinstance(self.rotation, EulerRotation):
            object.__setattr__(self, "rotation", EulerRotation(*self.rotation))
        if self.gripper_open is not None:
            object.__setattr__(self, "gripper_open", bool(self.gripper_open))

    def inside(self, ws: Workspace) -> bool:
        return bool(ws.contains(np.array(self.position)))

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "rotation_euler_xyz": [self.rotation.rx, self.rotation.ry, self.rotation.rz],
            "gripper_open": self.gripper_open,
        }

    @classmethod
    def from_dict(cls, d) -> "EndEffectorState":
        return cls(tuple(d["position"]), EulerRotation(*d["rotation_euler_xyz"]),
                   d.get("gripper_open"))


@dataclass(frozen=True)
class Hotspot:
    """Isotropic Gaussian blob centered at continuous pixel ``(u, v)``."""

    u: float
    v: float
    sigma: float
    color: tuple
    kind: str = "translation"
    axis: Optional[str] = None

    def moved(self, du: float, dv: float) -> "Hotspot":
        return replace(self, u=self.u + du, v=self.v + dv)


@dataclass(frozen=True, eq=False)
class AnnotatedView:
    """Annotated canonical view.

    ``background`` (prepared background with the gripper disk) and
    ``hotspots`` are kept when the view was produced by :func:`encode` so the
    noise harness can repaint it; views read from disk carry neither.
    """

    label: str
    rgb: np.ndarray
    mode: str
    camera: OrthoCamera
    background: Optional[np.ndarray] = None
    hotspots: tuple = ()


@dataclass(frozen=True, eq=False)
class ScalarHeatmap:
    values: np.ndarray
    camera: OrthoCamera


def prepare_background(rgb: np.ndarray, mode: str) -> np.ndarray:
    mode = resolve_mode(mode)
    rgb = np.asarray(rgb, dtype=np.uint8)
    if mode == NO_RECONSTRUCTION:
        return np.zeros_like(rgb)
    if mode == FADED_RECONSTRUCTION:
        return rgb // 2
    return rgb.copy()


@functools.lru_cache(maxsize=32)
def _disk_mask(h: int, w: int, cu: float, cv: float, rad: float) -> np.ndarray:
    jj, ii = np.mgrid[0:h, 0:w]
    mask = (ii + 0.5 - cu) ** 2 + (jj + 0.5 - cv) ** 2 <= rad * rad
    mask.setflags(write=False)
    return mask


def _gripper_mask(shape, scheme: AnnotationScheme) -> np.ndarray:
    cu, cv = scheme.gripper_center
    return _disk_mask(shape[0], shape[1], float(cu), float(cv), float(scheme.gripper_radius))


def paint_gripper(background: np.ndarray, gripper_open: Optional[bool],
                  scheme: AnnotationScheme = DEFAULT_SCHEME) -> np.ndarray:
    out = background.copy()
    if gripper_open is None:
        return out
    color = scheme.gripper_open_color if gripper_open else scheme.gripper_closed_color
    out[_gripper_mask(out.shape, scheme)] = color
    return out


def composite(background: np.ndarray, hotspots: Sequence[Hotspot]) -> np.ndarray:
    """Blend ``hotspots`` over ``background`` (uint8 H x W x 3)."""
    bg = np.asarray(background, dtype=np.uint8)
    h, w = bg.shape[:2]
    boxes = []
    for hs in hotspots:
        rad = int(math.ceil(4.0 * hs.sigma)) + 1
        c0 = max(int(math.floor(hs.u)) - rad, 0)
        c1 = min(int(math.floor(hs.u)) + rad + 1, w)
        r0 = max(int(math.floor(hs.v)) - rad, 0)
        r1 = min(int(math.floor(hs.v)) + rad + 1, h)
        boxes.append((r0, r1, c0, c1))
    out = bg.copy()
    live = [b for b in boxes if b[0] < b[1] and b[2] < b[3]]
    if not live:
        return out
    R0, R1 = min(b[0] for b in live), max(b[1] for b in live)
    C0, C1 = min(b[2] for b in live), max(b[3] for b in live)
    weight = np.zeros((R1 - R0, C1 - C0))
    color = np.zeros((R1 - R0, C1 - C0, 3))
    for hs, (r0, r1, c0, c1) in zip(hotspots, boxes):
        if r0 >= r1 or c0 >= c1:
            continue
        xs = np.arange(c0, c1) + 0.5 - hs.u
        ys = np.arange(r0, r1) + 0.5 - hs.v
        g = np.exp(-(ys[:, None] ** 2 + xs[None, :] ** 2) / (2.0 * hs.sigma ** 2))
        wv = weight[r0 - R0:r1 - R0, c0 - C0:c1 - C0]
        better = g > wv
        wv[better] = g[better]
        color[r0 - R0:r1 - R0, c0 - C0:c1 - C0][better] = hs.color
    region = out[R0:R1, C0:C1]
    touched = weight > 0
    wt = weight[touched][:, None]
    blended = region[touched] * (1.0 - wt) + color[touched] * wt
    region[touched] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)
    return out


def rotation_offset(angle: float, radius: float) -> tuple[float, float]:
    """Pixel offset of a rotation hotspot at screen angle ``angle``."""
    a = wrap_angle(angle)
    return radius * math.cos(a), -radius * math.sin(a)


def hotspot_layout(state: EndEffectorState, label: str, cam: OrthoCamera,
                   scheme: AnnotationScheme = DEFAULT_SCHEME) -> list[Hotspot]:
    """Translation and (if assigned) rotation hotspots for one view."""
    u, v, _ = project_ortho(np.array(state.position), cam)
    if not (0.0 <= u < cam.width and 0.0 <= v < cam.height):
        raise OutOfFrameError(f"translation projects to ({u:.2f}, {v:.2f}) outside view {label!r}")
    spots = [Hotspot(u, v, scheme.translation_sigma, tuple(scheme.translation_color), "translation")]
    assigned = scheme.rotation_for(label)
    if assigned is not None:
        axis, color = assigned
        du, dv = rotation_offset(state.rotation.axis(axis), scheme.rotation_radius)
        spots.append(Hotspot(u + du, v + dv, scheme.rotation_sigma, color, "rotation", axis))
    return spots


def annotate(view: RenderedView, hotspots: Sequence[Hotspot], gripper_open: Optional[bool],
             mode: str, scheme: AnnotationScheme = DEFAULT_SCHEME) -> AnnotatedView:
    mode = resolve_mode(mode)
    bg = paint_gripper(prepare_background(view.rgb, mode), gripper_open, scheme)
    rgb = composite(bg, hotspots)
    return AnnotatedView(view.label, rgb, mode, view.camera, bg, tuple(hotspots))


def encode(state: EndEffectorState, views: Sequence[RenderedView],
           scheme: AnnotationScheme = DEFAULT_SCHEME,
           mode: str = DEFAULT_MODE) -> list[AnnotatedView]:
    """Paint ``state`` onto each rendered canonical view."""
    out = []
    for view in views:
        spots = hotspot_layout(state, view.label, view.camera, scheme)
        out.append(annotate(view, spots, state.gripper_open, mode, scheme))
    return out


def color_score(rgb: np.ndarray, target_color, mode: str,
                acceptance_radius: float = DEFAULT_SCHEME.acceptance_radius) -> np.ndarray:
    """Per-pixel ``max(0, 1 - |pixel - target| / radius)``; faded mode zeroes the reserved-free range."""
    px = np.asarray(rgb).astype(np.int32)
    d2 = np.zeros(px.shape[:-1], dtype=np.int32)
    for ch in range(3):
        diff = px[..., ch] - int(target_color[ch])
        d2 += diff * diff
    score = np.maximum(0.0, 1.0 - np.sqrt(d2) / acceptance_radius)
    if resolve_mode(mode) == FADED_RECONSTRUCTION:
        brightest = np.maximum(np.maximum(px[..., 0], px[..., 1]), px[..., 2])
        score[brightest <= 127] = 0.0
    return score


def extract_channel(view: AnnotatedView, target_color,
                    acceptance_radius: float = DEFAULT_SCHEME.acceptance_radius) -> ScalarHeatmap:
    """Grayscale likelihood of ``target_color`` over the view, in ``[0, 1]``."""
    return ScalarHeatmap(color_score(view.rgb, target_color, view.mode, acceptance_radius),
                         view.camera)


def locate_rotation_peak(view: AnnotatedView, color, translation_px, scheme: AnnotationScheme,
                         axis: str = "?") -> tuple[float, float]:
    """Score-weighted centroid of the rotation hotspot near the expected circle.

    Searches the annulus of width ``rotation_window`` centered on the
    ``rotation_radius`` circle, takes the strongest pixel and averages pixel
    centers within ``3 sigma`` of it, weighted by score above
    ``CENTROID_FLOOR`` times the peak. Scores are those of
    :func:`extract_channel`, computed only over the search window.
    """
    h, w = view.rgb.shape[:2]
    pu, pv = float(translation_px[0]), float(translation_px[1])
    reach = scheme.rotation_radius + scheme.rotation_window / 2.0
    c0, c1 = max(int(math.floor(pu - reach)), 0), min(int(math.ceil(pu + reach)) + 1, w)
    r0, r1 = max(int(math.floor(pv - reach)), 0), min(int(math.ceil(pv + reach)) + 1, h)
    if c0 >= c1 or r0 >= r1:
        raise MissingRotationError(axis)
    xs = np.arange(c0, c1) + 0.5
    ys = np.arange(r0, r1) + 0.5
    dx = xs[None, :] - pu
    dy = ys[:, None] - pv
    dist = np.sqrt(dx * dx + dy * dy)
    window = np.abs(dist - scheme.rotation_radius) <= scheme.rotation_window / 2.0
    crop = color_score(view.rgb[r0:r1, c0:c1], color, view.mode, scheme.acceptance_radius)
    sub = np.where(window, crop, 0.0)
    k = int(np.argmax(sub))
    if sub.flat[k] <= scheme.rotation_threshold:
        raise MissingRotationError(axis)
    kr, kc = divmod(k, sub.shape[1])
    near = (xs[None, :] - xs[kc]) ** 2 + (ys[:, None] - ys[kr]) ** 2 <= (3.0 * scheme.rotation_sigma) ** 2
    wts = np.where(near, np.maximum(sub - CENTROID_FLOOR * sub.flat[k], 0.0), 0.0)
    total = wts.sum()
    ru = float((wts * xs[None, :]).sum() / total)
    rv = float((wts * ys[:, None]).sum() / total)
    return ru, rv


def refine_translation_px(view: AnnotatedView, translation_px, scheme: AnnotationScheme = DEFAULT_SCHEME
                          ) -> tuple[float, float]:
    """Sub-pixel translation center of one view.

    Centroid (weighted as in :func:`locate_rotation_peak`) of the translation
    color within ``3 sigma`` of
    ``translation_px`` (normally the reprojected 3D solution, which sits on
    a pixel center). Falls back to ``translation_px`` if nothing scores.
    """
    h, w = view.rgb.shape[:2]
    pu, pv = float(translation_px[0]), float(translation_px[1])
    reach = 3.0 * scheme.translation_sigma
    c0, c1 = max(int(math.floor(pu - reach)), 0), min(int(math.ceil(pu + reach)) + 1, w)
    r0, r1 = max(int(math.floor(pv - reach)), 0), min(int(math.ceil(pv + reach)) + 1, h)
    if c0 >= c1 or r0 >= r1:
        return pu, pv
    xs = np.arange(c0, c1) + 0.5
    ys = np.arange(r0, r1) + 0.5
    near = (xs[None, :] - pu) ** 2 + (ys[:, None] - pv) ** 2 <= reach * reach
    crop = color_score(view.rgb[r0:r1, c0:c1], scheme.translation_color, view.mode,
                       scheme.acceptance_radius)
    wts = np.where(near, crop, 0.0)
    wts = np.maximum(wts - CENTROID_FLOOR * wts.max(), 0.0)
    total = wts.sum()
    if total <= 0:
        return pu, pv
    return float((wts * xs[None, :]).sum() / total), float((wts * ys[:, None]).sum() / total)


def circular_mean(angles: Sequence[float]) -> float:
    s = sum(math.sin(a) for a in angles)
    c = sum(math.cos(a) for a in angles)
    a = wrap_angle(math.atan2(s, c))
    # a centroid exactly on the -x ray can land a rounding error above -pi;
    # report the half-turn as +pi like the wrap rule does
    return math.pi if a <= -math.pi + 1e-12 else a


def decode_rotation_axes(views: Sequence[AnnotatedView], scheme: AnnotationScheme,
                         translation_px: Sequence) -> dict:
    """Per-axis decoded angle, or the :class:`MissingRotationError` for that axis."""
    estimates: dict[str, list[float]] = {}
    axes = []
    for view, p in zip(views, translation_px):
        assigned = scheme.rotation_for(view.label)
        if assigned is None:
            continue
        axis, color = assigned
        if axis not in axes:
            axes.append(axis)
        try:
            ru, rv = locate_rotation_peak(view, color, p, scheme, axis)
        except MissingRotationError:
            continue
        estimates.setdefault(axis, []).append(math.atan2(-(rv - p[1]), ru - p[0]))
    out = {}
    for axis in axes:
        if axis in estimates:
            out[axis] = circular_mean(estimates[axis])
        else:
            out[axis] = MissingRotationError(axis)
    return out


def decode_rotation(views: Sequence[AnnotatedView], scheme: AnnotationScheme,
                    translation_px: Sequence) -> EulerRotation:
    """Read the three Euler angles off the rotation hotspots.

    ``translation_px`` holds the translation pixel of each view, normally the
    decoded 3D position reprojected into that view.
    """
    axes = decode_rotation_axes(views, scheme, translation_px)
    angles = {}
    for axis in ("x", "y", "z"):
        value = axes.get(axis, MissingRotationError(axis))
        if isinstance(value, Exception):
            raise value
        angles[axis] = value
    return EulerRotation(angles["x"], angles["y"], angles["z"])


def _gripper_vote(view: AnnotatedView, scheme: AnnotationScheme) -> Optional[bool]:
    cu, cv = scheme.gripper_center
    half = 8
    r0, c0 = int(round(cv)) - half, int(round(cu)) - half
    patch = view.rgb[max(r0, 0):r0 + 2 * half, max(c0, 0):c0 + 2 * half]
    if patch.size == 0:
        return None
    s_open = color_score(patch, scheme.gripper_open_color, view.mode, scheme.acceptance_radius)
    s_closed = color_score(patch, scheme.gripper_closed_color, view.mode, scheme.acceptance_radius)
    f_open = float(np.mean(s_open > 0.5))
    f_closed = float(np.mean(s_closed > 0.5))
    if max(f_open, f_closed) < 0.25 or f_open == f_closed:
        return None
    return f_open > f_closed


def decode_gripper(views: Sequence[AnnotatedView], scheme: AnnotationScheme = DEFAULT_SCHEME) -> bool:
    """Majority vote of the top-left gripper disks; ``True`` means open."""
    votes = [v for v in (_gripper_vote(view, scheme) for view in views) if v is not None]
    if not votes:
        raise MissingGripperError("no view shows a gripper hotspot")
    n_open = sum(votes)
    n_closed = len(votes) - n_open
    if n_open == n_closed:
        raise MissingGripperError(f"gripper vote tied {n_open}:{n_closed}")
    return n_open > n_closed
