"""Camera models, rigid transforms and the projection math shared by every module.

Conventions (fixed so that serialized datasets stay portable):

* Reference frame is right-handed and z-up.
* Every ``pose`` is an extrinsic: it maps reference-frame points into the
  camera frame (camera-from-reference).
* Camera frames follow the image: +x is image right, +y is image down and
  +z is the viewing direction.
* Continuous pixel coordinates: pixel ``(i, j)`` (column, row) covers the
  square ``[i, i+1) x [j, j+1)`` and has its center at ``(i + 0.5, j + 0.5)``.
* Euler angles ``(rx, ry, rz)`` are applied about the fixed reference axes in
  the order x, then y, then z, i.e. ``R = Rz(rz) @ Ry(ry) @ Rx(rx)``.
  Left-multiplying by a z rotation therefore only changes ``rz``.

Point transforms are written out component by component rather than with
``@`` so that every output coordinate is computed by the same sequence of
floating point operations regardless of array length or BLAS threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidDepthError, InvalidWorkspaceError, OutOfFrameError

AXIS_CONVENTION = "z-up;front=+x,left=+y,right=-y,top=-z;euler=xyz-extrinsic;pose=camera_from_reference"

CANONICAL_VIEWS = ("front", "left", "right", "top")

# view axis and image-up vector per canonical view
_VIEW_DIRECTIONS = {
    "front": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "left": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    "right": ((0.0, -1.0, 0.0), (0.0, 0.0, 1.0)),
    "top": ((0.0, 0.0, -1.0), (1.0, 0.0, 0.0)),
}


def wrap_angle(angle):
    """Wrap angle(s) into ``(-pi, pi]``."""
    a = np.pi - np.mod(np.pi - np.asarray(angle, dtype=np.float64), 2.0 * np.pi)
    a = np.where(a <= -np.pi, np.pi, a)
    if a.ndim == 0:
        return float(a)
    return a


def _apply_rt(R, t, pts):
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    return np.stack(
        [
            R[0, 0] * x + R[0, 1] * y + R[0, 2] * z + t[0],
            R[1, 0] * x + R[1, 1] * y + R[1, 2] * z + t[1],
            R[2, 0] * x + R[2, 1] * y + R[2, 2] * z + t[2],
        ],
        axis=-1,
    )


def _apply_rt_inverse(R, t, pts):
    q0 = pts[..., 0] - t[0]
    q1 = pts[..., 1] - t[1]
    q2 = pts[..., 2] - t[2]
    return np.stack(
        [
            R[0, 0] * q0 + R[1, 0] * q1 + R[2, 0] * q2,
            R[0, 1] * q0 + R[1, 1] * q1 + R[2, 1] * q2,
            R[0, 2] * q0 + R[1, 2] * q1 + R[2, 2] * q2,
        ],
        axis=-1,
    )


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation + translation, ``x -> R @ x + t``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValueError("transform contains non-finite values")
        if np.max(np.abs(R @ R.T - np.eye(3))) > 1e-6 or np.linalg.det(R) <= 0:
            raise ValueError("rotation is not a proper orthonormal matrix")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m) -> "RigidTransform":
        m = np.asarray(m, dtype=np.float64)
        return cls(m[:3, :3], m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """``self ∘ other``: apply ``other`` first."""
        R = self.rotation @ other.rotation
        t = self.rotation @ other.translation + self.translation
        return RigidTransform(R, t)

    def inverse(self) -> "RigidTransform":
        Rt = self.rotation.T
        return RigidTransform(Rt, -(Rt @ self.translation))

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return _apply_rt(self.rotation, self.translation, pts)

    def apply_inverse(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return _apply_rt_inverse(self.rotation, self.translation, pts)

    def renormalized(self) -> "RigidTransform":
        u, _, vt = np.linalg.svd(self.rotation)
        R = u @ vt
        if np.linalg.det(R) < 0:
            u[:, -1] *= -1
            R = u @ vt
        return RigidTransform(R, self.translation)

    def allclose(self, other: "RigidTransform", atol=1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0, atol=atol)
        )

    def to_dict(self) -> dict:
        return {
            "rotation": [float(v) for v in self.rotation.reshape(-1)],
            "translation": [float(v) for v in self.translation],
        }

    @classmethod
    def from_dict(cls, d) -> "RigidTransform":
        return cls(np.array(d["rotation"], dtype=np.float64).reshape(3, 3), d["translation"])


def euler_to_matrix(rx: float, ry: float, rz: float) -> np.ndarray:
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    Rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    Ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    Rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    return Rz @ Ry @ Rx


def matrix_to_euler(R) -> tuple[float, float, float]:
    R = np.asarray(R, dtype=np.float64)
    sy = -R[2, 0]
    if abs(sy) >= 1.0 - 1e-12:
        # gimbal lock: rx and rz are coupled, put everything into rz
        ry = math.copysign(math.pi / 2, sy)
        rx = 0.0
        rz = math.atan2(-R[0, 1], R[1, 1])
    else:
        ry = math.asin(sy)
        rx = math.atan2(R[2, 1], R[2, 2])
        rz = math.atan2(R[1, 0], R[0, 0])
    return wrap_angle(rx), wrap_angle(ry), wrap_angle(rz)


@dataclass(frozen=True)
class EulerRotation:
    """Euler angles in radians, each kept in ``(-pi, pi]``."""

    rx: float = 0.0
    ry: float = 0.0
    rz: float = 0.0

    def __post_init__(self):
        for name in ("rx", "ry", "rz"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, wrap_angle(value))

    @classmethod
    def from_matrix(cls, R) -> "EulerRotation":
        return cls(*matrix_to_euler(R))

    def as_array(self) -> np.ndarray:
        return np.array([self.rx, self.ry, self.rz])

    def as_matrix(self) -> np.ndarray:
        return euler_to_matrix(self.rx, self.ry, self.rz)

    def axis(self, name: str) -> float:
        return {"x": self.rx, "y": self.ry, "z": self.rz}[name]

    def __add__(self, other: "EulerRotation") -> "EulerRotation":
        return EulerRotation(self.rx + other.rx, self.ry + other.ry, self.rz + other.rz)

    def __sub__(self, other: "EulerRotation") -> "EulerRotation":
        return EulerRotation(self.rx - other.rx, self.ry - other.ry, self.rz - other.rz)


@dataclass(frozen=True)
class PinholeIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    def to_dict(self) -> dict:
        return {
            "fx": float(self.fx), "fy": float(self.fy),
            "cx": float(self.cx), "cy": float(self.cy),
            "width": int(self.width), "height": int(self.height),
        }

    @classmethod
    def from_dict(cls, d) -> "PinholeIntrinsics":
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                   int(d["width"]), int(d["height"]))


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned box in the reference frame (meters)."""

    min: tuple
    max: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.asarray(self.min, dtype=np.float64).reshape(3))
        hi = tuple(float(v) for v in np.asarray(self.max, dtype=np.float64).reshape(3))
        if not all(math.isfinite(v) for v in lo + hi):
            raise InvalidWorkspaceError("workspace bounds must be finite")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidWorkspaceError(f"workspace min {lo} must be < max {hi} componentwise")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.min)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.max)

    @property
    def size(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)

    def corners(self) -> np.ndarray:
        lo, hi = self.lo, self.hi
        return np.array([[(lo, hi)[i][0], (lo, hi)[j][1], (lo, hi)[k][2]]
                         for i in (0, 1) for j in (0, 1) for k in (0, 1)])

    def to_dict(self) -> dict:
        return {"min": list(self.min), "max": list(self.max)}

    @classmethod
    def from_dict(cls, d) -> "Workspace":
        return cls(tuple(d["min"]), tuple(d["max"]))


@dataclass(frozen=True, eq=False)
class OrthoCamera:
    """Orthographic camera.

    ``pose`` maps reference points into the camera frame; the camera-frame
    origin projects to the image center and ``extent_x`` meters along the
    camera x axis span ``width`` pixels.
    """

    pose: RigidTransform
    extent_x: float
    extent_y: float
    width: int
    height: int
    near: float = 0.0
    far: float = 10.0

    def __post_init__(self):
        if not (self.extent_x > 0 and self.extent_y > 0):
            raise ValueError("extents must be positive")
        if not self.far > self.near:
            raise ValueError("far must exceed near")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("pixel dimensions must be positive")

    @property
    def pixels_per_meter(self) -> tuple[float, float]:
        return self.width / self.extent_x, self.height / self.extent_y

    @property
    def view_axis(self) -> np.ndarray:
        """Viewing direction expressed in the reference frame."""
        return self.pose.rotation[2].copy()

    def with_pose(self, pose: RigidTransform) -> "OrthoCamera":
        return OrthoCamera(pose, self.extent_x, self.extent_y, self.width, self.height,
                           self.near, self.far)

    def to_dict(self) -> dict:
        return {
            "pose": self.pose.to_dict(),
            "extent_x": float(self.extent_x), "extent_y": float(self.extent_y),
            "width": int(self.width), "height": int(self.height),
            "near": float(self.near), "far": float(self.far),
        }

    @classmethod
    def from_dict(cls, d) -> "OrthoCamera":
        return cls(RigidTransform.from_dict(d["pose"]), float(d["extent_x"]), float(d["extent_y"]),
                   int(d["width"]), int(d["height"]), float(d["near"]), float(d["far"]))

    def __eq__(self, other):
        if not isinstance(other, OrthoCamera):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def project_ortho(p, cam: OrthoCamera):
    """Project reference-frame point(s) into ``cam``.

    Returns ``(u, v, z)``: continuous pixel coordinates and the signed depth
    along the view axis. Accepts a single 3-vector or an ``(..., 3)`` array.
    Out-of-frame points are not rejected.
    """
    pts = np.asarray(p, dtype=np.float64)
    pc = _apply_rt(cam.pose.rotation, cam.pose.translation, pts)
    sx = cam.width / cam.extent_x
    sy = cam.height / cam.extent_y
    u = pc[..., 0] * sx + cam.width / 2.0
    v = pc[..., 1] * sy + cam.height / 2.0
    z = pc[..., 2]
    if pts.ndim == 1:
        return float(u), float(v), float(z)
    return u, v, z


def project_pinhole(p, intr: PinholeIntrinsics, pose: RigidTransform):
    """Project reference-frame point(s) through a pinhole camera; returns ``(u, v, depth)``."""
    pts = np.asarray(p, dtype=np.float64)
    pc = _apply_rt(pose.rotation, pose.translation, pts)
    z = pc[..., 2]
    u = pc[..., 0] / z * intr.fx + intr.cx
    v = pc[..., 1] / z * intr.fy + intr.cy
    if pts.ndim == 1:
        return float(u), float(v), float(z)
    return u, v, z


def unproject_pixels(u, v, depth, intr: PinholeIntrinsics, pose: RigidTransform) -> np.ndarray:
    """Vectorized unprojection; no validation (callers mask invalid depth)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    d = np.asarray(depth, dtype=np.float64)
    xc = (u - intr.cx) / intr.fx * d
    yc = (v - intr.cy) / intr.fy * d
    pc = np.stack([xc, yc, d], axis=-1)
    return _apply_rt_inverse(pose.rotation, pose.translation, pc)


def unproject_pixel(u: float, v: float, depth: float, intr: PinholeIntrinsics,
                    pose: RigidTransform) -> np.ndarray:
    """Lift continuous pixel ``(u, v)`` at ``depth`` meters into the reference frame."""
    if not (math.isfinite(depth) and depth > 0):
        raise InvalidDepthError(f"depth must be finite and positive, got {depth!r}")
    if not (0 <= u <= intr.width and 0 <= v <= intr.height):
        raise OutOfFrameError(f"pixel ({u}, {v}) outside {intr.width}x{intr.height} image")
    return unproject_pixels(u, v, depth, intr, pose)


def look_at(eye, target, up=(0.0, 0.0, 1.0)) -> RigidTransform:
    """Camera-from-reference pose for a camera at ``eye`` looking at ``target``."""
    eye = np.asarray(eye, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - eye
    fwd = fwd / np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(up, dtype=np.float64))
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(fwd, np.array([1.0, 0.0, 0.0]))
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    R = np.stack([right, down, fwd])
    return RigidTransform(R, -(R @ eye))


def make_canonical_cameras(workspace: Workspace, width: int = 256, height: int = 256,
                           margin: float = 0.05,
                           labels: Sequence[str] = CANONICAL_VIEWS) -> list[tuple[str, OrthoCamera]]:
    """Front/left/right/top orthographic cameras framing ``workspace``.

    Each camera's extent is the workspace footprint seen along its view
    axis, enlarged by ``margin`` (fractional). The result depends only on
    the workspace and the pixel dimensions.
    """
    if not isinstance(workspace, Workspace):
        workspace = Workspace(*workspace)
    if margin < 0:
        raise ValueError("margin must be non-negative")
    size = workspace.size
    center = workspace.center
    scale = 1.0 + margin
    cams = []
    for label in labels:
        d, up = (np.array(a) for a in _VIEW_DIRECTIONS[label])
        right = np.cross(d, up)
        down = -up
        R = np.stack([right, down, d])
        ext_x = float(np.abs(right) @ size) * scale
        ext_y = float(np.abs(down) @ size) * scale
        depth = float(np.abs(d) @ size)
        half = depth / 2.0 * scale
        origin = center - d * half
        pose = RigidTransform(R, -(R @ origin))
        cams.append((label, OrthoCamera(pose, ext_x, ext_y, int(width), int(height),
                                        near=0.0, far=2.0 * half)))
    return cams
