"""Colored point clouds built from posed RGBD frames."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .geometry import PinholeIntrinsics, RigidTransform, Workspace, unproject_pixels

__all__ = [
    "RgbdObservation",
    "PointCloud",
    "Workspace",
    "unproject_observation",
    "aggregate",
    "fuse",
    "transform_cloud",
    "voxel_downsample",
]


@dataclass(frozen=True, eq=False)
class RgbdObservation:
    """One posed camera frame.

    ``depth`` is in meters along the optical axis; non-finite or
    non-positive values mark invalid pixels. ``pose`` is camera-from-reference.
    """

    rgb: np.ndarray
    depth: np.ndarray
    pose: RigidTransform
    intrinsics: PinholeIntrinsics
    camera_id: str = "cam"

    def __post_init__(self):
        rgb = np.asarray(self.rgb)
        depth = np.asarray(self.depth, dtype=np.float32)
        h, w = self.intrinsics.height, self.intrinsics.width
        if rgb.shape != (h, w, 3):
            raise ValueError(f"rgb shape {rgb.shape} does not match intrinsics {(h, w, 3)}")
        if rgb.dtype != np.uint8:
            raise ValueError("rgb must be uint8")
        if depth.shape != (h, w):
            raise ValueError(f"depth shape {depth.shape} does not match intrinsics {(h, w)}")
        object.__setattr__(self, "rgb", rgb)
        object.__setattr__(self, "depth", depth)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """``N`` points: ``xyz`` float64 meters and ``rgb`` uint8 colors."""

    xyz: np.ndarray
    rgb: np.ndarray

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        rgb = np.asarray(self.rgb, dtype=np.uint8).reshape(-1, 3)
        if len(xyz) != len(rgb):
            raise ValueError("xyz and rgb lengths differ")
        if not np.all(np.isfinite(xyz)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "rgb", rgb)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.uint8))

    def __len__(self) -> int:
        return len(self.xyz)

    def as_array(self) -> np.ndarray:
        """``N x 6`` float array ``(x, y, z, r, g, b)``."""
        return np.concatenate([self.xyz, self.rgb.astype(np.float64)], axis=1)

    def crop(self, ws: Workspace) -> "PointCloud":
        keep = ws.contains(self.xyz)
        return PointCloud(self.xyz[keep], self.rgb[keep])

    def canonical_order(self) -> np.ndarray:
        """Permutation sorting points lexicographically by (x, y, z, r, g, b)."""
        keys = (self.rgb[:, 2], self.rgb[:, 1], self.rgb[:, 0],
                self.xyz[:, 2], self.xyz[:, 1], self.xyz[:, 0])
        return np.lexsort(keys)

    def sorted(self) -> "PointCloud":
        order = self.canonical_order()
        return PointCloud(self.xyz[order], self.rgb[order])

    def same_multiset(self, other: "PointCloud") -> bool:
        a, b = self.sorted(), other.sorted()
        return (len(a) == len(b) and np.array_equal(a.xyz, b.xyz)
                and np.array_equal(a.rgb, b.rgb))


def unproject_observation(obs: RgbdObservation, ws: Optional[Workspace]) -> PointCloud:
    """One point per valid depth pixel, cropped to ``ws`` in the reference frame.

    Pixel ``(col, row)`` is lifted from its center ``(col + 0.5, row + 0.5)``.
    Points come out in row-major pixel order. ``ws=None`` skips the crop.
    """
    depth = obs.depth
    valid = np.isfinite(depth) & (depth > 0)
    rows, cols = np.nonzero(valid)
    if len(rows) == 0:
        return PointCloud.empty()
    d = depth[rows, cols].astype(np.float64)
    xyz = unproject_pixels(cols + 0.5, rows + 0.5, d, obs.intrinsics, obs.pose)
    rgb = obs.rgb[rows, cols]
    if ws is not None:
        keep = ws.contains(xyz)
        xyz, rgb = xyz[keep], rgb[keep]
    return PointCloud(xyz, rgb)


def aggregate(clouds: Iterable[PointCloud]) -> PointCloud:
    """Concatenate clouds in input order (no deduplication)."""
    clouds = list(clouds)
    if not clouds:
        return PointCloud.empty()
    return PointCloud(np.concatenate([c.xyz for c in clouds]),
                      np.concatenate([c.rgb for c in clouds]))


def fuse(observations: Iterable[RgbdObservation], ws: Optional[Workspace],
         voxel_size: Optional[float] = None) -> PointCloud:
    """Unproject every observation, crop, and aggregate.

    ``voxel_size`` (meters) enables the optional voxel filter; off by default.
    """
    cloud = aggregate(unproject_observation(o, ws) for o in observations)
    if voxel_size:
        cloud = voxel_downsample(cloud, voxel_size)
    return cloud


def transform_cloud(cloud: PointCloud, T: RigidTransform) -> PointCloud:
    return PointCloud(T.apply(cloud.xyz), cloud.rgb.copy())


def voxel_downsample(cloud: PointCloud, voxel_size: float = 0.004) -> PointCloud:
    """Keep one point per occupied voxel.

    The survivor is the lexicographically smallest (x, y, z, r, g, b) record
    in the voxel, so the result depends only on the point multiset.
    """
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    if len(cloud) == 0:
        return cloud
    srt = cloud.sorted()
    keys = np.floor(srt.xyz / voxel_size).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    first = np.sort(first)
    return PointCloud(srt.xyz[first], srt.rgb[first])
