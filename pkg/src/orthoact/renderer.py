"""Z-buffered square-splat rasterizer for orthographic views."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import OrthoCamera, project_ortho
from .pointcloud import PointCloud

DEFAULT_SPLAT_RADIUS = 1


@dataclass(frozen=True, eq=False)
class RenderedView:
    label: str
    rgb: np.ndarray
    depth: np.ndarray
    camera: OrthoCamera


def render(cloud: PointCloud, cam: OrthoCamera, splat_radius: int = DEFAULT_SPLAT_RADIUS,
           label: str = "") -> RenderedView:
    """Rasterize ``cloud`` into ``cam``.

    A point landing in pixel ``(floor(u), floor(v))`` paints every pixel
    within Chebyshev distance ``splat_radius`` of it. The nearest depth wins
    per pixel. Equal depths are settled by color and then by the exact
    sub-pixel position ``(u, v)``, all lexicographically smallest first.
    Points that still tie are indistinguishable in the output, so the image
    depends only on the projected point multiset: neither input order nor
    a rigid motion of cloud and camera together can change it.
    """
    if splat_radius < 0:
        raise ValueError("splat_radius must be >= 0")
    W, H = cam.width, cam.height
    rgb = np.zeros((H, W, 3), dtype=np.uint8)
    depth = np.full((H, W), np.inf, dtype=np.float32)
    if len(cloud) == 0:
        return RenderedView(label, rgb, depth, cam)

    u, v, z = project_ortho(cloud.xyz, cam)
    keep = (z >= cam.near) & (z <= cam.far)
    idx = np.nonzero(keep)[0]
    col = np.floor(u[idx]).astype(np.int64)
    row = np.floor(v[idx]).astype(np.int64)
    zk = z[idx]

    r = int(splat_radius)
    offs = np.arange(-r, r + 1)
    dc, dr = np.meshgrid(offs, offs, indexing="xy")
    dc, dr = dc.reshape(-1), dr.reshape(-1)
    cc = (col[:, None] + dc[None, :]).reshape(-1)
    rr = (row[:, None] + dr[None, :]).reshape(-1)
    pid = np.repeat(idx, len(dc))
    pz = np.repeat(zk, len(dc))
    inside = (cc >= 0) & (cc < W) & (rr >= 0) & (rr < H)
    cc, rr, pid, pz = cc[inside], rr[inside], pid[inside], pz[inside]
    if len(pid) == 0:
        return RenderedView(label, rgb, depth, cam)

    pix = rr * W + cc
    prgb = cloud.rgb[pid]
    order = np.lexsort((v[pid], u[pid], prgb[:, 2], prgb[:, 1], prgb[:, 0], pz, pix))
    pix_s = pix[order]
    first = np.ones(len(pix_s), dtype=bool)
    first[1:] = pix_s[1:] != pix_s[:-1]
    win = order[first]
    flat_rgb = rgb.reshape(-1, 3)
    flat_depth = depth.reshape(-1)
    flat_rgb[pix[win]] = cloud.rgb[pid[win]]
    flat_depth[pix[win]] = pz[win].astype(np.float32)
    return RenderedView(label, rgb, depth, cam)


def render_canonical_set(cloud: PointCloud, cams: Sequence[tuple[str, OrthoCamera]],
                         splat_radius: int = DEFAULT_SPLAT_RADIUS) -> list[RenderedView]:
    """Render one view per ``(label, camera)`` pair, in the given order."""
    return [render(cloud, cam, splat_radius, label=label) for label, cam in cams]
