"""Synthetic scenes: ray-cast box worlds seen by pinhole rigs.

Used by the test-suite, the evaluation harness and the demo scripts in
place of recorded robot data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .codec import DEFAULT_MODE, DEFAULT_SCHEME, EndEffectorState
from .dataset import KeyframeSample
from .geometry import EulerRotation, PinholeIntrinsics, RigidTransform, Workspace, look_at
from .pointcloud import RgbdObservation

UNIT_WORKSPACE = Workspace((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple
    color: tuple
    checker: float = 0.0  # checker cell size in meters, 0 = flat color


def random_scene(rng: np.random.Generator, ws: Workspace = UNIT_WORKSPACE,
                 n_objects: int = 4) -> list[Box]:
    """A table slab at the bottom of ``ws`` with a few boxes on it."""
    lo, size = ws.lo, ws.size
    table_top = lo[2] + 0.08 * size[2]
    boxes = [Box(tuple(lo), (ws.max[0], ws.max[1], table_top),
                 tuple(int(c) for c in rng.integers(60, 200, 3)), checker=0.1 * size[0])]
    for _ in range(n_objects):
        half = rng.uniform(0.04, 0.12, 3) * size
        c = lo + rng.uniform(0.2, 0.8, 3) * size
        b_lo = np.array([c[0] - half[0], c[1] - half[1], table_top])
        b_hi = np.array([c[0] + half[0], c[1] + half[1], table_top + 2 * half[2]])
        boxes.append(Box(tuple(b_lo), tuple(b_hi), tuple(int(v) for v in rng.integers(0, 256, 3))))
    return boxes


def raycast(boxes: Sequence[Box], intr: PinholeIntrinsics, pose: RigidTransform):
    """Depth (along the optical axis) and color of the first hit per pixel."""
    h, w = intr.height, intr.width
    jj, ii = np.mgrid[0:h, 0:w]
    dc = np.stack([(ii + 0.5 - intr.cx) / intr.fx, (jj + 0.5 - intr.cy) / intr.fy,
                   np.ones((h, w))], axis=-1)
    R = pose.rotation
    origin = -(R.T @ pose.translation)
    dirs = dc @ R  # R^T applied to each row
    best_t = np.full((h, w), np.inf)
    rgb = np.zeros((h, w, 3), dtype=np.uint8)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        for box in boxes:
            t1 = (np.array(box.lo) - origin) * inv
            t2 = (np.array(box.hi) - origin) * inv
            tn = np.nanmax(np.minimum(t1, t2), axis=-1)
            tf = np.nanmin(np.maximum(t1, t2), axis=-1)
            hit = (tn <= tf) & (tn > 1e-6) & (tn < best_t)
            if not hit.any():
                continue
            best_t[hit] = tn[hit]
            color = np.broadcast_to(np.array(box.color, dtype=np.int64), (int(hit.sum()), 3)).copy()
            if box.checker > 0:
                p = origin + dirs[hit] * tn[hit][:, None]
                parity = np.floor(p[:, 0] / box.checker) + np.floor(p[:, 1] / box.checker)
                dark = (parity % 2) == 1
                color[dark] = color[dark] * 3 // 5
            rgb[hit] = color.astype(np.uint8)
    depth = np.where(np.isfinite(best_t), best_t, 0.0).astype(np.float32)
    return depth, rgb


def make_rig(ws: Workspace = UNIT_WORKSPACE, n_cams: int = 3, width: int = 64, height: int = 48,
             rng: Optional[np.random.Generator] = None, radius: float = 1.6,
             height_above: float = 0.9) -> list[tuple[PinholeIntrinsics, RigidTransform]]:
    """Cameras spread around the workspace, all looking at its center."""
    center = ws.center
    offset = 0.0 if rng is None else float(rng.uniform(0, 2 * math.pi))
    f = 0.9 * width
    rig = []
    for k in range(n_cams):
        a = offset + 2 * math.pi * k / n_cams
        eye = center + np.array([radius * math.cos(a), radius * math.sin(a), height_above])
        intr = PinholeIntrinsics(f, f, width / 2.0, height / 2.0, width, height)
        rig.append((intr, look_at(eye, center)))
    return rig


def capture(boxes: Sequence[Box], rig) -> list[RgbdObservation]:
    obs = []
    for k, (intr, pose) in enumerate(rig):
        depth, rgb = raycast(boxes, intr, pose)
        obs.append(RgbdObservation(rgb, depth, pose, intr, f"cam{k}"))
    return obs


def random_state(rng: np.random.Generator, ws: Workspace = UNIT_WORKSPACE,
                 with_gripper: bool = True) -> EndEffectorState:
    """Uniform position inside ``ws``, uniform Euler angles, random gripper."""
    p = ws.lo + rng.uniform(0.0, 1.0, 3) * ws.size
    angles = rng.uniform(-math.pi, math.pi, 3)
    gripper = bool(rng.integers(0, 2)) if with_gripper else None
    return EndEffectorState(tuple(p), EulerRotation(*angles), gripper)


def random_sample(seed: int, ws: Workspace = UNIT_WORKSPACE, n_cams: int = 3,
                  cam_size: tuple = (64, 48), mode: str = DEFAULT_MODE,
                  sample_id: Optional[str] = None) -> KeyframeSample:
    rng = np.random.default_rng(seed)
    boxes = random_scene(rng, ws)
    rig = make_rig(ws, n_cams, cam_size[0], cam_size[1], rng)
    state = random_state(rng, ws)
    return KeyframeSample(
        instruction="move the gripper to the target",
        observations=tuple(capture(boxes, rig)),
        workspace=ws,
        state=state,
        timestep=1,
        scheme=DEFAULT_SCHEME,
        mode=mode,
        sample_id=sample_id or f"synthetic_{seed}",
    )


def rolled_observation(obs: RgbdObservation, camera_id: Optional[str] = None) -> RgbdObservation:
    """The same frame from a camera rolled 180 degrees about its optical axis.

    Pixels are flipped in both directions and the principal point mirrored, so
    with even image sizes and a centered principal point every valid pixel
    unprojects to bitwise the same reference-frame point.
    """
    intr = obs.intrinsics
    flipped = PinholeIntrinsics(intr.fx, intr.fy, intr.width - intr.cx, intr.height - intr.cy,
                                intr.width, intr.height)
    roll = RigidTransform(np.diag([-1.0, -1.0, 1.0]), np.zeros(3))
    return RgbdObservation(obs.rgb[::-1, ::-1].copy(), obs.depth[::-1, ::-1].copy(),
                           roll.compose(obs.pose), flipped, camera_id or f"{obs.camera_id}_rolled")


def split_observation(obs: RgbdObservation, column: int) -> tuple[RgbdObservation, RgbdObservation]:
    """Two frames from one camera, each keeping the depth of one side of ``column``."""
    left = obs.depth.copy()
    right = obs.depth.copy()
    left[:, column:] = 0.0
    right[:, :column] = 0.0
    return (RgbdObservation(obs.rgb, left, obs.pose, obs.intrinsics, f"{obs.camera_id}_a"),
            RgbdObservation(obs.rgb, right, obs.pose, obs.intrinsics, f"{obs.camera_id}_b"))


def equivalent_rig(observations: Sequence[RgbdObservation]) -> list[RgbdObservation]:
    """A different set of input frames that fuses to the same point multiset.

    The first frame is split in two, every other frame is replaced by its
    180-degree-rolled twin, and the order is reversed.
    """
    obs = list(observations)
    out = list(split_observation(obs[0], obs[0].intrinsics.width // 2))
    out += [rolled_observation(o) for o in obs[1:]]
    return out[::-1]
