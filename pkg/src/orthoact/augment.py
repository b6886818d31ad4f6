"""SE(3) perturbation of whole keyframe samples (scene and target together)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .codec import EndEffectorState
from .dataset import KeyframeSample
from .errors import AugmentationFailedError
from .geometry import EulerRotation, RigidTransform, euler_to_matrix, wrap_angle
from .pointcloud import RgbdObservation

MAX_TRIES = 100


@dataclass(frozen=True)
class AugmentBounds:
    """Uniform half-ranges. ``pivot=None`` means the workspace center."""

    translation: tuple = (0.1, 0.1, 0.1)
    rotation: tuple = (0.0, 0.0, math.pi / 2)
    pivot: Optional[tuple] = None

    def __post_init__(self):
        tr = tuple(float(v) for v in self.translation)
        rot = tuple(float(v) for v in self.rotation)
        if len(tr) != 3 or len(rot) != 3 or min(tr + rot) < 0:
            raise ValueError("bounds must be three non-negative half-ranges each")
        object.__setattr__(self, "translation", tr)
        object.__setattr__(self, "rotation", rot)
        if self.pivot is not None:
            object.__setattr__(self, "pivot", tuple(float(v) for v in self.pivot))

    def to_dict(self) -> dict:
        return {"translation": list(self.translation), "rotation": list(self.rotation),
                "pivot": None if self.pivot is None else list(self.pivot)}

    @classmethod
    def from_dict(cls, d) -> "AugmentBounds":
        return cls(tuple(d["translation"]), tuple(d["rotation"]),
                   None if d.get("pivot") is None else tuple(d["pivot"]))


def derive_seed(seed: int, *path: int) -> int:
    """Independent 64-bit seed for position ``path`` under ``seed``."""
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), *[int(p) for p in path]])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_perturbation(bounds: AugmentBounds, rng_seed: int) -> RigidTransform:
    """Random rigid motion: rotate about ``bounds.pivot``, then translate."""
    rng = np.random.default_rng(int(rng_seed) & (2 ** 64 - 1))
    angles = rng.uniform(-1.0, 1.0, 3) * np.array(bounds.rotation)
    shift = rng.uniform(-1.0, 1.0, 3) * np.array(bounds.translation)
    R = euler_to_matrix(*angles)
    pivot = np.zeros(3) if bounds.pivot is None else np.array(bounds.pivot)
    return RigidTransform(R, pivot + shift - R @ pivot)


def _pure_z_angle(R: np.ndarray) -> Optional[float]:
    if R[2, 2] == 1.0 and R[0, 2] == 0 and R[1, 2] == 0 and R[2, 0] == 0 and R[2, 1] == 0:
        return math.atan2(R[1, 0], R[0, 0])
    return None


def transform_state(state: EndEffectorState, T: RigidTransform) -> EndEffectorState:
    """Move the target with the scene; gripper state is unchanged."""
    position = T.apply(np.array(state.position))
    a = _pure_z_angle(T.rotation)
    if a is not None:
        # z-rotations commute into rz exactly under the extrinsic xyz convention
        rot = EulerRotation(state.rotation.rx, state.rotation.ry, wrap_angle(state.rotation.rz + a))
    else:
        rot = EulerRotation.from_matrix(T.rotation @ state.rotation.as_matrix())
    return EndEffectorState(tuple(position), rot, state.gripper_open)


def transform_observation(obs: RgbdObservation, T: RigidTransform) -> RgbdObservation:
    """Same pixels, camera moved so the unprojected scene is ``T`` applied to the original."""
    return RgbdObservation(obs.rgb, obs.depth, obs.pose.compose(T.inverse()), obs.intrinsics,
                           obs.camera_id)


def augment_sample(sample: KeyframeSample, n: int, bounds: AugmentBounds = AugmentBounds(),
                   rng_seed: int = 0) -> list[KeyframeSample]:
    """``n`` perturbed copies of ``sample`` whose targets stay inside the workspace.

    Perturbation ``i`` is drawn from ``derive_seed(rng_seed, i, attempt)``;
    draws that push the target outside the workspace are retried up to
    ``MAX_TRIES`` times before the slot is skipped with a warning.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ws = sample.workspace
    if bounds.pivot is None:
        bounds = AugmentBounds(bounds.translation, bounds.rotation, tuple(ws.center))
    out = []
    for i in range(n):
        for attempt in range(MAX_TRIES):
            seed_i = derive_seed(rng_seed, i, attempt)
            T = sample_perturbation(bounds, seed_i)
            state = transform_state(sample.state, T)
            if state.inside(ws):
                break
        else:
            warnings.warn(f"perturbation {i} of {sample.sample_id!r} left the workspace "
                          f"{MAX_TRIES} times; skipped")
            continue
        provenance = {
            "parent_id": sample.sample_id,
            "seed": int(rng_seed),
            "index": i,
            "attempt": attempt,
            "derived_seed": seed_i,
            "bounds": bounds.to_dict(),
            "transform": T.to_dict(),
        }
        out.append(KeyframeSample(
            instruction=sample.instruction,
            observations=tuple(transform_observation(o, T) for o in sample.observations),
            workspace=ws,
            state=state,
            timestep=sample.timestep,
            scheme=sample.scheme,
            mode=sample.mode,
            sample_id=f"{sample.sample_id}_aug{i:03d}",
            provenance=provenance,
        ))
    if not out:
        raise AugmentationFailedError(f"no valid perturbation of {sample.sample_id!r}")
    return out
