import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthoact.augment import (
    AugmentBounds,
    augment_sample,
    derive_seed,
    sample_perturbation,
    transform_state,
)
from orthoact.codec import EndEffectorState, encode
from orthoact.errors import AugmentationFailedError
from orthoact.geometry import EulerRotation, RigidTransform, euler_to_matrix, project_ortho
from orthoact.harness import prepare_case
from orthoact.pointcloud import fuse


def test_zero_bounds_identity():
    T = sample_perturbation(AugmentBounds((0, 0, 0), (0, 0, 0)), 5)
    assert np.array_equal(T.rotation, np.eye(3)) and np.array_equal(T.translation, np.zeros(3))


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32))
def test_default_bounds_pure_z(seed):
    T = sample_perturbation(AugmentBounds(pivot=(0.5, 0.5, 0.5)), seed)
    R = T.rotation
    assert R[2, 2] == 1.0 and R[0, 2] == 0.0 and R[2, 0] == 0.0
    angle = math.atan2(R[1, 0], R[0, 0])
    assert -math.pi / 2 <= angle <= math.pi / 2


def test_same_seed_bitwise():
    a = sample_perturbation(AugmentBounds(), 77)
    b = sample_perturbation(AugmentBounds(), 77)
    assert np.array_equal(a.rotation, b.rotation) and np.array_equal(a.translation, b.translation)


def test_derive_seed_distinct():
    assert len({derive_seed(1, i, j) for i in range(10) for j in range(10)}) == 100


def test_zero_bounds_sample_unchanged(scene_sample):
    out = augment_sample(scene_sample, 1, AugmentBounds((0, 0, 0), (0, 0, 0)), 3)
    assert len(out) == 1
    assert out[0].state == scene_sample.state
    for a, b in zip(out[0].observations, scene_sample.observations):
        assert np.array_equal(a.rgb, b.rgb)
        assert a.pose.allclose(b.pose, atol=1e-12)


def test_pure_quarter_turn_adds_to_rz():
    s = EndEffectorState((0.5, 0.5, 0.5), EulerRotation(0.3, -0.2, 2.0))
    T = RigidTransform(euler_to_matrix(0, 0, math.pi / 2), np.zeros(3))
    out = transform_state(s, T)
    assert (out.rotation.rx, out.rotation.ry) == (s.rotation.rx, s.rotation.ry)
    assert out.rotation.rz == pytest.approx(2.0 + math.pi / 2 - 2 * math.pi)
    assert -math.pi < out.rotation.rz <= math.pi


def test_general_rotation_composes_matrices():
    s = EndEffectorState((0.1, 0.2, 0.3), EulerRotation(0.3, -0.2, 2.0))
    T = RigidTransform(euler_to_matrix(0.4, 0.1, -0.3), [0.1, 0, 0])
    out = transform_state(s, T)
    assert np.allclose(out.rotation.as_matrix(), T.rotation @ s.rotation.as_matrix(), atol=1e-12)


def test_augmented_states_inside_and_deterministic(scene_sample):
    a = augment_sample(scene_sample, 10, AugmentBounds(), 11)
    b = augment_sample(scene_sample, 10, AugmentBounds(), 11)
    assert len(a) == 10
    for x, y in zip(a, b):
        assert x.state == y.state and x.provenance == y.provenance
        assert x.state.inside(x.workspace)
        assert x.provenance["parent_id"] == scene_sample.sample_id


def test_rigidity_state_to_cloud_distances(scene_sample):
    base = fuse(scene_sample.observations, None)
    p0 = np.array(scene_sample.state.position)
    for aug in augment_sample(scene_sample, 3, AugmentBounds(), 4):
        moved = fuse(aug.observations, None)
        p1 = np.array(aug.state.position)
        d0 = np.linalg.norm(base.xyz - p0, axis=1)
        d1 = np.linalg.norm(moved.xyz - p1, axis=1)
        assert np.max(np.abs(d0 - d1)) < 1e-9


def test_translation_hotspot_at_projection_of_transformed_point(scene_sample):
    for aug in augment_sample(scene_sample, 3, AugmentBounds(), 9):
        T = RigidTransform.from_dict(aug.provenance["transform"])
        target = T.apply(np.array(scene_sample.state.position))
        case = prepare_case(aug, 128)
        for view in encode(aug.state, case.views):
            u, v, _ = project_ortho(target, view.camera)
            spot = view.hotspots[0]
            assert (spot.u, spot.v) == pytest.approx((u, v), abs=1e-9)


def test_impossible_bounds_fail(scene_sample):
    huge = AugmentBounds((50.0, 50.0, 50.0), (0, 0, 0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(AugmentationFailedError):
            augment_sample(scene_sample, 2, huge, 0)


def test_bounds_validation_and_dict():
    with pytest.raises(ValueError):
        AugmentBounds((-0.1, 0, 0))
    b = AugmentBounds((0.1, 0.2, 0.3), (0, 0, 1.0), (0.5, 0.5, 0.5))
    assert AugmentBounds.from_dict(b.to_dict()) == b


def test_n_must_be_positive(scene_sample):
    with pytest.raises(ValueError):
        augment_sample(scene_sample, 0)
