import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthoact.geometry import (
    PinholeIntrinsics,
    RigidTransform,
    Workspace,
    euler_to_matrix,
    look_at,
    unproject_pixel,
)
from orthoact.pointcloud import (
    PointCloud,
    RgbdObservation,
    aggregate,
    fuse,
    transform_cloud,
    unproject_observation,
    voxel_downsample,
)
from orthoact.synthetic import equivalent_rig, rolled_observation, split_observation

INTR2 = PinholeIntrinsics(2.0, 2.0, 1.0, 1.0, 2, 2)


def obs_from(depth, pose=None, intr=INTR2, rgb=None):
    h, w = depth.shape
    if rgb is None:
        rgb = np.arange(h * w * 3, dtype=np.uint8).reshape(h, w, 3)
    return RgbdObservation(rgb, np.asarray(depth, np.float32), pose or RigidTransform.identity(), intr)


def test_all_zero_depth_gives_empty_cloud():
    assert len(unproject_observation(obs_from(np.zeros((2, 2))), None)) == 0


def test_two_by_two_hand_computation():
    pose = look_at([0.0, -1.0, 0.5], [0.0, 0.0, 0.5])
    depth = np.array([[1.0, 2.0], [0.5, 4.0]], dtype=np.float32)
    cloud = unproject_observation(obs_from(depth, pose), None)
    assert len(cloud) == 4
    expected = [unproject_pixel(c + 0.5, r + 0.5, float(depth[r, c]), INTR2, pose)
                for r in range(2) for c in range(2)]
    assert np.allclose(cloud.xyz, expected, atol=1e-6)
    # by hand: camera at (0,-1,0.5) looking along +y, image x = +x, image y = -z
    # pixel (0,0) center (0.5,0.5) -> normalized (-0.25,-0.25) at depth 1
    assert np.allclose(cloud.xyz[0], [-0.25, 0.0, 0.75], atol=1e-6)
    assert np.array_equal(cloud.rgb[0], [0, 1, 2])


def test_invalid_depth_pixels_skipped():
    depth = np.array([[np.nan, -1.0], [np.inf, 2.0]])
    assert len(unproject_observation(obs_from(depth), None)) == 1


def test_far_plane_cropped_away(unit_ws):
    depth = np.full((2, 2), 10.0)
    assert len(unproject_observation(obs_from(depth), unit_ws)) == 0


def test_crop_idempotent(scene_sample):
    ws = scene_sample.workspace
    for o in scene_sample.observations:
        c = unproject_observation(o, ws)
        again = c.crop(ws)
        assert np.array_equal(c.xyz, again.xyz) and np.array_equal(c.rgb, again.rgb)


def test_aggregate_concatenates_in_order():
    a = PointCloud(np.ones((3, 3)), np.zeros((3, 3)))
    b = PointCloud(np.zeros((2, 3)), np.ones((2, 3)))
    out = aggregate([a, b])
    assert len(out) == 5
    assert np.array_equal(out.xyz[:3], a.xyz)
    assert len(aggregate([])) == 0


def test_fusing_same_observation_twice_doubles(scene_sample):
    o = scene_sample.observations[0]
    one = fuse([o], scene_sample.workspace)
    two = fuse([o, o], scene_sample.workspace)
    assert len(two) == 2 * len(one)


def test_identity_transform_bitwise(scene_sample):
    c = fuse(scene_sample.observations, scene_sample.workspace)
    assert np.array_equal(transform_cloud(c, RigidTransform.identity()).xyz, c.xyz)


@settings(max_examples=25)
@given(st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi),
       st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_transform_preserves_distances_and_inverts(rx, ry, rz, tx, ty, tz):
    rng = np.random.default_rng(0)
    c = PointCloud(rng.uniform(-1, 1, (20, 3)), rng.integers(0, 256, (20, 3)))
    T = RigidTransform(euler_to_matrix(rx, ry, rz), [tx, ty, tz])
    moved = transform_cloud(c, T)
    d0 = np.linalg.norm(c.xyz[:, None] - c.xyz[None], axis=-1)
    d1 = np.linalg.norm(moved.xyz[:, None] - moved.xyz[None], axis=-1)
    assert np.allclose(d0, d1, atol=1e-9)
    back = transform_cloud(moved, T.inverse())
    assert np.allclose(back.xyz, c.xyz, atol=1e-9)


def test_rolled_observation_unprojects_identically(scene_sample):
    for o in scene_sample.observations:
        a = unproject_observation(o, None)
        b = unproject_observation(rolled_observation(o), None)
        assert a.same_multiset(b)


def test_split_observation_partitions_points(scene_sample):
    o = scene_sample.observations[0]
    a, b = split_observation(o, 20)
    whole = unproject_observation(o, None)
    parts = aggregate([unproject_observation(a, None), unproject_observation(b, None)])
    assert whole.same_multiset(parts)


def test_equivalent_rig_same_multiset(scene_sample):
    ws = scene_sample.workspace
    a = fuse(scene_sample.observations, ws)
    b = fuse(equivalent_rig(scene_sample.observations), ws)
    assert a.same_multiset(b)
    assert not np.array_equal(a.xyz, b.xyz)  # different order, same multiset


def test_voxel_filter_is_order_independent(scene_sample):
    c = fuse(scene_sample.observations, scene_sample.workspace)
    perm = np.random.default_rng(1).permutation(len(c))
    shuffled = PointCloud(c.xyz[perm], c.rgb[perm])
    a = voxel_downsample(c, 0.02)
    b = voxel_downsample(shuffled, 0.02)
    assert np.array_equal(a.xyz, b.xyz) and np.array_equal(a.rgb, b.rgb)
    assert 0 < len(a) < len(c)
    keys = np.floor(a.xyz / 0.02)
    assert len(np.unique(keys, axis=0)) == len(a)


def test_fuse_voxel_option(scene_sample):
    ws = scene_sample.workspace
    assert len(fuse(scene_sample.observations, ws, voxel_size=0.05)) < len(
        fuse(scene_sample.observations, ws))


def test_observation_shape_checks():
    with pytest.raises(ValueError):
        RgbdObservation(np.zeros((3, 2, 3), np.uint8), np.zeros((2, 2)), RigidTransform.identity(),
                        INTR2)
    with pytest.raises(ValueError):
        PointCloud(np.zeros((2, 3)), np.zeros((3, 3)))
