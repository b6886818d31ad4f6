import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthoact.codec import EndEffectorState, ScalarHeatmap, encode, extract_channel
from orthoact.errors import ResourceLimitError, UnderdeterminedPositionError
from orthoact.geometry import EulerRotation, Workspace, make_canonical_cameras, project_ortho
from orthoact.harness import gaussian_image, random_heatmap_set
from orthoact.pointcloud import PointCloud
from orthoact.renderer import render_canonical_set
from orthoact.solver import (
    decode_views,
    grid_axes,
    objective,
    sample_bilinear,
    solve_position,
    solve_position_bruteforce,
)

WS = Workspace((0, 0, 0), (1, 1, 1))
CAMS = [c for _, c in make_canonical_cameras(WS, 64, 64)]


def hms(images, cams=CAMS):
    return [ScalarHeatmap(np.asarray(im, dtype=np.float64), c) for im, c in zip(images, cams)]


# -- bilinear sampling ----------------------------------------------------------

def test_pixel_center_returns_value(rng):
    img = rng.uniform(0, 1, (5, 7))
    for r in range(5):
        for c in range(7):
            assert sample_bilinear(img, c + 0.5, r + 0.5) == img[r, c]


def test_midpoint_is_average():
    img = np.array([[0.0, 1.0]])
    assert sample_bilinear(img, 1.0, 0.5) == 0.5


def test_out_of_bounds_is_zero():
    img = np.ones((4, 4))
    assert sample_bilinear(img, -5, -5) == 0.0
    assert sample_bilinear(img, 4.0, 1.0) == 0.0
    # inside, near the border, the zero padding pulls the value down
    assert sample_bilinear(img, 0.25, 2.0) == pytest.approx(0.75)


@given(st.floats(-3, 10), st.floats(-3, 10))
def test_bilinear_within_range(u, v):
    img = np.random.default_rng(0).uniform(0, 1, (6, 6))
    val = sample_bilinear(img, u, v)
    assert 0.0 <= val <= 1.0


def test_vectorized_matches_scalar(rng):
    img = rng.uniform(0, 1, (8, 8))
    u, v = rng.uniform(-1, 9, 50), rng.uniform(-1, 9, 50)
    vec = sample_bilinear(img, u, v)
    assert np.array_equal(vec, [sample_bilinear(img, a, b) for a, b in zip(u, v)])


# -- solver ---------------------------------------------------------------------

def test_uniform_heatmaps_tie_break_first_cell():
    sol = solve_position(hms([np.ones((64, 64))] * 4), None, WS, eps=1e-3, coarse_n=16)
    first = [a[0] for a in grid_axes(WS, 16)]
    assert np.array_equal(sol.position, first)
    assert sol.score == pytest.approx((1 + 1e-3) ** 4, rel=1e-12)


def test_matches_bruteforce_coarse_stage_exactly(rng):
    for _ in range(3):
        _, maps = random_heatmap_set(rng, WS)
        a = solve_position(maps, None, WS, coarse_n=20, refine_levels=0)
        b = solve_position_bruteforce(maps, None, WS, n=20)
        assert np.array_equal(a.position, b.position)
        assert a.score == b.score


def test_delta_heatmaps_hit_nearest_grid_point():
    n = 32
    target = np.array([0.3, 0.7, 0.55])
    cams = dict(make_canonical_cameras(WS, 64, 64))
    imgs, used = [], []
    for label in ("front", "top"):
        cam = cams[label]
        u, v, _ = project_ortho(target, cam)
        img = np.zeros((64, 64))
        img[int(v), int(u)] = 1.0
        imgs.append(img)
        used.append(cam)
    sol = solve_position_bruteforce(hms(imgs, used), used, WS, n=n)
    # the ray intersection is the pixel-center point; nearest grid point to it
    centers = []
    for img, cam in zip(imgs, used):
        r, c = np.argwhere(img)[0]
        centers.append((c + 0.5, r + 0.5))
    axes = grid_axes(WS, n)
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    errs = sum((np.array(project_ortho(pts, cam)[:2]).T - np.array(cc)) ** 2
               for cam, cc in zip(used, centers)).sum(-1)
    assert np.allclose(sol.position, pts[np.argmin(errs)])


def test_final_score_at_least_coarse_score(rng):
    for _ in range(5):
        _, maps = random_heatmap_set(rng, WS)
        sol = solve_position(maps, None, WS, coarse_n=16)
        assert sol.score >= sol.coarse_score


def test_objective_positive_everywhere(rng):
    zero = hms([np.zeros((64, 64))] * 4)
    for p in rng.uniform(-1, 2, (20, 3)):
        assert objective(zero, None, p) > 0


def test_bruteforce_at_least_as_good_as_n64_bruteforce(rng):
    for _ in range(4):
        _, maps = random_heatmap_set(rng, WS)
        fast = solve_position(maps, None, WS)
        brute = solve_position_bruteforce(maps, None, WS, n=64)
        assert fast.score >= brute.score


def test_bruteforce_resource_limit():
    with pytest.raises(ResourceLimitError):
        solve_position_bruteforce(hms([np.ones((64, 64))] * 4), None, WS, n=216)


def test_input_validation():
    with pytest.raises(ValueError):
        solve_position(hms([np.ones((64, 64))] * 4), None, WS, eps=0.0)
    with pytest.raises(ValueError):
        solve_position(hms([np.ones((64, 64))] * 4), None, WS, coarse_n=4)


def test_uniform_view_neutrality(rng):
    for value in (0.0, 0.37, 1.0):
        _, maps = random_heatmap_set(rng, WS)
        base = solve_position(maps, None, WS)
        extra = maps + [ScalarHeatmap(np.full((64, 64), value), CAMS[0])]
        more = solve_position(extra, None, WS)
        assert np.array_equal(base.position, more.position)
        assert more.score == pytest.approx(base.score * (value + 1e-3), rel=1e-9)


def test_solver_deterministic(rng):
    _, maps = random_heatmap_set(rng, WS)
    a = solve_position(maps, None, WS)
    b = solve_position(maps, None, WS)
    assert np.array_equal(a.position, b.position) and a.score == b.score


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_single_gaussians_recovered(x, y, z):
    p = np.array([x, y, z])
    imgs = []
    for cam in CAMS:
        u, v, _ = project_ortho(p, cam)
        imgs.append(gaussian_image(64, 64, u, v, 2.5))
    sol = solve_position(hms(imgs), None, WS, coarse_n=16)
    assert np.linalg.norm(sol.position - p) <= 0.5 * math.sqrt(3) * 1.05 / 64


# -- decode_views -------------------------------------------------------------------

BLANK = render_canonical_set(PointCloud.empty(), make_canonical_cameras(WS, 256, 256))


def test_encoded_states_within_2mm_on_average(rng):
    # bilinear maxima sit on pixel centers, so one state can miss by up to half
    # a pixel diagonal; the 2 mm budget holds for the mean
    half_diag = 0.5 * math.sqrt(3) * 1.05 / 256
    errs = []
    for _ in range(40):
        s = EndEffectorState(tuple(rng.uniform(0.05, 0.95, 3)))
        dec = decode_views(encode(s, BLANK), WS, decode_rotation=False, decode_gripper_state=False)
        errs.append(np.linalg.norm(dec.position - np.array(s.position)))
    assert max(errs) <= half_diag + 1e-9
    assert np.mean(errs) <= 0.002


def test_one_view_zeroed_within_5mm():
    s = EndEffectorState((0.61, 0.27, 0.44), EulerRotation(0.2, 0.3, 0.4), True)
    views = encode(s, BLANK)
    for k in range(4):
        dropped = list(views)
        dropped[k] = type(views[k])(views[k].label, views[k].background, views[k].mode,
                                    views[k].camera)
        dec = decode_views(dropped, WS, decode_rotation=False)
        assert np.linalg.norm(dec.position - np.array(s.position)) <= 0.005


def test_two_parallel_views_underdetermined():
    s = EndEffectorState((0.5, 0.5, 0.5))
    views = encode(s, BLANK)
    # keep only left and right: both blind to depth along y
    blank = [type(v)(v.label, v.background, v.mode, v.camera) for v in views]
    with pytest.raises(UnderdeterminedPositionError):
        decode_views([blank[0], views[1], views[2], blank[3]], WS)


def test_state_json_schema():
    s = EndEffectorState((0.4, 0.5, 0.6), EulerRotation(0.1, 0.2, 0.3), False)
    out = decode_views(encode(s, BLANK), WS).to_json()
    assert set(out) == {"position", "rotation_euler_xyz", "gripper_open", "score"}
    assert out["gripper_open"] is False and len(out["rotation_euler_xyz"]) == 3
