"""Canonical orthographic views as an action space for robot keyframes.

Posed RGBD frames are fused into a point cloud and rendered from four fixed
orthographic cameras. A target end-effector state is painted onto those views
as colored Gaussian hotspots and recovered again by a multi-view likelihood
search.
"""

from .augment import AugmentBounds, augment_sample, sample_perturbation
from .codec import (
    DEFAULT_MODE,
    DEFAULT_SCHEME,
    AnnotatedView,
    AnnotationScheme,
    EndEffectorState,
    ScalarHeatmap,
    decode_gripper,
    decode_rotation,
    encode,
    extract_channel,
)
from .dataset import KeyframeSample, load_sample, load_views, save_sample, save_views
from .errors import OrthoActError
from .geometry import (
    EulerRotation,
    OrthoCamera,
    PinholeIntrinsics,
    RigidTransform,
    Workspace,
    make_canonical_cameras,
    project_ortho,
    project_pinhole,
    unproject_pixel,
)
from .harness import EvalReport, NoiseModel, perturb_views, run_eval, selftest
from .pointcloud import PointCloud, RgbdObservation, fuse, unproject_observation
from .renderer import RenderedView, render, render_canonical_set
from .solver import (
    DecodedState,
    SolverConfig,
    decode_views,
    sample_bilinear,
    solve_position,
    solve_position_bruteforce,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedView", "AnnotationScheme", "AugmentBounds", "DEFAULT_MODE", "DEFAULT_SCHEME",
    "DecodedState", "EndEffectorState", "EulerRotation", "EvalReport", "KeyframeSample",
    "NoiseModel", "OrthoActError", "OrthoCamera", "PinholeIntrinsics", "PointCloud",
    "RenderedView", "RgbdObservation", "RigidTransform", "ScalarHeatmap", "SolverConfig",
    "Workspace", "augment_sample", "decode_gripper", "decode_rotation", "decode_views",
    "encode", "extract_channel", "fuse", "load_sample", "load_views", "make_canonical_cameras",
    "perturb_views", "project_ortho", "project_pinhole", "render", "render_canonical_set",
    "run_eval", "sample_bilinear", "sample_perturbation", "save_sample", "save_views",
    "selftest", "solve_position", "solve_position_bruteforce", "unproject_observation",
    "unproject_pixel",
]
