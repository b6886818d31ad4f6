"""On-disk keyframe samples and view sets.

A sample directory holds ``manifest.json`` plus one 8-bit PNG and one raw
little-endian float32 depth buffer per observation. A view-set directory
holds ``views.json`` plus one PNG per canonical view (and a depth buffer for
rendered views). Manifests are written with sorted keys and shortest
round-trip float formatting, so saving the same data twice yields identical
bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .codec import (
    DEFAULT_MODE,
    DEFAULT_SCHEME,
    AnnotatedView,
    AnnotationScheme,
    EndEffectorState,
    resolve_mode,
)
from .errors import (
    DatasetError,
    DimensionMismatchError,
    InvariantViolationError,
    MissingFileError,
    VersionMismatchError,
)
from .geometry import AXIS_CONVENTION, OrthoCamera, PinholeIntrinsics, RigidTransform, Workspace
from .pointcloud import RgbdObservation
from .renderer import RenderedView

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
VIEWS_NAME = "views.json"


@dataclass(frozen=True, eq=False)
class KeyframeSample:
    instruction: str
    observations: tuple
    workspace: Workspace
    state: EndEffectorState
    timestep: int = 1
    scheme: AnnotationScheme = DEFAULT_SCHEME
    mode: str = DEFAULT_MODE
    sample_id: str = "sample"
    provenance: Optional[dict] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        object.__setattr__(self, "mode", resolve_mode(self.mode))
        if int(self.timestep) < 1:
            raise InvariantViolationError(f"timestep must be >= 1, got {self.timestep}")
        if not self.state.inside(self.workspace):
            raise InvariantViolationError(
                f"state position {self.state.position} outside workspace {self.workspace}")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _write_text(path: Path, text: str):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc}") from exc


def write_png(path: Path, rgb: np.ndarray):
    try:
        Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8), mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc}") from exc


def read_png(path: Path, width: int, height: int) -> np.ndarray:
    if not path.is_file():
        raise MissingFileError(f"referenced file missing: {path}")
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if rgb.shape != (height, width, 3):
        raise DimensionMismatchError(f"{path}: image is {rgb.shape}, manifest says {(height, width, 3)}")
    return rgb


def write_depth(path: Path, depth: np.ndarray):
    try:
        np.asarray(depth, dtype="<f4").tofile(path)
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc}") from exc


def read_depth(path: Path, width: int, height: int) -> np.ndarray:
    if not path.is_file():
        raise MissingFileError(f"referenced file missing: {path}")
    raw = path.read_bytes()
    if len(raw) != width * height * 4:
        raise DimensionMismatchError(
            f"{path}: {len(raw)} bytes, expected {width * height * 4} for {width}x{height} float32")
    return np.frombuffer(raw, dtype="<f4").reshape(height, width).astype(np.float32)


def _read_manifest(path: Path) -> dict:
    if not path.is_file():
        raise MissingFileError(f"manifest missing: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot parse {path}: {exc}") from exc
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format_version {version!r}, expected {FORMAT_VERSION}")
    return data


def save_sample(sample: KeyframeSample, dir_path) -> Path:
    """Write ``sample`` into ``dir_path``; returns the manifest path."""
    root = Path(dir_path)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetError(f"cannot create {root}: {exc}") from exc
    obs_entries = []
    for k, obs in enumerate(sample.observations):
        rgb_name = f"obs_{k:02d}_rgb.png"
        depth_name = f"obs_{k:02d}_depth.f32"
        write_png(root / rgb_name, obs.rgb)
        write_depth(root / depth_name, obs.depth)
        w, h = obs.intrinsics.width, obs.intrinsics.height
        obs_entries.append({
            "camera_id": obs.camera_id,
            "intrinsics": obs.intrinsics.to_dict(),
            "pose": obs.pose.to_dict(),
            "rgb": {"path": rgb_name, "width": w, "height": h, "format": "png-rgb8"},
            "depth": {"path": depth_name, "width": w, "height": h, "format": "raw-float32-le"},
        })
    manifest = {
        "format_version": FORMAT_VERSION,
        "axis_convention": AXIS_CONVENTION,
        "sample_id": sample.sample_id,
        "instruction": sample.instruction,
        "timestep": int(sample.timestep),
        "mode": sample.mode,
        "workspace": sample.workspace.to_dict(),
        "state": sample.state.to_dict(),
        "scheme": sample.scheme.to_dict(),
        "observations": obs_entries,
        "provenance": sample.provenance,
    }
    path = root / MANIFEST_NAME
    _write_text(path, _dumps(manifest))
    return path


def load_sample(dir_path) -> KeyframeSample:
    """Read and fully validate a sample directory."""
    root = Path(dir_path)
    m = _read_manifest(root / MANIFEST_NAME)
    try:
        observations = []
        for entry in m["observations"]:
            intr = PinholeIntrinsics.from_dict(entry["intrinsics"])
            for key in ("rgb", "depth"):
                if (entry[key]["width"], entry[key]["height"]) != (intr.width, intr.height):
                    raise DimensionMismatchError(
                        f"{entry[key]['path']}: declared size differs from intrinsics")
            rgb = read_png(root / entry["rgb"]["path"], intr.width, intr.height)
            depth = read_depth(root / entry["depth"]["path"], intr.width, intr.height)
            observations.append(RgbdObservation(rgb, depth, RigidTransform.from_dict(entry["pose"]),
                                                intr, entry["camera_id"]))
        return KeyframeSample(
            instruction=m["instruction"],
            observations=tuple(observations),
            workspace=Workspace.from_dict(m["workspace"]),
            state=EndEffectorState.from_dict(m["state"]),
            timestep=int(m["timestep"]),
            scheme=AnnotationScheme.from_dict(m["scheme"]),
            mode=m["mode"],
            sample_id=m["sample_id"],
            provenance=m.get("provenance"),
        )
    except DatasetError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvariantViolationError(f"{root / MANIFEST_NAME}: {exc}") from exc


def list_sample_dirs(root) -> list[Path]:
    root = Path(root)
    if (root / MANIFEST_NAME).is_file():
        return [root]
    return sorted(p.parent for p in root.glob(f"*/{MANIFEST_NAME}"))


# -- view sets ---------------------------------------------------------------

def save_views(views: Sequence, dir_path, scheme: Optional[AnnotationScheme] = None) -> Path:
    """Write rendered or annotated views plus ``views.json``."""
    root = Path(dir_path)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    annotated = isinstance(views[0], AnnotatedView) if views else False
    for view in views:
        h, w = view.rgb.shape[:2]
        entry = {"label": view.label, "camera": view.camera.to_dict(),
                 "rgb": {"path": f"{view.label}.png", "width": w, "height": h}}
        write_png(root / f"{view.label}.png", view.rgb)
        if not annotated:
            write_depth(root / f"{view.label}_depth.f32", view.depth)
            entry["depth"] = {"path": f"{view.label}_depth.f32", "width": w, "height": h}
        entries.append(entry)
    manifest = {
        "format_version": FORMAT_VERSION,
        "axis_convention": AXIS_CONVENTION,
        "kind": "annotated" if annotated else "rendered",
        "views": entries,
    }
    if annotated:
        manifest["mode"] = views[0].mode
        manifest["scheme"] = (scheme or DEFAULT_SCHEME).to_dict()
    path = root / VIEWS_NAME
    _write_text(path, _dumps(manifest))
    return path


def load_views(dir_path, expected_scheme: Optional[AnnotationScheme] = None):
    """Load a view set; annotated sets return ``(views, scheme)``."""
    root = Path(dir_path)
    m = _read_manifest(root / VIEWS_NAME)
    views = []
    for e in m["views"]:
        cam = OrthoCamera.from_dict(e["camera"])
        w, h = e["rgb"]["width"], e["rgb"]["height"]
        if (w, h) != (cam.width, cam.height):
            raise DimensionMismatchError(f"{e['rgb']['path']}: size differs from camera")
        rgb = read_png(root / e["rgb"]["path"], w, h)
        if m["kind"] == "annotated":
            views.append(AnnotatedView(e["label"], rgb, resolve_mode(m["mode"]), cam))
        else:
            depth = read_depth(root / e["depth"]["path"], w, h)
            views.append(RenderedView(e["label"], rgb, depth, cam))
    if m["kind"] != "annotated":
        return views, None
    scheme = AnnotationScheme.from_dict(m["scheme"])
    if expected_scheme is not None and scheme != expected_scheme:
        raise InvariantViolationError(f"{root / VIEWS_NAME}: annotation scheme does not match")
    return views, scheme


def write_json(path, obj):
    path = Path(path)
    if path.parent and not path.parent.exists():
        os.makedirs(path.parent, exist_ok=True)
    _write_text(path, _dumps(obj))
