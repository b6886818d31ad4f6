"""Synthetic-oracle evaluation: encode, perturb, decode, and score.

Ground-truth annotations stand in for a learned image generator; a
:class:`NoiseModel` degrades them in controlled ways so decoder robustness
can be measured parametrically.
"""

from __future__ import annotations

import math
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .augment import derive_seed
from .codec import (
    DEFAULT_SCHEME,
    FADED_RECONSTRUCTION,
    AnnotatedView,
    AnnotationScheme,
    EndEffectorState,
    Hotspot,
    _gripper_mask,
    composite,
    encode,
    hotspot_layout,
)
from .dataset import KeyframeSample, load_sample, save_sample
from .errors import OrthoActError
from .geometry import (
    EulerRotation,
    Workspace,
    make_canonical_cameras,
    project_ortho,
    project_pinhole,
    unproject_pixel,
    wrap_angle,
)
from .pointcloud import fuse
from .renderer import DEFAULT_SPLAT_RADIUS, render_canonical_set
from .solver import (
    SolverConfig,
    ScalarHeatmap,
    decode_views,
    solve_position,
    solve_position_bruteforce,
)

DEFAULT_RESOLUTION = 256


@dataclass(frozen=True)
class NoiseModel:
    pixel_noise_sigma: float = 0.0
    hotspot_jitter_sigma: float = 0.0
    view_dropout_prob: float = 0.0
    false_hotspot_count: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.pixel_noise_sigma >= 0 and math.isfinite(self.pixel_noise_sigma)):
            raise ValueError("pixel_noise_sigma must be a finite value >= 0")
        if not (self.hotspot_jitter_sigma >= 0 and math.isfinite(self.hotspot_jitter_sigma)):
            raise ValueError("hotspot_jitter_sigma must be a finite value >= 0")
        if not 0.0 <= self.view_dropout_prob <= 1.0:
            raise ValueError("view_dropout_prob must lie in [0, 1]")
        if int(self.false_hotspot_count) != self.false_hotspot_count or self.false_hotspot_count < 0:
            raise ValueError("false_hotspot_count must be an integer >= 0")
        object.__setattr__(self, "false_hotspot_count", int(self.false_hotspot_count))
        object.__setattr__(self, "rng_seed", int(self.rng_seed))

    @property
    def is_zero(self) -> bool:
        return (self.pixel_noise_sigma == 0 and self.hotspot_jitter_sigma == 0
                and self.view_dropout_prob == 0 and self.false_hotspot_count == 0)

    def to_dict(self) -> dict:
        return {
            "pixel_noise_sigma": float(self.pixel_noise_sigma),
            "hotspot_jitter_sigma": float(self.hotspot_jitter_sigma),
            "view_dropout_prob": float(self.view_dropout_prob),
            "false_hotspot_count": self.false_hotspot_count,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d) -> "NoiseModel":
        known = {"pixel_noise_sigma", "hotspot_jitter_sigma", "view_dropout_prob",
                 "false_hotspot_count", "rng_seed"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown noise parameters: {sorted(unknown)}")
        return cls(**d)


def _scheme_colors(scheme: AnnotationScheme) -> list[tuple]:
    colors = [tuple(scheme.translation_color)]
    for _, _, c in scheme.rotation_assignments:
        if tuple(c) not in colors:
            colors.append(tuple(c))
    return colors


def perturb_views(views: Sequence[AnnotatedView], noise: NoiseModel,
                  scheme: AnnotationScheme = DEFAULT_SCHEME,
                  rng_seed: Optional[int] = None) -> list[AnnotatedView]:
    """Degrade encoder output.

    Per view, in order: jitter every hotspot center, add
    ``false_hotspot_count`` decoys of a random annotation color at uniform
    positions, add clipped Gaussian pixel noise, and finally drop the view
    (background only) with probability ``view_dropout_prob``. The random
    stream depends only on ``rng_seed`` (default ``noise.rng_seed``).
    """
    views = list(views)
    if noise.is_zero:
        return [AnnotatedView(v.label, v.rgb.copy(), v.mode, v.camera, v.background, v.hotspots)
                for v in views]
    seed = noise.rng_seed if rng_seed is None else rng_seed
    colors = _scheme_colors(scheme)
    out = []
    for k, view in enumerate(views):
        if view.background is None:
            raise ValueError(f"view {view.label!r} carries no background layer to repaint")
        rng = np.random.default_rng(derive_seed(seed, k))
        h, w = view.rgb.shape[:2]
        spots = list(view.hotspots)
        if noise.hotspot_jitter_sigma > 0:
            jit = rng.normal(0.0, noise.hotspot_jitter_sigma, (len(spots), 2))
            spots = [s.moved(float(d[0]), float(d[1])) for s, d in zip(spots, jit)]
        for _ in range(noise.false_hotspot_count):
            u, v = rng.uniform(0, w), rng.uniform(0, h)
            color = colors[int(rng.integers(len(colors)))]
            spots.append(Hotspot(float(u), float(v), scheme.translation_sigma, color, "false"))
        rgb = composite(view.background, spots)
        if noise.pixel_noise_sigma > 0:
            noisy = rgb + rng.normal(0.0, noise.pixel_noise_sigma, rgb.shape)
            rgb = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
        if rng.uniform() < noise.view_dropout_prob:
            rgb = view.background.copy()
            spots = []
        out.append(AnnotatedView(view.label, rgb, view.mode, view.camera, view.background,
                                 tuple(spots)))
    return out


# -- evaluation ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EvalCase:
    """One round-trip problem: rendered canonical views plus the true state."""

    sample_id: str
    views: tuple
    state: EndEffectorState
    workspace: Workspace
    mode: str
    scheme: AnnotationScheme = DEFAULT_SCHEME


def prepare_case(sample: KeyframeSample, resolution: int = DEFAULT_RESOLUTION,
                 splat_radius: int = DEFAULT_SPLAT_RADIUS) -> EvalCase:
    cloud = fuse(sample.observations, sample.workspace)
    cams = make_canonical_cameras(sample.workspace, resolution, resolution)
    views = render_canonical_set(cloud, cams, splat_radius)
    return EvalCase(sample.sample_id, tuple(views), sample.state, sample.workspace,
                    sample.mode, sample.scheme)


def angle_error_deg(a: float, b: float) -> float:
    return abs(math.degrees(wrap_angle(a - b)))


def _eval_one(case: EvalCase, noise: NoiseModel, seed: int, config: SolverConfig,
              decode_rotation: bool) -> dict:
    row = {"sample_id": case.sample_id, "seed": seed, "position_error_mm": None,
           "rotation_error_deg": None, "gripper_correct": None, "failures": []}
    try:
        annotated = encode(case.state, case.views, case.scheme, case.mode)
        perturbed = perturb_views(annotated, noise, case.scheme, seed)
        decoded = decode_views(perturbed, case.workspace, case.scheme, config,
                               decode_rotation=decode_rotation,
                               decode_gripper_state=case.state.gripper_open is not None)
    except OrthoActError as exc:
        row["failures"] = [exc.kind]
        if case.state.gripper_open is not None:
            row["gripper_correct"] = False
        return row
    err = np.array(decoded.position) - np.array(case.state.position)
    row["position_error_mm"] = float(np.sqrt(np.sum(err * err)) * 1000.0)
    if decode_rotation:
        row["rotation_error_deg"] = {
            a: (None if decoded.rotation.get(a) is None
                else angle_error_deg(decoded.rotation[a], case.state.rotation.axis(a)))
            for a in ("x", "y", "z")
        }
    if case.state.gripper_open is not None:
        row["gripper_correct"] = decoded.gripper_open == case.state.gripper_open
    row["failures"] = sorted(decoded.failures.values())
    return row


def _stats(values: list) -> dict:
    if not values:
        return {"count": 0, "mean": None, "max": None, "median": None}
    arr = np.array(values, dtype=np.float64)
    return {"count": len(values), "mean": float(np.mean(arr)), "max": float(np.max(arr)),
            "median": float(np.median(arr))}


def aggregate_rows(rows: Sequence[dict]) -> dict:
    """Aggregate statistics; a pure function of ``rows``."""
    pos = [r["position_error_mm"] for r in rows if r["position_error_mm"] is not None]
    rot = {}
    for a in ("x", "y", "z"):
        rot[a] = _stats([r["rotation_error_deg"][a] for r in rows
                         if r["rotation_error_deg"] is not None
                         and r["rotation_error_deg"][a] is not None])
    grip = [r["gripper_correct"] for r in rows if r["gripper_correct"] is not None]
    counts: dict = {}
    for r in rows:
        for kind in r["failures"]:
            counts[kind] = counts.get(kind, 0) + 1
    return {
        "n_samples": len(rows),
        "position_error_mm": _stats(pos),
        "rotation_error_deg": rot,
        "gripper_accuracy_pct": (100.0 * sum(grip) / len(grip)) if grip else None,
        "failure_counts": dict(sorted(counts.items())),
    }


@dataclass(frozen=True, eq=False)
class EvalReport:
    noise: NoiseModel
    solver: SolverConfig
    rows: tuple
    aggregate: dict
    checks: tuple  # (name, passed) pairs

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def to_dict(self) -> dict:
        return {
            "noise": self.noise.to_dict(),
            "solver": self.solver.to_dict(),
            "aggregate": self.aggregate,
            "samples": list(self.rows),
            "checks": [{"name": n, "passed": ok} for n, ok in self.checks],
            "passed": self.passed,
        }


def _embedded_checks(cases, rows, agg, noise, config, decode_rotation) -> list:
    checks = [("aggregates_match_rows", aggregate_rows(rows) == agg)]
    first = cases[0]
    try:
        annotated = encode(first.state, first.views, first.scheme, first.mode)
    except OrthoActError:
        annotated = None
    if annotated is not None:
        zero = perturb_views(annotated, NoiseModel())
        checks.append(("zero_noise_is_identity",
                       all(np.array_equal(a.rgb, b.rgb) for a, b in zip(annotated, zero))))
        if first.mode == FADED_RECONSTRUCTION:
            checks.append(("faded_background_reserved_range",
                           all(int(v.background[~_gripper_mask(v.background.shape[:2], first.scheme)]
                                       .max(initial=0)) <= 127 for v in annotated)))
    again = _eval_one(first, noise, rows[0]["seed"], config, decode_rotation)
    checks.append(("rerun_is_identical", again == rows[0]))
    return checks


def run_eval(samples: Sequence, noise: NoiseModel = NoiseModel(),
             config: SolverConfig = SolverConfig(), workers: int = 1,
             decode_rotation: bool = True, resolution: int = DEFAULT_RESOLUTION) -> EvalReport:
    """Round-trip every sample through encode, :func:`perturb_views` and decode.

    ``samples`` may mix :class:`KeyframeSample` and :class:`EvalCase`. Sample
    ``i`` uses the seed ``derive_seed(noise.rng_seed, i)``, so the report does
    not depend on ``workers``. Decode errors are recorded per row.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("run_eval needs at least one sample")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def prep(s):
        return s if isinstance(s, EvalCase) else prepare_case(s, resolution)

    def job(i):
        case = prep(samples[i])
        return case, _eval_one(case, noise, derive_seed(noise.rng_seed, i), config, decode_rotation)

    if workers == 1:
        results = [job(i) for i in range(len(samples))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(len(samples))))
    cases = [c for c, _ in results]
    rows = [r for _, r in results]
    agg = aggregate_rows(rows)
    checks = _embedded_checks(cases, rows, agg, noise, config, decode_rotation)
    return EvalReport(noise, config, tuple(rows), agg, tuple(checks))


# -- synthetic heatmaps for the solver oracle ----------------------------------

def gaussian_image(width: int, height: int, u: float, v: float, sigma: float,
                   amplitude: float = 1.0) -> np.ndarray:
    xs = np.arange(width) + 0.5 - u
    ys = np.arange(height) + 0.5 - v
    return amplitude * np.exp(-(ys[:, None] ** 2 + xs[None, :] ** 2) / (2.0 * sigma ** 2))


def random_heatmap_set(rng: np.random.Generator, ws: Workspace, resolution: int = 64,
                       sigma: float = 3.0, jitter_px: float = 1.0,
                       distractor: bool = True) -> tuple[np.ndarray, list[ScalarHeatmap]]:
    """Canonical heatmaps with one dominant Gaussian each.

    The peaks sit at the projection of a random point plus per-view jitter, so
    the views disagree slightly; an optional weaker decoy is added per view.
    Returns ``(true_point, heatmaps)``.
    """
    p = ws.lo + rng.uniform(0.05, 0.95, 3) * ws.size
    out = []
    for _, cam in make_canonical_cameras(ws, resolution, resolution):
        u, v, _ = project_ortho(p, cam)
        du, dv = rng.normal(0.0, jitter_px, 2)
        img = gaussian_image(resolution, resolution, u + du, v + dv, sigma)
        if distractor:
            img = np.maximum(img, gaussian_image(resolution, resolution,
                                                 rng.uniform(0, resolution),
                                                 rng.uniform(0, resolution),
                                                 sigma, rng.uniform(0.2, 0.5)))
        out.append(ScalarHeatmap(img, cam))
    return p, out


# -- selftest ------------------------------------------------------------------

def _fmt(x) -> str:
    return f"{x:.4f}" if isinstance(x, float) else str(x)


def _suite_oracle(seed: int, n_sets: int = 6, n_grid: int = 48) -> list:
    ws = Workspace((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    rng = np.random.default_rng(derive_seed(seed, 1))
    diag = math.sqrt(3.0) / n_grid
    worst, all_ok = 0.0, True
    for _ in range(n_sets):
        _, hms = random_heatmap_set(rng, ws)
        fast = solve_position(hms, None, ws, coarse_n=16)
        brute = solve_position_bruteforce(hms, None, ws, n=n_grid)
        d = float(np.linalg.norm(fast.position - brute.position))
        worst = max(worst, d)
        all_ok &= d <= diag and fast.score >= brute.score
    return [("oracle: coarse-to-fine vs brute force", all_ok,
             f"sets={n_sets} worst_dist_m={_fmt(worst)} limit_m={_fmt(diag)}")]


def _suite_round_trip(seed: int, n_states: int = 40) -> list:
    from .synthetic import random_sample, random_state

    sample = random_sample(derive_seed(seed, 2))
    case = prepare_case(sample, DEFAULT_RESOLUTION)
    rng = np.random.default_rng(derive_seed(seed, 3))
    pos, rot, grip = [], [], []
    for _ in range(n_states):
        state = random_state(rng, sample.workspace)
        row = _eval_one(EvalCase("s", case.views, state, case.workspace, case.mode), NoiseModel(),
                        0, SolverConfig(), True)
        pos.append(row["position_error_mm"] if row["position_error_mm"] is not None else math.inf)
        grip.append(bool(row["gripper_correct"]))
        if _rotation_representable(state, case.views):
            errs = row["rotation_error_deg"] or {}
            rot.extend(math.inf if errs.get(a) is None else errs[a] for a in ("x", "y", "z"))
    mean_pos = float(np.mean(pos))
    return [
        ("round trip: position", mean_pos <= 2.0 and max(pos) <= 5.0,
         f"states={n_states} mean_mm={_fmt(mean_pos)} max_mm={_fmt(float(max(pos)))}"),
        ("round trip: rotation (in-frame hotspots)", (max(rot) if rot else 0.0) <= 2.0,
         f"angles={len(rot)} max_deg={_fmt(float(max(rot)) if rot else 0.0)}"),
        ("round trip: gripper", all(grip), f"correct={sum(grip)}/{len(grip)}"),
    ]


def _rotation_representable(state: EndEffectorState, views, scheme=DEFAULT_SCHEME) -> bool:
    """True when every rotation hotspot lies at least 3 sigma inside its view."""
    for view in views:
        for spot in hotspot_layout(state, view.label, view.camera, scheme):
            m = 3.0 * spot.sigma
            if not (m <= spot.u <= view.camera.width - m and m <= spot.v <= view.camera.height - m):
                return False
    return True


def _suite_geometry(seed: int) -> list:
    from .synthetic import make_rig

    rng = np.random.default_rng(derive_seed(seed, 4))
    worst = 0.0
    for intr, pose in make_rig(n_cams=4, rng=rng):
        for _ in range(50):
            u, v = rng.uniform(0, intr.width), rng.uniform(0, intr.height)
            d = rng.uniform(0.2, 5.0)
            p = unproject_pixel(u, v, d, intr, pose)
            pu, pv, _ = project_pinhole(p, intr, pose)
            worst = max(worst, abs(pu - u), abs(pv - v))
    cams = make_canonical_cameras(Workspace((0, 0, 0), (1, 1, 1)))
    front = dict(cams)["front"]
    spots = hotspot_layout(EndEffectorState((0.5, 0.5, 0.5), EulerRotation(0, 0, 0)), "front", front)
    offset = (spots[1].u - spots[0].u, spots[1].v - spots[0].v)
    return [
        ("geometry: unproject/project round trip", worst < 1e-4, f"worst_px={worst:.2e}"),
        ("codec: rx=0 hotspot 30 px right", offset == (30.0, 0.0),
         f"offset=({_fmt(offset[0])}, {_fmt(offset[1])})"),
    ]


def _suite_dataset(seed: int) -> list:
    from .synthetic import random_sample

    sample = random_sample(derive_seed(seed, 5))
    with tempfile.TemporaryDirectory() as tmp:
        save_sample(sample, tmp)
        first = (Path(tmp) / "manifest.json").read_bytes()
        back = load_sample(tmp)
        save_sample(back, tmp)
        second = (Path(tmp) / "manifest.json").read_bytes()
    same = all(np.array_equal(a.rgb, b.rgb) and np.array_equal(a.depth, b.depth)
               for a, b in zip(sample.observations, back.observations))
    return [("dataset: save/load/save is byte-stable", same and first == second,
             f"observations={len(back.observations)}")]


def selftest(seed: int = 0) -> dict:
    """Run the built-in suites; the report contains no timings or paths."""
    results = (_suite_geometry(seed) + _suite_oracle(seed) + _suite_round_trip(seed)
               + _suite_dataset(seed))
    return {
        "seed": int(seed),
        "results": [{"name": n, "passed": bool(ok), "detail": d} for n, ok, d in results],
        "passed": all(ok for _, ok, _ in results),
    }


def format_table(report: dict) -> str:
    rows = report["results"]
    width = max(len(r["name"]) for r in rows)
    lines = [f"{'check'.ljust(width)}  result  detail"]
    for r in rows:
        lines.append(f"{r['name'].ljust(width)}  {'PASS' if r['passed'] else 'FAIL':6}  {r['detail']}")
    lines.append(f"overall: {'PASS' if report['passed'] else 'FAIL'}")
    return "\n".join(lines)

