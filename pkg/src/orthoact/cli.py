"""``orthoact`` command line.

Exit status is 0 on success, 2 for usage errors (bad flags or malformed
JSON arguments) and 1 for runtime failures such as missing files or an
undecodable view set.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .augment import AugmentBounds, augment_sample
from .codec import MODE_ALIASES, encode, resolve_mode
from .dataset import list_sample_dirs, load_sample, load_views, save_sample, save_views, write_json
from .errors import OrthoActError
from .geometry import Workspace, make_canonical_cameras
from .harness import DEFAULT_RESOLUTION, NoiseModel, format_table, run_eval, selftest
from .pointcloud import fuse
from .renderer import DEFAULT_SPLAT_RADIUS, render_canonical_set
from .solver import DEFAULT_COARSE_N, DEFAULT_EPS, DEFAULT_REFINE_LEVELS, SolverConfig, decode_views


class UsageError(Exception):
    pass


def _json_arg(text: str, what: str):
    """Parse ``text`` as inline JSON, or as the path of a JSON file."""
    stripped = text.strip()
    try:
        if stripped.startswith("{"):
            return json.loads(stripped)
        return json.loads(Path(text).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--{what}: expected inline JSON or a JSON file ({exc})") from exc


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _render_sample(sample, res: int, splat_radius: int):
    cloud = fuse(sample.observations, sample.workspace)
    cams = make_canonical_cameras(sample.workspace, res, res)
    return render_canonical_set(cloud, cams, splat_radius)


def cmd_render(args) -> int:
    sample = load_sample(args.input)
    views = _render_sample(sample, args.res, args.splat_radius)
    save_views(views, args.out)
    print(f"rendered {len(views)} views to {args.out}")
    return 0


def cmd_encode(args) -> int:
    sample = load_sample(args.input)
    views = _render_sample(sample, args.res, args.splat_radius)
    mode = resolve_mode(args.mode) if args.mode else sample.mode
    annotated = encode(sample.state, views, sample.scheme, mode)
    save_views(annotated, args.out, sample.scheme)
    print(f"encoded {len(annotated)} views ({mode}) to {args.out}")
    return 0


def cmd_decode(args) -> int:
    try:
        ws = Workspace.from_dict(_json_arg(args.workspace, "workspace"))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"--workspace: {exc}") from exc
    views, scheme = load_views(args.views)
    if scheme is None:
        raise OrthoActError(f"{args.views} holds rendered, not annotated, views")
    config = SolverConfig(args.eps, args.coarse, args.refine)
    decoded = decode_views(views, ws, scheme, config)
    write_json(args.out, decoded.to_json())
    for item, kind in sorted(decoded.failures.items()):
        print(f"warning: {item}: {kind}", file=sys.stderr)
    print(f"wrote {args.out}")
    return 0


def cmd_augment(args) -> int:
    bounds = AugmentBounds()
    if args.bounds:
        try:
            bounds = AugmentBounds.from_dict(_json_arg(args.bounds, "bounds"))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"--bounds: {exc}") from exc
    sample = load_sample(args.input)
    out = augment_sample(sample, args.n, bounds, args.seed)
    root = Path(args.out)
    for aug in out:
        save_sample(aug, root / aug.sample_id)
    print(f"wrote {len(out)} augmented samples to {root}")
    return 0


def cmd_eval(args) -> int:
    try:
        noise = NoiseModel.from_dict(_json_arg(args.noise, "noise")) if args.noise else NoiseModel()
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--noise: {exc}") from exc
    dirs = list_sample_dirs(args.samples)
    if not dirs:
        raise OrthoActError(f"no samples (manifest.json) under {args.samples}")
    samples = [load_sample(d) for d in dirs]
    config = SolverConfig(args.eps, args.coarse, args.refine)
    report = run_eval(samples, noise, config, workers=args.workers,
                      decode_rotation=not args.translation_only, resolution=args.res)
    write_json(args.out, report.to_dict())
    agg = report.aggregate
    pos = agg["position_error_mm"]
    print(f"samples={agg['n_samples']} position_mean_mm={pos['mean']} "
          f"gripper_pct={agg['gripper_accuracy_pct']} failures={agg['failure_counts']}")
    for name, ok in report.checks:
        if not ok:
            print(f"check failed: {name}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_selftest(args) -> int:
    report = selftest(args.seed)
    print(format_table(report))
    if args.out:
        write_json(args.out, report)
    return 0 if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orthoact",
                                description="Canonical-view keyframe encoding and decoding.")
    sub = p.add_subparsers(dest="command", required=True)

    def solver_flags(sp):
        sp.add_argument("--eps", type=float, default=DEFAULT_EPS, help="likelihood floor per view")
        sp.add_argument("--coarse", type=_positive_int, default=DEFAULT_COARSE_N,
                        help="coarse grid cells per axis")
        sp.add_argument("--refine", type=int, default=DEFAULT_REFINE_LEVELS,
                        help="refinement rounds")

    def view_flags(sp):
        sp.add_argument("--splat-radius", type=int, default=DEFAULT_SPLAT_RADIUS)
        sp.add_argument("--res", type=_positive_int, default=DEFAULT_RESOLUTION,
                        help="canonical view width and height in pixels")

    sp = sub.add_parser("render", help="render the four canonical views of a sample")
    sp.add_argument("--in", dest="input", required=True, help="sample directory")
    sp.add_argument("--out", required=True, help="output view directory")
    view_flags(sp)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("encode", help="render a sample and paint its target state")
    sp.add_argument("--in", dest="input", required=True, help="sample directory")
    sp.add_argument("--mode", choices=sorted(MODE_ALIASES), default=None,
                    help="background mode (default: the sample's own)")
    sp.add_argument("--out", required=True, help="output view directory")
    view_flags(sp)
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("decode", help="recover the target state from annotated views")
    sp.add_argument("--views", required=True, help="annotated view directory")
    sp.add_argument("--workspace", required=True,
                    help='JSON file or inline JSON such as {"min": [0,0,0], "max": [1,1,1]}')
    sp.add_argument("--out", required=True, help="path of state.json")
    solver_flags(sp)
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("augment", help="write rigidly perturbed copies of a sample")
    sp.add_argument("--in", dest="input", required=True, help="sample directory")
    sp.add_argument("--n", type=_positive_int, required=True, help="number of copies")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--bounds", default=None, help="JSON with translation/rotation half-ranges")
    sp.add_argument("--out", required=True, help="directory receiving one folder per copy")
    sp.set_defaults(func=cmd_augment)

    sp = sub.add_parser("eval", help="encode, perturb and decode a directory of samples")
    sp.add_argument("--samples", required=True, help="sample directory or a folder of them")
    sp.add_argument("--noise", default=None, help="NoiseModel as JSON file or inline JSON")
    sp.add_argument("--out", required=True, help="path of report.json")
    sp.add_argument("--workers", type=_positive_int, default=1)
    sp.add_argument("--translation-only", action="store_true",
                    help="skip rotation decoding")
    sp.add_argument("--res", type=_positive_int, default=DEFAULT_RESOLUTION)
    solver_flags(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("selftest", help="run the built-in oracle and round-trip suites")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="also write the report as JSON")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (OrthoActError, OSError, ValueError) as exc:
        print(f"{parser.prog}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
