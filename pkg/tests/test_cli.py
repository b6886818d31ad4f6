import json
import subprocess
import sys

import numpy as np
import pytest

from orthoact.cli import main
from orthoact.codec import encode
from orthoact.dataset import load_sample, save_sample
from orthoact.geometry import make_canonical_cameras
from orthoact.pointcloud import fuse
from orthoact.renderer import render_canonical_set
from orthoact.solver import decode_views
from orthoact.synthetic import random_sample

WS_JSON = '{"min": [0, 0, 0], "max": [1, 1, 1]}'


@pytest.fixture(scope="module")
def sample_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("samples")
    for i in range(2):
        save_sample(random_sample(40 + i), root / f"s{i}")
    return root


def test_help_exits_zero(capsys):
    for cmd in ("render", "encode", "decode", "augment", "eval", "selftest"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0


def test_usage_errors_exit_two(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["augment", "--in", "x", "--n", "0", "--seed", "1", "--out", "y"])
    assert exc.value.code == 2
    assert main(["decode", "--views", str(tmp_path), "--workspace", "{oops",
                 "--out", str(tmp_path / "s.json")]) == 2
    assert main(["eval", "--samples", str(tmp_path), "--noise", '{"nope": 1}',
                 "--out", str(tmp_path / "r.json")]) == 2


def test_runtime_errors_exit_one(tmp_path, capsys):
    assert main(["render", "--in", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 1
    assert main(["decode", "--views", str(tmp_path), "--workspace", WS_JSON,
                 "--out", str(tmp_path / "s.json")]) == 1


def test_cli_round_trip_matches_in_process(sample_dir, tmp_path, capsys):
    sdir = sample_dir / "s0"
    assert main(["encode", "--in", str(sdir), "--mode", "faded", "--out", str(tmp_path / "e")]) == 0
    ws_file = tmp_path / "ws.json"
    ws_file.write_text(WS_JSON)
    assert main(["decode", "--views", str(tmp_path / "e"), "--workspace", str(ws_file),
                 "--out", str(tmp_path / "state.json")]) == 0
    on_disk = json.loads((tmp_path / "state.json").read_text())

    s = load_sample(sdir)
    views = render_canonical_set(fuse(s.observations, s.workspace),
                                 make_canonical_cameras(s.workspace, 256, 256))
    in_process = decode_views(encode(s.state, views), s.workspace).to_json()
    assert on_disk == json.loads(json.dumps(in_process))


def test_render_writes_views(sample_dir, tmp_path, capsys):
    assert main(["render", "--in", str(sample_dir / "s1"), "--out", str(tmp_path / "r"),
                 "--res", "64", "--splat-radius", "0"]) == 0
    meta = json.loads((tmp_path / "r" / "views.json").read_text())
    assert meta["kind"] == "rendered" and len(meta["views"]) == 4
    assert meta["views"][0]["rgb"]["width"] == 64


def test_augment_writes_samples(sample_dir, tmp_path, capsys):
    assert main(["augment", "--in", str(sample_dir / "s0"), "--n", "3", "--seed", "5",
                 "--out", str(tmp_path / "aug")]) == 0
    dirs = sorted(p.name for p in (tmp_path / "aug").iterdir())
    assert len(dirs) == 3
    first = (tmp_path / "aug" / dirs[0] / "manifest.json").read_bytes()
    assert main(["augment", "--in", str(sample_dir / "s0"), "--n", "3", "--seed", "5",
                 "--out", str(tmp_path / "aug2")]) == 0
    assert (tmp_path / "aug2" / dirs[0] / "manifest.json").read_bytes() == first


def test_eval_thread_invariant(sample_dir, tmp_path, capsys):
    noise = '{"hotspot_jitter_sigma": 1.0, "pixel_noise_sigma": 2.0, "rng_seed": 3}'
    for w in ("1", "8"):
        assert main(["eval", "--samples", str(sample_dir), "--noise", noise,
                     "--out", str(tmp_path / f"r{w}.json"), "--workers", w]) == 0
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r8.json").read_bytes()


def test_selftest_subprocess(tmp_path):
    out = [subprocess.run([sys.executable, "-m", "orthoact", "selftest", "--out",
                           str(tmp_path / f"st{i}.json")], capture_output=True, text=True)
           for i in range(2)]
    assert all(o.returncode == 0 for o in out)
    assert out[0].stdout == out[1].stdout
    assert (tmp_path / "st0.json").read_bytes() == (tmp_path / "st1.json").read_bytes()
