"""Fuse a synthetic RGBD rig and render the four canonical views to PNG.

Run: python3 demos/01_render_canonical_views.py [out_dir]
"""

import sys
from pathlib import Path

from orthoact import fuse, make_canonical_cameras, render_canonical_set, save_views
from orthoact.synthetic import random_sample

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/render")
sample = random_sample(7)
print(f"{len(sample.observations)} RGBD frames, workspace {sample.workspace.min} .. {sample.workspace.max}")

cloud = fuse(sample.observations, sample.workspace)
print(f"fused cloud: {len(cloud.xyz)} points inside the workspace")

views = render_canonical_set(cloud, make_canonical_cameras(sample.workspace, 256, 256))
for view in views:
    covered = (view.depth < float("inf")).mean()
    print(f"  {view.label:>5}: {100 * covered:.1f}% of pixels hit")
save_views(views, out)
print(f"wrote {out}")
