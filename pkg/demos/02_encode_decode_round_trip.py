"""Paint a target state onto the canonical views and decode it back."""

import math
import sys
from pathlib import Path

import numpy as np

from orthoact import (EndEffectorState, EulerRotation, decode_views, encode, fuse,
                      make_canonical_cameras, render_canonical_set, save_views)
from orthoact.synthetic import random_sample

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/encoded")
sample = random_sample(7)
views = render_canonical_set(fuse(sample.observations, sample.workspace),
                             make_canonical_cameras(sample.workspace, 256, 256))

# Keep the target away from the borders so every rotation hotspot stays in frame.
target = EndEffectorState((0.42, 0.61, 0.35), EulerRotation(0.3, -1.1, 2.5), gripper_open=False)
annotated = encode(target, views)
save_views(annotated, out)

decoded = decode_views(annotated, sample.workspace)
err_mm = 1000 * np.linalg.norm(decoded.position - np.array(target.position))
print(f"target   position {target.position}  rotation {(target.rotation.rx, target.rotation.ry, target.rotation.rz)}")
print(f"decoded  position {np.round(decoded.position, 4).tolist()}  "
      f"rotation {[round(decoded.rotation[a], 4) for a in 'xyz']}")
print(f"position error {err_mm:.2f} mm")
for a in "xyz":
    diff = math.degrees(abs(math.remainder(decoded.rotation[a] - target.rotation.axis(a), 2 * math.pi)))
    print(f"  r{a} error {diff:.3f} deg")
print(f"gripper open: {decoded.gripper_open} (target {target.gripper_open})")
