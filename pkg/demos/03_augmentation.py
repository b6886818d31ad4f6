"""Rigid augmentation: move the scene and the target together, then decode."""

import math

import numpy as np

from orthoact import AugmentBounds, augment_sample, decode_views, encode
from orthoact.harness import prepare_case
from orthoact.synthetic import random_sample

sample = random_sample(11)
bounds = AugmentBounds(translation=(0.1, 0.1, 0.1), rotation=(0.0, 0.0, math.pi / 2))

print("original rz = %.3f" % sample.state.rotation.rz)
for aug in augment_sample(sample, 5, bounds, rng_seed=3):
    case = prepare_case(aug)
    decoded = decode_views(encode(aug.state, case.views), aug.workspace)
    err = 1000 * np.linalg.norm(decoded.position - np.array(aug.state.position))
    print(f"{aug.sample_id}: rz {aug.state.rotation.rz:+.3f}  position error {err:.2f} mm  "
          f"failures {decoded.failures or 'none'}")
