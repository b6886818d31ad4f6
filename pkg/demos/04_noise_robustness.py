"""Sweep hotspot jitter and view dropout and report the decoded position error."""

from orthoact import NoiseModel, run_eval
from orthoact.synthetic import random_sample

samples = [random_sample(100 + k) for k in range(8)]
print(f"{'jitter px':>9} {'dropout':>8} {'mean mm':>8} {'max mm':>8}  failures")
for jitter in (0.0, 1.0, 2.0):
    for dropout in (0.0, 0.25):
        noise = NoiseModel(hotspot_jitter_sigma=jitter, view_dropout_prob=dropout, rng_seed=1)
        agg = run_eval(samples, noise, workers=4, decode_rotation=False).aggregate
        pos = agg["position_error_mm"]
        print(f"{jitter:9.1f} {dropout:8.2f} {pos['mean']:8.2f} {pos['max']:8.2f}  {agg['failure_counts']}")
