"""What alternating least squares does when no best fit exists.

On a generic rank-two tensor ALS recovers it. On W the error keeps falling
toward zero and the terms grow, since the infimum is never attained. On the
rotation-slice tensor the error stalls just above the boundary distance of 1.
The trace is written as CSV for offline plotting.

Run: python demos/04_als_degeneracy.py [trace.csv]
"""

import sys

import numpy as np

from border222 import als_rank2, boundary_distance, rank_one, w_tensor
from border222.approx import random_candidate, write_trace_csv
from border222.tensor import DenseTensor

rng = np.random.default_rng(3)
rank_two = rank_one(*rng.standard_normal((3, 2))) + rank_one(*rng.standard_normal((3, 2)))

data = np.zeros((2, 2, 2))
data[0] = [[1, 0], [0, 1]]
data[1] = [[0, 1], [-1, 0]]
rotation = DenseTensor(data)

init = random_candidate(seed=1)
for name, tau in [("rank two", rank_two), ("W", w_tensor()), ("rotation slices", rotation)]:
    cand, trace = als_rank2(tau, init, sweeps=500)
    first, last = trace.records[0], trace.records[-1]
    print(f"{name}: {last.iteration} sweeps, error {first.error:.3e} -> {last.error:.3e}, "
          f"term norm {first.factor_norm_max:.3g} -> {last.factor_norm_max:.3g}, "
          f"candidate delta {last.delta_candidate:.2e}, perturbed {trace.perturbed}")
    if name == "W" and len(sys.argv) > 1:
        write_trace_csv(sys.argv[1], trace.records)
        print(f"  trace written to {sys.argv[1]}")

print(f"rotation-slice boundary distance: {boundary_distance(rotation).distance:.12f}")
