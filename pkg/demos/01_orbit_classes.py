"""Tour of the real 2×2×2 orbit classes.

Every real 2×2×2 tensor falls into one of six classes, and the sign of the
hyperdeterminant separates the two rank-three classes: zero on the tangential
variety (border rank two), negative for the rest (border rank three).

Run: python demos/01_orbit_classes.py
"""

import numpy as np

from border222 import classify_rank, hyperdeterminant, rank_one, w_tensor
from border222.tensor import DenseTensor, zeros

e0, e1 = np.eye(2)

rotation = np.zeros((2, 2, 2))
rotation[0] = [[1, 0], [0, 1]]
rotation[1] = [[0, 1], [-1, 0]]

examples = {
    "zero": zeros(),
    "simple tensor": rank_one([1.0, 2.0], [1.0, -1.0], [0.5, 3.0]),
    "shared third factor": rank_one(e0, e0, e0) + rank_one(e1, e1, e0),
    "superdiagonal": rank_one(e0, e0, e0) + rank_one(e1, e1, e1),
    "W": w_tensor(),
    "rotation slices": DenseTensor(rotation),
}

print(f"{'tensor':<22}{'delta':>8}  mlrank     rank  border  class")
for name, t in examples.items():
    r = classify_rank(t)
    print(f"{name:<22}{r.delta:>8.3g}  {str(r.mlrank.as_tuple()):<10} {r.rank:>4}  {r.border_rank:>6}  "
          f"{r.class_tag.value}")

# The class survives any invertible change of basis; only the sign of the
# hyperdeterminant is invariant, its size scales by the squared determinants.
rng = np.random.default_rng(0)
g = [rng.standard_normal((2, 2)) for _ in range(3)]
moved = DenseTensor(np.einsum("ai,bj,ck,ijk->abc", *g, rotation))
factor = np.prod([np.linalg.det(x) for x in g]) ** 2
print()
print(f"after a random change of basis: delta = {hyperdeterminant(moved):.6g}, "
      f"predicted {factor * -4.0:.6g}, class {classify_rank(moved).class_tag.value}")
