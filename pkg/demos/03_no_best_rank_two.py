"""No rank-two tensor is closest to a tensor with negative hyperdeterminant.

Take the rotation-slice tensor (hyperdeterminant -4). Its distance to the
closure of the rank-two set is exactly 1, but that distance is only reached by
rank-three tensors on the tangential variety. Start anywhere and
``improve_candidate`` always finds a strictly better rank-two candidate; the
errors creep toward 1 while the factors grow without bound.

Run: python demos/03_no_best_rank_two.py
"""

import numpy as np

from border222 import (
    Rank2Candidate,
    boundary_distance,
    classify_rank,
    hyperdeterminant,
    improvement_chain,
    random_rank2_search,
)
from border222.tensor import DenseTensor

data = np.zeros((2, 2, 2))
data[0] = [[1, 0], [0, 1]]
data[1] = [[0, 1], [-1, 0]]
tau = DenseTensor(data)

bd = boundary_distance(tau)
print(f"distance to the rank-two closure: {bd.distance:.12f}")
print(f"nearest point class: {bd.class_tag.value}, its hyperdeterminant {bd.delta_nearest:.1e}")

e0, e1 = np.eye(2)
starts = {
    "deficient start": Rank2Candidate((e0, e0, e0), (e1, e1, e0)),
    "best of 10^4 random": random_rank2_search(tau, 10**4, seed=1)[1],
}
for label, start in starts.items():
    chain = improvement_chain(tau, start, steps=50)
    print()
    print(f"{label}: {len(chain.cases)} improving steps, stalled at float precision: {chain.stalled}")
    print(f"{'step':>4}  {'case':<14}{'error':>20}  {'error - 1':>10}  {'factor norm':>11}  {'|delta|':>8}")
    for k, (c, err) in enumerate(zip(chain.candidates, chain.errors)):
        case = chain.cases[k - 1].value if k else "start"
        print(f"{k:>4}  {case:<14}{err:>20.15f}  {err - bd.distance:>10.2e}  "
              f"{c.factor_norm_max():>11.3g}  {abs(hyperdeterminant(c.dense())):>8.1e}")
    print("final candidate still has rank", classify_rank(chain.final.dense()).rank)
