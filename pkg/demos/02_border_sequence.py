"""W is a limit of rank-two tensors.

W = e1⊗e0⊗e0 + e0⊗e1⊗e0 + e0⊗e0⊗e1 has rank three, yet the rank-two tensors

    n (e0 + e1/n)^⊗3 - n e0^⊗3

approach it: the gap is sqrt(3/n² + 1/n⁴). Along the way the two terms grow
like n and cancel almost completely, which is what makes rank-two fitting
ill-posed. The candidates' hyperdeterminant, positive for rank two, decays
toward the value zero it takes at W.

Run: python demos/02_border_sequence.py
"""

import numpy as np

from border222 import (
    TangentForm,
    border_bound,
    border_distance,
    border_sequence,
    classify_rank,
    hyperdeterminant,
)

e0, e1 = np.eye(2)
form = TangentForm((e0, e0, e0), (e1, e1, e1))
w = form.dense()

print(f"{'n':>9}  {'distance':>12}  {'bound':>12}  {'closed form':>12}  {'term norm':>10}  {'delta':>9}")
for k in range(7):
    n = 10**k
    cand = border_sequence(form, n)
    closed = np.sqrt(3 / n**2 + 1 / n**4)
    print(f"{n:>9}  {border_distance(form, n):>12.6e}  {border_bound(form, n):>12.6e}  "
          f"{closed:>12.6e}  {cand.term_norm_max():>10.3g}  {hyperdeterminant(cand.dense()):>9.2e}")

print()
print("W itself:", classify_rank(w).to_dict())
