"""
Scaling instead of thinning: (X_1 + ... + X_n) / n collapses onto E X.

For a Bernoulli(0.5) variable the sample mean concentrates at 0.5, its
spread shrinks like 0.5 / sqrt(n), and its Laplace transform approaches
exp(-0.5 u), the transform of a point mass.
"""

import math

from thinlaw import Bernoulli, large_numbers_check

rows = large_numbers_check(Bernoulli(0.5), [10, 100, 1000], N=100_000, seed=11, u_list=(1.0,))

print(f"{'n':>5} {'metric':>15} {'value':>12} {'target':>12} {'stderr':>10}")
for r in rows:
    print(f"{r.n:>5} {r.metric:>15} {r.value:>12.6f} {r.target:>12.6f} {r.stderr:>10.2e}")

# the remaining distance to exp(-u/2) is mostly the finite-n bias
for n in (10, 100, 1000):
    bias = ((1 + math.exp(-1 / n)) / 2) ** n - math.exp(-0.5)
    print(f"n={n:>4}: exact finite-n Laplace bias at u=1 is {bias:.2e}")
