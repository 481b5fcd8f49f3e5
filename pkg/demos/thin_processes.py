"""
The same limit for point processes: superpose n independent copies of a
clustered process, keep each point with probability 1/n, and the result
looks more and more like a Poisson process with the same intensity.

We use a Neyman-Scott process on the unit square (Poisson parents, Poisson
children in a small disc) and track two diagnostics as n grows:

    - the largest gap between the empirical APGFL and its Poisson value
      over a fixed dictionary of test functions,
    - the total variation between region counts and the Poisson law.
"""

from thinlaw import NeymanScott, Window, default_dictionary, thin_processes_curve
from thinlaw.functionals import standard_regions

window = Window.unit(2)
spec = NeymanScott(kappa=6.0, c=1.0, r=0.1, window=window)
regions = {k: v for k, v in standard_regions(window).items() if k != "H"}
n_list = [1, 2, 4, 8, 16, 32]

curve = thin_processes_curve(spec, n_list, default_dictionary(window), regions, N=20_000, seed=3)

print(f"{'n':>4} {'max gap':>10} {'stderr':>9}  " + "  ".join(f"TV[{r}]" for r in regions))
for n in n_list:
    gap = next(p for p in curve.points if p.n == n and p.metric == "apgfl_max_gap")
    tvs = [next(p.value for p in curve.points if p.n == n and p.metric == f"count_tv[{r}]") for r in regions]
    print(f"{n:>4} {gap.value:>10.4f} {gap.stderr:>9.4f}  " + "  ".join(f"{tv:>6.4f}" for tv in tvs))

# which test function was hardest at the largest n
worst = curve.reports[n_list[-1]].worst
print(f"\nworst test function at n={n_list[-1]}: {worst.u_id} (gap {worst.gap:.4f})")
