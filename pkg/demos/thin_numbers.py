"""
Thinning a sum of n copies of X by 1/n pushes its law toward Poisson(E X).

We compute the law of (1/n) o (X_1 + ... + X_n) exactly, with no sampling,
and watch its total variation distance to the Poisson target shrink as n
doubles.  A Monte Carlo run at the same n values shows the sampled curve
tracking the exact one up to noise.
"""

from thinlaw import Bernoulli, Deterministic, FinitePmf, thin_numbers_curve

n_list = [2**k for k in range(11)]

# 1 - exact curves for three finite-support laws
laws = {
    "Deterministic(1)": Deterministic(1),
    "Bernoulli(0.7)": Bernoulli(0.7),
    "pmf 0.2/0.5/0.3": FinitePmf([0.2, 0.5, 0.3]),
}
print(f"{'n':>5}  " + "  ".join(f"{name:>18}" for name in laws))
curves = {name: thin_numbers_curve(dist, n_list, "exact") for name, dist in laws.items()}
for i, n in enumerate(n_list):
    print(f"{n:>5}  " + "  ".join(f"{curves[name][i].value:>18.3e}" for name in laws))

# For X = 1 the thinned sum is Binomial(n, 1/n), and the distance stays below 1/n
print("\nDeterministic(1) TV * n:", [round(p.value * p.n, 3) for p in curves["Deterministic(1)"]])

# 2 - the sampled curve for the same Bernoulli law
mc = thin_numbers_curve(Bernoulli(0.7), [1, 4, 16, 64], "mc", N=100_000, seed=7)
print("\nMonte Carlo vs exact, Bernoulli(0.7):")
for p in mc:
    exact = thin_numbers_curve(Bernoulli(0.7), [p.n], "exact")[0].value
    print(f"  n={p.n:>3}  sampled {p.value:.4f} +/- {p.stderr:.4f}   exact {exact:.4f}")
