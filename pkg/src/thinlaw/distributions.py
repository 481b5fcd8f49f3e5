"""Non-negative integer laws, binomial thinning and their transforms.

The catalog is deliberately small: each law has a closed-form mean, alternate
probability generating function ``A_X(u) = E (1-u)^X`` and Laplace transform
``L_X(u) = E exp(-uX)``.  ``PointMass`` is the one real-valued law, kept only
as the limit target of scaled sums.
"""

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy import stats

__all__ = [
    "IntegerDistribution",
    "Deterministic",
    "Bernoulli",
    "Poisson",
    "Binomial",
    "FinitePmf",
    "PointMass",
    "Estimate",
    "Pmf",
    "default_kmax",
    "thin_count",
    "thin_counts",
    "thinned_sum_sample",
    "thinned_sum_samples",
    "scaled_sum_sample",
    "scaled_sum_samples",
    "apgf_exact",
    "apgf_empirical",
    "laplace_exact",
    "laplace_empirical",
    "factorial_moment",
    "pmf_thinned_sum_exact",
]

PMF_TOL = 1e-12
TAIL_TOL = 1e-12


def _check_probability(p, name="p"):
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def _check_count(k, name):
    if int(k) != k or k < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {k}")


class IntegerDistribution:
    """Base class for laws on the non-negative integers."""

    #: largest value with positive probability, or None for infinite support
    support_max: Optional[int] = None

    @property
    def finite_support(self):
        return self.support_max is not None

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def sample(self, size, rng):
        """Draw ``size`` independent values as an int64 array."""
        raise NotImplementedError

    def sample_sum(self, n, size, rng):
        """Draw ``size`` independent copies of ``X_1 + ... + X_n``."""
        out = np.zeros(size, dtype=np.int64)
        for _ in range(n):
            out += self.sample(size, rng)
        return out

    def pmf_array(self):
        """Probabilities of ``0..support_max``; finite-support laws only."""
        raise NotImplementedError(f"{type(self).__name__} has infinite support")

    def spec_string(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Deterministic(IntegerDistribution):
    k: int

    def __post_init__(self):
        _check_count(self.k, "k")
        object.__setattr__(self, "k", int(self.k))

    @property
    def support_max(self):
        return self.k

    def mean(self):
        return float(self.k)

    def variance(self):
        return 0.0

    def sample(self, size, rng):
        return np.full(size, self.k, dtype=np.int64)

    def sample_sum(self, n, size, rng):
        return np.full(size, n * self.k, dtype=np.int64)

    def pmf_array(self):
        out = np.zeros(self.k + 1)
        out[self.k] = 1.0
        return out

    def spec_string(self):
        return f"deterministic:{self.k}"


@dataclass(frozen=True)
class Bernoulli(IntegerDistribution):
    q: float

    def __post_init__(self):
        _check_probability(self.q, "q")

    support_max = 1

    def mean(self):
        return float(self.q)

    def variance(self):
        return self.q * (1.0 - self.q)

    def sample(self, size, rng):
        return (rng.random(size) < self.q).astype(np.int64)

    def sample_sum(self, n, size, rng):
        return rng.binomial(n, self.q, size).astype(np.int64)

    def pmf_array(self):
        return np.array([1.0 - self.q, self.q])

    def spec_string(self):
        return f"bernoulli:{self.q!r}"


@dataclass(frozen=True)
class Poisson(IntegerDistribution):
    lam: float

    def __post_init__(self):
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise ValueError(f"Poisson rate must be finite and >= 0, got {self.lam}")

    support_max = None

    def mean(self):
        return float(self.lam)

    def variance(self):
        return float(self.lam)

    def sample(self, size, rng):
        return rng.poisson(self.lam, size).astype(np.int64)

    def sample_sum(self, n, size, rng):
        return rng.poisson(n * self.lam, size).astype(np.int64)

    def spec_string(self):
        return f"poisson:{self.lam!r}"


@dataclass(frozen=True)
class Binomial(IntegerDistribution):
    m: int
    p: float

    def __post_init__(self):
        _check_count(self.m, "m")
        _check_probability(self.p)
        object.__setattr__(self, "m", int(self.m))

    @property
    def support_max(self):
        return self.m

    def mean(self):
        return self.m * self.p

    def variance(self):
        return self.m * self.p * (1.0 - self.p)

    def sample(self, size, rng):
        return rng.binomial(self.m, self.p, size).astype(np.int64)

    def sample_sum(self, n, size, rng):
        return rng.binomial(n * self.m, self.p, size).astype(np.int64)

    def pmf_array(self):
        return stats.binom.pmf(np.arange(self.m + 1), self.m, self.p)

    def spec_string(self):
        return f"binomial:{self.m}:{self.p!r}"


@dataclass(frozen=True, init=False)
class FinitePmf(IntegerDistribution):
    """Explicit law on ``0..K``; ``probs[k]`` is ``P(X = k)``.

    Accepts either a mapping ``{count: probability}`` or a sequence indexed
    by count.  Weights must already sum to one within 1e-12.
    """

    probs: tuple

    def __init__(self, weights):
        if isinstance(weights, Mapping):
            if not weights:
                raise ValueError("FinitePmf needs at least one weight")
            for k in weights:
                _check_count(k, "pmf key")
            arr = np.zeros(int(max(weights)) + 1)
            for k, w in weights.items():
                arr[int(k)] += w
        else:
            arr = np.asarray(weights, dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError("FinitePmf needs a non-empty 1-d weight sequence")
        if np.any(arr < 0) or np.any(arr > 1) or not np.all(np.isfinite(arr)):
            raise ValueError("FinitePmf weights must lie in [0, 1]")
        if abs(math.fsum(arr) - 1.0) > PMF_TOL:
            raise ValueError(f"FinitePmf weights sum to {math.fsum(arr)!r}, not 1")
        nz = np.flatnonzero(arr)
        arr = arr[: nz[-1] + 1]
        object.__setattr__(self, "probs", tuple(float(w) for w in arr))

    @property
    def support_max(self):
        return len(self.probs) - 1

    def pmf_array(self):
        return np.array(self.probs)

    def mean(self):
        return math.fsum(k * w for k, w in enumerate(self.probs))

    def variance(self):
        mu = self.mean()
        return math.fsum((k - mu) ** 2 * w for k, w in enumerate(self.probs))

    def sample(self, size, rng):
        cdf = np.cumsum(self.probs)
        idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
        return np.minimum(idx, len(self.probs) - 1).astype(np.int64)

    def spec_string(self):
        return "pmf:" + "/".join(repr(w) for w in self.probs)


@dataclass(frozen=True)
class PointMass:
    """Unit mass at a real location; the limit law of scaled sums."""

    mu: float

    def mean(self):
        return float(self.mu)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its CLT standard error."""

    value: float
    stderr: float
    n_samples: int

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float)
        if values.size < 2:
            raise ValueError("an estimate needs at least 2 samples")
        sd = float(np.std(values, ddof=1))
        return cls(float(np.mean(values)), sd / math.sqrt(values.size), int(values.size))

    def within(self, target, k=3.0):
        """True if ``|value - target| <= k * stderr``, up to float rounding."""
        return abs(self.value - target) <= k * self.stderr + 1e-12


@dataclass(frozen=True)
class Pmf:
    """Probabilities on ``0..len(probs)-1`` plus mass beyond that range."""

    probs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1:
            raise ValueError("pmf must be one-dimensional")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(cls, mapping, tail=0.0):
        if not mapping:
            return cls(np.zeros(0), tail)
        arr = np.zeros(int(max(mapping)) + 1)
        for k, w in mapping.items():
            arr[int(k)] = w
        return cls(arr, tail)

    @property
    def kmax(self):
        return self.probs.size - 1

    def __getitem__(self, k):
        return float(self.probs[k]) if 0 <= k < self.probs.size else 0.0

    def as_dict(self):
        return {k: float(w) for k, w in enumerate(self.probs) if w != 0.0}

    def total(self):
        return math.fsum(self.probs) + self.tail


def default_kmax(mean):
    """Truncation point whose tail is < 1e-12 under a Poisson(mean + 3 sqrt(mean)) envelope."""
    if mean < 0:
        raise ValueError(f"mean must be >= 0, got {mean}")
    lam = mean + 3.0 * math.sqrt(mean)
    if lam == 0:
        return 0
    k = int(lam)
    while stats.poisson.sf(k, lam) >= TAIL_TOL:
        k += 1
    return k


def thin_count(x, p, rng):
    """Keep each of ``x`` items independently with probability ``p``."""
    _check_probability(p)
    _check_count(x, "x")
    return int(np.count_nonzero(rng.random(int(x)) < p))


def thin_counts(xs, p, rng):
    """Vectorized :func:`thin_count`: one Bernoulli(p) draw per item, in order."""
    _check_probability(p)
    xs = np.asarray(xs, dtype=np.int64)
    if np.any(xs < 0):
        raise ValueError("counts must be non-negative")
    keep = rng.random(int(xs.sum())) < p
    owner = np.repeat(np.arange(xs.size), xs)
    return np.bincount(owner[keep], minlength=xs.size).astype(np.int64)


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")


def thinned_sum_sample(dist, n, rng):
    """One draw of ``(1/n) o (X_1 + ... + X_n)``."""
    return int(thinned_sum_samples(dist, n, 1, rng)[0])


def thinned_sum_samples(dist, n, size, rng):
    _check_n(n)
    sums = dist.sample_sum(int(n), size, rng)
    return thin_counts(sums, 1.0 / n, rng)


def scaled_sum_sample(dist, n, rng):
    """One draw of ``(X_1 + ... + X_n) / n``."""
    return float(scaled_sum_samples(dist, n, 1, rng)[0])


def scaled_sum_samples(dist, n, size, rng):
    _check_n(n)
    return dist.sample_sum(int(n), size, rng) / n


def _check_apgf_u(u):
    if not 0.0 <= u <= 2.0:
        raise ValueError(f"APGF argument must lie in [0, 2], got {u}")


def apgf_exact(dist, u):
    """Closed form of ``E (1-u)^X``."""
    _check_apgf_u(u)
    if isinstance(dist, Deterministic):
        return (1.0 - u) ** dist.k
    if isinstance(dist, Bernoulli):
        return 1.0 - dist.q * u
    if isinstance(dist, Poisson):
        return math.exp(-dist.lam * u)
    if isinstance(dist, Binomial):
        return (1.0 - dist.p * u) ** dist.m
    if isinstance(dist, FinitePmf):
        return math.fsum(w * (1.0 - u) ** k for k, w in enumerate(dist.probs))
    raise TypeError(f"no closed-form APGF for {dist!r}")


def apgf_empirical(samples, u):
    _check_apgf_u(u)
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples")
    return Estimate.from_values((1.0 - u) ** samples)


def laplace_exact(dist, u):
    """Closed form of ``E exp(-uX)`` for ``u >= 0``."""
    if not u >= 0:
        raise ValueError(f"Laplace argument must be >= 0, got {u}")
    z = math.exp(-u)
    if isinstance(dist, PointMass):
        return math.exp(-dist.mu * u)
    if isinstance(dist, Deterministic):
        return z ** dist.k
    if isinstance(dist, Bernoulli):
        return 1.0 - dist.q + dist.q * z
    if isinstance(dist, Poisson):
        return math.exp(dist.lam * (z - 1.0))
    if isinstance(dist, Binomial):
        return (1.0 - dist.p + dist.p * z) ** dist.m
    if isinstance(dist, FinitePmf):
        return math.fsum(w * z**k for k, w in enumerate(dist.probs))
    raise TypeError(f"no closed-form Laplace transform for {dist!r}")


def laplace_empirical(samples, u):
    if not u >= 0:
        raise ValueError(f"Laplace argument must be >= 0, got {u}")
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples")
    return Estimate.from_values(np.exp(-u * samples))


def factorial_moment(dist, j):
    """``E X(X-1)...(X-j+1)`` for ``j`` in {1, 2}."""
    if j not in (1, 2):
        raise ValueError(f"factorial moments implemented for j in {{1, 2}}, got {j}")
    if j == 1:
        return dist.mean()
    if isinstance(dist, Deterministic):
        return float(dist.k * (dist.k - 1))
    if isinstance(dist, Bernoulli):
        return 0.0
    if isinstance(dist, Poisson):
        return dist.lam**2
    if isinstance(dist, Binomial):
        return dist.m * (dist.m - 1) * dist.p**2
    if isinstance(dist, FinitePmf):
        return math.fsum(k * (k - 1) * w for k, w in enumerate(dist.probs))
    raise TypeError(f"no factorial moments for {dist!r}")


def _convolve_power(pmf, n):
    """n-fold self-convolution by repeated squaring."""
    result = np.array([1.0])
    base = pmf
    while n:
        if n & 1:
            result = np.convolve(result, base)
        n >>= 1
        if n:
            base = np.convolve(base, base)
    return result


def pmf_thinned_sum_exact(dist, n, kmax=None):
    """Exact law of ``(1/n) o (X_1 + ... + X_n)`` for finite-support ``dist``.

    The sum's law is the n-fold convolution; thinning mixes binomials over
    it.  Mass above ``kmax`` is returned in ``Pmf.tail``.
    """
    _check_n(n)
    if not isinstance(dist, IntegerDistribution) or not dist.finite_support:
        raise NotImplementedError(f"exact oracle needs finite support, got {dist!r}")
    if kmax is None:
        kmax = default_kmax(dist.mean())
    sum_pmf = _convolve_power(dist.pmf_array(), int(n))
    s = np.arange(sum_pmf.size)
    k = np.arange(kmax + 1)
    # rows: sum value s, columns: kept count k
    kernel = stats.binom.pmf(k[None, :], s[:, None], 1.0 / n)
    head = sum_pmf @ kernel
    tail = max(0.0, math.fsum(sum_pmf) - math.fsum(head))
    return Pmf(head, tail)
