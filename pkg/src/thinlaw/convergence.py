"""Distances to Poisson targets and the seeded experiment harness.

Every experiment cell (one value of n) draws from its own sub-stream keyed
by ``(seed, experiment, n, chunk)``.  Cells may run on a thread pool; results
are gathered in cell order, so output does not depend on the worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .distributions import (
    Estimate,
    Pmf,
    PointMass,
    default_kmax,
    laplace_empirical,
    laplace_exact,
    pmf_thinned_sum_exact,
    scaled_sum_samples,
    thinned_sum_samples,
)
from .functionals import GapEntry, GapReport, apgfl_poisson, apgfl_values
from .point_process import intensity_of_spec, measure_of, thinned_superposition_batch
from .streams import stream

__all__ = [
    "EmpiricalPmf",
    "ConvergencePoint",
    "ProcessCurve",
    "tv_distance",
    "poisson_pmf",
    "binomial_pmf",
    "noise_bound",
    "multinomial_stderr",
    "thin_numbers_curve",
    "large_numbers_check",
    "thin_processes_curve",
    "two_sample_count_tv",
    "DEFAULT_CHUNK",
]

#: samples per sub-stream; fixed so chunking never depends on worker count
DEFAULT_CHUNK = 10_000


@dataclass(frozen=True, eq=False)
class EmpiricalPmf:
    counts: np.ndarray
    total: int

    def __post_init__(self):
        if self.total < 1 or int(np.sum(self.counts)) != self.total:
            raise ValueError("occurrences must sum to a positive total")

    @classmethod
    def from_samples(cls, samples):
        samples = np.asarray(samples, dtype=np.int64)
        if samples.size == 0:
            raise ValueError("no samples")
        if np.any(samples < 0):
            raise ValueError("counts must be non-negative")
        return cls(np.bincount(samples), int(samples.size))

    @property
    def occupied(self):
        return int(np.count_nonzero(self.counts))

    def pmf(self):
        return Pmf(self.counts / self.total)


@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    metric: str
    value: float
    stderr: Optional[float] = None
    target: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite value for {self.metric}")


def _as_pmf(a):
    if isinstance(a, Pmf):
        return a
    if isinstance(a, EmpiricalPmf):
        return a.pmf()
    return Pmf.from_mapping(a)


def tv_distance(a, b):
    """Total variation between two pmfs, counting their tail masses as one extra atom."""
    a, b = _as_pmf(a), _as_pmf(b)
    for x in (a, b):
        if np.any(x.probs < 0) or x.tail < 0:
            raise ValueError("pmf has negative mass")
    k = max(a.probs.size, b.probs.size)
    pa = np.zeros(k)
    pb = np.zeros(k)
    pa[: a.probs.size] = a.probs
    pb[: b.probs.size] = b.probs
    return 0.5 * (math.fsum(np.abs(pa - pb)) + abs(a.tail - b.tail))


def poisson_pmf(lam, kmax=None):
    if lam < 0:
        raise ValueError(f"Poisson rate must be >= 0, got {lam}")
    if kmax is None:
        kmax = default_kmax(lam)
    probs = stats.poisson.pmf(np.arange(kmax + 1), lam)
    return Pmf(probs, float(stats.poisson.sf(kmax, lam)))


def binomial_pmf(n, p):
    return Pmf(stats.binom.pmf(np.arange(n + 1), n, p))


def noise_bound(occupied, n_samples, k=5.0):
    """Hard threshold ``k * sqrt(K / N)`` for a TV computed from empirical pmfs."""
    return k * math.sqrt(occupied / n_samples)


def multinomial_stderr(emp):
    """``0.5 * sum_k sqrt(p_k (1 - p_k) / N)``: the noise scale of an empirical TV."""
    p = emp.counts / emp.total
    return 0.5 * math.fsum(np.sqrt(p * (1.0 - p) / emp.total))


def _sd_stderr(values):
    """Large-sample standard error of the sample standard deviation."""
    values = np.asarray(values, dtype=float)
    n = values.size
    s = float(np.std(values, ddof=1))
    if s == 0.0:
        return s, 0.0
    m4 = float(np.mean((values - values.mean()) ** 4))
    var_s2 = max(m4 - s**4 * (n - 3) / (n - 1), 0.0) / n
    return s, math.sqrt(var_s2) / (2.0 * s)


def _run_cells(fn, cells, workers):
    if workers <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def _chunks(total, chunk):
    return [min(chunk, total - start) for start in range(0, total, chunk)]


def _draw_chunked(draw, total, seed, labels, chunk):
    parts = [draw(size, stream(seed, *labels, i)) for i, size in enumerate(_chunks(total, chunk))]
    return np.concatenate(parts)


def thin_numbers_curve(dist, n_list, mode="exact", N=100_000, seed=0, workers=1, chunk=DEFAULT_CHUNK):
    """TV between ``(1/n) o (X_1 + ... + X_n)`` and Poisson(E X) for each n."""
    if mode not in ("exact", "mc"):
        raise ValueError(f"mode must be 'exact' or 'mc', got {mode!r}")
    if mode == "exact" and not dist.finite_support:
        raise ValueError(f"exact mode needs a finite-support law, got {dist!r}")
    mu = dist.mean()

    def cell(n):
        if mode == "exact":
            law = pmf_thinned_sum_exact(dist, n)
            target = poisson_pmf(mu, kmax=law.kmax)
            return ConvergencePoint(n, "tv_poisson", tv_distance(law, target), None, 0.0)
        draws = _draw_chunked(
            lambda size, rng: thinned_sum_samples(dist, n, size, rng),
            N, seed, ("thin-numbers", n), chunk,
        )
        emp = EmpiricalPmf.from_samples(draws)
        tv = tv_distance(emp, poisson_pmf(mu))
        return ConvergencePoint(n, "tv_poisson", tv, multinomial_stderr(emp), 0.0)

    return _run_cells(cell, list(n_list), workers)


def large_numbers_check(dist, n_list, N=100_000, seed=0, u_list=(0.5, 1.0), workers=1,
                        chunk=DEFAULT_CHUNK):
    """Mean error, spread and Laplace-transform gaps of the scaled sum for each n.

    Per n the rows are ``mean_error`` (target 0), ``sd`` (target the exact
    ``sqrt(var / n)``), ``laplace[u=..]`` (target the exact finite-n transform
    ``L_X(u/n)^n``) and ``laplace_gap[u=..]`` (distance to the point-mass
    limit ``exp(-mu u)``).
    """
    mu = dist.mean()
    limit = PointMass(mu)

    def cell(n):
        y = _draw_chunked(
            lambda size, rng: scaled_sum_samples(dist, n, size, rng),
            N, seed, ("large-numbers", n), chunk,
        )
        est = Estimate.from_values(y)
        s, s_err = _sd_stderr(y)
        rows = [
            ConvergencePoint(n, "mean_error", abs(est.value - mu), est.stderr, 0.0),
            ConvergencePoint(n, "sd", s, s_err, math.sqrt(dist.variance() / n)),
        ]
        for u in u_list:
            lap = laplace_empirical(y, u)
            finite_n = laplace_exact(dist, u / n) ** n
            rows.append(ConvergencePoint(n, f"laplace[u={u:g}]", lap.value, lap.stderr, finite_n))
            gap = abs(lap.value - laplace_exact(limit, u))
            rows.append(ConvergencePoint(n, f"laplace_gap[u={u:g}]", gap, lap.stderr, 0.0))
        return rows

    return [row for rows in _run_cells(cell, list(n_list), workers) for row in rows]


@dataclass
class ProcessCurve:
    """Rows for every n, the functional gap report per n and the empirical
    count pmfs keyed by ``(n, region id)``."""

    points: list = field(default_factory=list)
    reports: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def metric(self, name):
        return [p for p in self.points if p.metric == name]


def thin_processes_curve(spec, n_list, dictionary, regions, N=100_000, seed=0, workers=1,
                         chunk=DEFAULT_CHUNK):
    """Distance of ``(1/n) o (xi_1 + ... + xi_n)`` from Poisson(mu) for each n.

    Three families of rows per n: functional values ``apgfl[id]`` and their
    worst-case gap ``apgfl_max_gap``; count TV against Poisson(mu(A)) per
    region ``count_tv[A]``; and void-probability gaps ``void_gap[A]``.
    """
    mu = intensity_of_spec(spec)
    targets = {uid: apgfl_poisson(mu, u) for uid, u in dictionary.items()}
    masses = {rid: measure_of(mu, reg) for rid, reg in regions.items()}
    # each chunk holds at most ``chunk`` raw process draws
    per_chunk = lambda n: max(1, chunk // n)  # noqa: E731

    def cell(n):
        values = {uid: [] for uid in dictionary}
        counts = {rid: [] for rid in regions}
        for i, size in enumerate(_chunks(N, per_chunk(n))):
            batch = thinned_superposition_batch(spec, n, size, stream(seed, "thin-processes", n, i))
            for uid, u in dictionary.items():
                values[uid].append(apgfl_values(batch, u))
            for rid, reg in regions.items():
                counts[rid].append(batch.count_in(reg))
        entries = tuple(
            GapEntry(uid, Estimate.from_values(np.concatenate(values[uid])), targets[uid])
            for uid in dictionary
        )
        report = GapReport(n, entries)
        rows = [ConvergencePoint(n, f"apgfl[{e.u_id}]", e.empirical.value, e.empirical.stderr, e.target)
                for e in entries]
        if entries:
            worst = report.worst
            rows.append(ConvergencePoint(n, "apgfl_max_gap", worst.gap, worst.empirical.stderr, 0.0))
        emps = {rid: EmpiricalPmf.from_samples(np.concatenate(counts[rid])) for rid in regions}
        for rid, emp in emps.items():
            tv = tv_distance(emp, poisson_pmf(masses[rid]))
            rows.append(ConvergencePoint(n, f"count_tv[{rid}]", tv, multinomial_stderr(emp), 0.0))
        for rid, emp in emps.items():
            p0 = emp.counts[0] / emp.total
            se = math.sqrt(p0 * (1.0 - p0) / emp.total)
            gap = abs(p0 - math.exp(-masses[rid]))
            rows.append(ConvergencePoint(n, f"void_gap[{rid}]", gap, se, 0.0))
        return report, rows, emps

    curve = ProcessCurve()
    for report, rows, emps in _run_cells(cell, list(n_list), workers):
        curve.reports[report.n] = report
        curve.points.extend(rows)
        curve.counts.update({(report.n, rid): emp for rid, emp in emps.items()})
    return curve


def two_sample_count_tv(sampler_a, sampler_b, region, N, rng):
    """TV between the empirical laws of the count in ``region`` under two samplers.

    Each sampler is called as ``sampler(N, rng)`` and returns a
    :class:`~thinlaw.point_process.PatternBatch`.  ``rng`` is either one
    generator, from which two independent child streams are spawned, or a
    pair ``(rng_a, rng_b)``.
    """
    if N < 1000:
        raise ValueError(f"need N >= 1000 samples, got {N}")
    if isinstance(rng, np.random.Generator):
        rng_a, rng_b = rng.spawn(2)
    else:
        rng_a, rng_b = rng
    a = EmpiricalPmf.from_samples(sampler_a(N, rng_a).count_in(region))
    b = EmpiricalPmf.from_samples(sampler_b(N, rng_b).count_in(region))
    return tv_distance(a, b)
