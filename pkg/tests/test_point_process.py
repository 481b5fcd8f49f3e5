import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from thinlaw.convergence import EmpiricalPmf, multinomial_stderr, tv_distance
from thinlaw.distributions import Estimate
from thinlaw.point_process import (
    Atomic,
    BinomialProcess,
    ConstantDensity,
    FixedAtoms,
    GridDensity,
    NeymanScott,
    PatternBatch,
    PointPattern,
    PoissonProcess,
    Region,
    Window,
    count_in,
    intensity_of_spec,
    measure_of,
    read_pattern,
    sample_batch,
    sample_process,
    superpose,
    superpose_batch,
    thin_batch,
    thin_pattern,
    thinned_superposition_batch,
    thinned_superposition_sample,
    write_pattern,
)
from thinlaw.properties import process_catalog
from thinlaw.streams import stream

W2 = Window.unit(2)
W1 = Window.unit(1)


@pytest.fixture
def pattern():
    return PointPattern([[0.1, 0.2], [0.5, 0.5], [0.9, 0.1], [0.5, 0.5], [0.3, 0.8]])


def count_tv_with_noise(a, b):
    ea, eb = EmpiricalPmf.from_samples(a), EmpiricalPmf.from_samples(b)
    return tv_distance(ea, eb), math.hypot(multinomial_stderr(ea), multinomial_stderr(eb))


# -- geometry ---------------------------------------------------------------------


def test_window_validation():
    with pytest.raises(ValueError):
        Window([0, 0], [1, 0])
    with pytest.raises(ValueError):
        Window([0, 0, 0, 0], [1, 1, 1, 1])
    assert Window([0, 0], [2, 3]).volume == 6.0


def test_region_half_open_and_zero_volume(pattern):
    assert count_in(pattern, Region([0, 0], [0.5, 1])) == 2
    # point exactly on the upper face is excluded, on the lower face included
    assert count_in(pattern, Region([0.5, 0.5], [0.9, 0.9])) == 2
    assert count_in(pattern, Region([0.0, 0.0], [0.5, 0.5])) == 1
    assert count_in(pattern, Region([0.7, 0.7], [0.7, 0.7])) == 0
    assert count_in(PointPattern([], dim=2), Region([0, 0], [1, 1])) == 0


def test_count_additive_over_partition():
    pts = sample_process(PoissonProcess(ConstantDensity(50, W2)), stream(1))
    edges = np.linspace(0, 1, 5)
    cells = [Region([a, c], [b, d]) for a, b in zip(edges, edges[1:]) for c, d in zip(edges, edges[1:])]
    assert sum(count_in(pts, r) for r in cells) == len(pts)


def test_pattern_equality_is_multiset(pattern):
    shuffled = PointPattern(pattern.points[::-1])
    assert shuffled == pattern
    assert PointPattern([[0.1, 0.2]]) != pattern


def test_pattern_does_not_freeze_caller_array():
    arr = np.zeros((2, 2))
    PointPattern(arr)
    arr[0, 0] = 1.0


# -- measures -----------------------------------------------------------------


def test_measure_of_examples():
    assert measure_of(ConstantDensity(4, W2), Region([0, 0], [0.5, 1])) == pytest.approx(2.0)
    assert measure_of(ConstantDensity(4, W2), Region([0.2, 0.2], [0.2, 0.9])) == 0.0
    atoms = Atomic([[0.1, 0.1], [0.7, 0.7]], [1.0, 2.0])
    assert measure_of(atoms, Region([0.5, 0.5], [1, 1])) == 2.0
    with pytest.raises(ValueError):
        measure_of(ConstantDensity(4, W2), Region([0.5, 0.5], [1.5, 1]))


def test_grid_measure_matches_fine_riemann_sum():
    rng = np.random.default_rng(0)
    values = rng.random((3, 5))
    mu = GridDensity(W2, values)
    region = Region([0.13, 0.41], [0.77, 0.93])
    # midpoint rule on a grid aligned with neither the density nor the region
    m = 3000
    xs = (np.arange(m) + 0.5) / m
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    ix = np.minimum((gx * 3).astype(int), 2)
    iy = np.minimum((gy * 5).astype(int), 4)
    inside = (gx >= 0.13) & (gx < 0.77) & (gy >= 0.41) & (gy < 0.93)
    riemann = (values[ix, iy] * inside).sum() / m**2
    assert measure_of(mu, region) == pytest.approx(riemann, abs=2e-3)
    assert measure_of(mu, Region(W2.lower, W2.upper)) == pytest.approx(values.mean())


def test_grid_measure_exact_on_cell_boundaries():
    mu = GridDensity(W1, [1.0, 3.0])
    assert measure_of(mu, Region([0.25], [0.75])) == pytest.approx(0.25 * 1 + 0.25 * 3)


@given(a=st.floats(0, 1), b=st.floats(0, 1))
def test_measure_additive(a, b):
    lo, hi = sorted((a, b))
    mu = GridDensity(W1, [2.0, 0.5, 1.0])
    whole = measure_of(mu, Region([0.0], [1.0]))
    parts = sum(measure_of(mu, Region([x], [y])) for x, y in [(0, lo), (lo, hi), (hi, 1)])
    assert parts == pytest.approx(whole, abs=1e-12)


def test_intensity_of_spec_examples():
    x0 = [0.3, 0.4]
    mu = intensity_of_spec(FixedAtoms([x0]))
    assert isinstance(mu, Atomic) and list(mu.weights) == [1.0]
    assert np.array_equal(mu.locations, [x0])
    binom = intensity_of_spec(BinomialProcess(3, GridDensity.uniform(W1)))
    assert isinstance(binom, ConstantDensity) and binom.lam == pytest.approx(3.0)
    ns = intensity_of_spec(NeymanScott(2, 3, 0.05, W2))
    assert isinstance(ns, ConstantDensity) and ns.lam == 6.0


# -- sampling ------------------------------------------------------------------


def test_fixed_atoms_and_empty_poisson():
    x0 = [[0.25, 0.75]]
    for i in range(5):
        assert sample_process(FixedAtoms(x0), stream(2, i)) == PointPattern(x0)
        assert len(sample_process(PoissonProcess(ConstantDensity(0, W2)), stream(2, i))) == 0


def test_poisson_count_mean_and_variance():
    counts = sample_batch(PoissonProcess(ConstantDensity(4, W2)), 100_000, stream(3)).counts()
    est = Estimate.from_values(counts)
    assert est.within(4.0, 3)
    # stderr of the sample variance for Poisson(4): sqrt((mu4 - sigma^4 (N-3)/(N-1)) / N)
    mu4 = 4 + 3 * 16
    var_se = math.sqrt((mu4 - 16) / counts.size)
    assert abs(np.var(counts, ddof=1) - 4.0) < 3 * var_se


def test_points_lie_in_window():
    for name, spec in process_catalog(W2).items():
        if name in ("fixed_atoms", "poisson_atoms"):
            continue
        batch = sample_batch(spec, 2000, stream(4, name))
        assert np.all(W2.contains(batch.points))
        assert np.all(np.diff(batch.index) >= 0)


def test_expectation_identity_on_catalog():
    regions = [
        Region([0, 0], [0.5, 0.5]),
        Region([0.25, 0.25], [0.75, 0.75]),
        Region([0.4, 0.0], [0.6, 1.0]),
        Region([0.0, 0.6], [1.0, 1.0]),
        Region([0.0, 0.0], [1.0, 1.0]),
    ]
    for name, spec in process_catalog(W2).items():
        batch = sample_batch(spec, 100_000, stream(5, name))
        mu = intensity_of_spec(spec)
        for region in regions:
            est = Estimate.from_values(batch.count_in(region))
            assert est.within(measure_of(mu, region), 3), (name, region)


def test_neyman_scott_mean_count_in_window():
    spec = NeymanScott(2, 3, 0.1, W2)
    est = Estimate.from_values(sample_batch(spec, 100_000, stream(6)).counts())
    assert est.within(6.0 * W2.volume, 3)


def test_neyman_scott_one_dimensional():
    spec = NeymanScott(5, 2, 0.05, W1)
    est = Estimate.from_values(sample_batch(spec, 50_000, stream(7)).count_in(Region([0.0], [0.3])))
    assert est.within(10 * 0.3, 4)


def test_neyman_scott_is_overdispersed():
    counts = sample_batch(NeymanScott(3, 2, 0.05, W2), 50_000, stream(8)).counts()
    assert np.var(counts) > 1.5 * np.mean(counts)


def test_binomial_process_has_m_points():
    spec = process_catalog(W2)["binomial"]
    assert set(sample_batch(spec, 100, stream(9)).counts()) == {3}


def test_poisson_atoms_multiplicities():
    mu = Atomic([[0.2, 0.2], [0.8, 0.8]], [0.5, 2.0])
    batch = sample_batch(PoissonProcess(mu), 100_000, stream(10))
    at = batch.count_in(Region.around([0.8, 0.8]))
    tv, se = count_tv_with_noise(at, stream(11).poisson(2.0, 100_000))
    assert tv < 5 * se


# -- thinning and superposition ----------------------------------------------------


def test_thin_pattern_trivial(pattern):
    rng = stream(12)
    assert thin_pattern(pattern, 1.0, rng) == pattern
    assert len(thin_pattern(pattern, 0.0, rng)) == 0
    with pytest.raises(ValueError):
        thin_pattern(pattern, 1.1, rng)


def test_thin_pattern_is_subsequence(pattern):
    kept = thin_pattern(pattern, 0.5, stream(13))
    it = iter(map(tuple, pattern.points))
    assert all(any(tuple(p) == q for q in it) for p in kept.points)


def test_thin_five_points_zero_probability():
    spec = FixedAtoms(np.arange(10).reshape(5, 2) / 10)
    batch = thin_batch(sample_batch(spec, 200_000, stream(14)), 0.3, stream(15))
    est = Estimate.from_values(batch.counts() == 0)
    assert est.within(0.16807, 3)


def test_superpose_examples(pattern):
    empty = PointPattern([], dim=2)
    assert superpose([pattern, empty]) == pattern
    assert len(superpose([empty, empty])) == 0
    parts = [pattern, PointPattern([[0.5, 0.5]]), empty]
    assert len(superpose(parts)) == sum(len(p) for p in parts)
    with pytest.raises(ValueError):
        superpose([pattern, PointPattern([[0.5]])])


def test_superpose_batch_groups():
    base = PatternBatch.from_patterns(
        [PointPattern([[float(i), 0.0]] * (i % 3)) if i % 3 else PointPattern([], dim=2) for i in range(6)]
    )
    merged = superpose_batch(base, 3)
    assert merged.size == 2
    assert list(merged.counts()) == [3, 3]
    with pytest.raises(ValueError):
        superpose_batch(base, 4)


def test_thinned_superposition_n1_is_identity_in_law():
    spec = PoissonProcess(ConstantDensity(3, W2))
    raw = sample_batch(spec, 500, stream(16))
    thinned = thinned_superposition_batch(spec, 1, 500, stream(16))
    assert np.array_equal(raw.points, thinned.points)
    assert isinstance(thinned_superposition_sample(spec, 2, stream(17)), PointPattern)
    with pytest.raises(ValueError):
        thinned_superposition_batch(spec, 0, 10, stream(17))


@pytest.mark.parametrize("n", [2, 8, 32])
def test_fixed_atom_thinned_superposition_is_binomial(n):
    x0 = [0.5, 0.5]
    batch = thinned_superposition_batch(FixedAtoms([x0]), n, 100_000, stream(18, n))
    emp = EmpiricalPmf.from_samples(batch.count_in(Region.around(x0)))
    exact = stats.binom.pmf(np.arange(n + 1), n, 1 / n)
    tv = tv_distance(emp, dict(enumerate(exact)))
    assert tv < 5 * math.sqrt(emp.occupied / emp.total)


@pytest.mark.parametrize("n", [1, 2, 7])
def test_poisson_fixed_point(n):
    spec = PoissonProcess(ConstantDensity(4, W2))
    region = Region([0, 0], [0.5, 1])
    a = thinned_superposition_batch(spec, n, 100_000, stream(19, n)).count_in(region)
    b = sample_batch(spec, 100_000, stream(20, n)).count_in(region)
    tv, se = count_tv_with_noise(a, b)
    assert tv < 5 * se


def test_thinning_distributes_over_superposition():
    catalog = process_catalog(W2)
    p, region, N = 0.4, Region([0.2, 0.2], [0.8, 0.8]), 100_000
    a_spec, b_spec = catalog["neyman_scott"], catalog["binomial"]
    xa = sample_batch(a_spec, N, stream(21, "a"))
    xb = sample_batch(b_spec, N, stream(21, "b"))
    lhs = thin_batch(xa, p, stream(21, "t1")).count_in(region) + thin_batch(xb, p, stream(21, "t2")).count_in(region)
    ya = sample_batch(a_spec, N, stream(22, "a"))
    yb = sample_batch(b_spec, N, stream(22, "b"))
    both = PatternBatch(
        np.concatenate([ya.points, yb.points]), np.concatenate([ya.index, yb.index]), N
    )
    order = np.argsort(both.index, kind="stable")
    both = PatternBatch(both.points[order], both.index[order], N)
    rhs = thin_batch(both, p, stream(22, "t")).count_in(region)
    tv, se = count_tv_with_noise(lhs, rhs)
    assert tv < 5 * se


def test_thinning_composition_on_patterns():
    spec = process_catalog(W2)["neyman_scott"]
    region = Region([0, 0], [0.6, 0.6])
    twice = thin_batch(thin_batch(sample_batch(spec, 100_000, stream(23)), 0.5, stream(24)), 0.4, stream(25))
    once = thin_batch(sample_batch(spec, 100_000, stream(26)), 0.2, stream(27))
    tv, se = count_tv_with_noise(twice.count_in(region), once.count_in(region))
    assert tv < 5 * se


# -- serialization ---------------------------------------------------------------


def test_pattern_round_trip(pattern):
    buf = io.StringIO()
    write_pattern(pattern, buf, W2)
    text = buf.getvalue()
    assert text.startswith("# dim=2\n# window=0.0:1.0,0.0:1.0\n")
    assert text.splitlines()[2] == "0.1,0.2"
    back, window = read_pattern(io.StringIO(text))
    assert back == pattern and window == W2
    empty, _ = read_pattern(io.StringIO("# dim=3\n"))
    assert len(empty) == 0 and empty.dim == 3
