"""Finite point patterns in boxes of R^d, a small process catalog, thinning
and superposition.

Monte Carlo work goes through :class:`PatternBatch`, which stores many
patterns as one flat coordinate array plus a sample index, so sampling,
superposition and thinning are all vectorized.  The single-pattern functions
are thin wrappers over the batch ones.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import _check_n, _check_probability

__all__ = [
    "Window",
    "Region",
    "PointPattern",
    "PatternBatch",
    "ConstantDensity",
    "GridDensity",
    "Atomic",
    "PoissonProcess",
    "FixedAtoms",
    "BinomialProcess",
    "NeymanScott",
    "sample_process",
    "sample_batch",
    "thin_pattern",
    "thin_batch",
    "superpose",
    "superpose_batch",
    "thinned_superposition_sample",
    "thinned_superposition_batch",
    "count_in",
    "measure_of",
    "intensity_of_spec",
    "write_pattern",
    "read_pattern",
]

_EPS = 1e-12


def _as_vec(v):
    return tuple(float(x) for x in np.atleast_1d(np.asarray(v, dtype=float)))


@dataclass(frozen=True)
class Window:
    """Axis-aligned observation box ``[lower, upper)`` in R^d, d <= 3."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo, hi = _as_vec(self.lower), _as_vec(self.upper)
        if len(lo) != len(hi) or not 1 <= len(lo) <= 3:
            raise ValueError("window bounds must be vectors of equal length 1..3")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"window needs lower < upper on every axis, got {lo}, {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, dim=2):
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self):
        return len(self.lower)

    @property
    def sides(self):
        return np.subtract(self.upper, self.lower)

    @property
    def volume(self):
        return float(np.prod(self.sides))

    def contains(self, points):
        return _in_box(points, self.lower, self.upper)

    def covers(self, box):
        return all(
            a >= lo - _EPS and b <= hi + _EPS
            for a, b, lo, hi in zip(box.lower, box.upper, self.lower, self.upper)
        )

    def dilate(self, r):
        return Window(np.subtract(self.lower, r), np.add(self.upper, r))

    def relative(self, lo_frac, hi_frac):
        """Sub-box given by fractions of each side, e.g. ``(0.25, 0.75)``."""
        lo = np.asarray(self.lower) + np.asarray(lo_frac) * self.sides
        hi = np.asarray(self.lower) + np.asarray(hi_frac) * self.sides
        return Region(lo, hi)


@dataclass(frozen=True)
class Region:
    """Half-open box ``[lower, upper)``; zero-volume boxes are allowed and empty."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo, hi = _as_vec(self.lower), _as_vec(self.upper)
        if len(lo) != len(hi):
            raise ValueError("region bounds must have equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"region needs lower <= upper, got {lo}, {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def around(cls, point, eps=1e-9):
        """Small box containing ``point``; used to read off atom counts."""
        point = np.asarray(point, dtype=float)
        return cls(point - eps, point + eps)

    @property
    def dim(self):
        return len(self.lower)

    @property
    def volume(self):
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def contains(self, points):
        return _in_box(points, self.lower, self.upper)

    def clip(self, window):
        lo = np.maximum(self.lower, window.lower)
        hi = np.minimum(self.upper, window.upper)
        return Region(lo, np.maximum(lo, hi))


def _in_box(points, lower, upper):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    if points.shape[1] != len(lower):
        raise ValueError(f"points have dim {points.shape[1]}, box has dim {len(lower)}")
    return np.all((points >= lower) & (points < upper), axis=1)


class PointPattern:
    """A finite counting measure: points in generation order, repeats allowed.

    Equality is multiset equality of the coordinates.
    """

    def __init__(self, points, dim=None):
        pts = np.array(points, dtype=float)
        if pts.size == 0:
            if dim is None:
                raise ValueError("an empty pattern needs an explicit dim")
            pts = pts.reshape(0, dim)
        elif pts.ndim == 1:
            pts = pts.reshape(-1, 1) if dim == 1 else pts.reshape(1, -1)
        if dim is not None and pts.shape[1] != dim:
            raise ValueError(f"points have dim {pts.shape[1]}, expected {dim}")
        self.points = pts
        self.points.setflags(write=False)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other):
        if not isinstance(other, PointPattern):
            return NotImplemented
        if self.dim != other.dim or len(self) != len(other):
            return False
        a = self.points[np.lexsort(self.points.T[::-1])]
        b = other.points[np.lexsort(other.points.T[::-1])]
        return bool(np.array_equal(a, b))

    __hash__ = None

    def __repr__(self):
        return f"PointPattern(dim={self.dim}, n={len(self)})"


@dataclass(frozen=True, eq=False)
class PatternBatch:
    """``size`` patterns stored flat; ``index[i]`` is the pattern of ``points[i]``.

    ``index`` is non-decreasing, so pattern ``j`` is a contiguous slice.
    """

    points: np.ndarray
    index: np.ndarray
    size: int

    @property
    def dim(self):
        return self.points.shape[1]

    def counts(self):
        return np.bincount(self.index, minlength=self.size)

    def count_in(self, region):
        inside = region.contains(self.points) if len(self.points) else np.zeros(0, bool)
        return np.bincount(self.index[inside], minlength=self.size)

    def pattern(self, j):
        lo, hi = np.searchsorted(self.index, [j, j + 1])
        return PointPattern(self.points[lo:hi], dim=self.dim)

    def __iter__(self):
        bounds = np.searchsorted(self.index, np.arange(self.size + 1))
        for j in range(self.size):
            yield PointPattern(self.points[bounds[j] : bounds[j + 1]], dim=self.dim)

    def __len__(self):
        return self.size

    @classmethod
    def from_patterns(cls, patterns):
        patterns = list(patterns)
        if not patterns:
            raise ValueError("no patterns")
        dim = patterns[0].dim
        if any(p.dim != dim for p in patterns):
            raise ValueError("patterns have mismatched dimensions")
        counts = [len(p) for p in patterns]
        points = np.concatenate([p.points for p in patterns]).reshape(-1, dim)
        index = np.repeat(np.arange(len(patterns)), counts)
        return cls(points, index, len(patterns))


# -- intensity measures -------------------------------------------------------


@dataclass(frozen=True)
class ConstantDensity:
    lam: float
    window: Window

    def __post_init__(self):
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise ValueError(f"density must be finite and >= 0, got {self.lam}")

    @property
    def dim(self):
        return self.window.dim

    def total_mass(self):
        return self.lam * self.window.volume

    def _piecewise(self):
        edges = [np.array([a, b]) for a, b in zip(self.window.lower, self.window.upper)]
        return edges, np.full((1,) * self.dim, float(self.lam))


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density that is constant on each cell of a regular grid over ``window``.

    ``values`` has one entry per cell and gives the density (mass per unit
    volume) there; its shape is the per-axis resolution.
    """

    window: Window
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != self.window.dim:
            raise ValueError(f"values need {self.window.dim} axes, got shape {vals.shape}")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("densities must be finite and >= 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, window, mass=1.0):
        return cls(window, np.full((1,) * window.dim, mass / window.volume))

    @property
    def dim(self):
        return self.window.dim

    @property
    def resolution(self):
        return self.values.shape

    def edges(self):
        return [
            np.linspace(lo, hi, k + 1)
            for lo, hi, k in zip(self.window.lower, self.window.upper, self.resolution)
        ]

    def cell_volume(self):
        return self.window.volume / self.values.size

    def cell_masses(self):
        return self.values * self.cell_volume()

    def total_mass(self):
        return math.fsum(self.cell_masses().ravel())

    def _piecewise(self):
        return self.edges(), self.values


@dataclass(frozen=True, eq=False)
class Atomic:
    """Weights at fixed locations; ``locations`` has shape (k, dim)."""

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        locs = np.array(self.locations, dtype=float)
        if locs.ndim == 1:
            locs = locs[None, :]
        w = np.array(self.weights, dtype=float).ravel()
        if locs.shape[0] != w.size:
            raise ValueError("need one weight per location")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("atom weights must be finite and >= 0")
        locs.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.locations.shape[1]

    def total_mass(self):
        return math.fsum(self.weights)


def _piecewise_overlap(a, b):
    """Exact integral of the product of two piecewise-constant box functions.

    Each argument is ``(edges_per_axis, values)``; both are refined to the
    union of their edges, where the product is constant on every cell.
    """
    (ea, va), (eb, vb) = a, b
    index_a, index_b, lengths = [], [], []
    for xa, xb in zip(ea, eb):
        lo, hi = max(xa[0], xb[0]), min(xa[-1], xb[-1])
        if hi <= lo:
            return 0.0
        cuts = np.union1d(xa, xb)
        cuts = np.unique(np.clip(cuts, lo, hi))
        mids = 0.5 * (cuts[:-1] + cuts[1:])
        index_a.append(np.searchsorted(xa, mids, side="right") - 1)
        index_b.append(np.searchsorted(xb, mids, side="right") - 1)
        lengths.append(np.diff(cuts))
    vol = lengths[0]
    for ln in lengths[1:]:
        vol = np.multiply.outer(vol, ln)
    prod = va[np.ix_(*index_a)] * vb[np.ix_(*index_b)] * vol
    return math.fsum(prod.ravel())


def _box_piecewise(box, value=1.0):
    edges = [np.array([a, b]) for a, b in zip(box.lower, box.upper)]
    return edges, np.full((1,) * len(edges), float(value))


def measure_of(mu, region):
    """Exact ``mu(region)`` under the half-open box convention."""
    if isinstance(mu, Atomic):
        if region.dim != mu.dim:
            raise ValueError("region and measure dimensions differ")
        return math.fsum(mu.weights[region.contains(mu.locations)])
    if region.dim != mu.dim:
        raise ValueError("region and measure dimensions differ")
    if not mu.window.covers(region):
        raise ValueError(f"region {region} lies outside the measure window {mu.window}")
    if region.volume == 0:
        return 0.0
    return _piecewise_overlap(mu._piecewise(), _box_piecewise(region))


# -- process catalog ---------------------------------------------------------


@dataclass(frozen=True)
class PoissonProcess:
    intensity: object


@dataclass(frozen=True, eq=False)
class FixedAtoms:
    """The same points in every realization."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class BinomialProcess:
    """``m`` IID points drawn from a normalized grid density."""

    m: int
    density: GridDensity

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError(f"m must be a non-negative integer, got {self.m}")
        if abs(self.density.total_mass() - 1.0) > 1e-9:
            raise ValueError("binomial process density must integrate to 1")


@dataclass(frozen=True)
class NeymanScott:
    """Poisson(kappa) parents, each with Poisson(c) children uniform in a radius-r ball.

    Parents live in the window dilated by ``r`` and children outside the
    window are discarded, so the child intensity is exactly ``kappa * c``
    everywhere inside the window.
    """

    kappa: float
    c: float
    r: float
    window: Window

    def __post_init__(self):
        for name in ("kappa", "c"):
            v = getattr(self, name)
            if not v >= 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not self.r > 0:
            raise ValueError(f"cluster radius must be > 0, got {self.r}")


def _spec_dim(spec):
    if isinstance(spec, PoissonProcess):
        return spec.intensity.dim
    if isinstance(spec, FixedAtoms):
        return spec.dim
    if isinstance(spec, BinomialProcess):
        return spec.density.dim
    if isinstance(spec, NeymanScott):
        return spec.window.dim
    raise TypeError(f"unknown process spec {spec!r}")


def _uniform_in_cells(density, n_points, rng):
    """Cell-then-uniform draws from a normalized piecewise-constant density."""
    if isinstance(density, ConstantDensity):
        w = density.window
        return w.lower + rng.random((n_points, w.dim)) * w.sides
    masses = density.cell_masses().ravel()
    cdf = np.cumsum(masses)
    cells = np.searchsorted(cdf, rng.random(n_points) * cdf[-1], side="right")
    cells = np.minimum(cells, masses.size - 1)
    multi = np.unravel_index(cells, density.resolution)
    w = density.window
    cell_side = w.sides / np.asarray(density.resolution)
    corner = np.asarray(w.lower) + np.stack(multi, axis=1) * cell_side
    return corner + rng.random((n_points, w.dim)) * cell_side


def _ball_offsets(n_points, dim, r, rng):
    if dim == 1:
        return (2.0 * rng.random((n_points, 1)) - 1.0) * r
    direction = rng.standard_normal((n_points, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = r * rng.random(n_points) ** (1.0 / dim)
    return direction * radius[:, None]


def sample_batch(spec, size, rng):
    """Draw ``size`` IID realizations of ``spec`` as a :class:`PatternBatch`."""
    dim = _spec_dim(spec)
    if isinstance(spec, FixedAtoms):
        k = spec.points.shape[0]
        points = np.tile(spec.points, (size, 1))
        index = np.repeat(np.arange(size), k)
        return PatternBatch(points, index, size)

    if isinstance(spec, BinomialProcess):
        points = _uniform_in_cells(spec.density, size * spec.m, rng)
        return PatternBatch(points, np.repeat(np.arange(size), spec.m), size)

    if isinstance(spec, PoissonProcess):
        mu = spec.intensity
        if isinstance(mu, Atomic):
            mult = rng.poisson(np.broadcast_to(mu.weights, (size, mu.weights.size)))
            atom_ids = np.broadcast_to(np.arange(mu.weights.size), mult.shape)
            owners = np.broadcast_to(np.arange(size)[:, None], mult.shape)
            flat = mult.ravel()
            points = mu.locations[np.repeat(atom_ids.ravel(), flat)]
            return PatternBatch(points, np.repeat(owners.ravel(), flat), size)
        counts = rng.poisson(mu.total_mass(), size)
        points = _uniform_in_cells(mu, int(counts.sum()), rng)
        return PatternBatch(points, np.repeat(np.arange(size), counts), size)

    if isinstance(spec, NeymanScott):
        parent_box = spec.window.dilate(spec.r)
        n_parents = rng.poisson(spec.kappa * parent_box.volume, size)
        total_parents = int(n_parents.sum())
        parents = parent_box.lower + rng.random((total_parents, dim)) * parent_box.sides
        n_children = rng.poisson(spec.c, total_parents)
        owner = np.repeat(np.repeat(np.arange(size), n_parents), n_children)
        children = np.repeat(parents, n_children, axis=0)
        children += _ball_offsets(children.shape[0], dim, spec.r, rng)
        keep = spec.window.contains(children) if len(children) else np.zeros(0, bool)
        return PatternBatch(children[keep], owner[keep], size)

    raise TypeError(f"unknown process spec {spec!r}")


def sample_process(spec, rng):
    """One realization of ``spec``."""
    return sample_batch(spec, 1, rng).pattern(0)


def thin_batch(batch, p, rng):
    """Keep each point of every pattern independently with probability ``p``."""
    _check_probability(p)
    keep = rng.random(batch.points.shape[0]) < p
    return PatternBatch(batch.points[keep], batch.index[keep], batch.size)


def thin_pattern(pattern, p, rng):
    _check_probability(p)
    keep = rng.random(len(pattern)) < p
    return PointPattern(pattern.points[keep], dim=pattern.dim)


def superpose(patterns: Sequence[PointPattern]):
    """Sum of counting measures: concatenation, multiplicities preserved."""
    patterns = list(patterns)
    if not patterns:
        raise ValueError("nothing to superpose")
    dim = patterns[0].dim
    if any(p.dim != dim for p in patterns):
        raise ValueError("cannot superpose patterns of different dimensions")
    return PointPattern(np.concatenate([p.points for p in patterns]), dim=dim)


def superpose_batch(batch, n):
    """Merge consecutive groups of ``n`` patterns: pattern j of the result is
    the superposition of patterns ``j*n .. j*n+n-1``."""
    _check_n(n)
    if batch.size % n:
        raise ValueError(f"batch of {batch.size} patterns does not split into groups of {n}")
    return PatternBatch(batch.points, batch.index // n, batch.size // n)


def thinned_superposition_batch(spec, n, size, rng):
    """``size`` draws of ``(1/n) o (xi_1 + ... + xi_n)``: sample, superpose, thin."""
    _check_n(n)
    raw = sample_batch(spec, size * n, rng)
    return thin_batch(superpose_batch(raw, n), 1.0 / n, rng)


def thinned_superposition_sample(spec, n, rng):
    return thinned_superposition_batch(spec, n, 1, rng).pattern(0)


def count_in(pattern, region):
    """Number of points in the half-open box ``region``."""
    if len(pattern) == 0:
        return 0
    return int(np.count_nonzero(region.contains(pattern.points)))


def intensity_of_spec(spec):
    """The intensity measure ``A -> E xi(A)`` of a catalog process."""
    if isinstance(spec, PoissonProcess):
        return spec.intensity
    if isinstance(spec, FixedAtoms):
        return Atomic(spec.points, np.ones(spec.points.shape[0]))
    if isinstance(spec, BinomialProcess):
        vals = spec.m * spec.density.values
        if np.all(vals == vals.flat[0]):
            return ConstantDensity(float(vals.flat[0]), spec.density.window)
        return GridDensity(spec.density.window, vals)
    if isinstance(spec, NeymanScott):
        return ConstantDensity(spec.kappa * spec.c, spec.window)
    raise TypeError(f"unknown process spec {spec!r}")


# -- text serialization -------------------------------------------------------


def write_pattern(pattern, fh, window=None):
    """One point per line, comma-separated, after ``#`` header lines."""
    fh.write(f"# dim={pattern.dim}\n")
    if window is not None:
        axes = ",".join(f"{lo!r}:{hi!r}" for lo, hi in zip(window.lower, window.upper))
        fh.write(f"# window={axes}\n")
    for point in pattern.points:
        fh.write(",".join(repr(float(x)) for x in point) + "\n")


def read_pattern(fh):
    """Inverse of :func:`write_pattern`; returns ``(pattern, window or None)``."""
    dim, window, rows = None, None, []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key == "dim":
                dim = int(value)
            elif key == "window":
                bounds = [axis.split(":") for axis in value.split(",")]
                window = Window([float(a) for a, _ in bounds], [float(b) for _, b in bounds])
            continue
        rows.append([float(x) for x in line.split(",")])
    if dim is None:
        raise ValueError("pattern file lacks a '# dim=' header")
    return PointPattern(np.array(rows).reshape(-1, dim), dim=dim), window
