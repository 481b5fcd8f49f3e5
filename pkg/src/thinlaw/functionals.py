"""Test functions and the alternate probability generating functional.

For a point process xi and a test function u with values in [0, 1] and
bounded support,

    A_xi(u) = E prod_i (1 - u(x_i)),

the product running over the points of xi.  The product form is what gets
evaluated; no logarithm is ever taken, so u = 1 at a point simply zeroes
the factor.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import Estimate
from .point_process import (
    Atomic,
    BinomialProcess,
    FixedAtoms,
    NeymanScott,
    PatternBatch,
    PoissonProcess,
    Region,
    Window,
    _box_piecewise,
    _piecewise_overlap,
    intensity_of_spec,
)

__all__ = [
    "ScaledIndicator",
    "GridFunction",
    "GapEntry",
    "GapReport",
    "eval_test",
    "integrate",
    "apgfl_on_pattern",
    "apgfl_values",
    "apgfl_empirical",
    "apgfl_poisson",
    "apgfl_exact",
    "first_order_residual",
    "standard_regions",
    "default_dictionary",
    "DICTIONARY_VERSION",
]


@dataclass(frozen=True)
class ScaledIndicator:
    """``u(x) = c`` on ``region``, 0 elsewhere."""

    c: float
    region: Region

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"test function values must lie in [0, 1], got {self.c}")

    @property
    def dim(self):
        return self.region.dim

    @property
    def support(self):
        return self.region

    def __call__(self, points):
        return np.where(self.region.contains(points), self.c, 0.0)

    def scaled(self, p):
        return ScaledIndicator(self.c * p, self.region)

    def _piecewise(self):
        return _box_piecewise(self.region, self.c)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant ``u`` on a regular grid over ``window``, 0 outside."""

    window: Window
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != self.window.dim:
            raise ValueError(f"values need {self.window.dim} axes, got shape {vals.shape}")
        if np.any(vals < 0) or np.any(vals > 1):
            raise ValueError("test function values must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self):
        return self.window.dim

    @property
    def support(self):
        return Region(self.window.lower, self.window.upper)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        if points.shape[1] != self.dim:
            raise ValueError(f"points have dim {points.shape[1]}, function has dim {self.dim}")
        res = np.asarray(self.values.shape)
        rel = (points - self.window.lower) / self.window.sides
        cell = np.floor(rel * res).astype(np.int64)
        inside = self.window.contains(points)
        cell = np.clip(cell, 0, res - 1)
        out = self.values[tuple(cell.T)]
        return np.where(inside, out, 0.0)

    def scaled(self, p):
        return GridFunction(self.window, self.values * p)

    def _piecewise(self):
        edges = [
            np.linspace(lo, hi, k + 1)
            for lo, hi, k in zip(self.window.lower, self.window.upper, self.values.shape)
        ]
        return edges, self.values


def eval_test(u, x):
    """Value(s) of ``u`` at one point or an (m, d) array of points."""
    x = np.asarray(x, dtype=float)
    out = u(x)
    return float(out[0]) if x.ndim == 1 else out


def integrate(u, mu):
    """Exact ``int u dmu``; both sides are piecewise constant or atomic."""
    if u.dim != mu.dim:
        raise ValueError("test function and measure dimensions differ")
    if isinstance(mu, Atomic):
        return math.fsum(mu.weights * u(mu.locations))
    if not mu.window.covers(u.support):
        raise ValueError(f"support of {u!r} is not inside the measure window {mu.window}")
    return _piecewise_overlap(u._piecewise(), mu._piecewise())


def apgfl_on_pattern(pattern, u):
    """``prod_i (1 - u(x_i))``; 1 for the empty pattern."""
    if len(pattern) == 0:
        return 1.0
    return float(np.prod(1.0 - u(pattern.points)))


def apgfl_values(batch, u):
    """Per-pattern products ``prod_i (1 - u(x_i))`` over a :class:`PatternBatch`."""
    out = np.ones(batch.size)
    if batch.points.shape[0] == 0:
        return out
    factors = 1.0 - u(batch.points)
    starts = np.flatnonzero(np.r_[True, batch.index[1:] != batch.index[:-1]])
    out[batch.index[starts]] = np.multiply.reduceat(factors, starts)
    return out


def apgfl_empirical(samples, u):
    """Monte Carlo estimate of ``A_xi(u)`` from a batch or a list of patterns."""
    if not isinstance(samples, PatternBatch):
        samples = list(samples)
        if not samples:
            raise ValueError("no samples")
        samples = PatternBatch.from_patterns(samples)
    if samples.size == 0:
        raise ValueError("no samples")
    return Estimate.from_values(apgfl_values(samples, u))


def apgfl_poisson(mu, u):
    """``exp(-int u dmu)``: the functional of a Poisson process with intensity mu."""
    return math.exp(-integrate(u, mu))


def apgfl_exact(spec, u) -> Optional[float]:
    """Closed-form ``A_xi(u)`` where the catalog has one, else ``None``."""
    if isinstance(spec, FixedAtoms):
        return float(np.prod(1.0 - u(spec.points)))
    if isinstance(spec, PoissonProcess):
        return apgfl_poisson(spec.intensity, u)
    if isinstance(spec, BinomialProcess):
        return (1.0 - integrate(u, spec.density)) ** spec.m
    if isinstance(spec, NeymanScott):
        return None
    raise TypeError(f"unknown process spec {spec!r}")


def first_order_residual(spec, u, p, samples=None):
    """``A_xi(p u) - (1 - p int u dmu)``, which is o(p) as p -> 0.

    Uses the closed form when there is one, otherwise the Monte Carlo
    estimate over ``samples`` (a batch of realizations of ``spec``).
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    pu = u.scaled(p)
    value = apgfl_exact(spec, pu)
    if value is None:
        if samples is None:
            raise ValueError(f"{type(spec).__name__} has no closed form; pass samples")
        value = apgfl_empirical(samples, pu).value
    return value - (1.0 - p * integrate(u, intensity_of_spec(spec)))


@dataclass(frozen=True)
class GapEntry:
    u_id: str
    empirical: Estimate
    target: float

    @property
    def gap(self):
        return abs(self.empirical.value - self.target)


@dataclass(frozen=True)
class GapReport:
    """Empirical-vs-target functional values over a dictionary at one n."""

    n: int
    entries: tuple

    @property
    def max_gap(self):
        return max(e.gap for e in self.entries)

    @property
    def worst(self):
        return max(self.entries, key=lambda e: e.gap)


DICTIONARY_VERSION = 1


def standard_regions(window):
    """Nested boxes A1 in A2 in A3 plus the lower half H along the first axis."""
    d = window.dim
    half = np.ones(d)
    half[0] = 0.5
    return {
        "A1": window.relative(np.full(d, 0.4), np.full(d, 0.6)),
        "A2": window.relative(np.full(d, 0.25), np.full(d, 0.75)),
        "A3": window.relative(np.full(d, 0.1), np.full(d, 0.9)),
        "H": window.relative(np.zeros(d), half),
    }


def default_dictionary(window, resolution=8):
    """The fixed six-function probe set used as a stand-in for "all u".

    Three scaled indicators on the nested regions and three grid functions
    (constant, quantized ramp along the first axis, 0/0.8 checkerboard).
    """
    regions = standard_regions(window)
    shape = (resolution,) * window.dim
    idx = np.indices(shape)
    ramp = (idx[0] + 0.5) / resolution
    checker = 0.8 * (idx.sum(axis=0) % 2)
    return {
        "ind_c0.3_A1": ScaledIndicator(0.3, regions["A1"]),
        "ind_c0.6_A2": ScaledIndicator(0.6, regions["A2"]),
        "ind_c1.0_A3": ScaledIndicator(1.0, regions["A3"]),
        "grid_const": GridFunction(window, np.full(shape, 0.5)),
        "grid_ramp": GridFunction(window, ramp),
        "grid_checker": GridFunction(window, checker),
    }
