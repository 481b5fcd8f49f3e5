"""Statistical checks of the transform identities.

* ``A_{p o X}(u) = A_X(pu)`` for integer laws,
* ``A_{p o xi}(u) = A_xi(pu)`` for point processes,
* ``A_{xi + eta}(u) = A_xi(u) A_eta(u)`` for independent processes.

Each check returns :class:`PropertyCheck` records carrying the empirical
side, the target and a combined standard error; the caller decides the
sigma threshold.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    Bernoulli,
    Binomial,
    Deterministic,
    FinitePmf,
    Poisson,
    apgf_empirical,
    apgf_exact,
    thin_counts,
)
from .functionals import apgfl_empirical, apgfl_exact
from .point_process import (
    Atomic,
    BinomialProcess,
    ConstantDensity,
    FixedAtoms,
    GridDensity,
    NeymanScott,
    PatternBatch,
    PoissonProcess,
    sample_batch,
    thin_batch,
)
from .streams import stream

__all__ = [
    "PropertyCheck",
    "P_GRID",
    "U_GRID",
    "THIN_P",
    "closed_form_catalog",
    "process_catalog",
    "apgf_thinning_grid",
    "apgfl_thinning_checks",
    "apgfl_superposition_checks",
]

P_GRID = (0.1, 0.5, 0.9)
U_GRID = (0.25, 0.5, 1.0, 1.5)
THIN_P = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    value: float
    target: float
    stderr: float

    @property
    def z(self):
        diff = abs(self.value - self.target)
        if diff <= 1e-12:
            return 0.0
        if self.stderr == 0:
            return math.inf
        return diff / self.stderr

    def passes(self, k):
        return self.z < k


def closed_form_catalog():
    return {
        "deterministic:3": Deterministic(3),
        "bernoulli:0.7": Bernoulli(0.7),
        "poisson:2": Poisson(2.0),
        "binomial:5:0.3": Binomial(5, 0.3),
        "pmf:0.2/0.5/0.3": FinitePmf({0: 0.2, 1: 0.5, 2: 0.3}),
    }


def process_catalog(window):
    """One representative of every process variant, all living in ``window``."""
    d = window.dim
    res = (4,) * d
    ramp = (np.indices(res)[0] + 1.0).astype(float)
    ramp_density = GridDensity(window, ramp / (ramp.sum() * window.volume / ramp.size))
    lo, side = np.asarray(window.lower), window.sides
    atoms = lo + np.array([[0.5] * d, [0.3] + [0.7] * (d - 1)]) * side
    return {
        "poisson_const": PoissonProcess(ConstantDensity(4.0 / window.volume, window)),
        "poisson_grid": PoissonProcess(GridDensity(window, 3.0 * ramp_density.values)),
        "poisson_atoms": PoissonProcess(Atomic(atoms, [0.7, 1.5])),
        "fixed_atoms": FixedAtoms(atoms),
        "binomial": BinomialProcess(3, ramp_density),
        "neyman_scott": NeymanScott(6.0 / window.volume, 1.0, 0.1 * float(side.min()), window),
    }


def apgf_thinning_grid(dists, N, seed, p_grid=P_GRID, u_grid=U_GRID):
    """Empirical ``A_{p o X}(u)`` against the exact ``A_X(pu)``."""
    checks = []
    for name, dist in dists.items():
        for p in p_grid:
            rng = stream(seed, "apgf-thin", name, int(round(p * 1000)))
            thinned = thin_counts(dist.sample(N, rng), p, rng)
            for u in u_grid:
                est = apgf_empirical(thinned, u)
                checks.append(PropertyCheck(
                    f"apgf_thin[{name}|p={p:g}|u={u:g}]", est.value, apgf_exact(dist, p * u), est.stderr,
                ))
    return checks


def apgfl_thinning_checks(specs, dictionary, N, seed, p_grid=THIN_P):
    """Empirical functional of thinned samples against ``A_xi(pu)``.

    ``A_xi(pu)`` is the closed form where available, otherwise an estimate
    from an independent batch, whose error enters the combined stderr.
    """
    checks = []
    for name, spec in specs.items():
        base = sample_batch(spec, N, stream(seed, "apgfl-thin", name, "base"))
        ref = None
        for p in p_grid:
            thinned = thin_batch(base, p, stream(seed, "apgfl-thin", name, int(round(p * 1000))))
            for uid, u in dictionary.items():
                est = apgfl_empirical(thinned, u)
                target = apgfl_exact(spec, u.scaled(p))
                se = est.stderr
                if target is None:
                    if ref is None:
                        ref = sample_batch(spec, N, stream(seed, "apgfl-thin", name, "reference"))
                    ref_est = apgfl_empirical(ref, u.scaled(p))
                    target = ref_est.value
                    se = math.hypot(est.stderr, ref_est.stderr)
                checks.append(PropertyCheck(f"apgfl_thin[{name}|p={p:g}|{uid}]", est.value, target, se))
    return checks


def _superpose_pair(a, b):
    points = np.concatenate([a.points, b.points])
    index = np.concatenate([a.index, b.index])
    order = np.argsort(index, kind="stable")
    return PatternBatch(points[order], index[order], a.size)


def apgfl_superposition_checks(specs, dictionary, N, seed):
    """Empirical functional of ``xi + eta`` against the product of the two
    individual estimates; ``eta`` is the next spec in catalog order."""
    names = list(specs)
    checks = []
    for i, name in enumerate(names):
        other = names[(i + 1) % len(names)]
        xi = sample_batch(specs[name], N, stream(seed, "apgfl-sup", name, "xi"))
        eta = sample_batch(specs[other], N, stream(seed, "apgfl-sup", name, "eta"))
        xi_ref = sample_batch(specs[name], N, stream(seed, "apgfl-sup", name, "xi-ref"))
        eta_ref = sample_batch(specs[other], N, stream(seed, "apgfl-sup", name, "eta-ref"))
        both = _superpose_pair(xi, eta)
        for uid, u in dictionary.items():
            joint = apgfl_empirical(both, u)
            a = apgfl_empirical(xi_ref, u)
            b = apgfl_empirical(eta_ref, u)
            se = math.sqrt(joint.stderr**2 + (b.value * a.stderr) ** 2 + (a.value * b.stderr) ** 2)
            checks.append(PropertyCheck(
                f"apgfl_superpose[{name}+{other}|{uid}]", joint.value, a.value * b.value, se,
            ))
    return checks
