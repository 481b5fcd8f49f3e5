"""``thinlaw`` experiment runner.

Usage::

    thinlaw <experiment> [--config FILE] [--seed U64] [--out PATH] [key=value ...]

Configuration comes from an optional file (flat ``key=value`` text, or a
JSON object when the file ends in ``.json``), then ``key=value`` arguments,
then the ``--seed``/``--out`` flags; later sources override earlier ones.
Unknown keys are rejected.

Writes ``<out>.csv`` and ``<out>.summary.txt``.  Exit status: 0 when every
hard (5 sigma) check passes, 1 when a hard check fails, 2 for an invalid
configuration, 3 for an I/O failure.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .convergence import (
    large_numbers_check,
    thin_numbers_curve,
    thin_processes_curve,
)
from .distributions import Bernoulli, Binomial, Deterministic, FinitePmf, Poisson
from .functionals import default_dictionary, standard_regions
from .point_process import (
    BinomialProcess,
    ConstantDensity,
    FixedAtoms,
    GridDensity,
    NeymanScott,
    PoissonProcess,
    Region,
    Window,
    thinned_superposition_batch,
    write_pattern,
)
from .properties import (
    apgf_thinning_grid,
    apgfl_superposition_checks,
    apgfl_thinning_checks,
    closed_form_catalog,
    process_catalog,
)
from .streams import stream

EXPERIMENTS = ("large-numbers", "thin-numbers", "thin-processes", "verify-properties")
CSV_COLUMNS = ("experiment", "n", "metric", "target", "value", "stderr", "seed")
REQUIRED = ("experiment", "seed")
KNOWN_KEYS = frozenset({
    "experiment", "seed", "out", "dist", "process", "lambda", "atoms", "m", "kappa",
    "c", "r", "window", "n", "samples", "mode", "regions", "dictionary", "workers",
    "u", "resolution", "dump",
})
DEFAULT_N = {
    "large-numbers": (10, 100, 1000),
    "thin-numbers": tuple(2**k for k in range(11)),
    "thin-processes": (1, 2, 4, 8, 16, 32),
    "verify-properties": (1,),
}

HARD_SIGMA = 5.0
SOFT_SIGMA = 3.0


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    out: str
    n_list: tuple
    samples: int = 100_000
    dist: Optional[object] = None
    process: Optional[object] = None
    window: Optional[Window] = None
    mode: str = "exact"
    regions: dict = field(default_factory=dict)
    dictionary: dict = field(default_factory=dict)
    u_list: tuple = (0.5, 1.0)
    workers: int = 1
    dump: int = 0


# -- parsing --------------------------------------------------------------------


def _tokenize(text):
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    return tokens


def parse_pairs(tokens, source="config"):
    """``key=value`` tokens to a dict, rejecting duplicates and unknown keys."""
    raw = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key:
            raise ConfigError(f"{source}: expected key=value, got {tok!r}")
        if key in raw:
            raise ConfigError(f"{source}: duplicate key {key!r}")
        raw[key] = value
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {', '.join(unknown)}")
    return raw


def parse_structured(text, source="config"):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{source}: JSON config must be an object")
    raw = {}
    for key, value in obj.items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        raw[key] = str(value)
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {', '.join(unknown)}")
    return raw


def _float(raw, key, default=None):
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {raw[key]!r}") from None


def _int(raw, key, default=None):
    if key not in raw:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(f"{key}: not an integer: {raw[key]!r}") from None


def parse_dist(text):
    """``deterministic:K``, ``bernoulli:Q``, ``poisson:L``, ``binomial:M:P`` or ``pmf:W0/W1/...``."""
    kind, _, rest = text.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "deterministic" and len(args) == 1:
            return Deterministic(int(args[0]))
        if kind == "bernoulli" and len(args) == 1:
            return Bernoulli(float(args[0]))
        if kind == "poisson" and len(args) == 1:
            return Poisson(float(args[0]))
        if kind == "binomial" and len(args) == 2:
            return Binomial(int(args[0]), float(args[1]))
        if kind == "pmf" and len(args) == 1:
            return FinitePmf([float(w) for w in args[0].split("/")])
    except ValueError as exc:
        raise ConfigError(f"dist: {exc}") from None
    raise ConfigError(f"dist: cannot parse {text!r}")


def parse_window(text):
    try:
        bounds = [axis.split(":") for axis in text.split(",")]
        return Window([float(a) for a, _ in bounds], [float(b) for _, b in bounds])
    except ValueError as exc:
        raise ConfigError(f"window: {exc}") from None


def _parse_atoms(text, dim):
    try:
        pts = np.array([[float(x) for x in p.split(":")] for p in text.split(",")])
    except ValueError:
        raise ConfigError(f"atoms: cannot parse {text!r}") from None
    if pts.shape[1] != dim:
        raise ConfigError(f"atoms: points must have {dim} coordinates")
    return pts


def _parse_process(raw, window):
    kind = raw.get("process")
    if kind is None:
        raise ConfigError("missing required key 'process'")
    try:
        if kind == "poisson":
            return PoissonProcess(ConstantDensity(_float(raw, "lambda"), window))
        if kind == "atoms":
            return FixedAtoms(_parse_atoms(raw.get("atoms", ""), window.dim))
        if kind == "binomial":
            return BinomialProcess(_int(raw, "m"), GridDensity.uniform(window))
        if kind == "neyman-scott":
            return NeymanScott(_float(raw, "kappa"), _float(raw, "c"), _float(raw, "r"), window)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"process: {exc}") from None
    raise ConfigError(f"process: unknown kind {kind!r}")


def _named_regions(window, process):
    regions = dict(standard_regions(window))
    regions["W"] = Region(window.lower, window.upper)
    if isinstance(process, FixedAtoms):
        for i, point in enumerate(process.points):
            regions[f"atom{i}"] = Region.around(point)
    return regions


def _select(available, text, key):
    chosen = {}
    for name in text.split(","):
        if name not in available:
            raise ConfigError(f"{key}: unknown id {name!r}; known: {', '.join(available)}")
        chosen[name] = available[name]
    return chosen


def build_config(raw):
    """Validate a raw key/value mapping into an :class:`ExperimentConfig`."""
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    experiment = raw["experiment"]
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {', '.join(EXPERIMENTS)}")
    try:
        seed = int(raw["seed"])
    except ValueError:
        raise ConfigError(f"seed: not an integer: {raw['seed']!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")

    if "n" in raw:
        try:
            n_list = tuple(int(x) for x in raw["n"].split(","))
        except ValueError:
            raise ConfigError(f"n: cannot parse {raw['n']!r}") from None
    else:
        n_list = DEFAULT_N[experiment]
    if not n_list or n_list[0] < 1 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigError("n: must be a non-empty ascending list of positive integers")

    cfg = ExperimentConfig(
        experiment=experiment,
        seed=seed,
        out=raw.get("out", experiment),
        n_list=n_list,
        samples=_int(raw, "samples", 100_000),
        workers=_int(raw, "workers", 1),
        dump=_int(raw, "dump", 0),
    )
    if cfg.samples < 2:
        raise ConfigError("samples: need at least 2")
    if cfg.workers < 1:
        raise ConfigError("workers: must be >= 1")

    if experiment in ("large-numbers", "thin-numbers"):
        if "dist" not in raw:
            raise ConfigError("missing required key 'dist'")
        cfg.dist = parse_dist(raw["dist"])
        default_mode = "exact" if cfg.dist.finite_support else "mc"
        cfg.mode = raw.get("mode", default_mode)
        if cfg.mode not in ("exact", "mc"):
            raise ConfigError("mode: must be 'exact' or 'mc'")
        if cfg.mode == "exact" and not cfg.dist.finite_support:
            raise ConfigError("mode: exact mode needs a finite-support dist")
        if "u" in raw:
            try:
                cfg.u_list = tuple(float(x) for x in raw["u"].split(","))
            except ValueError:
                raise ConfigError(f"u: cannot parse {raw['u']!r}") from None

    if experiment in ("thin-processes", "verify-properties"):
        cfg.window = parse_window(raw.get("window", "0:1,0:1"))
        dictionary = default_dictionary(cfg.window, _int(raw, "resolution", 8))
        cfg.dictionary = _select(dictionary, raw.get("dictionary", ",".join(dictionary)), "dictionary")
    if experiment == "thin-processes":
        cfg.process = _parse_process(raw, cfg.window)
        regions = _named_regions(cfg.window, cfg.process)
        default = "A1,A2,A3"
        if isinstance(cfg.process, FixedAtoms):
            default = ",".join(f"atom{i}" for i in range(len(cfg.process.points)))
        cfg.regions = _select(regions, raw.get("regions", default), "regions")
    if experiment == "verify-properties" and "dist" in raw:
        cfg.dist = parse_dist(raw["dist"])
    return cfg


def parse_config(text, structured=False):
    """Parse flat ``key=value`` text (or JSON when ``structured``) into a config."""
    raw = parse_structured(text) if structured else parse_pairs(_tokenize(text))
    return build_config(raw)


# -- experiments ------------------------------------------------------------------


@dataclass
class Outcome:
    rows: list
    checks: list  # (level, description, passed)


def _within(point, target, k):
    if point.stderr is None:
        return point.value == target
    return abs(point.value - target) <= k * point.stderr


def _run_large_numbers(cfg):
    points = large_numbers_check(cfg.dist, cfg.n_list, cfg.samples, cfg.seed, cfg.u_list, cfg.workers)
    checks = []
    for level, k in (("hard", HARD_SIGMA), ("soft", SOFT_SIGMA)):
        for p in points:
            if p.metric.startswith("laplace_gap"):
                continue
            checks.append((level, f"n={p.n} {p.metric} within {k:g} stderr of {p.target!r}",
                           _within(p, p.target, k)))
    return Outcome(points, checks)


def _run_thin_numbers(cfg):
    points = thin_numbers_curve(cfg.dist, cfg.n_list, cfg.mode, cfg.samples, cfg.seed, cfg.workers)
    values = [p.value for p in points]
    checks = []
    if cfg.mode == "exact":
        decreasing = all(b < a for a, b in zip(values, values[1:]))
        checks.append(("hard", "exact TV strictly decreasing in n", decreasing))
    elif cfg.dist.finite_support:
        exact = thin_numbers_curve(cfg.dist, cfg.n_list, "exact")
        for level, k in (("hard", HARD_SIGMA), ("soft", SOFT_SIGMA)):
            for p, e in zip(points, exact):
                checks.append((level, f"n={p.n} Monte Carlo TV within {k:g} stderr of exact {e.value!r}",
                               _within(p, e.value, k)))
    else:
        first, last = points[0], points[-1]
        checks.append(("soft", f"TV at n={last.n} not above TV at n={first.n} plus {HARD_SIGMA:g} stderr",
                       last.value <= first.value + HARD_SIGMA * last.stderr))
    return Outcome(points, checks)


def _run_thin_processes(cfg):
    curve = thin_processes_curve(cfg.process, cfg.n_list, cfg.dictionary, cfg.regions,
                                 cfg.samples, cfg.seed, cfg.workers)
    gaps = curve.metric("apgfl_max_gap")
    checks = []
    trend = all(
        b.value <= a.value + 2.0 * math.hypot(a.stderr, b.stderr) for a, b in zip(gaps, gaps[1:])
    )
    checks.append(("hard", "max functional gap non-increasing within 2 stderr slack", trend))
    last = gaps[-1]
    checks.append(("hard", f"max functional gap at n={last.n} below {HARD_SIGMA:g} stderr",
                   last.value < HARD_SIGMA * last.stderr))
    n_last = cfg.n_list[-1]
    for p in curve.points:
        if p.n == n_last and p.metric.startswith("void_gap"):
            checks.append(("soft", f"{p.metric} at n={n_last} below {SOFT_SIGMA:g} stderr",
                           p.value < SOFT_SIGMA * p.stderr))
    return Outcome(curve.points, checks), curve


def _run_verify_properties(cfg):
    from .convergence import ConvergencePoint

    dists = {cfg.dist.spec_string(): cfg.dist} if cfg.dist is not None else closed_form_catalog()
    specs = process_catalog(cfg.window)
    results = [
        ("APGF thinning identity", apgf_thinning_grid(dists, cfg.samples, cfg.seed)),
        ("functional thinning identity", apgfl_thinning_checks(specs, cfg.dictionary, cfg.samples, cfg.seed)),
        ("functional superposition identity",
         apgfl_superposition_checks(specs, cfg.dictionary, cfg.samples, cfg.seed)),
    ]
    rows, checks = [], []
    for label, group in results:
        rows.extend(ConvergencePoint(1, c.name, c.value, c.stderr, c.target) for c in group)
        hard = all(c.passes(HARD_SIGMA) for c in group)
        frac = sum(c.passes(SOFT_SIGMA) for c in group) / len(group)
        checks.append(("hard", f"{label}: all {len(group)} cells within {HARD_SIGMA:g} stderr", hard))
        checks.append(("soft", f"{label}: {frac:.1%} of cells within {SOFT_SIGMA:g} stderr (need 95%)",
                       frac >= 0.95))
    return Outcome(rows, checks)


def _fmt(x):
    return "" if x is None else repr(float(x))


def render_csv(experiment, seed, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in rows:
        writer.writerow([experiment, p.n, p.metric, _fmt(p.target), _fmt(p.value), _fmt(p.stderr), seed])
    return buf.getvalue()


def render_summary(cfg, checks):
    lines = [f"experiment: {cfg.experiment}", f"seed: {cfg.seed}", f"n: {','.join(map(str, cfg.n_list))}"]
    for level, desc, ok in checks:
        lines.append(f"{'PASS' if ok else 'FAIL'} [{level}] {desc}")
    hard_ok = all(ok for level, _, ok in checks if level == "hard")
    soft_ok = all(ok for level, _, ok in checks if level == "soft")
    lines.append(f"overall: {'PASS' if hard_ok else 'FAIL'} (soft checks {'pass' if soft_ok else 'have failures'})")
    return "\n".join(lines) + "\n"


def run(cfg):
    """Execute ``cfg``, write the CSV and summary, and return the exit status."""
    curve = None
    if cfg.experiment == "large-numbers":
        outcome = _run_large_numbers(cfg)
    elif cfg.experiment == "thin-numbers":
        outcome = _run_thin_numbers(cfg)
    elif cfg.experiment == "thin-processes":
        outcome, curve = _run_thin_processes(cfg)
    else:
        outcome = _run_verify_properties(cfg)

    try:
        with open(f"{cfg.out}.csv", "w", newline="") as fh:
            fh.write(render_csv(cfg.experiment, cfg.seed, outcome.rows))
        with open(f"{cfg.out}.summary.txt", "w") as fh:
            fh.write(render_summary(cfg, outcome.checks))
        if curve is not None and cfg.dump > 0:
            n = cfg.n_list[-1]
            batch = thinned_superposition_batch(cfg.process, n, cfg.dump, stream(cfg.seed, "dump", n))
            for j, pattern in enumerate(batch):
                with open(f"{cfg.out}.pattern{j}.txt", "w") as fh:
                    write_pattern(pattern, fh, cfg.window)
    except OSError as exc:
        print(f"thinlaw: cannot write output: {exc}", file=sys.stderr)
        return 3
    return 0 if all(ok for level, _, ok in outcome.checks if level == "hard") else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="thinlaw", description="Run a thinning-limit experiment.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="flat key=value file, or JSON if it ends in .json")
    parser.add_argument("--seed", help="master seed (unsigned 64-bit)")
    parser.add_argument("--out", help="output path prefix")
    parser.add_argument("pairs", nargs="*", metavar="key=value")
    args = parser.parse_intermixed_args(argv)

    try:
        raw = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    text = fh.read()
            except OSError as exc:
                print(f"thinlaw: cannot read config: {exc}", file=sys.stderr)
                return 3
            if args.config.endswith(".json"):
                raw.update(parse_structured(text, args.config))
            else:
                raw.update(parse_pairs(_tokenize(text), args.config))
        raw.update(parse_pairs(args.pairs, "command line"))
        if "experiment" in raw and raw["experiment"] != args.experiment:
            raise ConfigError(f"experiment: config says {raw['experiment']!r}, command says {args.experiment!r}")
        raw["experiment"] = args.experiment
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["out"] = args.out
        cfg = build_config(raw)
    except ConfigError as exc:
        print(f"thinlaw: invalid config: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
