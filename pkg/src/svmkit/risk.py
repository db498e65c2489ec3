"""Empirical risk, capacity-based generalization bounds, shattering
experiments, and bound-minimizing model selection.

The bound's log is the natural logarithm (the convention in the capacity
literature; the formula does not pin a base). A negative radicand is reported
as an error rather than clamped: it signals an out-of-regime query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .dataset import Dataset, Sample
from .dual_solver import ConvergenceError, HARD_MARGIN_C, SolverConfig
from .kernels import linear
from .svc import TrainParams, decision_value, train_binary

Separator = Callable[[Dataset], bool]
"""Predicate: can this -1/+1 dataset be realized with zero training errors?"""

MAX_SHATTER_POINTS = 20

#: Iteration budget for one separability probe. An inseparable labeling makes
#: the hard-margin dual unbounded, so the probe can only hit this cap; the
#: iteration count on separable data grows like 1/margin^2, so the cap doubles
#: as a margin floor (~7e-3 on unit-scale points). Configurations that thin
#: are reported inseparable.
SEPARABILITY_PROBE = SolverConfig(tolerance=1e-3, max_iterations=5000)


@dataclass(frozen=True)
class RiskBoundQuery:
    r_emp: float
    h: int
    m: int
    eta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.r_emp <= 1.0:
            raise ValueError(f"empirical risk must lie in [0, 1], got {self.r_emp}")
        if self.h < 1:
            raise ValueError(f"capacity h must be a positive integer, got {self.h}")
        if self.m < 1:
            raise ValueError(f"sample count must be positive, got {self.m}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")


@dataclass(frozen=True)
class RiskBoundReport:
    query: RiskBoundQuery
    vc_confidence: float
    bound: float


@dataclass(frozen=True)
class MachineCandidate:
    label: str
    h: int
    r_emp: float


def empirical_risk(predictions: Sequence[int], labels: Sequence[int]) -> float:
    """Misclassification fraction (1/2m) sum |y_i - f_i| over -1/+1 vectors."""
    if len(predictions) != len(labels):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(labels)} labels")
    if len(labels) == 0:
        raise ValueError("need at least one sample")
    m = len(labels)
    return sum(abs(y - f) for y, f in zip(labels, predictions)) / (2.0 * m)


def vc_confidence(h: int, m: int, eta: float) -> float:
    """sqrt((h*(ln(2m/h) + 1) - ln(eta/4)) / m)."""
    RiskBoundQuery(0.0, h, m, eta)  # reuse the validation
    radicand = (h * (math.log(2.0 * m / h) + 1.0) - math.log(eta / 4.0)) / m
    if radicand < 0.0:
        raise ValueError(
            f"confidence term undefined: radicand {radicand:.6g} is negative for (h={h}, m={m}, eta={eta})"
        )
    return math.sqrt(radicand)


def risk_bound(query: RiskBoundQuery) -> RiskBoundReport:
    confidence = vc_confidence(query.h, query.m, query.eta)
    return RiskBoundReport(query=query, vc_confidence=confidence, bound=query.r_emp + confidence)


def srm_select(candidates: Sequence[MachineCandidate], m: int, eta: float) -> int:
    """Index of the candidate with the lowest risk bound.

    Ties break to the smaller capacity h, then to the lower list index.
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    scored = [
        (risk_bound(RiskBoundQuery(c.r_emp, c.h, m, eta)).bound, c.h, i)
        for i, c in enumerate(candidates)
    ]
    return min(scored)[2]


def _points_to_samples(points: Sequence[Sequence[float]], labels: Sequence[int]) -> tuple[Sample, ...]:
    samples = []
    for point, label in zip(points, labels):
        features = tuple((i + 1, float(v)) for i, v in enumerate(point) if float(v) != 0.0)
        samples.append(Sample(features, label))
    return tuple(samples)


def hard_margin_separates(dataset: Dataset) -> bool:
    """Default separability oracle: hard-margin linear training with zero
    training errors at tolerance 1e-6. Non-convergence counts as inseparable
    (the probe's iteration budget is the documented caveat)."""
    try:
        model = train_binary(dataset, TrainParams(linear(), HARD_MARGIN_C), SEPARABILITY_PROBE)
    except ConvergenceError:
        return False
    return all(s.label * decision_value(model, s.features) > 1e-6 for s in dataset.samples)


def linearly_separable(points: Sequence[Sequence[float]], labels: Sequence[int],
                       separator: Separator | None = None) -> bool:
    """Can some function in the class assign exactly these labels?

    Single-class labelings are always realizable (constant classifiers are in
    the class: w = 0 with the bias carrying the sign).
    """
    if len(points) != len(labels):
        raise ValueError("points/labels length mismatch")
    label_set = set(labels)
    if not label_set <= {-1, 1}:
        raise ValueError(f"labels must be -1/+1, got {sorted(label_set)}")
    if len(label_set) < 2:
        return True
    check = separator if separator is not None else hard_margin_separates
    return check(Dataset(_points_to_samples(points, labels)))


def is_shattered(points: Sequence[Sequence[float]], separator: Separator | None = None) -> bool:
    """True iff every one of the 2^n labelings of `points` is realizable.

    Labelings come in complementary pairs realizable together (negate the
    function), so only 2^(n-1) are checked, most balanced first: those are
    the likeliest to fail, which keeps the common non-shatterable case cheap.
    """
    n = len(points)
    if not 1 <= n <= MAX_SHATTER_POINTS:
        raise ValueError(f"point count must be in [1, {MAX_SHATTER_POINTS}], got {n}")
    labelings = [(1,) + rest for rest in product((1, -1), repeat=n - 1)]
    labelings.sort(key=lambda ls: abs(sum(ls)))
    return all(linearly_separable(points, labeling, separator) for labeling in labelings)


PointGenerator = Callable[[np.random.Generator, int], list[tuple[float, ...]]]


def uniform_point_generator(dimension: int) -> PointGenerator:
    """Points drawn uniformly from the unit cube (general position a.s.)."""

    def generate(rng: np.random.Generator, size: int) -> list[tuple[float, ...]]:
        return [tuple(rng.uniform(0.0, 1.0, dimension)) for _ in range(size)]

    return generate


def collinear_point_generator(dimension: int) -> PointGenerator:
    """Distinct points forced onto one random line through the cube."""

    def generate(rng: np.random.Generator, size: int) -> list[tuple[float, ...]]:
        direction = rng.normal(size=dimension)
        direction /= np.linalg.norm(direction)
        origin = rng.uniform(0.0, 1.0, dimension)
        offsets = np.sort(rng.uniform(0.0, 1.0, size)) + np.arange(size) * 1e-3
        return [tuple(origin + t * direction) for t in offsets]

    return generate


def vc_dimension_bruteforce(
    dimension: int,
    max_points: int,
    trials: int = 200,
    seed: int = 0,
    point_generator: PointGenerator | None = None,
    separator: Separator | None = None,
) -> int:
    """Largest size s <= max_points for which some tested configuration of s
    points is shattered (the capacity definition is existential: one witness
    configuration suffices).

    Sampling-based: every size gets `trials` random configurations, stopping
    early at the first shattered one.
    """
    if not 1 <= dimension <= 3:
        raise ValueError(f"dimension must be in [1, 3], got {dimension}")
    if not 1 <= max_points <= 8:
        raise ValueError(f"max_points must be in [1, 8], got {max_points}")
    if trials < 1:
        raise ValueError("need at least one trial per size")
    generate = point_generator if point_generator is not None else uniform_point_generator(dimension)
    rng = np.random.default_rng(seed)
    best = 0
    for size in range(1, max_points + 1):
        for _ in range(trials):
            if is_shattered(generate(rng, size), separator):
                best = size
                break
    return best


def bound_curve(r_emp: float, m: int, eta: float, h_range: Sequence[int]) -> list[tuple[int, float, float]]:
    """(h, vc_confidence, bound) rows over a capacity range."""
    rows = []
    for h in h_range:
        report = risk_bound(RiskBoundQuery(r_emp, h, m, eta))
        rows.append((h, report.vc_confidence, report.bound))
    return rows


def bound_curve_csv(rows: Sequence[tuple[int, float, float]]) -> str:
    lines = ["h,vc_confidence,bound"]
    lines.extend(f"{h},{conf!r},{bound!r}" for h, conf, bound in rows)
    return "\n".join(lines) + "\n"
