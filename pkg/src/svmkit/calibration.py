"""Probability outputs for margin classifiers.

A sigmoid r = 1/(1 + exp(A*f + B)) is fitted to cross-validated decision
values by minimizing the negative log likelihood of smoothed targets
(positives (N+ + 1)/(N+ + 2), negatives 1/(N- + 2), which keeps the optimum
finite even on separable data). Pairwise probabilities are then coupled into
class posteriors by minimizing sum (r_ji p_i - r_ij p_j)^2 over the simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import Dataset, FoldPlan, Sample, SparseVector, split_kfold
from .dual_solver import ConvergenceError, SolverConfig
from .svc import (
    BinaryModel,
    MulticlassModel,
    TrainParams,
    decision_value,
    train_binary,
    train_multiclass,
)


@dataclass(frozen=True)
class SigmoidParams:
    A: float
    B: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.A) and math.isfinite(self.B)):
            raise ValueError("sigmoid parameters must be finite")


@dataclass(frozen=True)
class PairwiseProbMatrix:
    """r[i][j] ~ P(class i | class i or j, x) for i != j; r[j][i] = 1 - r[i][j]."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.entries, dtype=float)
        n, m = r.shape
        if n != m or n < 2:
            raise ValueError("pairwise matrix must be square with n >= 2")
        for i in range(n):
            for j in range(i + 1, n):
                if not (0.0 < r[i, j] < 1.0):
                    raise ValueError(f"r[{i}][{j}] = {r[i, j]} outside (0, 1)")
                if abs(r[i, j] + r[j, i] - 1.0) > 1e-9:
                    raise ValueError(f"r[{j}][{i}] must equal 1 - r[{i}][{j}]")
        object.__setattr__(self, "entries", r)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class ClassProbabilities:
    p: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(v < 0 for v in self.p):
            raise ValueError("probabilities must be nonnegative")
        if abs(sum(self.p) - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {sum(self.p)}")


def cv_decision_values(
    dataset: Dataset,
    params: TrainParams,
    folds: FoldPlan,
    config: SolverConfig = SolverConfig(),
) -> np.ndarray:
    """Per-sample decision values, each from a model trained without the
    sample's own fold. Dataset must be binary -1/+1."""
    values = np.zeros(len(dataset))
    for fold in range(folds.k):
        train_idx, held = folds.fold_indices(fold)
        remainder = dataset.subset(train_idx)
        if remainder.class_set != (-1, 1):
            raise ValueError(
                f"fold {fold}: training remainder has classes {remainder.class_set}, needs both -1 and +1"
            )
        try:
            model = train_binary(remainder, params, config)
        except ConvergenceError as exc:
            raise ConvergenceError(f"fold {fold}: {exc}") from exc
        for i in held:
            values[i] = decision_value(model, dataset.samples[i].features)
    return values


def _nll(a: float, b: float, v: np.ndarray, t: np.ndarray) -> float:
    z = a * v + b
    return float(np.sum(np.logaddexp(0.0, z) - (1.0 - t) * z))


def _inv_logit(z: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(z)) elementwise, overflow-free on both tails."""
    out = np.empty_like(z)
    pos = z >= 0
    ez = np.exp(-z[pos])
    out[pos] = ez / (1.0 + ez)
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


def fit_sigmoid(values, labels, max_iterations: int = 100, grad_tol: float = 1e-8) -> SigmoidParams:
    """Fit (A, B) by damped Newton descent with backtracking on the smoothed
    negative log likelihood. Requires both labels present."""
    v = np.asarray(values, dtype=float)
    y = np.asarray(labels, dtype=float)
    if v.shape != y.shape or len(v) < 2:
        raise ValueError("need matching values/labels with at least 2 entries")
    n_pos = int(np.sum(y > 0))
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("both labels must be present to fit a sigmoid")
    t = np.where(y > 0, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    a, b = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    fval = _nll(a, b, v, t)
    for _ in range(max_iterations):
        p = _inv_logit(a * v + b)
        g = np.array([(t - p) @ v, (t - p).sum()])
        if np.max(np.abs(g)) <= grad_tol:
            return SigmoidParams(a, b)
        w = p * (1.0 - p)
        damp = 1e-12
        h11 = float(w @ (v * v)) + damp
        h12 = float(w @ v)
        h22 = float(w.sum()) + damp
        det = h11 * h22 - h12 * h12
        da = -(h22 * g[0] - h12 * g[1]) / det
        db = -(h11 * g[1] - h12 * g[0]) / det
        descent = g[0] * da + g[1] * db  # negative for a descent direction
        step = 1.0
        while step >= 1e-12:
            trial = _nll(a + step * da, b + step * db, v, t)
            if trial <= fval + 1e-4 * step * descent:
                a, b, fval = a + step * da, b + step * db, trial
                break
            step /= 2.0
        else:
            break
    p = _inv_logit(a * v + b)
    if max(abs(float((t - p) @ v)), abs(float((t - p).sum()))) > grad_tol:
        raise ConvergenceError(f"sigmoid fit did not reach gradient tolerance {grad_tol}")
    return SigmoidParams(a, b)


def pairwise_prob(params: SigmoidParams, f: float) -> float:
    """1 / (1 + exp(A*f + B)), evaluated without overflow."""
    z = params.A * f + params.B
    if z >= 0:
        e = math.exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(z))


def couple(r: PairwiseProbMatrix) -> ClassProbabilities:
    """Class posteriors minimizing sum_{i != j} (r_ji p_i - r_ij p_j)^2 on the
    probability simplex.

    The quadratic is solved through its equality-constrained linear system;
    if any component comes out negative it is clamped out of the support and
    the reduced system re-solved.
    """
    n = r.n
    rm = r.entries
    Q = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                Q[i, i] = sum(rm[j2, i] ** 2 for j2 in range(n) if j2 != i)
            else:
                Q[i, j] = -rm[j, i] * rm[i, j]

    active = list(range(n))
    for _ in range(n):
        k = len(active)
        system = np.zeros((k + 1, k + 1))
        system[:k, :k] = 2.0 * Q[np.ix_(active, active)]
        system[:k, k] = 1.0
        system[k, :k] = 1.0
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0
        try:
            sol = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(system, rhs, rcond=None)[0]
        candidate = sol[:k]
        if np.all(candidate >= -1e-12):
            p = np.zeros(n)
            p[active] = np.clip(candidate, 0.0, None)
            p /= p.sum()
            return ClassProbabilities(tuple(float(x) for x in p))
        active.pop(int(np.argmin(candidate)))
    raise RuntimeError("pairwise coupling failed to find a feasible solution")


def predict_proba(model: MulticlassModel, x: SparseVector) -> ClassProbabilities:
    """Couple every machine's calibrated pairwise probability at x.

    Requires fitted sigmoid parameters on all machines. Saturated sigmoid
    outputs are nudged inside (0, 1) so the coupling matrix stays valid.
    """
    classes = model.classes
    index = {c: i for i, c in enumerate(classes)}
    n = len(classes)
    eps = 1e-12
    rm = np.full((n, n), 0.5)
    for machine in model.machines:
        if machine.sigmoid is None:
            raise ValueError(f"machine {machine.label_pair} has no fitted sigmoid parameters")
        i, j = index[machine.label_pair[0]], index[machine.label_pair[1]]
        r_ij = min(max(pairwise_prob(machine.sigmoid, decision_value(machine, x)), eps), 1.0 - eps)
        rm[i, j] = r_ij
        rm[j, i] = 1.0 - r_ij
    return couple(PairwiseProbMatrix(rm))


def calibrate_multiclass(
    model: MulticlassModel,
    dataset: Dataset,
    params: TrainParams,
    config: SolverConfig = SolverConfig(),
    k: int = 5,
    seed: int = 0,
) -> MulticlassModel:
    """Copy of `model` with per-pair sigmoids fitted on k-fold cross-validated
    decision values of each pair's sub-dataset."""
    machines = []
    for machine in model.machines:
        a, b = machine.label_pair
        pair_samples = tuple(
            Sample(s.features, 1 if s.label == a else -1)
            for s in dataset.samples
            if s.label in (a, b)
        )
        pair_dataset = Dataset(pair_samples)
        folds = split_kfold(pair_dataset, k, seed)
        values = cv_decision_values(pair_dataset, params, folds, config)
        sigmoid = fit_sigmoid(values, np.array([s.label for s in pair_samples], dtype=float))
        machines.append(replace(machine, sigmoid=sigmoid))
    return MulticlassModel(model.classes, tuple(machines))


def train_calibrated(
    dataset: Dataset,
    params: TrainParams,
    config: SolverConfig = SolverConfig(),
    k: int = 5,
    seed: int = 0,
) -> MulticlassModel:
    """Train one-against-one machines and fit their probability sigmoids."""
    model = train_multiclass(dataset, params, config)
    return calibrate_multiclass(model, dataset, params, config, k=k, seed=seed)
