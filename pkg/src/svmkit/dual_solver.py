"""Box-constrained dual QP: maximize sum(a) - 1/2 sum a_i a_j y_i y_j K_ij
subject to 0 <= a_i <= C and sum a_i y_i = 0.

`solve` performs sequential two-variable updates on the most violating pair,
which preserves the equality constraint by construction and ascends the
objective monotonically. `solve_bruteforce` is an independent oracle that
maximizes the same objective by multiscale grid search over the feasible
polytope. Hard margin is the C -> infinity limit, encoded by a large sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import Dataset
from .kernels import GramMatrix

HARD_MARGIN_C = 1e12
"""Box bound standing in for C = +infinity (hard margin)."""

_BRUTEFORCE_MAX_SAMPLES = 6


class ConvergenceError(RuntimeError):
    """Solver hit its iteration cap before meeting the KKT tolerance."""


@dataclass(frozen=True)
class DualProblem:
    gram: GramMatrix
    labels: np.ndarray
    C: float

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=float)
        if labels.ndim != 1 or len(labels) != len(self.gram):
            raise ValueError("labels must be a vector matching the Gram dimension")
        if not set(np.unique(labels)) <= {-1.0, 1.0}:
            raise ValueError("labels must be -1/+1")
        if not (np.any(labels > 0) and np.any(labels < 0)):
            raise ValueError("degenerate problem: both classes must be present")
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        object.__setattr__(self, "labels", labels)
        if math.isinf(self.C):
            object.__setattr__(self, "C", HARD_MARGIN_C)

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class SolverConfig:
    """Stopping controls. `max_iterations=None` selects 10000*m capped at 1e7."""

    tolerance: float = 1e-3
    max_iterations: int | None = None

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    def resolved_max_iterations(self, m: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return min(10_000 * m, 10_000_000)


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    b: float
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool


def dual_objective(alpha: np.ndarray, problem: DualProblem) -> float:
    """sum(a) - 1/2 * a'Qa with Q_ij = y_i y_j K_ij."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != problem.labels.shape:
        raise ValueError(f"alpha has shape {alpha.shape}, expected {problem.labels.shape}")
    ay = alpha * problem.labels
    return float(alpha.sum() - 0.5 * (ay @ problem.gram.entries @ ay))


def lagrangian(w, b: float, alpha, dataset: Dataset, labels) -> float:
    """Primal Lagrangian 1/2 ||w||^2 - sum a_i (y_i(<w, x_i> + b) - 1).

    Linear-kernel context only: w is an explicit dense weight vector over the
    dataset's feature dimensions.
    """
    w = np.asarray(w, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if len(w) != dataset.dimension:
        raise ValueError(f"w has length {len(w)}, dataset dimension is {dataset.dimension}")
    if len(alpha) != len(dataset) or len(labels) != len(dataset):
        raise ValueError("alpha and labels must match the dataset size")
    value = 0.5 * float(w @ w)
    for a_i, y_i, sample in zip(alpha, labels, dataset.samples):
        wx = sum(w[idx - 1] * val for idx, val in sample.features)
        value -= a_i * (y_i * (wx + b) - 1.0)
    return float(value)


def _selection(alpha: np.ndarray, y: np.ndarray, u: np.ndarray, C: float):
    """Most violating pair under the maximal-gradient-gap rule.

    F_i = y_i - u_i is the bias each sample "wants"; the up-set may still
    increase its contribution and the low-set decrease it. Ties resolve to the
    lowest index (first occurrence).
    """
    F = y - u
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    i = int(np.argmax(np.where(up, F, -np.inf)))
    j = int(np.argmin(np.where(low, F, np.inf)))
    gap = float(F[i] - F[j])
    return i, j, gap


def solve(
    problem: DualProblem,
    config: SolverConfig = SolverConfig(),
    on_step: Callable[[np.ndarray, float], None] | None = None,
) -> DualSolution:
    """Maximize the dual by repeated two-variable updates.

    Each accepted step moves the selected pair along the feasible direction
    (a_i += y_i*t, a_j -= y_j*t), clipped to the box, so sum a_i y_i = 0 and
    0 <= a <= C hold after every update. Returns the best iterate flagged
    non-converged if the iteration cap is reached.
    """
    m = len(problem)
    y = problem.labels
    K = problem.gram.entries
    C = problem.C
    if not np.all(np.isfinite(K)):
        raise ValueError("Gram matrix contains non-finite entries")

    alpha = np.zeros(m)
    u = np.zeros(m)  # u_i = sum_j a_j y_j K_ij
    gap = math.inf
    iterations = 0
    converged = False
    max_iter = config.resolved_max_iterations(m)

    while iterations < max_iter:
        i, j, gap = _selection(alpha, y, u, C)
        if gap <= config.tolerance:
            converged = True
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = gap / max(eta, 1e-12)
        # Box limits along the feasible direction for both coordinates.
        if y[i] > 0:
            hi = C - alpha[i]
        else:
            hi = alpha[i]
        if y[j] > 0:
            hi = min(hi, alpha[j])
        else:
            hi = min(hi, C - alpha[j])
        step = min(step, hi)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        u += step * (K[i] - K[j])
        iterations += 1
        if on_step is not None:
            on_step(alpha.copy(), dual_objective(alpha, problem))

    residual = max(gap, 0.0)
    b = _bias(alpha, y, u, C)
    alpha = alpha.copy()
    alpha.setflags(write=False)
    return DualSolution(
        alpha=alpha,
        b=b,
        objective=dual_objective(alpha, problem),
        kkt_residual=residual,
        iterations=iterations,
        converged=converged,
    )


def _bias(alpha: np.ndarray, y: np.ndarray, u: np.ndarray, C: float) -> float:
    """Bias recovery: average F over free vectors, else midpoint of the
    feasibility interval implied by the bound vectors."""
    F = y - u
    free = (alpha > 0.0) & (alpha < C * (1.0 - 1e-8))
    if np.any(free):
        return float(F[free].mean())
    at_c = alpha > C / 2
    lower = -math.inf
    upper = math.inf
    for k in range(len(alpha)):
        if (y[k] > 0) != at_c[k]:  # (y>0, at 0) or (y<0, at C): b >= F_k
            lower = max(lower, F[k])
        else:
            upper = min(upper, F[k])
    if math.isinf(lower):
        return float(upper)
    if math.isinf(upper):
        return float(lower)
    return (lower + upper) / 2.0


def bias_for(problem: DualProblem, alpha: np.ndarray) -> float:
    """Bias for an externally produced multiplier vector (oracle solutions)."""
    ay = np.asarray(alpha, dtype=float) * problem.labels
    u = problem.gram.entries @ ay
    return _bias(np.asarray(alpha, dtype=float), problem.labels, u, problem.C)


def kkt_report(solution: DualSolution, problem: DualProblem) -> np.ndarray:
    """Per-sample optimality violations under the three-case split.

    a=0 requires y f >= 1, free requires y f = 1, a=C requires y f <= 1;
    each entry is the amount by which its case's condition fails.
    """
    alpha = np.asarray(solution.alpha, dtype=float)
    if alpha.shape != problem.labels.shape:
        raise ValueError("solution does not match problem size")
    y = problem.labels
    C = problem.C
    f = problem.gram.entries @ (alpha * y) + solution.b
    margin = y * f
    zero_tol = 1e-8 * max(1.0, float(alpha.max(initial=0.0)))
    out = np.empty(len(alpha))
    for k in range(len(alpha)):
        if alpha[k] <= zero_tol:
            out[k] = max(0.0, 1.0 - margin[k])
        elif alpha[k] >= C * (1.0 - 1e-8):
            out[k] = max(0.0, margin[k] - 1.0)
        else:
            out[k] = abs(margin[k] - 1.0)
    return out


def solve_bruteforce(problem: DualProblem, resolution: int = 9) -> DualSolution:
    """Oracle maximization by multiscale grid search over the feasible set.

    One coordinate absorbs the equality constraint; the remaining m-1 are
    swept on a lattice that repeatedly zooms on the incumbent. The outer
    search box grows geometrically while the incumbent presses against it,
    which keeps hard-margin problems (huge C sentinel) tractable. Accuracy is
    resolution-dependent; intended for m <= 6 test problems.
    """
    m = len(problem)
    if m > _BRUTEFORCE_MAX_SAMPLES:
        raise ValueError(f"brute force limited to {_BRUTEFORCE_MAX_SAMPLES} samples, got {m}")
    if resolution < 3 or resolution % 2 == 0:
        raise ValueError("resolution must be an odd integer >= 3")
    y = problem.labels
    K = problem.gram.entries
    C = problem.C
    Q = np.outer(y, y) * K
    pivot = m - 1
    rest = list(range(m - 1))
    y_rest = y[rest]

    def batch_objective(A: np.ndarray) -> np.ndarray:
        return A.sum(axis=1) - 0.5 * np.einsum("ni,ij,nj->n", A, Q, A)

    def lattice_best(center: np.ndarray, half: float, box: float):
        axes = [
            np.linspace(max(0.0, center[d] - half), min(box, center[d] + half), resolution)
            for d in rest
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = np.stack([ax.ravel() for ax in mesh], axis=1)
        pivot_vals = -y[pivot] * (grid @ y_rest)
        ok = (pivot_vals >= -1e-12) & (pivot_vals <= box + 1e-12)
        candidates = np.concatenate([grid[ok], center[rest][None, :]], axis=0)
        pivots = np.concatenate([pivot_vals[ok], [center[pivot]]])
        A = np.empty((len(candidates), m))
        A[:, rest] = candidates
        A[:, pivot] = np.clip(pivots, 0.0, box)
        values = batch_objective(A)
        best = int(np.argmax(values))
        return A[best], float(values[best])

    best = np.zeros(m)
    best_value = 0.0
    box = min(C, 4.0)
    rounds = 0
    for _ in range(50):  # outer box expansions
        center, half = best, box
        for _ in range(60):  # zoom passes
            cand, value = lattice_best(center, half, box)
            rounds += 1
            if value > best_value:
                best, best_value = cand, value
            center = best
            step = 2.0 * half / (resolution - 1)
            half = 1.6 * step
            if half <= 1e-13 * max(1.0, box):
                break
        if box >= C or float(best.max()) < 0.95 * box:
            break
        box = min(16.0 * box, C)

    ay = best * y
    u = K @ ay
    _, _, gap = _selection(best, y, u, C)
    return DualSolution(
        alpha=best,
        b=_bias(best, y, u, C),
        objective=best_value,
        kkt_residual=max(gap, 0.0),
        iterations=rounds,
        converged=True,
    )
