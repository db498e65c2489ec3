"""Cross-validated accuracy and grid search over (C) and (C, gamma).

Every grid cell is scored against the same fold plan, so cells differ only in
hyper-parameters. Cells that fail to train are recorded with the -1 sentinel
accuracy and excluded from the argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import Dataset, FoldPlan, split_kfold
from .dual_solver import ConvergenceError, SolverConfig
from .kernels import linear, rbf
from .svc import TrainParams, predict_multiclass, train_multiclass

FAILED_CELL = -1.0

DEFAULT_C_LADDER = tuple(2.0 ** e for e in range(-5, 16, 2))
DEFAULT_GAMMA_LADDER = tuple(2.0 ** e for e in range(-15, 4, 2))


@dataclass(frozen=True)
class ParamGrid:
    C_values: tuple[float, ...]
    gamma_values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        for name, values in (("C", self.C_values), ("gamma", self.gamma_values)):
            if values is None:
                continue
            if not values:
                raise ValueError(f"{name} grid must be nonempty")
            if any(v <= 0 for v in values):
                raise ValueError(f"{name} values must be strictly positive")
            if list(values) != sorted(set(values)):
                raise ValueError(f"{name} values must be strictly increasing")


@dataclass(frozen=True)
class GridCell:
    C: float
    gamma: float | None
    accuracy: float


@dataclass(frozen=True)
class GridResult:
    cells: tuple[GridCell, ...]
    winner: GridCell
    fold_plan: FoldPlan


def cv_accuracy(
    dataset: Dataset,
    params: TrainParams,
    folds: FoldPlan,
    config: SolverConfig = SolverConfig(),
) -> float:
    """Mean held-out accuracy over folds (1 - held-out misclassification)."""
    per_fold = []
    for fold in range(folds.k):
        train_idx, held = folds.fold_indices(fold)
        remainder = dataset.subset(train_idx)
        if remainder.class_set != dataset.class_set:
            missing = set(dataset.class_set) - set(remainder.class_set)
            raise ValueError(f"fold {fold}: training remainder is missing classes {sorted(missing)}")
        model = train_multiclass(remainder, params, config)
        correct = sum(
            1 for i in held if predict_multiclass(model, dataset.samples[i].features) == dataset.samples[i].label
        )
        per_fold.append(correct / len(held))
    return sum(per_fold) / len(per_fold)


def _cell_params(kernel_kind: str, C: float, gamma: float | None) -> TrainParams:
    if kernel_kind == "linear":
        return TrainParams(linear(), C)
    if kernel_kind == "rbf":
        return TrainParams(rbf(gamma), C)
    raise ValueError(f"grid search supports kernel kinds 'linear' and 'rbf', got {kernel_kind!r}")


def grid_search(
    dataset: Dataset,
    grid: ParamGrid,
    kernel_kind: str,
    k: int,
    seed: int,
    config: SolverConfig = SolverConfig(),
) -> GridResult:
    """Score every (C[, gamma]) cell with one shared fold plan.

    The winner is the argmax accuracy; ties break to the smallest C, then the
    smallest gamma. Raises only if every cell failed.
    """
    if kernel_kind == "rbf" and grid.gamma_values is None:
        raise ValueError("rbf grid search requires gamma_values")
    gammas: tuple[float | None, ...] = grid.gamma_values if kernel_kind == "rbf" else (None,)
    folds = split_kfold(dataset, k, seed)
    cells = []
    for C in grid.C_values:
        for gamma in gammas:
            try:
                accuracy = cv_accuracy(dataset, _cell_params(kernel_kind, C, gamma), folds, config)
            except (ValueError, ConvergenceError):
                accuracy = FAILED_CELL
            cells.append(GridCell(C, gamma, accuracy))
    scored = [c for c in cells if c.accuracy != FAILED_CELL]
    if not scored:
        raise RuntimeError("every grid cell failed to train")
    winner = min(scored, key=lambda c: (-c.accuracy, c.C, c.gamma if c.gamma is not None else 0.0))
    return GridResult(cells=tuple(cells), winner=winner, fold_plan=folds)


def grid_csv(result: GridResult) -> str:
    """`C,gamma,accuracy` rows (gamma blank for linear cells)."""
    lines = ["C,gamma,accuracy"]
    for cell in result.cells:
        gamma = "" if cell.gamma is None else repr(cell.gamma)
        lines.append(f"{cell.C!r},{gamma},{cell.accuracy!r}")
    return "\n".join(lines) + "\n"
