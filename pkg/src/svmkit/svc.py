"""Margin classifiers on top of the dual solver.

Binary training keeps only the samples with nonzero multipliers (the support
vectors) together with signed coefficients y_i*a_i and the recovered bias.
Multiclass uses one-against-one: one binary machine per unordered class pair,
the numerically smaller class id playing +1. Models persist as line-oriented
text with lossless hex-encoded reals and a trailing checksum.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from itertools import combinations
from typing import TYPE_CHECKING

import numpy as np

from .dataset import Dataset, Sample, SparseVector
from .dual_solver import (
    ConvergenceError,
    DualProblem,
    DualSolution,
    HARD_MARGIN_C,
    SolverConfig,
    bias_for,
    solve,
)
from .kernels import KernelSpec, eval_kernel, format_kernel_spec, gram, parse_kernel_spec

if TYPE_CHECKING:
    from .calibration import SigmoidParams

MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Malformed, corrupted, or wrong-version model text."""


@dataclass(frozen=True)
class TrainParams:
    kernel: KernelSpec
    C: float

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if math.isinf(self.C):
            object.__setattr__(self, "C", HARD_MARGIN_C)


@dataclass(frozen=True)
class TrainingDiagnostics:
    """Per-sample slack values (training order) and solver summary."""

    slacks: tuple[float, ...]
    support_vector_count: int
    iterations: int
    kkt_residual: float


@dataclass(frozen=True)
class BinaryModel:
    support_vectors: tuple[SparseVector, ...]
    coefficients: tuple[float, ...]
    bias: float
    kernel: KernelSpec
    label_pair: tuple[int, int]
    sigmoid: "SigmoidParams | None" = None
    diagnostics: TrainingDiagnostics | None = None

    def __post_init__(self) -> None:
        if not self.coefficients:
            raise ValueError("model must have at least one support vector")
        if len(self.coefficients) != len(self.support_vectors):
            raise ValueError("coefficient/support-vector count mismatch")
        if any(c == 0.0 for c in self.coefficients):
            raise ValueError("support-vector coefficients must be nonzero")
        total = abs(sum(self.coefficients))
        if total > 1e-9 * sum(abs(c) for c in self.coefficients):
            raise ValueError("coefficients must balance: sum y_i a_i = 0")
        if self.label_pair[0] == self.label_pair[1]:
            raise ValueError("label pair must name two distinct classes")
        if self.diagnostics is not None and any(s < 0 for s in self.diagnostics.slacks):
            raise ValueError("slack values must be nonnegative")


@dataclass(frozen=True)
class MulticlassModel:
    classes: tuple[int, ...]
    machines: tuple[BinaryModel, ...]

    def __post_init__(self) -> None:
        n = len(self.classes)
        if n < 2:
            raise ValueError("multiclass model needs at least two classes")
        if list(self.classes) != sorted(set(self.classes)):
            raise ValueError("classes must be distinct and ascending")
        if len(self.machines) != n * (n - 1) // 2:
            raise ValueError(f"expected {n * (n - 1) // 2} pairwise machines, got {len(self.machines)}")

    def machine_for(self, a: int, b: int) -> BinaryModel:
        for machine in self.machines:
            if machine.label_pair == (a, b):
                return machine
        raise KeyError(f"no machine for pair ({a}, {b})")


def compute_bias(solution: DualSolution, problem: DualProblem) -> float:
    """Recover b from a converged solution: mean of y_i - sum_j a_j y_j K_ij over
    free vectors, or the midpoint of the interval the bound vectors imply."""
    if len(solution.alpha) == 0:
        raise ValueError("empty solution")
    return bias_for(problem, solution.alpha)


def _train_pair(samples: tuple[Sample, ...], params: TrainParams, config: SolverConfig,
                label_pair: tuple[int, int]) -> BinaryModel:
    dataset = Dataset(samples)
    y = np.array([s.label for s in dataset.samples], dtype=float)
    problem = DualProblem(gram(params.kernel, dataset), y, params.C)
    solution = solve(problem, config)
    if not solution.converged:
        raise ConvergenceError(
            f"solver hit the iteration cap ({solution.iterations} iterations, "
            f"kkt residual {solution.kkt_residual:.3g})"
        )
    f = problem.gram.entries @ (solution.alpha * y) + solution.b
    slacks = tuple(max(0.0, 1.0 - float(y[i] * f[i])) for i in range(len(y)))
    kept = [i for i in range(len(y)) if solution.alpha[i] > 0.0]
    model = BinaryModel(
        support_vectors=tuple(dataset.samples[i].features for i in kept),
        coefficients=tuple(float(y[i] * solution.alpha[i]) for i in kept),
        bias=solution.b,
        kernel=params.kernel,
        label_pair=label_pair,
        diagnostics=TrainingDiagnostics(
            slacks=slacks,
            support_vector_count=len(kept),
            iterations=solution.iterations,
            kkt_residual=solution.kkt_residual,
        ),
    )
    return model


def train_binary(dataset: Dataset, params: TrainParams, config: SolverConfig = SolverConfig()) -> BinaryModel:
    """Train a -1/+1 classifier; the label set must be exactly {-1, +1}."""
    if dataset.class_set != (-1, 1):
        raise ValueError(f"binary training requires labels exactly {{-1, +1}}, got {dataset.class_set}")
    return _train_pair(dataset.samples, params, config, (1, -1))


def decision_value(model: BinaryModel, x: SparseVector) -> float:
    """sum_i coeff_i * k(x, sv_i) + b."""
    total = 0.0
    for coeff, sv in zip(model.coefficients, model.support_vectors):
        total += coeff * eval_kernel(model.kernel, x, sv)
    return total + model.bias


def predict(model: BinaryModel, x: SparseVector) -> int:
    """Positive class on decision_value >= 0 (ties go positive)."""
    return model.label_pair[0] if decision_value(model, x) >= 0.0 else model.label_pair[1]


def primal_from_dual(model: BinaryModel, dimension: int | None = None) -> np.ndarray:
    """Explicit weight vector w = sum_i coeff_i * sv_i. Linear kernels only."""
    if model.kernel.kind != "linear":
        raise ValueError("explicit weights exist only for the linear kernel")
    dim = dimension or max((sv[-1][0] for sv in model.support_vectors if sv), default=1)
    w = np.zeros(dim)
    for coeff, sv in zip(model.coefficients, model.support_vectors):
        for idx, val in sv:
            w[idx - 1] += coeff * val
    return w


def train_multiclass(dataset: Dataset, params: TrainParams, config: SolverConfig = SolverConfig()) -> MulticlassModel:
    """One-against-one training over every unordered class pair."""
    classes = dataset.class_set
    if len(classes) < 2:
        raise ValueError(f"need at least two classes, got {classes}")
    machines = []
    for a, b in combinations(classes, 2):
        pair_samples = tuple(
            Sample(s.features, 1 if s.label == a else -1)
            for s in dataset.samples
            if s.label in (a, b)
        )
        try:
            machines.append(_train_pair(pair_samples, params, config, (a, b)))
        except (ValueError, ConvergenceError) as exc:
            raise type(exc)(f"training failed for class pair ({a}, {b}): {exc}") from exc
    return MulticlassModel(classes=classes, machines=tuple(machines))


def predict_multiclass(model: MulticlassModel, x: SparseVector) -> int:
    """Majority vote over pairwise machines; ties break to the lowest class id."""
    votes = {c: 0 for c in model.classes}
    for machine in model.machines:
        votes[predict(machine, x)] += 1
    return min(model.classes, key=lambda c: (-votes[c], c))


# --- persistence -----------------------------------------------------------
#
# Fixed line order:
#   svmmodel v1
#   kernel <spec>
#   labels <pos> <neg>          (binary)   |  classes <c1> <c2> ...  (multiclass)
#                                          |  machine <a> <b>   per pair
#   <coeff_hex> <idx>:<val_hex> ...        one line per support vector
#   bias <hex>
#   sigmoid <A_hex> <B_hex>                optional
#   checksum <sha256 hex>

def _hex(value: float) -> str:
    return float(value).hex()


def _from_hex(token: str, context: str) -> float:
    try:
        return float.fromhex(token)
    except ValueError:
        raise ModelFormatError(f"bad {context} value {token!r}") from None


def _machine_lines(model: BinaryModel) -> list[str]:
    lines = []
    for coeff, sv in zip(model.coefficients, model.support_vectors):
        parts = [_hex(coeff)]
        parts.extend(f"{idx}:{_hex(val)}" for idx, val in sv)
        lines.append(" ".join(parts))
    lines.append(f"bias {_hex(model.bias)}")
    if model.sigmoid is not None:
        lines.append(f"sigmoid {_hex(model.sigmoid.A)} {_hex(model.sigmoid.B)}")
    return lines


def save_model(model: BinaryModel | MulticlassModel) -> str:
    lines = [f"svmmodel v{MODEL_FORMAT_VERSION}"]
    if isinstance(model, BinaryModel):
        lines.append(f"kernel {format_kernel_spec(model.kernel)}")
        lines.append(f"labels {model.label_pair[0]} {model.label_pair[1]}")
        lines.extend(_machine_lines(model))
    elif isinstance(model, MulticlassModel):
        lines.append(f"kernel {format_kernel_spec(model.machines[0].kernel)}")
        lines.append("classes " + " ".join(str(c) for c in model.classes))
        for machine in model.machines:
            lines.append(f"machine {machine.label_pair[0]} {machine.label_pair[1]}")
            lines.extend(_machine_lines(machine))
    else:
        raise TypeError(f"cannot save {type(model).__name__}")
    payload = "\n".join(lines) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    return payload + f"checksum {digest}\n"


def _parse_sv_line(line: str) -> tuple[float, SparseVector]:
    tokens = line.split()
    coeff = _from_hex(tokens[0], "coefficient")
    features = []
    prev = 0
    for token in tokens[1:]:
        head, sep, tail = token.partition(":")
        if not sep:
            raise ModelFormatError(f"bad support-vector feature {token!r}")
        try:
            idx = int(head)
        except ValueError:
            raise ModelFormatError(f"bad feature index {head!r}") from None
        if idx <= prev:
            raise ModelFormatError(f"feature indices not strictly increasing in {line!r}")
        features.append((idx, _from_hex(tail, "feature")))
        prev = idx
    return coeff, tuple(features)


class _LineReader:
    def __init__(self, lines: list[str]):
        self.lines = lines
        self.pos = 0

    def peek(self) -> str | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def next(self, context: str) -> str:
        line = self.peek()
        if line is None:
            raise ModelFormatError(f"unexpected end of model while reading {context}")
        self.pos += 1
        return line


def _read_machine_body(reader: _LineReader, kernel: KernelSpec, label_pair: tuple[int, int]) -> BinaryModel:
    from .calibration import SigmoidParams

    svs: list[SparseVector] = []
    coeffs: list[float] = []
    while True:
        line = reader.next("support vectors")
        if line.startswith("bias "):
            bias = _from_hex(line.split()[1], "bias")
            break
        coeff, features = _parse_sv_line(line)
        coeffs.append(coeff)
        svs.append(features)
    sigmoid = None
    nxt = reader.peek()
    if nxt is not None and nxt.startswith("sigmoid "):
        parts = reader.next("sigmoid").split()
        if len(parts) != 3:
            raise ModelFormatError(f"malformed sigmoid line {nxt!r}")
        sigmoid = SigmoidParams(_from_hex(parts[1], "sigmoid A"), _from_hex(parts[2], "sigmoid B"))
    try:
        return BinaryModel(tuple(svs), tuple(coeffs), bias, kernel, label_pair, sigmoid=sigmoid)
    except ValueError as exc:
        raise ModelFormatError(f"invalid model content: {exc}") from exc


def load_model(text: str) -> BinaryModel | MulticlassModel:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines or not lines[-1].startswith("checksum "):
        raise ModelFormatError("missing checksum line")
    payload = "\n".join(lines[:-1]) + "\n"
    digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    stated = lines[-1].split()[1] if len(lines[-1].split()) == 2 else ""
    if stated != digest:
        raise ModelFormatError("checksum mismatch: model text is corrupted")

    reader = _LineReader(lines[:-1])
    header = reader.next("header")
    if header != f"svmmodel v{MODEL_FORMAT_VERSION}":
        if header.startswith("svmmodel v"):
            raise ModelFormatError(
                f"unsupported model version {header.removeprefix('svmmodel v')!r}, "
                f"this reader supports version {MODEL_FORMAT_VERSION}"
            )
        raise ModelFormatError(f"not a model file (header {header!r})")
    kernel_line = reader.next("kernel")
    if not kernel_line.startswith("kernel "):
        raise ModelFormatError(f"expected kernel line, got {kernel_line!r}")
    try:
        kernel = parse_kernel_spec(kernel_line.removeprefix("kernel "))
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc

    head = reader.next("label declaration")
    if head.startswith("labels "):
        try:
            pos, neg = (int(t) for t in head.split()[1:])
        except ValueError:
            raise ModelFormatError(f"malformed labels line {head!r}") from None
        model: BinaryModel | MulticlassModel = _read_machine_body(reader, kernel, (pos, neg))
    elif head.startswith("classes "):
        try:
            classes = tuple(int(t) for t in head.split()[1:])
        except ValueError:
            raise ModelFormatError(f"malformed classes line {head!r}") from None
        machines = []
        for a, b in combinations(classes, 2):
            mline = reader.next("machine header")
            if mline != f"machine {a} {b}":
                raise ModelFormatError(f"expected 'machine {a} {b}', got {mline!r}")
            machines.append(_read_machine_body(reader, kernel, (a, b)))
        try:
            model = MulticlassModel(classes, tuple(machines))
        except ValueError as exc:
            raise ModelFormatError(f"invalid model content: {exc}") from exc
    else:
        raise ModelFormatError(f"expected labels or classes line, got {head!r}")
    if reader.peek() is not None:
        raise ModelFormatError(f"trailing content after model body: {reader.peek()!r}")
    return model


def with_sigmoid(model: BinaryModel, sigmoid: "SigmoidParams") -> BinaryModel:
    return replace(model, sigmoid=sigmoid)
