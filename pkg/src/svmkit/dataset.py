"""Labeled sparse datasets: parsing, serialization, and deterministic k-fold splits.

The on-disk format is the widespread sparse text format, one record per line:

    <label> <index>:<value> <index>:<value> ...

Labels are integers, feature indices are 1-based and strictly increasing
within a record, and `#` starts a comment that runs to end of line.
Absent indices are implicit zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SparseVector = tuple[tuple[int, float], ...]
"""Sorted ((index, value), ...) pairs; indices 1-based, strictly increasing."""


class ParseError(ValueError):
    """Raised for malformed sparse-text input, carrying the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Sample:
    """One observation: sparse feature vector plus an integer class label."""

    features: SparseVector
    label: int

    def __post_init__(self) -> None:
        prev = 0
        for idx, val in self.features:
            if idx <= prev:
                raise ValueError(f"feature indices must be positive and strictly increasing, got {idx} after {prev}")
            if not math.isfinite(val):
                raise ValueError(f"feature {idx} has non-finite value {val!r}")
            prev = idx

    def dense(self, dimension: int) -> np.ndarray:
        """Features as a dense vector of length `dimension` (implicit zeros filled in)."""
        out = np.zeros(dimension)
        for idx, val in self.features:
            out[idx - 1] = val
        return out


@dataclass(frozen=True)
class Dataset:
    """Immutable ordered collection of samples.

    `dimension` is data-driven (largest feature index observed, at least 1) and
    `class_set` holds the distinct labels present, ascending.
    """

    samples: tuple[Sample, ...]
    dimension: int = field(init=False)
    class_set: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("empty dataset: at least one sample required")
        dim = max((s.features[-1][0] for s in self.samples if s.features), default=1)
        object.__setattr__(self, "dimension", max(dim, 1))
        object.__setattr__(self, "class_set", tuple(sorted({s.label for s in self.samples})))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(s.label for s in self.samples)

    def subset(self, indices) -> "Dataset":
        """New Dataset from the samples at `indices`, in the given order."""
        return Dataset(tuple(self.samples[i] for i in indices))


@dataclass(frozen=True)
class FoldPlan:
    """Per-sample fold assignments for k-fold cross-validation."""

    k: int
    assignments: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = [0] * self.k
        for a in self.assignments:
            if not 0 <= a < self.k:
                raise ValueError(f"fold id {a} outside [0, {self.k})")
            counts[a] += 1
        if min(counts) == 0:
            raise ValueError("every fold must be nonempty")
        if max(counts) - min(counts) > 1:
            raise ValueError("fold sizes may differ by at most 1")

    def fold_indices(self, fold: int) -> tuple[list[int], list[int]]:
        """(train_indices, held_out_indices) for one fold, in dataset order."""
        train = [i for i, a in enumerate(self.assignments) if a != fold]
        held = [i for i, a in enumerate(self.assignments) if a == fold]
        return train, held


def _parse_feature_token(line_no: int, token: str) -> tuple[int, float]:
    head, sep, tail = token.partition(":")
    if not sep:
        raise ParseError(line_no, f"expected <index>:<value>, got {token!r}")
    try:
        idx = int(head)
    except ValueError:
        raise ParseError(line_no, f"non-integer feature index {head!r}") from None
    try:
        val = float(tail)
    except ValueError:
        raise ParseError(line_no, f"non-numeric feature value {tail!r}") from None
    if idx <= 0:
        raise ParseError(line_no, f"feature index must be positive, got {idx}")
    if not math.isfinite(val):
        raise ParseError(line_no, f"non-finite feature value {tail!r}")
    return idx, val


def parse_sparse(text: str) -> Dataset:
    """Parse sparse-text records into a Dataset.

    Blank lines and `#` comments are ignored. Errors report the offending
    1-based line number; an input with no records at all is an error.
    """
    samples: list[Sample] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = int(tokens[0])
        except ValueError:
            raise ParseError(line_no, f"non-numeric label {tokens[0]!r}") from None
        features: list[tuple[int, float]] = []
        prev = 0
        for token in tokens[1:]:
            idx, val = _parse_feature_token(line_no, token)
            if idx <= prev:
                raise ParseError(line_no, f"feature indices not strictly increasing ({idx} after {prev})")
            features.append((idx, val))
            prev = idx
        samples.append(Sample(tuple(features), label))
    if not samples:
        raise ParseError(0, "empty dataset: no records found")
    return Dataset(tuple(samples))


def format_sparse(dataset: Dataset) -> str:
    """Serialize back to sparse text; reparsing yields an identical Dataset.

    Values use shortest round-trip decimals, fields are single-space separated.
    """
    lines = []
    for s in dataset.samples:
        parts = [str(s.label)]
        parts.extend(f"{idx}:{val!r}" for idx, val in s.features)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def split_kfold(dataset: Dataset, k: int, seed: int) -> FoldPlan:
    """Deterministic stratified k-fold assignment.

    Samples are grouped by class, each group is shuffled with a seeded RNG, and
    the concatenated order is dealt cyclically over folds. That keeps overall
    fold sizes within 1 of each other and each fold's class mix within 1 sample
    of proportional.
    """
    m = len(dataset)
    if k < 2:
        raise ValueError(f"fold count must be at least 2, got {k}")
    if k > m:
        raise ValueError(f"fold count {k} exceeds sample count {m}")
    rng = np.random.default_rng(seed)
    assignments = [0] * m
    position = 0
    for cls in dataset.class_set:
        members = [i for i, s in enumerate(dataset.samples) if s.label == cls]
        order = rng.permutation(len(members))
        for j in order:
            assignments[members[j]] = position % k
            position += 1
    return FoldPlan(k, tuple(assignments))
