"""Kernel functions and Gram matrix construction.

Supported kernels: `linear` (sparse dot product), `gaussian(sigma)` and
`rbf(gamma)`, both computing exp(-scale * ||x - x'||^2) with scale = 1/(2 sigma^2)
or gamma respectively. Note the negative exponent: a positive one would be
unbounded and is not a valid similarity measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, SparseVector

LINEAR = "linear"
GAUSSIAN = "gaussian"
RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel choice. Use the `linear()`, `gaussian()`, `rbf()` helpers."""

    kind: str
    param: float | None = None

    def __post_init__(self) -> None:
        if self.kind == LINEAR:
            if self.param is not None:
                raise ValueError("linear kernel takes no parameter")
        elif self.kind in (GAUSSIAN, RBF):
            if self.param is None or not (self.param > 0) or not math.isfinite(self.param):
                raise ValueError(f"{self.kind} kernel requires a positive finite parameter, got {self.param!r}")
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    @property
    def scale(self) -> float:
        """Coefficient on the squared distance in the exponent."""
        if self.kind == GAUSSIAN:
            return 1.0 / (2.0 * self.param * self.param)
        if self.kind == RBF:
            return self.param
        raise ValueError("linear kernel has no distance scale")


def linear() -> KernelSpec:
    return KernelSpec(LINEAR)


def gaussian(sigma: float) -> KernelSpec:
    return KernelSpec(GAUSSIAN, sigma)


def rbf(gamma: float) -> KernelSpec:
    return KernelSpec(RBF, gamma)


def parse_kernel_spec(text: str) -> KernelSpec:
    """Parse the text encoding: `linear`, `gaussian:<sigma>`, `rbf:<gamma>`."""
    kind, sep, arg = text.strip().partition(":")
    if kind == LINEAR:
        if sep:
            raise ValueError("linear kernel takes no parameter")
        return KernelSpec(LINEAR)
    if kind in (GAUSSIAN, RBF):
        if not sep or not arg:
            raise ValueError(f"{kind} kernel needs a parameter, e.g. {kind}:1.0")
        try:
            param = float(arg)
        except ValueError:
            raise ValueError(f"bad kernel parameter {arg!r}") from None
        return KernelSpec(kind, param)
    raise ValueError(f"unknown kernel {text!r}")


def format_kernel_spec(spec: KernelSpec) -> str:
    if spec.kind == LINEAR:
        return LINEAR
    return f"{spec.kind}:{spec.param!r}"


def sparse_dot(a: SparseVector, b: SparseVector) -> float:
    """Dot product over the sorted index intersection."""
    total = 0.0
    i = j = 0
    while i < len(a) and j < len(b):
        ia, ib = a[i][0], b[j][0]
        if ia == ib:
            total += a[i][1] * b[j][1]
            i += 1
            j += 1
        elif ia < ib:
            i += 1
        else:
            j += 1
    return total


def sparse_sqdist(a: SparseVector, b: SparseVector) -> float:
    """Squared Euclidean distance via a merged traversal of the sorted indices.

    Computed directly from per-coordinate differences, never as
    k(a,a)+k(b,b)-2k(a,b), to avoid cancellation on near-duplicate points.
    """
    total = 0.0
    i = j = 0
    while i < len(a) and j < len(b):
        ia, ib = a[i][0], b[j][0]
        if ia == ib:
            d = a[i][1] - b[j][1]
            i += 1
            j += 1
        elif ia < ib:
            d = a[i][1]
            i += 1
        else:
            d = b[j][1]
            j += 1
        total += d * d
    while i < len(a):
        total += a[i][1] * a[i][1]
        i += 1
    while j < len(b):
        total += b[j][1] * b[j][1]
        j += 1
    return total


def eval_kernel(spec: KernelSpec, a: SparseVector, b: SparseVector) -> float:
    """k(a, b) for the given kernel."""
    if spec.kind == LINEAR:
        return sparse_dot(a, b)
    return math.exp(-spec.scale * sparse_sqdist(a, b))


@dataclass(frozen=True)
class GramMatrix:
    """Dense m x m matrix of pairwise kernel values over one dataset.

    Each unordered pair is evaluated once and mirrored, so symmetry is
    bit-exact. Treat as immutable.
    """

    entries: np.ndarray
    kernel: KernelSpec

    def __post_init__(self) -> None:
        n, m = self.entries.shape
        if n != m:
            raise ValueError("Gram matrix must be square")

    def __len__(self) -> int:
        return self.entries.shape[0]


def gram(spec: KernelSpec, dataset: Dataset) -> GramMatrix:
    """Gram matrix K[i][j] = k(x_i, x_j) for all sample pairs."""
    m = len(dataset)
    entries = np.empty((m, m))
    feats = [s.features for s in dataset.samples]
    for i in range(m):
        for j in range(i, m):
            v = eval_kernel(spec, feats[i], feats[j])
            entries[i, j] = v
            entries[j, i] = v
    entries.setflags(write=False)
    return GramMatrix(entries, spec)
