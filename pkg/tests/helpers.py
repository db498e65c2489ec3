"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np

from svmkit.dataset import Dataset, Sample
from svmkit.kernels import KernelSpec, gram


def sample(label: int, *coords: float) -> Sample:
    """Dense coordinates -> sparse Sample (zeros dropped)."""
    features = tuple((i + 1, float(v)) for i, v in enumerate(coords) if v != 0.0)
    return Sample(features, label)


def two_point_dataset() -> Dataset:
    """x = (+1, 0) labeled +1 and x = (-1, 0) labeled -1."""
    return Dataset((sample(1, 1.0, 0.0), sample(-1, -1.0, 0.0)))


def xor_dataset() -> Dataset:
    """Unit-square corners labeled by the product of coordinate signs."""
    return Dataset((
        sample(1, 1.0, 1.0),
        sample(-1, 1.0, -1.0),
        sample(-1, -1.0, 1.0),
        sample(1, -1.0, -1.0),
    ))


def inseparable_dataset() -> Dataset:
    """The two-point problem duplicated with flipped labels: no separator exists."""
    return Dataset((
        sample(1, 1.0, 0.0),
        sample(-1, -1.0, 0.0),
        sample(-1, 1.0, 0.0),
        sample(1, -1.0, 0.0),
    ))


def blob_dataset(centers, n_per: int = 20, spread: float = 0.6, seed: int = 11) -> Dataset:
    """Gaussian blobs, one class per (label, center) entry."""
    rng = np.random.default_rng(seed)
    samples = []
    for label, center in centers:
        for _ in range(n_per):
            point = np.asarray(center, dtype=float) + rng.normal(0.0, spread, len(center))
            samples.append(sample(label, *point))
    return Dataset(tuple(samples))


def three_blob_dataset(seed: int = 11, n_per: int = 20) -> Dataset:
    """Three well-separated planar blobs, classes 1, 2, 3."""
    return blob_dataset([(1, (0.0, 0.0)), (2, (8.0, 0.0)), (3, (0.0, 8.0))], n_per=n_per, seed=seed)


def separable_binary_dataset(seed: int = 3, n_per: int = 10, gap: float = 4.0) -> Dataset:
    """Two linearly separable clouds labeled -1/+1."""
    return blob_dataset([(-1, (-gap / 2, 0.0)), (1, (gap / 2, 0.0))], n_per=n_per, spread=0.5, seed=seed)


def labels_array(dataset: Dataset) -> np.ndarray:
    return np.array([s.label for s in dataset.samples], dtype=float)


def random_dual_problem(rng: np.random.Generator, finite_c: bool):
    """Small random dual problem with both classes present.

    Finite-C cases use the linear kernel (the box keeps the dual bounded);
    hard-margin cases use an RBF kernel on well-separated points, whose
    strictly positive definite Gram makes the dual strictly concave and
    therefore bounded without the box.
    """
    from svmkit.dual_solver import DualProblem, HARD_MARGIN_C
    from svmkit.kernels import linear, rbf

    while True:
        m = int(rng.integers(2, 6))
        labels = rng.choice([-1.0, 1.0], size=m)
        if len(set(labels)) == 2:
            break
    while True:
        points = rng.uniform(0.0, 3.0, size=(m, 2))
        deltas = points[:, None, :] - points[None, :, :]
        dist = np.sqrt((deltas ** 2).sum(-1)) + np.eye(m)
        if dist.min() > 0.5:
            break
    samples = tuple(sample(int(l), *p) for l, p in zip(labels, points))
    dataset = Dataset(samples)
    if finite_c:
        kernel = linear()
        c = float(rng.choice([1.0, 10.0]))
    else:
        kernel = rbf(1.0)
        c = HARD_MARGIN_C
    return DualProblem(gram(kernel, dataset), labels, c), dataset
