import math

import numpy as np
import pytest

from helpers import sample, two_point_dataset
from svmkit.dataset import Dataset
from svmkit.kernels import (
    KernelSpec,
    eval_kernel,
    format_kernel_spec,
    gaussian,
    gram,
    linear,
    parse_kernel_spec,
    rbf,
    sparse_dot,
    sparse_sqdist,
)

# high-precision value of exp(-2), for rbf(gamma=0.5) at squared distance 4
EXP_MINUS_2 = 0.1353352832366126918939994949724844


def test_gaussian_zero_distance_is_one():
    x = ((1, 2.0), (4, -1.0))
    assert eval_kernel(gaussian(1.0), x, x) == 1.0


def test_linear_sparse_dot_by_hand():
    x = ((1, 2.0), (3, 1.0))
    x2 = ((3, 4.0),)
    assert eval_kernel(linear(), x, x2) == 4.0


def test_rbf_matches_high_precision_value():
    x = ((1, 1.0),)
    x2 = ((1, 3.0),)
    assert eval_kernel(rbf(0.5), x, x2) == pytest.approx(EXP_MINUS_2, rel=1e-12)


def test_sparse_helpers():
    a = ((1, 1.0), (2, 2.0))
    b = ((2, 2.0), (3, -3.0))
    assert sparse_dot(a, b) == 4.0
    assert sparse_sqdist(a, b) == 1.0 + 0.0 + 9.0
    assert sparse_sqdist(a, a) == 0.0


def test_gram_single_sample():
    ds = Dataset((sample(1, 1.0, 2.0),))
    g = gram(linear(), ds)
    assert g.entries.shape == (1, 1)
    assert g.entries[0, 0] == 5.0


def test_gram_orthonormal_pair():
    ds = Dataset((sample(1, 1.0, 0.0), sample(-1, 0.0, 1.0)))
    g = gram(linear(), ds)
    assert np.array_equal(g.entries, np.eye(2))


def test_gram_matches_pointwise_eval():
    rng = np.random.default_rng(3)
    samples = tuple(sample(1 if i % 2 else -1, *rng.normal(size=3)) for i in range(3))
    ds = Dataset(samples)
    g = gram(rbf(1.0), ds)
    for i in range(3):
        for j in range(3):
            assert g.entries[i, j] == eval_kernel(rbf(1.0), samples[i].features, samples[j].features)


def test_gram_symmetry_bit_exact():
    rng = np.random.default_rng(9)
    ds = Dataset(tuple(sample(1, *rng.normal(size=4)) for _ in range(6)))
    for spec in (linear(), gaussian(0.7), rbf(2.0)):
        g = gram(spec, ds).entries
        assert np.array_equal(g, g.T)


def test_gram_diagonal_exactly_one_for_distance_kernels():
    rng = np.random.default_rng(2)
    ds = Dataset(tuple(sample(1, *rng.normal(size=3)) for _ in range(5)))
    for spec in (gaussian(0.3), rbf(4.0)):
        assert np.all(np.diag(gram(spec, ds).entries) == 1.0)


def test_gram_positive_semidefinite_spot_check():
    rng = np.random.default_rng(17)
    points = rng.uniform(-2, 2, size=(6, 3))
    ds = Dataset(tuple(sample(1, *p) for p in points))
    for spec in (linear(), gaussian(1.1), rbf(0.4)):
        eigenvalues = np.linalg.eigvalsh(gram(spec, ds).entries)
        assert eigenvalues.min() >= -1e-9


def test_gaussian_equals_rbf_with_matching_scale():
    rng = np.random.default_rng(23)
    for _ in range(30):
        a = tuple((i + 1, float(v)) for i, v in enumerate(rng.normal(size=4)))
        b = tuple((i + 1, float(v)) for i, v in enumerate(rng.normal(size=4)))
        sigma = float(rng.uniform(0.3, 3.0))
        g = eval_kernel(gaussian(sigma), a, b)
        r = eval_kernel(rbf(1.0 / (2.0 * sigma * sigma)), a, b)
        assert g == pytest.approx(r, rel=1e-15)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec("gaussian", -1.0)
    with pytest.raises(ValueError):
        KernelSpec("rbf", 0.0)
    with pytest.raises(ValueError):
        KernelSpec("poly", 2.0)
    with pytest.raises(ValueError):
        KernelSpec("linear", 1.0)


def test_kernel_spec_text_round_trip():
    for spec in (linear(), gaussian(0.25), rbf(16.0), rbf(1.0 / 3.0)):
        assert parse_kernel_spec(format_kernel_spec(spec)) == spec
    assert parse_kernel_spec("rbf:1.0") == rbf(1.0)
    with pytest.raises(ValueError):
        parse_kernel_spec("gaussian")
    with pytest.raises(ValueError):
        parse_kernel_spec("rbf:abc")
    with pytest.raises(ValueError):
        parse_kernel_spec("linear:2")


def test_two_point_gram():
    g = gram(linear(), two_point_dataset())
    assert np.array_equal(g.entries, np.array([[1.0, -1.0], [-1.0, 1.0]]))
