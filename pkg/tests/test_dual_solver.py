import math
from dataclasses import replace

import numpy as np
import pytest

from helpers import (
    inseparable_dataset,
    labels_array,
    random_dual_problem,
    two_point_dataset,
    xor_dataset,
)
from svmkit.dataset import Dataset
from svmkit.dual_solver import (
    ConvergenceError,
    DualProblem,
    HARD_MARGIN_C,
    SolverConfig,
    dual_objective,
    kkt_report,
    lagrangian,
    solve,
    solve_bruteforce,
)
from svmkit.kernels import gram, linear, rbf


def _problem(dataset, kernel, c):
    return DualProblem(gram(kernel, dataset), labels_array(dataset), c)


def two_point_problem(c=HARD_MARGIN_C):
    return _problem(two_point_dataset(), linear(), c)


def naive_objective(alpha, y, K):
    """Independent double-loop evaluation of the dual objective."""
    total = float(np.sum(alpha))
    for i in range(len(alpha)):
        for j in range(len(alpha)):
            total -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * K[i, j]
    return total


# --- dual_objective ---------------------------------------------------------

def test_objective_zero_alpha():
    assert dual_objective(np.zeros(2), two_point_problem()) == 0.0


def test_objective_two_point_analytic():
    # Active margin constraints <w, x_i> = y_i with w = a*(x_+ - x_-) force a = 0.5;
    # there sum(a) = 1 and the quadratic term is 0.5.
    assert dual_objective(np.array([0.5, 0.5]), two_point_problem()) == pytest.approx(0.5, abs=1e-15)


def test_objective_matches_double_loop():
    rng = np.random.default_rng(1)
    for _ in range(10):
        problem, _ = random_dual_problem(rng, finite_c=True)
        alpha = rng.uniform(0, 1, len(problem))
        expected = naive_objective(alpha, problem.labels, problem.gram.entries)
        assert dual_objective(alpha, problem) == pytest.approx(expected, abs=1e-12)


def test_objective_dimension_mismatch():
    with pytest.raises(ValueError):
        dual_objective(np.zeros(3), two_point_problem())


# --- lagrangian -------------------------------------------------------------

def test_lagrangian_zero_alpha_is_half_norm():
    ds = two_point_dataset()
    w = np.array([3.0, -4.0])
    value = lagrangian(w, 1.0, np.zeros(2), ds, labels_array(ds))
    assert value == pytest.approx(12.5)


def test_lagrangian_at_two_point_optimum():
    ds = two_point_dataset()
    value = lagrangian(np.array([1.0, 0.0]), 0.0, np.array([0.5, 0.5]), ds, labels_array(ds))
    assert value == pytest.approx(0.5, abs=1e-15)


def test_lagrangian_all_ones_zero_weights():
    ds = xor_dataset()
    value = lagrangian(np.zeros(2), 0.0, np.ones(4), ds, labels_array(ds))
    assert value == pytest.approx(4.0)


def test_lagrangian_dimension_errors():
    ds = two_point_dataset()
    with pytest.raises(ValueError):
        lagrangian(np.zeros(3), 0.0, np.zeros(2), ds, labels_array(ds))
    with pytest.raises(ValueError):
        lagrangian(np.zeros(2), 0.0, np.zeros(3), ds, labels_array(ds))


# --- solve ------------------------------------------------------------------

def test_solve_two_point_analytic():
    solution = solve(two_point_problem())
    assert solution.converged
    np.testing.assert_allclose(solution.alpha, [0.5, 0.5], atol=1e-9)
    assert solution.b == pytest.approx(0.0, abs=1e-9)
    assert solution.objective == pytest.approx(0.5, abs=1e-9)
    assert solution.kkt_residual <= 1e-3


def test_solve_inseparable_all_alpha_at_box():
    problem = _problem(inseparable_dataset(), linear(), 1.0)
    solution = solve(problem)
    np.testing.assert_allclose(solution.alpha, np.ones(4), atol=1e-9)
    oracle = solve_bruteforce(problem)
    assert solution.objective == pytest.approx(oracle.objective, abs=1e-3)


def test_solve_xor_rbf_zero_training_errors():
    ds = xor_dataset()
    problem = _problem(ds, rbf(1.0), 10.0)
    solution = solve(problem)
    assert solution.converged
    y = labels_array(ds)
    f = problem.gram.entries @ (solution.alpha * y) + solution.b
    assert np.all(y * f > 0)


def test_solve_rejects_single_class():
    ds = Dataset(two_point_dataset().samples[:1] * 2)
    with pytest.raises(ValueError, match="both classes"):
        _problem(ds, linear(), 1.0)


def test_solve_iteration_cap_flagged():
    problem = _problem(xor_dataset(), rbf(1.0), 10.0)
    capped = solve(problem, SolverConfig(tolerance=1e-12, max_iterations=2))
    assert not capped.converged
    assert capped.iterations == 2
    assert capped.kkt_residual > 1e-12


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    assert SolverConfig().resolved_max_iterations(4) == 40_000
    assert SolverConfig().resolved_max_iterations(10_000) == 10_000_000


# --- solve_bruteforce -------------------------------------------------------

def test_bruteforce_two_point():
    solution = solve_bruteforce(two_point_problem())
    assert solution.objective == pytest.approx(0.5, abs=1e-3)
    np.testing.assert_allclose(solution.alpha, [0.5, 0.5], atol=1e-3)


def test_bruteforce_inseparable_boxed():
    solution = solve_bruteforce(_problem(inseparable_dataset(), linear(), 1.0))
    np.testing.assert_allclose(solution.alpha, np.ones(4), atol=1e-6)
    assert solution.objective == pytest.approx(4.0, abs=1e-6)


def test_bruteforce_never_beats_solver_by_more_than_tolerance():
    rng = np.random.default_rng(12)
    for _ in range(8):
        problem, _ = random_dual_problem(rng, finite_c=bool(rng.integers(2)))
        fast = solve(problem)
        oracle = solve_bruteforce(problem)
        assert oracle.objective <= fast.objective + 1e-3


def test_bruteforce_guards():
    rng = np.random.default_rng(0)
    problem, _ = random_dual_problem(rng, finite_c=True)
    with pytest.raises(ValueError):
        solve_bruteforce(problem, resolution=4)
    big = Dataset(tuple(two_point_dataset().samples) * 4)  # 8 samples
    with pytest.raises(ValueError, match="brute force"):
        solve_bruteforce(_problem(big, linear(), 1.0))


def test_oracle_equivalence_on_random_problems():
    rng = np.random.default_rng(2024)
    for trial in range(20):
        problem, _ = random_dual_problem(rng, finite_c=trial % 2 == 0)
        fast = solve(problem)
        oracle = solve_bruteforce(problem)
        assert abs(fast.objective - oracle.objective) <= 1e-3, f"trial {trial}"


# --- kkt_report -------------------------------------------------------------

def test_kkt_optimal_two_point():
    problem = two_point_problem()
    report = kkt_report(solve(problem), problem)
    assert np.all(report <= 1e-9)


def test_kkt_all_zero_alpha():
    problem = two_point_problem()
    trivial = replace(solve(problem), alpha=np.zeros(2), b=0.0)
    report = kkt_report(trivial, problem)
    np.testing.assert_allclose(report, [1.0, 1.0])


def test_kkt_perturbation_detected():
    problem = two_point_problem()
    solution = solve(problem)
    perturbed = solution.alpha.copy()
    perturbed[0] += 0.1
    report = kkt_report(replace(solution, alpha=perturbed), problem)
    assert report[0] > 0.05


def test_kkt_shape_mismatch():
    problem = two_point_problem()
    with pytest.raises(ValueError):
        kkt_report(replace(solve(problem), alpha=np.zeros(3)), problem)


# --- invariants and properties ----------------------------------------------

def test_monotone_ascent_and_feasibility():
    rng = np.random.default_rng(77)
    for _ in range(6):
        problem, _ = random_dual_problem(rng, finite_c=bool(rng.integers(2)))
        objectives = []

        def check(alpha, objective):
            assert np.all(alpha >= 0.0) and np.all(alpha <= problem.C)
            residual = abs(float(alpha @ problem.labels))
            assert residual <= 1e-12 * max(1.0, float(alpha.sum()))
            objectives.append(objective)

        solve(problem, on_step=check)
        diffs = np.diff(objectives)
        assert np.all(diffs >= -1e-12)


def test_strong_duality_hard_margin_linear():
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 5:
        m = int(rng.integers(2, 5))
        points = rng.uniform(-1, 1, size=(m, 2))
        shift = rng.uniform(1.5, 3.0)
        labels = np.array([1] * m + [-1] * m)
        all_points = np.vstack([points + [shift, 0.0], points - [shift, 0.0]])
        from helpers import sample

        ds = Dataset(tuple(sample(int(l), *p) for l, p in zip(labels, all_points)))
        problem = _problem(ds, linear(), HARD_MARGIN_C)
        solution = solve(problem)
        if not solution.converged:
            continue
        w = np.zeros(2)
        for a, y, s in zip(solution.alpha, labels, ds.samples):
            w += a * y * s.dense(2)
        assert solution.objective == pytest.approx(0.5 * float(w @ w), rel=1e-6)
        checked += 1


def test_saddle_point_at_optimum():
    ds = two_point_dataset()
    y = labels_array(ds)
    problem = _problem(ds, linear(), HARD_MARGIN_C)
    solution = solve(problem)
    w_star = np.array([1.0, 0.0])
    b_star = solution.b
    a_star = solution.alpha
    center = lagrangian(w_star, b_star, a_star, ds, y)

    rng = np.random.default_rng(8)
    for _ in range(50):
        a_perturbed = np.clip(a_star + rng.normal(0, 0.2, 2), 0.0, None)
        assert lagrangian(w_star, b_star, a_perturbed, ds, y) <= center + 1e-9
        w_perturbed = w_star + rng.normal(0, 0.2, 2)
        b_perturbed = b_star + rng.normal(0, 0.2)
        assert lagrangian(w_perturbed, b_perturbed, a_star, ds, y) >= center - 1e-9


def test_hard_margin_infinity_canonicalized():
    problem = _problem(two_point_dataset(), linear(), math.inf)
    assert problem.C == HARD_MARGIN_C
