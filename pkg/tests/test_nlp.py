"""Augmented-Lagrangian solver on problems with known optima."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from intervalmpc.intervals import Interval
from intervalmpc.nlp import (NlpConfig, NlpEvaluationError, NlpProblem,
                             minimize)


def quadratic_problem(Q, b, inactive_cap=1e6):
    """min 0.5 d'Qd - b'd with one far-away constraint row so the fused
    evaluator always returns a nonempty constraint block."""
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(b, dtype=float)

    def objective(d):
        return 0.5 * d @ Q @ d - b @ d

    def constraints(d):
        return np.array([-inactive_cap])

    def eval_batch(D):
        f = 0.5 * np.sum((D @ Q) * D, axis=-1) - D @ b
        G = np.full(D.shape[:-1] + (1,), -inactive_cap, dtype=D.dtype)
        return f, G

    return NlpProblem(dim=len(b), objective=objective,
                      constraints=constraints, eval_batch=eval_batch)


def test_quadratic_minimizer_recovered_to_high_precision():
    Q = np.array([[2.0, 0.3], [0.3, 1.0]])
    b = np.array([1.0, -0.5])
    problem = quadratic_problem(Q, b)
    cfg = NlpConfig(gradient="complex", kkt_tol=1e-9, accept_ftol=0.0)
    sol = minimize(problem, np.zeros(2), cfg)
    assert sol.status == "optimal"
    assert_allclose(sol.point, np.linalg.solve(Q, b), atol=1e-8)


def test_loop_fallback_without_fused_evaluator():
    Q = np.diag([1.0, 4.0])
    b = np.array([2.0, 2.0])

    def objective(d):
        return 0.5 * d @ Q @ d - b @ d

    problem = NlpProblem(dim=2, objective=objective)
    sol = minimize(problem, np.zeros(2), NlpConfig())
    assert sol.max_violation == 0.0
    assert_allclose(sol.point, np.linalg.solve(Q, b), atol=1e-4)


def test_scalar_active_constraint():
    # min d^2 subject to d >= 1 pins the solution to the boundary.
    problem = NlpProblem(
        dim=1,
        objective=lambda d: float(d[0] ** 2),
        constraints=lambda d: np.array([1.0 - d[0]]))
    sol = minimize(problem, np.array([3.0]), NlpConfig())
    assert sol.max_violation <= 1e-6
    assert_allclose(sol.point, [1.0], atol=1e-5)
    assert sol.status in ("optimal", "feasible_suboptimal")


def test_two_dimensional_active_set_kkt_point():
    # min 0.5||d||^2 - [2,2]'d  s.t. d0 + d1 <= 2 has the KKT point (1, 1).
    def eval_batch(D):
        f = 0.5 * np.sum(D * D, axis=-1) - 2.0 * np.sum(D, axis=-1)
        G = (D[..., 0] + D[..., 1] - 2.0)[..., None]
        return f, G

    problem = NlpProblem(
        dim=2,
        objective=lambda d: 0.5 * d @ d - 2.0 * np.sum(d),
        constraints=lambda d: np.array([d[0] + d[1] - 2.0]),
        eval_batch=eval_batch)
    sol = minimize(problem, np.zeros(2), NlpConfig(accept_ftol=0.0))
    assert sol.max_violation <= 1e-6
    assert_allclose(sol.point, [1.0, 1.0], atol=1e-5)
    assert sol.status == "optimal"


def test_feasible_warm_start_is_never_abandoned():
    def eval_batch(D):
        f = np.sum(D * D, axis=-1)
        G = (D[..., 0] + 5.0)[..., None]
        return f, G

    problem = NlpProblem(
        dim=1,
        objective=lambda d: float(d @ d),
        constraints=lambda d: np.array([d[0] + 5.0]),
        eval_batch=eval_batch)
    sol = minimize(problem, np.array([-6.0]), NlpConfig())
    assert sol.warm_violation == 0.0
    assert sol.max_violation <= 1e-6
    assert sol.status != "infeasible"


def test_infeasible_problem_reports_and_never_worsens_warm_point():
    # g(d) = d^2 + 1 <= 0 cannot hold anywhere.
    def eval_batch(D):
        f = np.sum(D * D, axis=-1)
        G = (np.sum(D * D, axis=-1) + 1.0)[..., None]
        return f, G

    problem = NlpProblem(
        dim=1,
        objective=lambda d: float(d @ d),
        constraints=lambda d: np.array([float(d @ d) + 1.0]),
        eval_batch=eval_batch)
    sol = minimize(problem, np.array([2.0]), NlpConfig(outer_max=20))
    assert sol.status == "infeasible"
    assert sol.warm_violation == pytest.approx(5.0, abs=1e-12)
    assert sol.max_violation <= sol.warm_violation + 1e-12
    # The violation floor of this problem is 1.
    assert sol.max_violation >= 1.0 - 1e-9


def test_non_finite_evaluation_raises():
    problem = NlpProblem(
        dim=2,
        objective=lambda d: float("nan"),
        constraints=lambda d: np.zeros(1))
    with pytest.raises(NlpEvaluationError):
        minimize(problem, np.zeros(2), NlpConfig())


def test_gradient_mode_validation():
    problem = NlpProblem(dim=1, objective=lambda d: float(d @ d))
    with pytest.raises(ValueError):
        minimize(problem, np.zeros(1), NlpConfig(gradient="complex"))
    with pytest.raises(ValueError):
        minimize(problem, np.zeros(1), NlpConfig(gradient="nonsense"))


def test_fd_and_complex_gradients_agree_on_smooth_problem():
    Q = np.array([[3.0, 0.5], [0.5, 2.0]])
    b = np.array([1.0, 1.0])
    problem = quadratic_problem(Q, b)
    ref = np.linalg.solve(Q, b)
    for mode in ("fd", "complex", "auto"):
        sol = minimize(problem, np.zeros(2),
                       NlpConfig(gradient=mode, accept_ftol=0.0))
        assert_allclose(sol.point, ref, atol=1e-4)


def test_auto_mode_survives_evaluator_that_drops_imaginary_parts():
    Q = np.eye(2)
    b = np.array([1.0, 2.0])

    def coercing_batch(D):
        D = np.real(np.asarray(D)).astype(float)
        f = 0.5 * np.sum((D @ Q) * D, axis=-1) - D @ b
        return f, np.full((D.shape[0], 1), -1e6)

    problem = NlpProblem(
        dim=2,
        objective=lambda d: 0.5 * d @ Q @ d - b @ d,
        constraints=lambda d: np.array([-1e6]),
        eval_batch=coercing_batch)
    sol = minimize(problem, np.zeros(2), NlpConfig(gradient="auto"))
    assert_allclose(sol.point, b, atol=1e-4)
    with pytest.raises(NlpEvaluationError):
        minimize(problem, np.zeros(2), NlpConfig(gradient="complex"))


def test_bounds_are_respected():
    problem = NlpProblem(
        dim=1,
        objective=lambda d: float((d[0] - 2.0) ** 2),
        bounds=Interval([-1.0], [1.0]))
    sol = minimize(problem, np.zeros(1), NlpConfig())
    assert np.all(sol.point >= -1.0 - 1e-12)
    assert np.all(sol.point <= 1.0 + 1e-12)
    assert_allclose(sol.point, [1.0], atol=1e-6)


def test_constraint_scaling_normalizes_feasibility():
    # A stiffly scaled row with matching scale entry behaves like the
    # unit-scaled problem: the reported violation is measured after scaling.
    problem = NlpProblem(
        dim=1,
        objective=lambda d: float(-d[0]),
        constraints=lambda d: np.array([1000.0 * (d[0] - 1.0)]),
        scale=np.array([1000.0]))
    sol = minimize(problem, np.array([0.0]), NlpConfig())
    assert sol.max_violation <= 1e-6
    assert_allclose(sol.point, [1.0], atol=1e-4)


def test_solution_record_fields_populated():
    problem = NlpProblem(
        dim=1,
        objective=lambda d: float(d @ d),
        constraints=lambda d: np.array([-1.0 - d[0]]))
    sol = minimize(problem, np.array([0.5]), NlpConfig())
    assert sol.iterations >= 1
    assert sol.inner_iterations >= 1
    assert sol.multipliers.shape == (1,)
    assert np.isfinite(sol.kkt_residual)
    assert np.isfinite(sol.objective_value)
