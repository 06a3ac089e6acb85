"""Mixed-monotone remainder decomposition against grid-search oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from intervalmpc.decomposition import (DecompositionError, DecomposedModel,
                                       JacobianBounds, decomp_eval,
                                       decomp_eval_pairs, jss_decompose,
                                       remainder_box, remainder_gain)
from intervalmpc.intervals import Interval
from intervalmpc.scenarios import unicycle_model


def mixed_sign_model():
    """Two-state model whose remainder Jacobian sign pattern differs per row,
    so the per-row selector path is exercised."""
    def mu(x):
        x = np.asarray(x)
        t0 = np.tanh(x[..., 0])
        t1 = np.tanh(x[..., 1])
        return np.stack([0.1 * t0 - 0.05 * t1, -0.1 * t0 + 0.05 * t1], axis=-1)

    jac = JacobianBounds(lo=[[0.0, -0.05], [-0.1, 0.0]],
                         hi=[[0.1, 0.0], [0.0, 0.05]])
    A = np.array([[0.5, 0.0], [0.1, 0.4]])
    B = np.eye(2)
    C = np.eye(2)
    return DecomposedModel(A, B, C, mu=mu, mu_jac=jac)


def grid_mu_extremes(model, box, per_dim=40):
    """Oracle: extreme remainder values over a dense grid of the box."""
    axes = [np.linspace(box.lo[i], box.hi[i], per_dim)
            for i in range(len(box.lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = model.mu(pts)
    return vals.min(axis=0), vals.max(axis=0)


def test_jacobian_bounds_validation():
    with pytest.raises(DecompositionError):
        JacobianBounds(lo=[[1.0]], hi=[[0.0]])
    with pytest.raises(DecompositionError):
        JacobianBounds(lo=[[0.0, 0.0]], hi=[[1.0]])


def test_sign_stability_enforced():
    def mu(x):
        return np.sin(np.asarray(x))

    jac = JacobianBounds(lo=[[-1.0]], hi=[[1.0]])
    assert not jac.is_sign_stable()
    with pytest.raises(DecompositionError):
        DecomposedModel(np.eye(1), np.eye(1), np.eye(1), mu=mu, mu_jac=jac)


def test_remainder_gain_formulas():
    # Nonnegative bounds that coincide: the gain is the matrix itself.
    J = np.array([[0.3, 0.0], [0.2, 0.5]])
    assert_array_equal(remainder_gain(JacobianBounds(J, J)), J)
    # Symmetric bounds [-J, J] double up.
    jac = JacobianBounds(-J, J)
    assert not jac.is_sign_stable()
    assert_array_equal(remainder_gain(jac), 2 * J)
    assert_array_equal(jac.width, 2 * J)


def test_linear_model_has_zero_remainder():
    A = np.array([[0.7, 0.1], [0.0, 0.6]])
    model = DecomposedModel(A, np.eye(2), np.eye(2))
    x = np.array([0.3, -1.2])
    assert_array_equal(model.mu_value(x), np.zeros(2))
    assert_array_equal(decomp_eval(model, x, -x), np.zeros(2))
    assert_allclose(model.dynamics(x, np.zeros(2)), A @ x, atol=1e-15)


def test_identical_arguments_recover_remainder():
    model = unicycle_model()
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.uniform([-3, -3, -np.pi, -1], [3, 3, np.pi, 1])
        assert_allclose(decomp_eval(model, x, x), model.mu(x), atol=1e-14)
    mixed = mixed_sign_model()
    for _ in range(20):
        x = rng.normal(size=2)
        assert_allclose(decomp_eval(mixed, x, x), mixed.mu(x), atol=1e-14)


def test_unicycle_range_bounds_match_grid_oracle():
    model = unicycle_model()
    box = Interval([0.2, -0.4, 0.0, 0.0], [0.6, 0.1, 1.0, 1.0])
    lo_ref, hi_ref = grid_mu_extremes(model, box, per_dim=12)
    upper = decomp_eval(model, box.hi, box.lo)
    lower = decomp_eval(model, box.lo, box.hi)
    assert np.all(upper >= hi_ref - 1e-12)
    assert np.all(lower <= lo_ref + 1e-12)
    # The enclosure must not be vacuous either: within the Lipschitz slack.
    gain = remainder_gain(model.mu_jac)
    slack = gain @ box.width
    assert np.all(upper - lower <= slack + 1e-10)


def test_remainder_box_contains_sampled_values():
    rng = np.random.default_rng(5)
    for model in (unicycle_model(), mixed_sign_model()):
        nx = model.nx
        for _ in range(50):
            c = rng.uniform(-0.8, 0.8, size=nx)
            h = rng.uniform(0.0, 0.2, size=nx)
            box = Interval(c - h, c + h)
            enc = remainder_box(model, box)
            pts = box.sample(rng, size=200)
            vals = model.mu(pts)
            assert np.all(vals >= enc.lo - 1e-12)
            assert np.all(vals <= enc.hi + 1e-12)


def test_tightness_bounded_by_remainder_gain():
    rng = np.random.default_rng(9)
    for model in (unicycle_model(), mixed_sign_model()):
        gain = remainder_gain(model.mu_jac)
        nx = model.nx
        for _ in range(200):
            c = rng.uniform(-0.8, 0.8, size=nx)
            h = rng.uniform(0.0, 0.2, size=nx)
            box = Interval(c - h, c + h)
            enc = remainder_box(model, box)
            assert np.all(enc.width <= gain @ box.width + 1e-10)


def test_decomposed_evaluation_monotonicity():
    # Increasing the first argument never decreases the value, and
    # increasing the second never increases it.
    rng = np.random.default_rng(13)
    for model in (unicycle_model(), mixed_sign_model()):
        nx = model.nx
        for _ in range(50):
            lo = rng.uniform(-0.8, 0.0, size=nx)
            hi = lo + rng.uniform(0.0, 0.5, size=nx)
            mid = 0.5 * (lo + hi)
            up = decomp_eval(model, hi, lo)
            assert np.all(decomp_eval(model, mid, lo) <= up + 1e-12)
            assert np.all(decomp_eval(model, hi, mid) <= up + 1e-12)


def test_pair_evaluation_matches_single_calls():
    rng = np.random.default_rng(21)
    for model in (unicycle_model(), mixed_sign_model()):
        nx = model.nx
        a = rng.normal(size=(6, nx))
        b = rng.normal(size=(6, nx))
        c = rng.normal(size=(6, nx))
        d = rng.normal(size=(6, nx))
        out = decomp_eval_pairs(model, ((a, b), (c, d), (b, a)))
        assert_allclose(out[0], decomp_eval(model, a, b), atol=1e-15)
        assert_allclose(out[1], decomp_eval(model, c, d), atol=1e-15)
        assert_allclose(out[2], decomp_eval(model, b, a), atol=1e-15)


def test_jss_decomposition_from_jacobian_bounds():
    # Scalar map f(x) = x + sin(x) on a domain where the Jacobian of the
    # remainder stays one-signed after subtracting the linear part.
    def f(x):
        x = np.asarray(x)
        return x + np.sin(x)

    domain = Interval([-1.0], [1.0])
    jac = JacobianBounds(lo=[[1.0 + np.cos(1.0)]], hi=[[2.0]])
    model = jss_decompose(f, jac, B=np.eye(1), C=np.eye(1), domain=domain)
    assert_array_equal(model.A, [[1.0 + np.cos(1.0)]])
    assert model.mu_jac.is_sign_stable()
    rng = np.random.default_rng(2)
    for _ in range(30):
        x = rng.uniform(-1.0, 1.0, size=1)
        assert_allclose(model.A @ x + model.mu(x), f(x), atol=1e-14)
    enc = remainder_box(model, Interval([-0.5], [0.5]))
    lo_ref, hi_ref = grid_mu_extremes(model, Interval([-0.5], [0.5]), 200)
    assert np.all(enc.hi >= hi_ref - 1e-12)
    assert np.all(enc.lo <= lo_ref + 1e-12)


def test_constructor_shape_checks():
    with pytest.raises(DecompositionError):
        DecomposedModel(np.eye(2), np.ones((3, 1)), np.eye(2))
    with pytest.raises(DecompositionError):
        DecomposedModel(np.eye(2), np.ones((2, 1)), np.ones((1, 3)))
    with pytest.raises(DecompositionError):
        DecomposedModel(np.eye(2), np.ones((2, 1)), np.eye(2),
                        mu=lambda x: x)  # remainder without Jacobian bounds
