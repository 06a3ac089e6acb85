"""Benchmark scenario constants, models, occupancy maps and noise streams."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from intervalmpc.scenarios import (CSTR_A, CSTR_B, CSTR_C, CSTR_H,
                                   CSTR_HORIZON, CSTR_L, CSTR_R,
                                   CSTR_TRIAL_LENGTH, CSTR_U, CSTR_V, CSTR_W,
                                   CSTR_X, CSTR_X0, CSTR_XREF, OccupancyMap,
                                   Scenario, STREAM_MEASURE, STREAM_PROCESS,
                                   build, cstr_model, default_cstr_scenario,
                                   default_unicycle_scenario,
                                   generate_ground_truth, gini_entropy,
                                   make_controller, make_map, make_stream,
                                   measure_output, shannon_entropy,
                                   simulate_plant, unicycle_model)


def test_reactor_constants_pinned():
    assert_array_equal(CSTR_A, [[0.745, -0.002], [5.610, 0.780]])
    assert_array_equal(CSTR_B, [[5.6e-6], [0.464]])
    assert_array_equal(CSTR_C, [[0.0, 1.0]])
    assert_array_equal(CSTR_X.lo, [-0.4, -25.0])
    assert_array_equal(CSTR_X.hi, [0.4, 25.0])
    assert_array_equal(CSTR_U.lo, [-15.0])
    assert_array_equal(CSTR_U.hi, [15.0])
    assert_array_equal(CSTR_W.lo, [-0.02, -0.4])
    assert_array_equal(CSTR_W.hi, [0.02, 0.4])
    assert_array_equal(CSTR_V.lo, [-0.1])
    assert_array_equal(CSTR_V.hi, [0.1])
    assert_array_equal(CSTR_L, [[-0.002], [0.390]])
    assert_array_equal(CSTR_X0.lo, [-0.1, -0.05])
    assert_array_equal(CSTR_X0.hi, [0.1, 0.05])
    assert_array_equal(CSTR_XREF, [-0.25, 27.3])
    assert_array_equal(CSTR_H, 100.0 * np.eye(2))
    assert_array_equal(CSTR_R, [[0.01]])
    assert CSTR_HORIZON == 10
    assert CSTR_TRIAL_LENGTH == 50


def test_reactor_plant_arithmetic():
    model = cstr_model()
    x = np.array([0.1, 1.0])
    u = np.array([1.0])
    nxt = simulate_plant(model, x, u, np.zeros(2))
    assert_allclose(nxt, CSTR_A @ x + CSTR_B[:, 0], atol=1e-15)
    y = measure_output(model, x, np.array([0.01]))
    assert_allclose(y, [1.01], atol=1e-15)


def test_unicycle_remainder_formulas():
    dt = 0.1
    model = unicycle_model(dt=dt)
    # Remainder vanishes whenever heading and speed are zero.
    assert_array_equal(model.mu(np.array([3.0, -2.0, 0.0, 0.0])), np.zeros(4))
    x = np.array([0.5, -0.3, 0.7, 0.6])
    mu = model.mu(x)
    th, v = x[2], x[3]
    assert_allclose(mu[0], dt * (v * np.cos(th) - th - v), atol=1e-15)
    assert_allclose(mu[1], dt * (v * np.sin(th) - th - v), atol=1e-15)
    assert mu[2] == 0.0 and mu[3] == 0.0
    # Full step against the handwritten kinematics with drag and damping.
    u = np.array([0.2, -0.1])
    nxt = simulate_plant(model, x, u, np.zeros(4))
    delta, b_v = 0.05, 0.05
    expect = np.array([
        (1 - delta) * x[0] + dt * v * np.cos(th),
        (1 - delta) * x[1] + dt * v * np.sin(th),
        th + dt * u[0],
        (1 - b_v) * v + dt * u[1],
    ])
    assert_allclose(nxt, expect, atol=1e-14)


def test_unicycle_remainder_accepts_complex_input():
    model = unicycle_model()
    x = np.array([0.1, 0.2, 0.3, 0.4], dtype=complex)
    x[2] += 1e-20j
    mu = model.mu(x)
    assert np.iscomplexobj(mu)
    assert mu[0].imag != 0.0


def test_entropy_functions():
    assert shannon_entropy(0.5) == pytest.approx(np.log(2.0), abs=1e-15)
    assert shannon_entropy(0.0) == 0.0
    assert shannon_entropy(1.0) == 0.0
    assert gini_entropy(0.5) == pytest.approx(0.5, abs=1e-15)
    assert gini_entropy(0.0) == 0.0
    vals = shannon_entropy(np.array([0.1, 0.5, 0.9]))
    assert vals[1] == np.max(vals)
    assert_allclose(vals[0], vals[2], atol=1e-15)


def test_fresh_measurement_removes_exactly_one_bit():
    truth = np.zeros((10, 10), dtype=bool)
    truth[3, 4] = True
    m = OccupancyMap.create([0.0, 0.0], 1.0, truth)
    h0 = m.total_entropy()
    assert h0 == pytest.approx(100.0 * np.log(2.0), abs=1e-12)
    m2 = m.measure([3.5, 4.5])
    assert m2.occ[3, 4] == 1.0
    assert m2.total_entropy() == pytest.approx(h0 - np.log(2.0), abs=1e-12)
    # Original instance is untouched (value semantics).
    assert m.occ[3, 4] == 0.5


def test_repeat_measurement_is_idempotent():
    truth = generate_ground_truth(6, 6, 0.4, np.random.default_rng(0))
    m = OccupancyMap.create([0.0, 0.0], 0.5, truth)
    m1 = m.measure([1.2, 1.7])
    m2 = m1.measure([1.2, 1.7])
    assert_array_equal(m1.occ, m2.occ)
    assert m1.total_entropy() == m2.total_entropy()


def test_full_sweep_zeroes_entropy():
    truth = generate_ground_truth(5, 4, 0.5, np.random.default_rng(1))
    m = OccupancyMap.create([1.0, -1.0], 0.3, truth)
    for i in range(5):
        for j in range(4):
            m = m.measure([1.0 + (i + 0.5) * 0.3, -1.0 + (j + 0.5) * 0.3])
    assert m.total_entropy() == pytest.approx(0.0, abs=1e-12)
    assert_array_equal(m.occ.astype(bool), truth)


def test_outside_measurements_counted_and_harmless():
    truth = np.zeros((4, 4), dtype=bool)
    m = OccupancyMap.create([0.0, 0.0], 1.0, truth)
    m2 = m.measure([-3.0, 1.0])
    assert m2.outside_count == 1
    assert m2.total_entropy() == m.total_entropy()
    assert m.cell_index([-3.0, 1.0]) is None
    assert m.cell_index([3.9, 3.9]) == (3, 3)


def test_entropy_never_increases_along_random_walk():
    for entropy_fn in (shannon_entropy, gini_entropy):
        rng = np.random.default_rng(7)
        truth = generate_ground_truth(8, 8, 0.3, rng)
        m = OccupancyMap.create([0.0, 0.0], 0.5, truth, entropy_fn)
        h = m.total_entropy()
        for _ in range(60):
            pos = rng.uniform(-0.5, 4.5, size=2)
            m = m.measure(pos)
            h_new = m.total_entropy()
            assert h_new <= h + 1e-12
            h = h_new


def test_entropy_interpolator_exact_at_cell_centers():
    rng = np.random.default_rng(3)
    truth = generate_ground_truth(7, 5, 0.4, rng)
    m = OccupancyMap.create([2.0, -1.0], 0.4, truth)
    for _ in range(10):
        m = m.measure(rng.uniform([2.0, -1.0], [2.0 + 7 * 0.4, -1.0 + 5 * 0.4]))
    field = m.entropy_interpolator()
    Hf = m.entropy_fn(m.occ)
    for i in range(7):
        for j in range(5):
            center = np.array([2.0 + (i + 0.5) * 0.4, -1.0 + (j + 0.5) * 0.4])
            assert field(center) == pytest.approx(Hf[i, j], abs=1e-12)


def test_entropy_interpolator_constant_outside_and_complex_safe():
    # One revealed cell far from the right edge: queries beyond the lattice
    # clamp to the nearest center column/row, so the field goes flat there.
    truth = np.zeros((4, 4), dtype=bool)
    m = OccupancyMap.create([0.0, 0.0], 1.0, truth).measure([0.5, 0.5])
    field = m.entropy_interpolator()
    edge = field(np.array([3.5, 3.5]))
    assert field(np.array([50.0, 50.0])) == pytest.approx(edge, abs=1e-12)
    assert field(np.array([4.0, 9.0])) == pytest.approx(edge, abs=1e-12)
    z = np.array([1.7 + 1e-20j, 2.3 + 0j])
    val = field(z)
    assert val.real == pytest.approx(field(np.array([1.7, 2.3])), abs=1e-12)
    # Outside the lattice the clamped coordinate kills the derivative.
    z_out = np.array([-50.0 + 1e-20j, -50.0 + 0j])
    assert field(z_out).imag == 0.0


def test_noise_streams_deterministic_and_independent():
    a1 = make_stream(42, STREAM_PROCESS).normal(size=8)
    a2 = make_stream(42, STREAM_PROCESS).normal(size=8)
    b = make_stream(42, STREAM_MEASURE).normal(size=8)
    c = make_stream(43, STREAM_PROCESS).normal(size=8)
    assert_array_equal(a1, a2)
    assert not np.allclose(a1, b)
    assert not np.allclose(a1, c)


def test_scenario_json_round_trip(tmp_path):
    sc = default_unicycle_scenario(alpha=1.5, beta=0.5, seed=9)
    data = sc.to_dict()
    again = Scenario.from_dict(json.loads(json.dumps(data)))
    assert again == sc
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(data))
    loaded = Scenario.load(p)
    assert loaded == sc
    tweaked = sc.replace(alpha=2.0)
    assert tweaked.alpha == 2.0
    assert tweaked.beta == sc.beta
    assert tweaked.exploration == sc.exploration


def test_shipped_scenario_files_build():
    for name in ("cstr", "unicycle"):
        sc = Scenario.load(f"scenarios/{name}.json")
        built = build(sc)
        assert built.cert.rho_obs < 1.0
        assert built.cert.rho_ctl < 1.0


def test_build_rejects_unknown_system():
    with pytest.raises(ValueError):
        build(Scenario(system="pendulum"))


def test_make_controller_ids_and_meta():
    built = build(default_cstr_scenario())
    with pytest.raises(ValueError):
        make_controller(built, "mystery")
    ctrl, meta = make_controller(built, "openloop")
    assert_array_equal(ctrl.K, np.zeros((1, 2)))
    assert meta["controller"] == "openloop"
    assert meta["rho_obs"] < 1.0
    ctrl2, meta2 = make_controller(built, "irof")
    assert meta2["width_bound"] is not None
    assert np.all(np.asarray(meta2["width_bound"]) >= 0.0)


def test_make_map_literal_cells_and_gini_selection():
    cells = [[True, False], [False, True]]
    sc = default_unicycle_scenario(exploration={
        "grid": {"origin": [0.0, 0.0], "cell_size": 1.0, "nx": 2, "ny": 2},
        "lambda": 0.5,
        "ground_truth": {"cells": cells},
        "entropy": "gini",
    })
    built = build(sc)
    m = make_map(built, seed=0)
    assert_array_equal(m.truth, np.asarray(cells))
    assert m.entropy_fn is gini_entropy
    assert m.total_entropy() == pytest.approx(4 * 0.5, abs=1e-12)
    # Seeded truth: same seed, same map; different seed differs somewhere.
    sc2 = default_unicycle_scenario()
    built2 = build(sc2)
    m_a = make_map(built2, seed=5)
    m_b = make_map(built2, seed=5)
    m_c = make_map(built2, seed=6)
    assert_array_equal(m_a.truth, m_b.truth)
    assert m_a.truth.shape == (20, 20)
    assert np.any(m_a.truth != m_c.truth)


def test_reactor_scenario_has_no_map():
    built = build(default_cstr_scenario())
    assert make_map(built, seed=0) is None
