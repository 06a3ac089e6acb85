"""Benchmark scenarios: a linear reactor tracking loop and a nonlinear
exploration robot, plus the occupancy-map machinery the latter uses.

Scenario files are JSON with the keys ``system`` (``cstr`` or ``unicycle``),
``noise_scale`` ({alpha, beta} multiplying the process/measurement boxes),
``horizon``, ``trial_length``, ``seed``, ``terminal``, ``exploration``
(grid, weight and ground-truth spec; null for the reactor) and ``obstacles``;
an optional ``params`` object overrides system-specific defaults.  Every
number that influences the closed loop is either a scenario constant pinned
here or echoed into the run metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .decomposition import DecomposedModel, JacobianBounds
from .estimation import NoiseBounds
from .gains import GainCertificate, GainSearchConfig, synthesize, verify
from .intervals import Interval
from .mpc import (ConstraintSets, IrofController, MpcConfig, MpcCost,
                  NominalController, Obstacle, QuadraticStage,
                  design_terminal_linear, design_terminal_regulation,
                  validate_terminal_sets)
from .nlp import NlpConfig
from .prediction import PredictionError, steady_width

CONTROLLER_IDS = ("irof", "nominal", "openloop")

# Deterministic per-purpose noise streams (counter-based PRNG keyed by
# (master seed, stream)); paired trials share realizations by construction.
STREAM_PROCESS = 0
STREAM_MEASURE = 1
STREAM_TRUTH = 2
STREAM_INIT = 3
STREAM_AUX = 4


def make_stream(seed: int, stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(seq))


def simulate_plant(model: DecomposedModel, x, u, w) -> np.ndarray:
    """True plant step ``A x + mu(x) + B u + w``."""
    return model.dynamics(x, u) + np.asarray(w, dtype=float)


def measure_output(model: DecomposedModel, x, v) -> np.ndarray:
    return model.output(x) + np.asarray(v, dtype=float)


# ---------------------------------------------------------------------------
# Reactor (linear, setpoint tracking near the constraint boundary)

CSTR_A = np.array([[0.745, -0.002], [5.610, 0.780]])
CSTR_B = np.array([[5.6e-6], [0.464]])
CSTR_C = np.array([[0.0, 1.0]])
CSTR_X = Interval([-0.4, -25.0], [0.4, 25.0])
CSTR_U = Interval([-15.0], [15.0])
CSTR_W = Interval([-0.02, -0.4], [0.02, 0.4])
CSTR_V = Interval([-0.1], [0.1])
CSTR_L = np.array([[-0.002], [0.390]])
CSTR_X0 = Interval([-0.1, -0.05], [0.1, 0.05])
CSTR_XREF = np.array([-0.25, 27.3])
CSTR_H = 100.0 * np.eye(2)
CSTR_R = np.array([[0.01]])
CSTR_HORIZON = 10
CSTR_TRIAL_LENGTH = 50


def cstr_model() -> DecomposedModel:
    return DecomposedModel(CSTR_A, CSTR_B, CSTR_C, domain=CSTR_X)


# ---------------------------------------------------------------------------
# Unicycle (nonlinear, damped toward the goal; state = position error to the
# goal, heading, speed; absolute position = goal + x[0:2])

def unicycle_model(delta: float = 0.05, b_v: float = 0.05, dt: float = 0.1,
                   X: Optional[Interval] = None) -> DecomposedModel:
    """Exploration robot dynamics split as ``A x + mu(x)``.

    The linear part takes the upper Jacobian bound over ``|speed| <= 1``;
    the remainder's Jacobian is then entrywise in ``[-2 dt, 0]`` on the
    (position rows x heading/speed columns) block, so the decomposition is
    sign-stable exactly on that speed range.
    """
    A = np.array([
        [1.0 - delta, 0.0, dt, dt],
        [0.0, 1.0 - delta, dt, dt],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0 - b_v],
    ])
    B = np.array([[0.0, 0.0], [0.0, 0.0], [dt, 0.0], [0.0, dt]])
    C = np.eye(4)

    def mu(x, _dt=dt):
        # dtype follows x so complex-step perturbations pass through.
        x = np.asarray(x)
        th = x[..., 2]
        v = x[..., 3]
        out = np.zeros_like(x)
        out[..., 0] = _dt * (v * np.cos(th) - th - v)
        out[..., 1] = _dt * (v * np.sin(th) - th - v)
        return out

    lo = np.zeros((4, 4))
    hi = np.zeros((4, 4))
    lo[0, 2] = lo[0, 3] = lo[1, 2] = lo[1, 3] = -2.0 * dt
    mu_jac = JacobianBounds(lo, hi)
    return DecomposedModel(A, B, C, mu=mu, mu_jac=mu_jac, domain=X)


def unicycle_linearization(model: DecomposedModel, dt: float) -> np.ndarray:
    # Jacobian of A x + mu(x) at the origin: the remainder contributes
    # -dt on (0,2), (1,2), (1,3).
    A_lin = model.A.copy()
    A_lin[0, 2] -= dt
    A_lin[1, 2] -= dt
    A_lin[1, 3] -= dt
    return A_lin


# ---------------------------------------------------------------------------
# Occupancy map

def shannon_entropy(p):
    """Binary entropy in nats; 0 log 0 := 0, maximum ln 2 at p = 1/2."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -p * np.log(p) - (1.0 - p) * np.log(1.0 - p)
    return np.where((p <= 0.0) | (p >= 1.0), 0.0, t)


def gini_entropy(p):
    """Quadratic impurity 2 p (1 - p): concave, zero at {0, 1}, max at 1/2."""
    p = np.asarray(p, dtype=float)
    return 2.0 * p * (1.0 - p)


class OccupancyMap:
    """Uniform grid of occupancy probabilities with exact-reveal measurement.

    Cells start at 0.5 (unknown).  Measuring a position reveals the ground
    truth of the containing cell exactly (probability snaps to 0 or 1);
    measuring outside the grid is a no-op counted in ``outside_count``.
    Instances are value-like: ``measure`` returns a new map.
    """

    __slots__ = ("origin", "cell_size", "occ", "truth", "entropy_fn",
                 "outside_count")

    def __init__(self, origin, cell_size: float, occ, truth,
                 entropy_fn=shannon_entropy, outside_count: int = 0):
        self.origin = np.asarray(origin, dtype=float)
        self.cell_size = float(cell_size)
        self.occ = np.asarray(occ, dtype=float)
        self.truth = np.asarray(truth, dtype=bool)
        self.entropy_fn = entropy_fn
        self.outside_count = outside_count
        if self.occ.shape != self.truth.shape:
            raise ValueError("occupancy and ground-truth shapes differ")

    @classmethod
    def create(cls, origin, cell_size: float, truth,
               entropy_fn=shannon_entropy) -> "OccupancyMap":
        truth = np.asarray(truth, dtype=bool)
        return cls(origin, cell_size, np.full(truth.shape, 0.5), truth,
                   entropy_fn)

    @property
    def shape(self):
        return self.occ.shape

    def cell_index(self, pos):
        rel = (np.asarray(pos, dtype=float) - self.origin) / self.cell_size
        ix, iy = int(np.floor(rel[0])), int(np.floor(rel[1]))
        if 0 <= ix < self.occ.shape[0] and 0 <= iy < self.occ.shape[1]:
            return ix, iy
        return None

    def measure(self, pos) -> "OccupancyMap":
        idx = self.cell_index(pos)
        if idx is None:
            return OccupancyMap(self.origin, self.cell_size, self.occ,
                                self.truth, self.entropy_fn,
                                self.outside_count + 1)
        occ = self.occ.copy()
        occ[idx] = 1.0 if self.truth[idx] else 0.0
        return OccupancyMap(self.origin, self.cell_size, occ, self.truth,
                            self.entropy_fn, self.outside_count)

    def total_entropy(self) -> float:
        return float(np.sum(self.entropy_fn(self.occ)))

    def entropy_interpolator(self):
        """Smooth interpolant of per-cell entropy at cell centers.

        Tensor-product smoothstep weights (``3 f^2 - 2 f^3`` per axis)
        between neighboring centers give a C1 field exact at the centers;
        a merely piecewise-linear field has gradient jumps at every cell
        boundary that stall quasi-Newton line searches in the planner.
        Queries clamp to the center lattice, so the field is constant
        outside the grid; returns a callable mapping ``(..., 2)`` positions
        to entropy values.
        """
        Hf = self.entropy_fn(self.occ)
        nx, ny = Hf.shape
        origin = self.origin
        cell = self.cell_size

        def clamp(v, hi):
            # Saturation decided on the real part so complex-step inputs
            # keep their perturbation inside the lattice and lose it (zero
            # derivative) where the field is constant.
            v = np.where(v.real < 0.0, 0.0 * v, v)
            return np.where(v.real > hi, hi + 0.0 * v, v)

        def field(pos):
            pos = np.asarray(pos)
            t = (pos - origin) / cell - 0.5
            tx = clamp(t[..., 0], nx - 1.0 - 1e-12)
            ty = clamp(t[..., 1], ny - 1.0 - 1e-12)
            ix = np.minimum(tx.real.astype(int), nx - 2)
            iy = np.minimum(ty.real.astype(int), ny - 2)
            fx = tx - ix
            fy = ty - iy
            wx = fx * fx * (3.0 - 2.0 * fx)
            wy = fy * fy * (3.0 - 2.0 * fy)
            v00 = Hf[ix, iy]
            v10 = Hf[ix + 1, iy]
            v01 = Hf[ix, iy + 1]
            v11 = Hf[ix + 1, iy + 1]
            return ((1 - wx) * (1 - wy) * v00 + wx * (1 - wy) * v10
                    + (1 - wx) * wy * v01 + wx * wy * v11)

        return field


def generate_ground_truth(nx: int, ny: int, density: float,
                          rng: np.random.Generator) -> np.ndarray:
    return rng.random((nx, ny)) < density


# ---------------------------------------------------------------------------
# Scenario definition and construction

@dataclass
class Scenario:
    system: str
    alpha: float = 1.0
    beta: float = 1.0
    horizon: int = 10
    trial_length: int = 50
    seed: int = 0
    terminal: dict = dc_field(default_factory=dict)
    exploration: Optional[dict] = None
    obstacles: list = dc_field(default_factory=list)
    params: dict = dc_field(default_factory=dict)
    name: str = ""

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        ns = data.get("noise_scale", {})
        return cls(
            system=data["system"],
            alpha=float(ns.get("alpha", 1.0)),
            beta=float(ns.get("beta", 1.0)),
            horizon=int(data["horizon"]),
            trial_length=int(data["trial_length"]),
            seed=int(data.get("seed", 0)),
            terminal=data.get("terminal") or {},
            exploration=data.get("exploration"),
            obstacles=data.get("obstacles") or [],
            params=data.get("params") or {},
            name=data.get("name", data["system"]),
        )

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "system": self.system,
            "noise_scale": {"alpha": self.alpha, "beta": self.beta},
            "horizon": self.horizon,
            "trial_length": self.trial_length,
            "seed": self.seed,
            "terminal": self.terminal,
            "exploration": self.exploration,
            "obstacles": self.obstacles,
            "params": self.params,
        }

    def replace(self, **kw) -> "Scenario":
        data = self.to_dict()
        ns = data.pop("noise_scale")
        data["alpha"], data["beta"] = ns["alpha"], ns["beta"]
        data.update(kw)
        d = {k: v for k, v in data.items()}
        out = Scenario(system=d["system"], alpha=d["alpha"], beta=d["beta"],
                       horizon=d["horizon"], trial_length=d["trial_length"],
                       seed=d["seed"], terminal=d["terminal"],
                       exploration=d["exploration"], obstacles=d["obstacles"],
                       params=d["params"], name=d["name"])
        return out


@dataclass
class BuiltScenario:
    scenario: Scenario
    model: DecomposedModel
    nb: NoiseBounds
    X: Interval
    U: Interval
    init_box: Interval
    cert: GainCertificate
    x_ref: Optional[np.ndarray] = None
    goal: Optional[np.ndarray] = None
    grid_spec: Optional[dict] = None
    exploration_weight: float = 0.0
    obstacles: list = dc_field(default_factory=list)
    extras: dict = dc_field(default_factory=dict)

    @property
    def position_offset(self) -> np.ndarray:
        return np.zeros(2) if self.goal is None else self.goal


def default_cstr_scenario(alpha: float = 1.0, beta: float = 1.0,
                          seed: int = 0, **overrides) -> Scenario:
    base = dict(system="cstr", alpha=alpha, beta=beta, horizon=CSTR_HORIZON,
                trial_length=CSTR_TRIAL_LENGTH, seed=seed, name="cstr")
    base.update(overrides)
    return Scenario(**base)


def default_unicycle_scenario(alpha: float = 1.0, beta: float = 1.0,
                              seed: int = 0, **overrides) -> Scenario:
    base = dict(
        system="unicycle", alpha=alpha, beta=beta, horizon=35,
        trial_length=100, seed=seed, name="unicycle",
        exploration={
            "grid": {"origin": [0.0, 0.0], "cell_size": 0.4, "nx": 20, "ny": 20},
            "lambda": 1.0,
            "ground_truth": {"density": 0.3},
        },
        obstacles=[{"center": [4.8, 3.4], "radius": 0.8, "margin": 0.05}],
        # The exploration program reoptimizes against a moving entropy field
        # every step, so the solver trades certificate polish for speed: a
        # loose stationarity target, short inner runs, stall-exit after two
        # flat outers, and a soft penalty restart between steps.
        params={
            "solver": {"kkt_tol": 1e-3, "inner_max": 60, "accept_stall": 2,
                       "accept_ftol": 1e-4, "rho_init": 1000.0},
            "warm_rho_cap": 10.0,
        },
    )
    base.update(overrides)
    return Scenario(**base)


def _build_cstr(sc: Scenario) -> BuiltScenario:
    model = cstr_model()
    nb = NoiseBounds(CSTR_W.scale(sc.alpha), CSTR_V.scale(sc.beta), CSTR_L)
    lqr_R = float(sc.params.get("lqr_R", 2.0))
    search = GainSearchConfig(fixed_L=CSTR_L, Qc=np.eye(2),
                              Rc=np.array([[lqr_R]]),
                              q_scales=(1.0,), r_scales=(1.0,),
                              include_zero_K=False)
    cert = synthesize(model, search)
    return BuiltScenario(scenario=sc, model=model, nb=nb, X=CSTR_X, U=CSTR_U,
                         init_box=CSTR_X0, cert=cert, x_ref=CSTR_XREF.copy(),
                         obstacles=[])


def _build_unicycle(sc: Scenario) -> BuiltScenario:
    p = sc.params
    dt = float(p.get("dt", 0.1))
    delta = float(p.get("delta", 0.05))
    b_v = float(p.get("b_v", 0.05))
    goal = np.asarray(p.get("goal", [7.0, 7.0]), dtype=float)
    grid = (sc.exploration or {}).get("grid", {})
    origin = np.asarray(grid.get("origin", [0.0, 0.0]), dtype=float)
    cell = float(grid.get("cell_size", 0.4))
    nx_cells = int(grid.get("nx", 20))
    ny_cells = int(grid.get("ny", 20))
    region_hi = origin + cell * np.array([nx_cells, ny_cells])
    X = Interval(
        np.array([origin[0] - goal[0], origin[1] - goal[1], -np.pi, -1.0]),
        np.array([region_hi[0] - goal[0], region_hi[1] - goal[1], np.pi, 1.0]))
    model = unicycle_model(delta=delta, b_v=b_v, dt=dt, X=X)
    u_max = float(p.get("u_max", 1.0))
    U = Interval([-u_max, -u_max], [u_max, u_max])
    w_box = Interval.from_center(np.zeros(4),
                                 np.asarray(p.get("w_half",
                                                  [0.002, 0.002, 0.004, 0.004]),
                                            dtype=float))
    v_box = Interval.from_center(np.zeros(4),
                                 np.asarray(p.get("v_half",
                                                  [0.02, 0.02, 0.01, 0.01]),
                                            dtype=float))
    start_abs = np.asarray(p.get("start", [1.0, 1.0]), dtype=float)
    theta0 = float(p.get("theta0", np.pi / 4))
    v0 = float(p.get("v0", 0.0))
    center0 = np.array([start_abs[0] - goal[0], start_abs[1] - goal[1],
                        theta0, v0])
    half0 = np.asarray(p.get("init_half", [0.05, 0.05, 0.05, 0.02]), dtype=float)
    init_box = Interval.from_center(center0, half0)

    # Gains: Kalman observer on the full-state measurement, LQR with light
    # position weights so the feedback does not widen the input tube.
    Qo = np.diag(p.get("kalman_Q", [1.0, 1.0, 1.0, 1.0]))
    Ro = np.diag(p.get("kalman_R", [1.0, 1.0, 1.0, 1.0]))
    Qc = np.diag(p.get("lqr_Q", [0.02, 0.02, 1.0, 1.0]))
    Rc = np.diag(p.get("lqr_R", [1.0, 1.0]))
    search = GainSearchConfig(Qc=Qc, Rc=Rc, Qo=Qo, Ro=Ro,
                              q_scales=tuple(p.get("q_scales", (0.1, 1.0, 10.0))),
                              r_scales=tuple(p.get("r_scales", (0.5, 1.0, 2.0))))
    cert = synthesize(model, search)
    nb = NoiseBounds(w_box.scale(sc.alpha), v_box.scale(sc.beta), cert.L)
    lam = float((sc.exploration or {}).get("lambda", 1.0))
    return BuiltScenario(scenario=sc, model=model, nb=nb, X=X, U=U,
                         init_box=init_box, cert=cert, goal=goal,
                         grid_spec={"origin": origin, "cell_size": cell,
                                    "nx": nx_cells, "ny": ny_cells},
                         exploration_weight=lam,
                         obstacles=[Obstacle(np.asarray(o["center"], float),
                                             float(o["radius"]),
                                             float(o.get("margin", 0.05)))
                                    for o in sc.obstacles],
                         extras={"dt": dt})


def build(sc: Scenario) -> BuiltScenario:
    if sc.system == "cstr":
        return _build_cstr(sc)
    if sc.system == "unicycle":
        return _build_unicycle(sc)
    raise ValueError(f"unknown system {sc.system!r}")


def make_controller(built: BuiltScenario, controller_id: str):
    """Instantiate a controller for a built scenario.

    ``irof``: interval predictor MPC with feedback tubes; ``openloop``: the
    same pipeline with K = 0 in the predictor (pure feedforward input);
    ``nominal``: point-prediction MPC on the observer estimate.  Terminal
    ingredients are re-derived per controller from its own width bound.
    Returns ``(controller, meta)`` with the data echoed into run metadata.
    """
    sc = built.scenario
    if controller_id not in CONTROLLER_IDS:
        raise ValueError(f"unknown controller {controller_id!r}")
    L = built.cert.L
    K = np.zeros_like(built.cert.K) if controller_id == "openloop" else built.cert.K
    cert = verify(built.model, L, K)
    try:
        wb = steady_width(built.model, built.nb, (L, K))
    except PredictionError:
        # No finite steady width (e.g. pure feedforward on a system with a
        # marginally stable mode); the horizon constraints still confine the
        # tubes, so the controller runs without the certificate.
        wb = None
    solver_over = sc.params.get("solver", {})
    solver = NlpConfig(**solver_over) if solver_over else NlpConfig()
    cfg = MpcConfig(N=sc.horizon, solver=solver,
                    eq9_literal=bool(sc.params.get("eq9_literal", False)),
                    warm_rho_cap=float(sc.params.get("warm_rho_cap", 1e4)))

    if sc.system == "cstr":
        tcfg = sc.terminal
        # Terminal law weights: the state weight must dominate the stage cost
        # for the decrease condition, and scaling the input weight by the same
        # factor as the tube LQR keeps the terminal law as gentle as the tube
        # gain (an aggressive law collapses the box-invariant direction).
        lqr_R = float(sc.params.get("lqr_R", 2.0))
        law_R = float(tcfg.get("law_R", 100.0 * lqr_R))
        ti = design_terminal_linear(
            built.model, built.nb, (L, K), built.X, built.U,
            np.asarray(tcfg.get("x_ref", CSTR_XREF), dtype=float),
            CSTR_H, np.array([[law_R]]),
            gamma=float(tcfg.get("gamma", 1.001)),
            reserve_frac=float(tcfg.get("reserve_frac", 0.04)),
            fit=float(tcfg.get("fit", 0.9)))
        cs = ConstraintSets(X=built.X, U=built.U, obstacles=[], terminal=ti)
        validate_terminal_sets(cs, built.model, built.nb, wb)
        mode = sc.params.get("stage_center", "reference")
        if mode == "equilibrium":
            u_ff_eq = ti.u_eq + K @ ti.center
            stage = QuadraticStage(CSTR_H, CSTR_R, ti.center, u_ff_eq)
        else:
            stage = QuadraticStage(CSTR_H, CSTR_R, CSTR_XREF)
        cost = MpcCost(stage=stage, terminal=ti.Vf,
                       input_stage=QuadraticStage(CSTR_H, CSTR_R, ti.center,
                                                  ti.u_eq))
    else:
        p = sc.params
        H = np.diag(p.get("stage_H", [1.0, 1.0, 0.01, 0.1]))
        R = np.diag(p.get("stage_R", [0.1, 0.1]))
        A_lin = unicycle_linearization(built.model, built.extras["dt"])
        # Explicit diagonal terminal law: heading and speed damp toward zero
        # with gains small enough to stay in the input box over the terminal
        # region; the position errors contract on their own.
        k_theta = float(p.get("terminal_k_theta", 0.35))
        k_speed = float(p.get("terminal_k_speed", 1.0))
        K_f = np.array([[0.0, 0.0, k_theta, 0.0], [0.0, 0.0, 0.0, k_speed]])
        ti = design_terminal_regulation(
            built.model, built.nb, H, R,
            radius=np.asarray(sc.terminal.get("radius",
                                              [1.5, 1.5, 2.5, 0.3]), float),
            A_lin=A_lin, K_f=K_f, gamma=float(sc.terminal.get("gamma", 1.001)))
        cs = ConstraintSets(X=built.X, U=built.U, obstacles=built.obstacles,
                            terminal=ti, position_offset=built.goal)
        # Steady-width margins do not apply here: tubes start near the
        # observer width and stay below the steady bound over the horizon,
        # and the per-step state rows confine them directly.
        validate_terminal_sets(cs, built.model, built.nb, None)
        stage = QuadraticStage(H, R, np.zeros(4), np.zeros(2))
        cost = MpcCost(stage=stage, terminal=ti.Vf,
                       exploration_weight=built.exploration_weight,
                       input_stage=QuadraticStage(H, R, np.zeros(4),
                                                  np.zeros(2)))

    cls = NominalController if controller_id == "nominal" else IrofController
    ctrl = cls(built.model, built.nb, (L, K), cs, cost, cfg, built.init_box)
    meta = {
        "controller": controller_id,
        "L": L.tolist(), "K": K.tolist(),
        "rho_obs": cert.rho_obs, "rho_ctl": cert.rho_ctl,
        "width_bound": None if wb is None else wb.delta_star.tolist(),
        "terminal": {"center": ti.center.tolist(),
                     "radius": ti.radius.tolist(),
                     "u_eq": ti.u_eq.tolist(),
                     "gamma": ti.gamma},
        "solver": {"feas_tol": solver.feas_tol, "kkt_tol": solver.kkt_tol},
        "eq9_literal": cfg.eq9_literal,
    }
    return ctrl, meta


def make_map(built: BuiltScenario, seed: int) -> Optional[OccupancyMap]:
    """Occupancy map with ground truth from the scenario or a seeded stream."""
    sc = built.scenario
    if sc.exploration is None or built.grid_spec is None:
        return None
    gt_spec = sc.exploration.get("ground_truth", {"density": 0.3})
    g = built.grid_spec
    if "cells" in gt_spec:
        truth = np.asarray(gt_spec["cells"], dtype=bool)
    else:
        rng = make_stream(seed, STREAM_TRUTH)
        truth = generate_ground_truth(g["nx"], g["ny"],
                                      float(gt_spec.get("density", 0.3)), rng)
    entropy_fn = shannon_entropy
    if sc.exploration.get("entropy") == "gini":
        entropy_fn = gini_entropy
    return OccupancyMap.create(g["origin"], g["cell_size"], truth, entropy_fn)
