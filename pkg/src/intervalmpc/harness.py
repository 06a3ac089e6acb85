"""Closed-loop trial runner with deterministic, reproducible outputs.

A trial simulates the true plant against a controller for ``trial_length``
steps.  All randomness is drawn up front from counter-based streams keyed by
``(seed, stream)``, so a rerun with the same scenario, controller and seed
produces byte-identical ``results.csv`` and ``results.json``; wall-clock
timings go to a separate ``timing.json``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .intervals import Interval
from .mpc import ControllerInfeasible
from .scenarios import (BuiltScenario, Scenario, STREAM_INIT, STREAM_MEASURE,
                        STREAM_PROCESS, build, make_controller, make_map,
                        make_stream, measure_output, simulate_plant)

CONTAIN_TOL = 1e-9


def sample_noise_sequences(built: BuiltScenario, seed: int, T: int):
    """Pre-draw process noise (T, n), measurement noise (T, p) and x0."""
    rng_w = make_stream(seed, STREAM_PROCESS)
    rng_v = make_stream(seed, STREAM_MEASURE)
    rng_0 = make_stream(seed, STREAM_INIT)
    w_seq = built.nb.w.sample(rng_w, size=T)
    v_seq = built.nb.v.sample(rng_v, size=T)
    x0 = built.init_box.sample(rng_0)
    return w_seq, v_seq, x0


@dataclass
class TrialResult:
    scenario: Scenario
    controller: str
    seed: int
    records: list
    meta: dict
    mse: float
    violations: dict
    step_seconds: list
    final_entropy: Optional[float] = None
    entropy_trace: list = dc_field(default_factory=list)
    failure: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failure is None and not any(self.violations.values())


def _violations(records, built: BuiltScenario, entropy_trace) -> dict:
    X, U = built.X, built.U
    counts = {"state": 0, "input": 0, "containment": 0, "obstacle": 0,
              "entropy": 0}
    for r in records:
        x = np.asarray(r["x"])
        if np.any(x > X.hi + CONTAIN_TOL) or np.any(x < X.lo - CONTAIN_TOL):
            counts["state"] += 1
        u = np.asarray(r["u"])
        if np.any(u > U.hi + CONTAIN_TOL) or np.any(u < U.lo - CONTAIN_TOL):
            counts["input"] += 1
        lo, hi = np.asarray(r["box_lo"]), np.asarray(r["box_hi"])
        if np.any(x > hi + CONTAIN_TOL) or np.any(x < lo - CONTAIN_TOL):
            counts["containment"] += 1
        if built.obstacles:
            pos = x[:2] + built.position_offset
            for ob in built.obstacles:
                if np.linalg.norm(pos - ob.center) < ob.radius - CONTAIN_TOL:
                    counts["obstacle"] += 1
    for a, b in zip(entropy_trace, entropy_trace[1:]):
        if b > a + 1e-12:
            counts["entropy"] += 1
    return counts


def run_trial(sc: Scenario, controller_id: str, seed: int,
              built: Optional[BuiltScenario] = None) -> TrialResult:
    built = built or build(sc)
    ctrl, meta = make_controller(built, controller_id)
    T = sc.trial_length
    w_seq, v_seq, x0 = sample_noise_sequences(built, seed, T)
    occ_map = make_map(built, seed)
    ref = built.x_ref if built.x_ref is not None else np.zeros(built.model.nx)

    x = x0
    records = []
    entropy_trace = []
    step_seconds = []
    failure = None
    for k in range(T):
        y = measure_output(built.model, x, v_seq[k])
        if occ_map is not None:
            occ_map = occ_map.measure(x[:2] + built.position_offset)
            entropy_trace.append(occ_map.total_entropy())
            if ctrl.cost.exploration_weight > 0.0:
                ctrl.cost.entropy_field = occ_map.entropy_interpolator()
        t0 = time.perf_counter()
        try:
            out = ctrl.step(y)
        except ControllerInfeasible as exc:
            failure = f"step {k}: {exc}"
            break
        step_seconds.append(time.perf_counter() - t0)
        records.append({
            "k": k,
            "x": x.copy(),
            "y": np.atleast_1d(y).copy(),
            "xhat": out.est_point,
            "box_lo": out.est_box.lo.copy(),
            "box_hi": out.est_box.hi.copy(),
            "u": np.atleast_1d(out.u).copy(),
            "u_ff": np.atleast_1d(out.u_ff[0]).copy(),
            "status": out.solution.status,
            "objective": float(out.solution.objective_value),
            "solver_violation": float(out.solution.max_violation),
            "candidate_violation": float(out.candidate_violation),
            "outer_iterations": int(out.solution.iterations),
            "entropy": entropy_trace[-1] if entropy_trace else float("nan"),
        })
        x = simulate_plant(built.model, x, out.u, w_seq[k])

    mse = float(np.mean([float(np.sum((np.asarray(r["x"]) - ref) ** 2))
                         for r in records])) if records else float("nan")
    violations = _violations(records, built, entropy_trace)
    return TrialResult(scenario=sc, controller=controller_id, seed=seed,
                       records=records, meta=meta, mse=mse,
                       violations=violations, step_seconds=step_seconds,
                       final_entropy=entropy_trace[-1] if entropy_trace else None,
                       entropy_trace=entropy_trace, failure=failure)


# ---------------------------------------------------------------------------
# Serialization (deterministic: repr floats, sorted JSON keys, LF newlines)

def _csv_text(result: TrialResult) -> str:
    if not result.records:
        return ""
    r0 = result.records[0]
    n = len(r0["x"])
    p = len(r0["y"])
    m = len(r0["u"])
    cols = (["k"] + [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(p)]
            + [f"xhat{i}" for i in range(n)]
            + [f"box_lo{i}" for i in range(n)] + [f"box_hi{i}" for i in range(n)]
            + [f"u{j}" for j in range(m)] + [f"u_ff{j}" for j in range(m)]
            + ["status", "objective", "solver_violation",
               "candidate_violation", "outer_iterations", "entropy"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in result.records:
        row = ([r["k"]]
               + [repr(float(v)) for v in r["x"]]
               + [repr(float(v)) for v in r["y"]]
               + [repr(float(v)) for v in r["xhat"]]
               + [repr(float(v)) for v in r["box_lo"]]
               + [repr(float(v)) for v in r["box_hi"]]
               + [repr(float(v)) for v in r["u"]]
               + [repr(float(v)) for v in r["u_ff"]]
               + [r["status"], repr(r["objective"]),
                  repr(r["solver_violation"]), repr(r["candidate_violation"]),
                  r["outer_iterations"], repr(r["entropy"])])
        writer.writerow(row)
    return buf.getvalue()


def _json_text(result: TrialResult) -> str:
    payload = {
        "scenario": result.scenario.to_dict(),
        "controller": result.controller,
        "seed": result.seed,
        "meta": result.meta,
        "mse": result.mse,
        "violations": result.violations,
        "final_entropy": result.final_entropy,
        "entropy_trace": result.entropy_trace,
        "steps": len(result.records),
        "failure": result.failure,
    }
    return json.dumps(payload, sort_keys=True, indent=2,
                      default=lambda o: repr(o)) + "\n"


def write_trial(result: TrialResult, out_dir: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, "results.csv"),
        "json": os.path.join(out_dir, "results.json"),
        "timing": os.path.join(out_dir, "timing.json"),
    }
    with open(paths["csv"], "w", newline="") as fh:
        fh.write(_csv_text(result))
    with open(paths["json"], "w") as fh:
        fh.write(_json_text(result))
    secs = result.step_seconds
    timing = {
        "steps": len(secs),
        "total_seconds": sum(secs),
        "median_step_seconds": float(np.median(secs)) if secs else None,
        "max_step_seconds": max(secs) if secs else None,
    }
    with open(paths["timing"], "w") as fh:
        json.dump(timing, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return paths


# ---------------------------------------------------------------------------
# Sweeps

def sweep(sc: Scenario, param: str, values, seeds, controllers=("irof", "openloop")):
    """Paired noise-scale sweep.

    ``param`` is ``alpha`` or ``beta``; every (value, controller) cell uses
    the same seed list, so realizations are paired across controllers and
    noise levels (scaling a box scales the same unit draw).  Returns a list
    of row dicts with keys param, value, controller, mse_mean, mse_std,
    violations.
    """
    if param not in ("alpha", "beta"):
        raise ValueError("sweep parameter must be alpha or beta")
    rows = []
    for value in values:
        variant = sc.replace(**{param: float(value)})
        built = build(variant)
        for controller in controllers:
            mses = []
            violations = 0
            for seed in seeds:
                result = run_trial(variant, controller, int(seed), built=built)
                if result.failure is not None:
                    raise RuntimeError(
                        f"{controller} infeasible at {param}={value}, "
                        f"seed {seed}: {result.failure}")
                mses.append(result.mse)
                violations += sum(result.violations.values())
            rows.append({
                "param": param,
                "value": float(value),
                "controller": controller,
                "mse_mean": float(np.mean(mses)),
                "mse_std": float(np.std(mses)),
                "violations": violations,
            })
    return rows


def write_sweep(rows, path: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["param", "value", "controller", "mse_mean",
                         "mse_std", "violations"])
        for r in rows:
            writer.writerow([r["param"], repr(r["value"]), r["controller"],
                             repr(r["mse_mean"]), repr(r["mse_std"]),
                             r["violations"]])


def verify_gains_report(sc: Scenario) -> dict:
    """Certified contraction radii and steady widths for a scenario."""
    from .prediction import steady_width

    built = build(sc)
    wb = steady_width(built.model, built.nb, built.cert)
    return {
        "scenario": sc.name,
        "L": built.cert.L.tolist(),
        "K": built.cert.K.tolist(),
        "rho_obs": built.cert.rho_obs,
        "rho_ctl": built.cert.rho_ctl,
        "rho_joint": wb.rho,
        "delta_star": wb.delta_star.tolist(),
        "delta_z": wb.delta_z.tolist(),
        "delta_e": wb.delta_e.tolist(),
    }
