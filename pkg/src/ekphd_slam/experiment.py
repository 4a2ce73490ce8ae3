"""Monte-Carlo experiment driver: simulation, filtering, bounds, CSV emission.

Output files (written by the coordinator only):
  rmse.csv     per-step RMSE across runs (run column is "all")
  gospa.csv    per-run per-step GOSPA decomposition (slam mode only)
  bounds.csv   per-step PEB (full SLAM and known map) and per-landmark LEB
  timing.csv   per-run per-step filter wall times (prediction/update)
  run_meta.json  resolved configuration, seed and timing summary

Every row carries run id, cycle index, step-within-cycle and global step, so
downstream aggregation needs no positional assumptions. With a fixed seed the
statistical outputs are byte-identical between invocations; timing values are
wall-clock and naturally vary.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import fim_init, fim_step, leb, peb
from .config import ExperimentConfig, config_to_dict
from .errors import UnknownLandmark
from .geometry import wrap_angle
from .metrics import gospa, rmse_series
from .motion import MotionParams, VehicleState, ct_transition
from .phd import FilterParams, extract_landmarks, init, slam_step
from .sim import (
    Scenario,
    default_scenario,
    default_x0,
    generate_measurements,
    ground_truth_trajectory,
)


def build_scenario(cfg: ExperimentConfig) -> Scenario:
    sc = cfg.scenario
    base = default_scenario(cfg.seed)
    if sc.sp_heights is not None:
        sps = [np.array([s[0], s[1], h]) for s, h in zip(base.sps, sc.sp_heights)]
    else:
        sps = base.sps
    cov = np.diag([sc.range_var] + [sc.angle_var] * 4)
    return Scenario(
        bs=base.bs,
        vas=base.vas,
        sps=sps,
        sp_visibility_radius=sc.sp_visibility_radius,
        max_range=sc.max_range,
        clutter_lambda=sc.clutter_lambda,
        meas_cov=cov,
        ue_height=sc.ue_height,
    )


def build_motion(cfg: ExperimentConfig) -> MotionParams:
    m = cfg.motion
    return MotionParams(v=m.v, omega=m.omega, T=m.T, Q=np.diag(m.q_diag))


def build_filter_params(cfg: ExperimentConfig, scenario: Scenario) -> FilterParams:
    f = cfg.filter
    return FilterParams(
        p_d=f.p_d,
        p_s=f.p_s,
        p_b=0.0 if cfg.mode == "los-only" else f.p_b,
        q_map=f.q_map * np.eye(3),
        prune_log_threshold=float(np.log(f.prune_threshold)),
        merge_threshold=f.merge_threshold,
        cap=f.cap,
        gate_tail_prob=f.gate_tail_prob,
        clutter_intensity=scenario.clutter_intensity,
        extraction_threshold=f.extraction_threshold,
        ue_height=scenario.ue_height,
        fov=scenario.in_fov,
    )


def _noisy_trajectory(x0, n_steps: int, motion: MotionParams, rng) -> np.ndarray:
    """Truth evolving with the motion model's process noise, from exact x0."""
    out = np.zeros((n_steps, 4))
    x = np.asarray(x0, dtype=float)
    out[0] = x
    for k in range(1, n_steps):
        x = ct_transition(x, motion) + rng.multivariate_normal(np.zeros(4), motion.Q)
        x[2] = wrap_angle(x[2])
        out[k] = x
    return out


@dataclasses.dataclass
class RunResult:
    err_pos: np.ndarray
    err_heading: np.ndarray
    err_bias: np.ndarray
    gospa_rows: np.ndarray | None  # (N, 4): total, localization, missed, false
    timing: np.ndarray  # (N, 2): predict s, update s
    estimates: np.ndarray  # (N, 4) posterior vehicle means


def run_single(
    cfg: ExperimentConfig,
    scenario: Scenario,
    truth: np.ndarray,
    seed_entropy,
) -> RunResult:
    """One Monte-Carlo run over the full trajectory."""
    rng = np.random.default_rng(seed_entropy)
    motion = build_motion(cfg)
    params = build_filter_params(cfg, scenario)
    if cfg.noisy_truth:
        truth = _noisy_trajectory(truth[0], truth.shape[0], motion, rng)
    x0 = truth[0]
    P0 = np.diag(cfg.p0_diag)
    m0 = rng.multivariate_normal(x0, P0)
    m0[2] = wrap_angle(m0[2])
    state = init(scenario.bs, VehicleState(m0, P0))

    true_landmarks = [pos for _, pos, _ in scenario.landmarks()]
    n = truth.shape[0]
    err_pos = np.zeros(n)
    err_heading = np.zeros(n)
    err_bias = np.zeros(n)
    timing = np.zeros((n, 2))
    estimates = np.zeros((n, 4))
    gospa_rows = np.zeros((n, 4)) if cfg.mode == "slam" else None

    for k in range(n):
        labeled = generate_measurements(truth[k], scenario, rng, p_d=cfg.filter.p_d)
        state = slam_step(
            state, [lm.measurement for lm in labeled], motion, params, scenario.bs
        )
        est = state.ue.mean
        estimates[k] = est
        err_pos[k] = float(np.hypot(est[0] - truth[k, 0], est[1] - truth[k, 1]))
        err_heading[k] = float(wrap_angle(est[2] - truth[k, 2]))
        err_bias[k] = float(est[3] - truth[k, 3])
        timing[k] = (state.timing.predict_seconds, state.timing.update_seconds)
        if gospa_rows is not None:
            ests = [e.pos for e in extract_landmarks(state.map, params.extraction_threshold)]
            g = gospa(ests, true_landmarks, cfg.gospa.p, cfg.gospa.c, cfg.gospa.alpha)
            gospa_rows[k] = (g.total, g.localization, g.missed, g.false_alarm)

    return RunResult(err_pos, err_heading, err_bias, gospa_rows, timing, estimates)


def compute_bounds(cfg: ExperimentConfig, scenario: Scenario, truth: np.ndarray) -> dict:
    """PEB/LEB series along the true trajectory (deterministic)."""
    motion = build_motion(cfg)
    P0 = np.diag(cfg.p0_diag)
    sigma = scenario.meas_cov
    q_map = cfg.filter.q_map * np.eye(3)
    lids = [lid for lid, _, _ in scenario.landmarks()]

    fim = fim_init(P0)
    fim_known = fim_init(P0)
    n = truth.shape[0]
    peb_full = np.zeros(n)
    peb_known = np.zeros(n)
    lebs = np.full((n, len(lids)), np.nan)
    for k in range(n):
        kwargs = dict(
            scenario=scenario,
            motion=motion,
            sigma=sigma,
            p_d=cfg.filter.p_d,
            landmark_noise=cfg.bounds.landmark_noise,
            q_map=q_map,
            include_prediction=k > 0,
        )
        fim = fim_step(fim, truth[k], known_map=False, **kwargs)
        fim_known = fim_step(fim_known, truth[k], known_map=True, **kwargs)
        peb_full[k] = peb(fim)
        peb_known[k] = peb(fim_known)
        for col, lid in enumerate(lids):
            try:
                lebs[k, col] = leb(fim, lid)
            except UnknownLandmark:
                pass
    return {"peb": peb_full, "peb_known_map": peb_known, "lebs": lebs, "lids": lids}


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _step_labels(cfg: ExperimentConfig, k: int) -> tuple:
    return str(k // cfg.steps_per_cycle), str(k % cfg.steps_per_cycle), str(k)


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run the configured Monte-Carlo study and write all output files."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = build_scenario(cfg)
    motion = build_motion(cfg)
    n_steps = cfg.cycles * cfg.steps_per_cycle
    truth = ground_truth_trajectory(n_steps, motion, default_x0(motion, cfg.initial_bias))

    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.mc_runs)
    wall_start = time.perf_counter()
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(
                pool.map(run_single, [cfg] * cfg.mc_runs, [scenario] * cfg.mc_runs,
                         [truth] * cfg.mc_runs, seeds)
            )
    else:
        results = [run_single(cfg, scenario, truth, s) for s in seeds]
    wall_seconds = time.perf_counter() - wall_start

    # rmse.csv — cross-run aggregate, one row per step.
    rmse_pos = rmse_series([r.err_pos for r in results])
    rmse_heading = rmse_series([r.err_heading for r in results], angular=True)
    rmse_bias = rmse_series([r.err_bias for r in results])
    rows = []
    for k in range(n_steps):
        cycle, kk, step = _step_labels(cfg, k)
        rows.append(
            ["all", cycle, kk, step, _fmt(rmse_pos[k]), _fmt(rmse_heading[k]), _fmt(rmse_bias[k])]
        )
    _write_csv(
        out / "rmse.csv",
        ["run", "cycle", "k", "step", "rmse_pos_m", "rmse_heading_rad", "rmse_bias_m"],
        rows,
    )

    # gospa.csv — per run, slam mode only.
    if cfg.mode == "slam":
        rows = []
        for run_id, r in enumerate(results):
            for k in range(n_steps):
                cycle, kk, step = _step_labels(cfg, k)
                g = r.gospa_rows[k]
                rows.append(
                    [str(run_id), cycle, kk, step, _fmt(g[0]), _fmt(g[1]), _fmt(g[2]), _fmt(g[3])]
                )
        _write_csv(
            out / "gospa.csv",
            ["run", "cycle", "k", "step", "gospa", "localization", "missed", "false_alarm"],
            rows,
        )

    # bounds.csv — deterministic, one row per step.
    bounds = compute_bounds(cfg, scenario, truth)
    header = ["run", "cycle", "k", "step", "peb_m", "peb_known_map_m"]
    header += [f"leb_{lid}_m" for lid in bounds["lids"]]
    rows = []
    for k in range(n_steps):
        cycle, kk, step = _step_labels(cfg, k)
        row = ["all", cycle, kk, step, _fmt(bounds["peb"][k]), _fmt(bounds["peb_known_map"][k])]
        row += [_fmt(v) for v in bounds["lebs"][k]]
        rows.append(row)
    _write_csv(out / "bounds.csv", header, rows)

    # timing.csv — per run per step, milliseconds.
    rows = []
    for run_id, r in enumerate(results):
        for k in range(n_steps):
            cycle, kk, step = _step_labels(cfg, k)
            pred_ms = 1e3 * r.timing[k, 0]
            upd_ms = 1e3 * r.timing[k, 1]
            rows.append(
                [str(run_id), cycle, kk, step, _fmt(pred_ms), _fmt(upd_ms), _fmt(pred_ms + upd_ms)]
            )
    _write_csv(
        out / "timing.csv",
        ["run", "cycle", "k", "step", "predict_ms", "update_ms", "total_ms"],
        rows,
    )

    all_timing = np.concatenate([r.timing for r in results], axis=0)
    summary = {
        "version": __version__,
        "config": config_to_dict(cfg),
        "n_steps": n_steps,
        "wall_seconds": wall_seconds,
        "timing_summary_ms": {
            "mean_predict": float(1e3 * all_timing[:, 0].mean()),
            "mean_update": float(1e3 * all_timing[:, 1].mean()),
            "mean_total": float(1e3 * all_timing.sum(axis=1).mean()),
        },
        "outputs": sorted(p.name for p in out.glob("*.csv")),
    }
    with open(out / "run_meta.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def write_simulation(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Write a single simulated run: truth.csv and measurements.csv."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = build_scenario(cfg)
    motion = build_motion(cfg)
    n_steps = cfg.cycles * cfg.steps_per_cycle
    truth = ground_truth_trajectory(n_steps, motion, default_x0(motion, cfg.initial_bias))
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])

    rows = []
    for k in range(n_steps):
        cycle, kk, step = _step_labels(cfg, k)
        rows.append([cycle, kk, step] + [_fmt(v) for v in truth[k]])
    _write_csv(out / "truth.csv", ["cycle", "k", "step", "x_m", "y_m", "heading_rad", "bias_m"], rows)

    rows = []
    for k in range(n_steps):
        cycle, kk, step = _step_labels(cfg, k)
        for lm in generate_measurements(truth[k], scenario, rng, p_d=cfg.filter.p_d):
            origin = lm.origin if lm.origin is not None else "clutter"
            rows.append([cycle, kk, step, origin] + [_fmt(v) for v in lm.measurement.z])
    _write_csv(
        out / "measurements.csv",
        ["cycle", "k", "step", "origin", "d_m", "doa_az_rad", "doa_el_rad", "dod_az_rad", "dod_el_rad"],
        rows,
    )
    return {"n_steps": n_steps, "outputs": ["truth.csv", "measurements.csv"]}


def write_single_run(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Run the filter once and write per-step estimates to estimates.csv."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = build_scenario(cfg)
    motion = build_motion(cfg)
    n_steps = cfg.cycles * cfg.steps_per_cycle
    truth = ground_truth_trajectory(n_steps, motion, default_x0(motion, cfg.initial_bias))
    seed = np.random.SeedSequence(cfg.seed).spawn(1)[0]
    result = run_single(cfg, scenario, truth, seed)

    rows = []
    for k in range(n_steps):
        cycle, kk, step = _step_labels(cfg, k)
        rows.append(
            [cycle, kk, step]
            + [_fmt(v) for v in result.estimates[k]]
            + [_fmt(result.err_pos[k]), _fmt(result.err_heading[k]), _fmt(result.err_bias[k])]
        )
    _write_csv(
        out / "estimates.csv",
        ["cycle", "k", "step", "x_m", "y_m", "heading_rad", "bias_m",
         "err_pos_m", "err_heading_rad", "err_bias_m"],
        rows,
    )
    return {"n_steps": n_steps, "outputs": ["estimates.csv"]}


def write_bounds(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Compute and write bounds.csv only."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = build_scenario(cfg)
    motion = build_motion(cfg)
    n_steps = cfg.cycles * cfg.steps_per_cycle
    truth = ground_truth_trajectory(n_steps, motion, default_x0(motion, cfg.initial_bias))
    bounds = compute_bounds(cfg, scenario, truth)
    header = ["run", "cycle", "k", "step", "peb_m", "peb_known_map_m"]
    header += [f"leb_{lid}_m" for lid in bounds["lids"]]
    rows = []
    for k in range(n_steps):
        cycle, kk, step = _step_labels(cfg, k)
        row = ["all", cycle, kk, step, _fmt(bounds["peb"][k]), _fmt(bounds["peb_known_map"][k])]
        row += [_fmt(v) for v in bounds["lebs"][k]]
        rows.append(row)
    _write_csv(out / "bounds.csv", header, rows)
    return {"n_steps": n_steps, "outputs": ["bounds.csv"]}
