"""Ground-truth world and measurement generation for the circular-road scenario.

The default world has one BS, four VAs mirrored across the surrounding walls
and four SPs with uniformly random heights. The vehicle drives a circle of
radius v/omega; the truth trajectory is noise free (process noise enters the
filter model only).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import LandmarkType, Measurement, measure, wrap_angle
from .motion import MotionParams, ct_transition


@dataclass
class Scenario:
    """Ground-truth world: landmark positions, FOV rules, noise and clutter."""

    bs: np.ndarray
    vas: list
    sps: list
    sp_visibility_radius: float = 50.0
    max_range: float = 200.0
    clutter_lambda: float = 1.0
    meas_cov: np.ndarray = field(
        default_factory=lambda: np.diag([1e-2, 1e-4, 1e-4, 1e-4, 1e-4])
    )
    ue_height: float = 0.0

    def __post_init__(self):
        self.bs = np.asarray(self.bs, dtype=float)
        self.vas = [np.asarray(v, dtype=float) for v in self.vas]
        self.sps = [np.asarray(s, dtype=float) for s in self.sps]
        self.meas_cov = np.asarray(self.meas_cov, dtype=float)

    @property
    def clutter_intensity(self) -> float:
        """Uniform clutter density over the 5-D measurement support."""
        return self.clutter_lambda / (4.0 * self.max_range * np.pi**4)

    def landmarks(self) -> list:
        """(id, position, type) for every unknown landmark (BS excluded)."""
        out = [(f"va{i}", va, LandmarkType.VA) for i, va in enumerate(self.vas)]
        out += [(f"sp{i}", sp, LandmarkType.SP) for i, sp in enumerate(self.sps)]
        return out

    def in_fov(self, ue, lm_pos, kind: LandmarkType) -> bool:
        """SPs are visible within their radius; BS/VA paths within BS range."""
        p = np.array([ue[0], ue[1], self.ue_height])
        if kind is LandmarkType.SP:
            return bool(np.linalg.norm(np.asarray(lm_pos) - p) <= self.sp_visibility_radius)
        return bool(np.linalg.norm(self.bs - p) <= self.max_range)


def default_scenario(seed: int = 0) -> Scenario:
    """The standard world; SP heights drawn U(0, 40) from the seed."""
    rng = np.random.default_rng(seed)
    heights = rng.uniform(0.0, 40.0, size=4)
    sps = [
        np.array([65.0, 65.0, heights[0]]),
        np.array([-65.0, 65.0, heights[1]]),
        np.array([-65.0, -65.0, heights[2]]),
        np.array([65.0, -65.0, heights[3]]),
    ]
    vas = [
        np.array([200.0, 0.0, 40.0]),
        np.array([0.0, 200.0, 40.0]),
        np.array([-200.0, 0.0, 40.0]),
        np.array([0.0, -200.0, 40.0]),
    ]
    return Scenario(bs=np.array([0.0, 0.0, 40.0]), vas=vas, sps=sps)


def detection_probability(
    ue, lm_pos, kind: LandmarkType, scenario: Scenario, p_d: float = 0.9
) -> float:
    """Adaptive detection probability: p_d inside the FOV, 0 outside."""
    return p_d if scenario.in_fov(ue, lm_pos, kind) else 0.0


def survival_probability(
    ue, lm_pos, kind: LandmarkType, scenario: Scenario, p_s: float = 0.99
) -> float:
    """Adaptive survival probability: p_s inside the FOV, 1 outside."""
    return p_s if scenario.in_fov(ue, lm_pos, kind) else 1.0


def default_motion() -> MotionParams:
    return MotionParams(
        v=22.22,
        omega=np.pi / 10.0,
        T=0.5,
        Q=np.diag([0.2**2, 0.2**2, 0.001**2, 0.2**2]),
    )


def default_x0(motion: MotionParams, clock_bias: float = 300.0) -> np.ndarray:
    radius = motion.v / motion.omega if abs(motion.omega) > 1e-12 else 0.0
    return np.array([radius, 0.0, np.pi / 2.0, clock_bias])


def ground_truth_step(k: int, v: float, omega: float, T: float, x0) -> np.ndarray:
    """Noise-free k-fold iteration of the turn model from x0."""
    params = MotionParams(v=v, omega=omega, T=T, Q=np.zeros((4, 4)))
    x = np.asarray(x0, dtype=float)
    for _ in range(k):
        x = ct_transition(x, params)
    return x


def ground_truth_trajectory(n_steps: int, motion: MotionParams, x0) -> np.ndarray:
    """States at epochs 0..n_steps-1 (epoch 0 is x0 itself)."""
    noise_free = MotionParams(v=motion.v, omega=motion.omega, T=motion.T, Q=np.zeros((4, 4)))
    out = np.zeros((n_steps, 4))
    x = np.asarray(x0, dtype=float)
    for k in range(n_steps):
        out[k] = x
        x = ct_transition(x, noise_free)
    return out


@dataclass
class LabeledMeasurement:
    """Measurement plus its origin: a landmark id, 'bs', or None for clutter."""

    measurement: Measurement
    origin: object


@dataclass
class RunRecord:
    """Per-step truth, labeled measurement sets and (optionally) filter output."""

    truth: np.ndarray
    measurements: list
    estimates: list = field(default_factory=list)


def generate_measurements(
    ue_true,
    scenario: Scenario,
    rng: np.random.Generator,
    p_d: float = 0.9,
    noise: bool = True,
) -> list:
    """Detections (with probability p_d inside the FOV) plus Poisson clutter.

    Clutter components are uniform: range over [0, max_range), azimuths over
    [-pi, pi), elevations over [-pi/2, pi/2); set order is shuffled.
    """
    ue_true = np.asarray(ue_true, dtype=float)
    cov = scenario.meas_cov
    out = []
    sources = [("bs", scenario.bs, LandmarkType.BS)] + scenario.landmarks()
    for lid, pos, kind in sources:
        if rng.random() >= detection_probability(ue_true, pos, kind, scenario, p_d):
            continue
        z = measure(ue_true, pos, kind, scenario.bs, scenario.ue_height)
        if noise:
            z = z + rng.multivariate_normal(np.zeros(5), cov)
            z[1:] = wrap_angle(z[1:])
        out.append(LabeledMeasurement(Measurement(z, cov), lid))

    for _ in range(rng.poisson(scenario.clutter_lambda)):
        z = np.array(
            [
                rng.uniform(0.0, scenario.max_range),
                rng.uniform(-np.pi, np.pi),
                rng.uniform(-np.pi / 2.0, np.pi / 2.0),
                rng.uniform(-np.pi, np.pi),
                rng.uniform(-np.pi / 2.0, np.pi / 2.0),
            ]
        )
        out.append(LabeledMeasurement(Measurement(z, cov), None))

    order = rng.permutation(len(out))
    return [out[i] for i in order]


def simulate_run(
    scenario: Scenario,
    motion: MotionParams,
    n_steps: int,
    rng: np.random.Generator,
    x0=None,
    p_d: float = 0.9,
    noise: bool = True,
) -> RunRecord:
    """Truth trajectory plus labeled measurement sets for epochs 0..n_steps-1."""
    if x0 is None:
        x0 = default_x0(motion)
    truth = ground_truth_trajectory(n_steps, motion, x0)
    steps = [
        generate_measurements(truth[k], scenario, rng, p_d=p_d, noise=noise)
        for k in range(n_steps)
    ]
    return RunRecord(truth=truth, measurements=steps)
