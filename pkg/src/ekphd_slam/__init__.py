"""mmWave radio-SLAM with an extended Kalman PHD filter.

The package tracks a vehicle (position, heading, clock bias) while mapping
reflection and scattering landmarks from delay/DOA/DOD measurements, and
evaluates the result against recursive Fisher-information error bounds and
the GOSPA metric.
"""

__version__ = "0.1.0"

from .association import Assignment, CostMatrix, auction_assign, build_cost_matrix, pair_cost
from .bounds import FimState, fim_init, fim_step, leb, peb
from .config import ExperimentConfig, parse_config
from .geometry import (
    LandmarkEstimate,
    LandmarkType,
    Measurement,
    birth_covariance,
    birth_mean,
    incidence_point,
    measure,
    measurement_jacobian,
    wrap_angle,
)
from .metrics import GospaResult, gospa, rmse_series
from .motion import MotionParams, VehicleState, ct_jacobian, ct_transition, predict_vehicle
from .phd import (
    FilterParams,
    FilterState,
    GaussianComponent,
    MapPhd,
    extract_landmarks,
    init,
    joint_update,
    make_births,
    map_update,
    predict_map,
    reduce,
    slam_step,
)
from .sim import (
    RunRecord,
    Scenario,
    default_scenario,
    detection_probability,
    generate_measurements,
    ground_truth_step,
    simulate_run,
)

__all__ = [
    "Assignment",
    "CostMatrix",
    "ExperimentConfig",
    "FilterParams",
    "FilterState",
    "FimState",
    "GaussianComponent",
    "GospaResult",
    "LandmarkEstimate",
    "LandmarkType",
    "MapPhd",
    "Measurement",
    "MotionParams",
    "RunRecord",
    "Scenario",
    "VehicleState",
    "auction_assign",
    "birth_covariance",
    "birth_mean",
    "build_cost_matrix",
    "ct_jacobian",
    "ct_transition",
    "default_scenario",
    "detection_probability",
    "extract_landmarks",
    "fim_init",
    "fim_step",
    "generate_measurements",
    "gospa",
    "ground_truth_step",
    "incidence_point",
    "init",
    "joint_update",
    "leb",
    "make_births",
    "map_update",
    "measure",
    "measurement_jacobian",
    "pair_cost",
    "parse_config",
    "peb",
    "predict_map",
    "predict_vehicle",
    "reduce",
    "rmse_series",
    "simulate_run",
    "slam_step",
    "wrap_angle",
]
