"""Recursive Fisher information for the stacked vehicle+landmark state.

The information recursion assumes known data association and evaluates all
Jacobians at the true trajectory and true map. Landmarks join the state the
first time they enter the field of view; their initial information block is
the single-observation information at the entering geometry (matching the
filter's birth covariance with zero vehicle uncertainty), and they start
contributing measurement information at their next in-FOV step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SingularFim, SingularPrior, UnknownLandmark
from .geometry import LandmarkType, measurement_jacobian
from .motion import MotionParams, ct_jacobian
from .sim import Scenario, detection_probability

UE_DIM = 4
LM_DIM = 3


@dataclass
class FimState:
    info: np.ndarray
    landmark_index: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.info.shape[0]


def fim_init(P0, landmarks=()) -> FimState:
    """Initial information: inverse vehicle prior plus optional landmark blocks.

    landmarks: iterable of (landmark id, 3x3 information block).
    """
    P0 = np.asarray(P0, dtype=float)
    try:
        ue_info = np.linalg.inv(P0)
    except np.linalg.LinAlgError as exc:
        raise SingularPrior("vehicle prior covariance is singular") from exc
    if not np.all(np.isfinite(ue_info)) or np.linalg.cond(P0) > 1e14:
        raise SingularPrior("vehicle prior covariance is singular")

    blocks = list(landmarks)
    dim = UE_DIM + LM_DIM * len(blocks)
    J = np.zeros((dim, dim))
    J[:UE_DIM, :UE_DIM] = ue_info
    index = {}
    for s, (lid, block) in enumerate(blocks):
        a = UE_DIM + LM_DIM * s
        J[a : a + LM_DIM, a : a + LM_DIM] = np.asarray(block, dtype=float)
        index[lid] = a
    return FimState(info=0.5 * (J + J.T), landmark_index=index)


def _landmark_noise_block(mode: str, q_map: np.ndarray) -> np.ndarray:
    if mode == "map":
        return q_map
    if mode == "identity":
        return np.eye(3)
    if mode == "zero":
        return np.zeros((3, 3))
    raise ValueError(f"unknown landmark noise mode {mode!r}")


def _first_observation_info(ue_true, pos, kind, bs, sigma, ue_height) -> np.ndarray:
    G_lm = measurement_jacobian(ue_true, pos, kind, bs, ue_height)[:, 4:7]
    return G_lm.T @ np.linalg.solve(sigma, G_lm)


def fim_step(
    fim: FimState,
    ue_true,
    scenario: Scenario,
    motion: MotionParams,
    sigma,
    p_d: float = 0.9,
    known_map: bool = False,
    landmark_noise: str = "map",
    q_map=None,
    include_prediction: bool = True,
) -> FimState:
    """One information recursion step at the true state.

    The data term sums, over landmarks in the field of view, the measurement
    information weighted by the detection probability; the prior term
    propagates the previous information through the motion model. With
    known_map=True the state is the vehicle alone and every visible landmark
    contributes through the vehicle columns only.
    """
    ue_true = np.asarray(ue_true, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    q_map = 1e-4 * np.eye(3) if q_map is None else np.asarray(q_map, dtype=float)
    bs = scenario.bs
    h = scenario.ue_height

    index = dict(fim.landmark_index)
    n_lm = 0 if known_map else len(index)
    dim = UE_DIM + LM_DIM * n_lm

    # Prior term: (Q + F J^{-1} F^T)^{-1}, landmarks static.
    if include_prediction:
        F = np.eye(dim)
        F[:UE_DIM, :UE_DIM] = ct_jacobian(ue_true, motion)
        Q = np.zeros((dim, dim))
        Q[:UE_DIM, :UE_DIM] = motion.Q
        noise = _landmark_noise_block(landmark_noise, q_map)
        for a in index.values() if not known_map else ():
            Q[a : a + LM_DIM, a : a + LM_DIM] = noise
        try:
            P_prev = np.linalg.inv(fim.info)
            J_prior = np.linalg.inv(Q + F @ P_prev @ F.T)
        except np.linalg.LinAlgError as exc:
            raise SingularFim("previous FIM not invertible") from exc
        if not np.all(np.isfinite(J_prior)):
            raise SingularFim("previous FIM not invertible")
    else:
        J_prior = fim.info.copy()

    # Landmarks seen for the first time expand the state with their
    # single-observation information block.
    new_blocks = []
    new_lids = set()
    if not known_map:
        for lid, pos, kind in scenario.landmarks():
            if lid in index:
                continue
            if detection_probability(ue_true, pos, kind, scenario, p_d) <= 0.0:
                continue
            block = p_d * _first_observation_info(ue_true, pos, kind, bs, sigma, h)
            index[lid] = dim + LM_DIM * len(new_blocks)
            new_blocks.append(block)
            new_lids.add(lid)
    if new_blocks:
        old_dim = dim
        dim += LM_DIM * len(new_blocks)
        J_ext = np.zeros((dim, dim))
        J_ext[:old_dim, :old_dim] = J_prior
        for s, block in enumerate(new_blocks):
            a = old_dim + LM_DIM * s
            J_ext[a : a + LM_DIM, a : a + LM_DIM] = block
        J_prior = J_ext

    # Data term from the LOS path and the previously tracked landmarks.
    J_data = np.zeros((dim, dim))
    p_bs = detection_probability(ue_true, bs, LandmarkType.BS, scenario, p_d)
    if p_bs > 0.0:
        G = measurement_jacobian(ue_true, bs, LandmarkType.BS, bs, h)[:, :UE_DIM]
        J_data[:UE_DIM, :UE_DIM] += p_bs * G.T @ np.linalg.solve(sigma, G)
    for lid, pos, kind in scenario.landmarks():
        p_lm = detection_probability(ue_true, pos, kind, scenario, p_d)
        if p_lm <= 0.0:
            continue
        G7 = measurement_jacobian(ue_true, pos, kind, bs, h)
        if known_map:
            G = G7[:, :UE_DIM]
            J_data[:UE_DIM, :UE_DIM] += p_lm * G.T @ np.linalg.solve(sigma, G)
            continue
        if lid in new_lids:
            # Entered this step: its first observation is the prior block.
            continue
        a = index[lid]
        G = np.zeros((5, dim))
        G[:, :UE_DIM] = G7[:, :UE_DIM]
        G[:, a : a + LM_DIM] = G7[:, 4:7]
        J_data += p_lm * G.T @ np.linalg.solve(sigma, G)

    J_new = J_data + J_prior
    return FimState(info=0.5 * (J_new + J_new.T), landmark_index=index)


def peb(fim: FimState) -> float:
    """Vehicle position error bound: sqrt of the first two inverse-FIM diagonals."""
    rhs = np.zeros((fim.dim, 2))
    rhs[0, 0] = rhs[1, 1] = 1.0
    try:
        cols = np.linalg.solve(fim.info, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularFim("FIM not invertible") from exc
    value = cols[0, 0] + cols[1, 1]
    if not np.isfinite(value) or value < 0:
        raise SingularFim("FIM not invertible")
    return float(np.sqrt(value))


def leb(fim: FimState, landmark_id) -> float:
    """Error bound of one landmark: sqrt of its three inverse-FIM diagonals."""
    if landmark_id not in fim.landmark_index:
        raise UnknownLandmark(f"landmark {landmark_id!r} not tracked by the FIM")
    a = fim.landmark_index[landmark_id]
    rhs = np.zeros((fim.dim, LM_DIM))
    for s in range(LM_DIM):
        rhs[a + s, s] = 1.0
    try:
        cols = np.linalg.solve(fim.info, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularFim("FIM not invertible") from exc
    value = sum(cols[a + s, s] for s in range(LM_DIM))
    if not np.isfinite(value) or value < 0:
        raise SingularFim("FIM not invertible")
    return float(np.sqrt(value))
