"""Gaussian-mixture PHD map recursion with a joint vehicle/landmark EKF update.

One filter step runs: predict the vehicle and the map (births enter from the
previous step's unassociated measurements), solve the measurement-to-landmark
assignment, update the vehicle jointly with the associated landmarks, update
the PHD weights, and reduce the mixture.

The BS component is carried pinned: weight 1, position and covariance fixed.
It anchors the data association and the vehicle update but is exempt from the
PHD weight bookkeeping and from reduction (the BS position is known a priori).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .association import Assignment, auction_assign, build_cost_matrix
from .errors import (
    DegenerateGeometry,
    InvariantViolation,
    SingularInformation,
    SingularInnovation,
)
from .geometry import (
    LandmarkEstimate,
    LandmarkType,
    birth_covariance,
    birth_mean,
    measure,
    measurement_jacobian,
    wrap_angle,
)
from .motion import MotionParams, VehicleState, predict_vehicle

BS_COVARIANCE = 1e-9


@dataclass
class GaussianComponent:
    """One GM-PHD term: log-weight, 3-D mean, covariance and landmark type."""

    log_w: float
    mean: np.ndarray
    cov: np.ndarray
    kind: LandmarkType

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)

    @property
    def weight(self) -> float:
        return float(np.exp(self.log_w))


@dataclass
class MapPhd:
    components: list

    def __len__(self):
        return len(self.components)


def _always_detectable(ue_mean, lm_pos, kind) -> bool:
    return True


@dataclass
class FilterParams:
    """Detection/survival/birth probabilities and mixture-reduction knobs."""

    p_d: float = 0.9
    p_s: float = 0.99
    p_b: float = 1e-6
    q_map: np.ndarray = field(default_factory=lambda: 1e-4 * np.eye(3))
    prune_log_threshold: float = float(np.log(1e-6))
    merge_threshold: float = 50.0
    cap: int = 50
    gate_tail_prob: float = 1e-9
    clutter_intensity: float = 1.0 / (4.0 * 200.0 * np.pi**4)
    extraction_threshold: float = 0.5
    ue_height: float = 0.0
    # fov(ue_mean, landmark_pos, kind) -> bool; landmarks outside the field of
    # view have detection probability 0 and survival probability 1.
    fov: Callable = _always_detectable
    check_invariants: bool = False

    def __post_init__(self):
        self.q_map = np.asarray(self.q_map, dtype=float)

    def detection_probability(self, ue_mean, lm_pos, kind) -> float:
        return self.p_d if self.fov(ue_mean, lm_pos, kind) else 0.0

    def survival_probability(self, ue_mean, lm_pos, kind) -> float:
        return self.p_s if self.fov(ue_mean, lm_pos, kind) else 1.0


@dataclass
class StepTiming:
    predict_seconds: float = 0.0
    update_seconds: float = 0.0

    @property
    def total_seconds(self) -> float:
        return self.predict_seconds + self.update_seconds


@dataclass
class FilterState:
    ue: VehicleState
    map: MapPhd
    step: int = 0
    # Measurements left unassociated by the last update; they seed the next
    # step's birth components.
    unassociated: list = field(default_factory=list)
    timing: StepTiming = field(default_factory=StepTiming)


def init(bs, ue0: VehicleState) -> FilterState:
    """Start the recursion: PHD holds only the (known) BS, belief as given."""
    bs_comp = GaussianComponent(
        0.0, np.asarray(bs, dtype=float), BS_COVARIANCE * np.eye(3), LandmarkType.BS
    )
    return FilterState(ue=ue0, map=MapPhd([bs_comp]), step=0)


def predict_map(map_phd: MapPhd, births: list, params: FilterParams, survival) -> MapPhd:
    """Survival-decayed, noise-inflated map plus appended birth components.

    survival(comp) -> survival probability for one component.
    """
    out = []
    for comp in map_phd.components:
        if comp.kind is LandmarkType.BS:
            out.append(comp)
            continue
        p_s = survival(comp)
        out.append(
            GaussianComponent(
                comp.log_w + float(np.log(p_s)), comp.mean, comp.cov + params.q_map, comp.kind
            )
        )
    out.extend(births)
    return MapPhd(out)


def make_births(unassociated: list, ue: VehicleState, bs, params: FilterParams) -> list:
    """One VA-type and one SP-type birth per unassociated measurement.

    Measurements whose birth geometry is degenerate are skipped for that
    type only.
    """
    if params.p_b <= 0.0:
        return []
    log_pb = float(np.log(params.p_b))
    births = []
    for z in unassociated:
        for kind in (LandmarkType.VA, LandmarkType.SP):
            try:
                mu = birth_mean(z.z, ue.mean, bs, kind)
                C = birth_covariance(z.z, ue.mean, ue.cov, z.cov, bs, kind)
            except (DegenerateGeometry, SingularInformation):
                continue
            births.append(GaussianComponent(log_pb, mu, C, kind))
    return births


def joint_update(
    ue: VehicleState,
    map_phd: MapPhd,
    assign: Assignment,
    measurements: list,
    bs,
    ue_height: float = 0.0,
):
    """EKF update of the stacked [vehicle; associated landmarks] state.

    BS-type associations contribute measurement rows through the vehicle
    columns only (the BS position is known, not estimated).

    Returns:
        (posterior vehicle belief,
         list of (component index, posterior mean, posterior covariance) for
         associated non-BS components,
         list of (component index, measurement index, log-likelihood) for all
         associated pairs)
    """
    pairs = assign.pairs
    if not pairs:
        return ue, [], []

    comps = map_phd.components
    stacked = [i for i, _ in pairs if comps[i].kind is not LandmarkType.BS]
    slot = {i: s for s, i in enumerate(stacked)}
    dim = 4 + 3 * len(stacked)
    n_rows = 5 * len(pairs)

    x = np.zeros(dim)
    P = np.zeros((dim, dim))
    x[:4] = ue.mean
    P[:4, :4] = ue.cov
    for i in stacked:
        a = 4 + 3 * slot[i]
        x[a : a + 3] = comps[i].mean
        P[a : a + 3, a : a + 3] = comps[i].cov

    G = np.zeros((n_rows, dim))
    resid = np.zeros(n_rows)
    R = np.zeros((n_rows, n_rows))
    for r, (i, j) in enumerate(pairs):
        comp, z = comps[i], measurements[j]
        rows = slice(5 * r, 5 * r + 5)
        predicted = measure(ue.mean, comp.mean, comp.kind, bs, ue_height)
        G7 = measurement_jacobian(ue.mean, comp.mean, comp.kind, bs, ue_height)
        G[rows, :4] = G7[:, :4]
        if comp.kind is not LandmarkType.BS:
            a = 4 + 3 * slot[i]
            G[rows, a : a + 3] = G7[:, 4:7]
        dz = z.z - predicted
        dz[1:] = wrap_angle(dz[1:])
        resid[rows] = dz
        R[rows, rows] = z.cov

    S = G @ P @ G.T + R
    try:
        chol = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("stacked innovation covariance not PD") from exc
    diag = np.diag(chol)
    if diag.min() ** 2 < 1e-12 * diag.max() ** 2:
        raise SingularInnovation("stacked innovation covariance ill-conditioned")

    # Per-pair Gaussian likelihoods from the diagonal 5x5 blocks of S.
    likelihoods = []
    for r, (i, j) in enumerate(pairs):
        rows = slice(5 * r, 5 * r + 5)
        S_i = S[rows, rows]
        chol_i = np.linalg.cholesky(S_i)
        white = np.linalg.solve(chol_i, resid[rows])
        log_lik = -0.5 * (
            5.0 * np.log(2.0 * np.pi)
            + 2.0 * float(np.sum(np.log(np.diag(chol_i))))
            + float(white @ white)
        )
        likelihoods.append((i, j, log_lik))

    PGt = P @ G.T
    K = np.linalg.solve(S.T, PGt.T).T  # K = P G^T S^{-1}
    x_post = x + K @ resid
    x_post[2] = wrap_angle(x_post[2])
    IKG = np.eye(dim) - K @ G
    P_post = IKG @ P @ IKG.T + K @ R @ K.T  # Joseph form
    P_post = 0.5 * (P_post + P_post.T)

    ue_post = VehicleState(x_post[:4], P_post[:4, :4])
    updated = []
    for i in stacked:
        a = 4 + 3 * slot[i]
        updated.append((i, x_post[a : a + 3], P_post[a : a + 3, a : a + 3]))
    return ue_post, updated, likelihoods


def map_update(
    map_pred: MapPhd,
    assign: Assignment,
    updated: list,
    likelihoods: list,
    params: FilterParams,
    ue_mean,
) -> MapPhd:
    """PHD weight update: undetected components decay, detected pairs append.

    Every predicted non-BS component persists with weight scaled by
    (1 - P_D); each associated pair adds one component with the jointly
    updated mean/covariance and the detection weight from the clutter-vs-
    detection odds.
    """
    comps = map_pred.components
    out = []
    for comp in comps:
        if comp.kind is LandmarkType.BS:
            out.append(comp)
            continue
        p_d = params.detection_probability(ue_mean, comp.mean, comp.kind)
        decay = -np.inf if p_d >= 1.0 else float(np.log1p(-p_d))
        out.append(replace(comp, log_w=comp.log_w + decay))

    moments = {i: (mean, cov) for i, mean, cov in updated}
    log_clutter = (
        -np.inf if params.clutter_intensity <= 0.0 else float(np.log(params.clutter_intensity))
    )
    for i, j, log_lik in likelihoods:
        comp = comps[i]
        if comp.kind is LandmarkType.BS:
            continue
        p_d = params.detection_probability(ue_mean, comp.mean, comp.kind)
        if p_d <= 0.0:
            continue
        log_num = float(np.log(p_d)) + comp.log_w + log_lik
        log_w = log_num - float(np.logaddexp(log_clutter, log_num))
        mean, cov = moments[i]
        out.append(GaussianComponent(log_w, mean, cov, comp.kind))
    return MapPhd(out)


def _merge_moments(group: list) -> GaussianComponent:
    log_ws = np.array([c.log_w for c in group])
    log_w = float(np.logaddexp.reduce(log_ws))
    w = np.exp(log_ws - log_w)
    mean = np.sum(w[:, None] * np.array([c.mean for c in group]), axis=0)
    cov = np.zeros((3, 3))
    for wi, c in zip(w, group):
        d = c.mean - mean
        cov += wi * (c.cov + np.outer(d, d))
    return GaussianComponent(log_w, mean, 0.5 * (cov + cov.T), group[0].kind)


def reduce(map_phd: MapPhd, params: FilterParams) -> MapPhd:
    """Prune, greedily merge same-type components, cap; BS always kept."""
    pinned = [c for c in map_phd.components if c.kind is LandmarkType.BS]
    rest = [
        c
        for c in map_phd.components
        if c.kind is not LandmarkType.BS and c.log_w >= params.prune_log_threshold
    ]

    # Greedy merge: heaviest unmerged component absorbs same-type neighbours
    # within the Mahalanobis gate measured under its own covariance.
    rest.sort(key=lambda c: -c.log_w)
    merged = []
    used = [False] * len(rest)
    for i, seed in enumerate(rest):
        if used[i]:
            continue
        used[i] = True
        group = [seed]
        inv = np.linalg.inv(seed.cov)
        for k in range(i + 1, len(rest)):
            if used[k] or rest[k].kind is not seed.kind:
                continue
            d = rest[k].mean - seed.mean
            if float(d @ inv @ d) < params.merge_threshold:
                used[k] = True
                group.append(rest[k])
        merged.append(seed if len(group) == 1 else _merge_moments(group))

    merged.sort(key=lambda c: -c.log_w)
    return MapPhd(pinned + merged[: params.cap])


def extract_landmarks(map_phd: MapPhd, threshold: float = 0.5) -> list:
    """Means of non-BS components whose weight exceeds the threshold."""
    log_t = float(np.log(threshold))
    return [
        LandmarkEstimate(c.mean.copy(), c.kind)
        for c in map_phd.components
        if c.kind is not LandmarkType.BS and c.log_w > log_t
    ]


def _check_psd(mat: np.ndarray, label: str) -> None:
    if not np.allclose(mat, mat.T, rtol=1e-12, atol=1e-12):
        raise InvariantViolation(f"{label} not symmetric")
    eig = np.linalg.eigvalsh(mat)
    if eig.min() < -1e-10 * max(np.trace(mat), 1.0):
        raise InvariantViolation(f"{label} not PSD (min eigenvalue {eig.min():.3e})")


def _check_weight_bookkeeping(
    map_pred: MapPhd, map_post: MapPhd, assign: Assignment, params: FilterParams, ue_mean
) -> None:
    n_pred = len(map_pred.components)
    for comp_pred, comp_post in zip(map_pred.components, map_post.components[:n_pred]):
        if comp_pred.kind is LandmarkType.BS:
            continue
        p_d = params.detection_probability(ue_mean, comp_pred.mean, comp_pred.kind)
        expected = comp_pred.log_w + (-np.inf if p_d >= 1.0 else float(np.log1p(-p_d)))
        if comp_post.log_w != expected:
            raise InvariantViolation("undetected weight decay is not exact")
    for comp in map_post.components[n_pred:]:
        if not (np.isfinite(comp.log_w) and comp.log_w < 0.0):
            raise InvariantViolation("detected weight outside (0, 1)")


def slam_step(
    state: FilterState,
    measurements: list,
    motion: MotionParams,
    params: FilterParams,
    bs,
) -> FilterState:
    """One full filter recursion; the first call skips the prediction."""
    t0 = time.perf_counter()
    if state.step == 0:
        ue_pred, map_pred = state.ue, state.map
    else:
        births = make_births(state.unassociated, state.ue, bs, params)
        prev_mean = state.ue.mean

        def survival(comp):
            return params.survival_probability(prev_mean, comp.mean, comp.kind)

        ue_pred = predict_vehicle(state.ue, motion)
        map_pred = predict_map(state.map, births, params, survival)
    t1 = time.perf_counter()

    cost = build_cost_matrix(
        map_pred,
        ue_pred,
        measurements,
        params.clutter_intensity,
        params.gate_tail_prob,
        params.detection_probability,
        bs,
        params.ue_height,
    )
    assign = auction_assign(cost)
    ue_post, updated, likelihoods = joint_update(
        ue_pred, map_pred, assign, measurements, bs, params.ue_height
    )
    map_post = map_update(map_pred, assign, updated, likelihoods, params, ue_pred.mean)
    if params.check_invariants:
        _check_weight_bookkeeping(map_pred, map_post, assign, params, ue_pred.mean)
    map_post = reduce(map_post, params)
    if params.check_invariants:
        _check_psd(ue_post.cov, "vehicle covariance")
        for comp in map_post.components:
            _check_psd(comp.cov, "component covariance")
    t2 = time.perf_counter()

    leftovers = [measurements[j] for j in assign.unassociated_measurements]
    return FilterState(
        ue=ue_post,
        map=map_post,
        step=state.step + 1,
        unassociated=leftovers,
        timing=StepTiming(t1 - t0, t2 - t1),
    )
