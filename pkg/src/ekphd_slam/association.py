"""Gated log-likelihood cost matrix and auction-based optimal assignment.

The cost matrix follows the detection/misdetection block layout: an
n x (m + n) matrix whose left block holds gated detection log-likelihood
ratios and whose right block is diagonal with misdetection costs; all other
right-block entries are -inf. Each landmark row must be assigned exactly one
column, each measurement column at most one row.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import chi2

from .geometry import Measurement, measure, measurement_jacobian, wrap_angle
from .motion import VehicleState

NEG_INF = -np.inf

MEASUREMENT_DIM = 5


@dataclass
class CostMatrix:
    values: np.ndarray  # (n, m + n), -inf allowed
    n_components: int
    n_measurements: int


@dataclass
class Assignment:
    """Result of the assignment: per-row target and leftover measurements."""

    landmark_to: list  # per row: measurement index, or None for misdetection
    unassociated_measurements: list

    @property
    def pairs(self) -> list:
        return [(i, j) for i, j in enumerate(self.landmark_to) if j is not None]


@lru_cache(maxsize=8)
def gate_threshold(tail_probability: float, dim: int = MEASUREMENT_DIM) -> float:
    """Chi-square quantile of 1 - tail_probability used for ellipsoidal gating."""
    return float(chi2.isf(tail_probability, dim))


def _innovation_base(comp, ue: VehicleState, bs, ue_height: float):
    """Predicted measurement and joint-covariance part of S for one component."""
    predicted = measure(ue.mean, comp.mean, comp.kind, bs, ue_height)
    G = measurement_jacobian(ue.mean, comp.mean, comp.kind, bs, ue_height)
    P_joint = np.zeros((7, 7))
    P_joint[:4, :4] = ue.cov
    P_joint[4:, 4:] = comp.cov
    return predicted, G @ P_joint @ G.T


def _gated_cost(
    predicted: np.ndarray,
    S_base: np.ndarray,
    z: Measurement,
    clutter_intensity: float,
    gate: float,
    detection_probability: float,
) -> float:
    resid = z.z - predicted
    resid[1:] = wrap_angle(resid[1:])
    chol = np.linalg.cholesky(S_base + z.cov)
    white = np.linalg.solve(chol, resid)
    d = float(white @ white)
    if d >= gate:
        return NEG_INF
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return (
        np.log(detection_probability / clutter_intensity)
        - 0.5 * (MEASUREMENT_DIM * np.log(2.0 * np.pi) + log_det + d)
    )


def pair_cost(
    comp,
    ue: VehicleState,
    z: Measurement,
    clutter_intensity: float,
    gate_tail_prob: float,
    detection_probability: float,
    bs,
    ue_height: float = 0.0,
) -> float:
    """Detection log-likelihood cost of pairing one component with one measurement.

    Returns -inf when the pair fails the ellipsoidal gate or the component
    cannot be detected at all.
    """
    if clutter_intensity <= 0.0:
        raise ValueError("clutter intensity must be positive")
    if detection_probability <= 0.0:
        return NEG_INF
    predicted, S_base = _innovation_base(comp, ue, bs, ue_height)
    return _gated_cost(
        predicted, S_base, z, clutter_intensity, gate_threshold(gate_tail_prob),
        detection_probability,
    )


def misdetection_cost(detection_probability: float) -> float:
    if detection_probability >= 1.0:
        return NEG_INF
    return float(np.log1p(-detection_probability))


def build_cost_matrix(
    map_phd,
    ue: VehicleState,
    measurements: list,
    clutter_intensity: float,
    gate_tail_prob: float,
    detection_model,
    bs,
    ue_height: float = 0.0,
) -> CostMatrix:
    """Assemble the n x (m + n) detection/misdetection cost matrix.

    detection_model(ue_mean, landmark_pos, kind) -> detection probability.
    """
    comps = map_phd.components
    n, m = len(comps), len(measurements)
    gate = gate_threshold(gate_tail_prob)
    L = np.full((n, m + n), NEG_INF)
    for i, comp in enumerate(comps):
        p_d = detection_model(ue.mean, comp.mean, comp.kind)
        L[i, m + i] = misdetection_cost(p_d)
        if p_d <= 0.0 or m == 0:
            continue
        predicted, S_base = _innovation_base(comp, ue, bs, ue_height)
        for j, z in enumerate(measurements):
            L[i, j] = _gated_cost(predicted, S_base, z, clutter_intensity, gate, p_d)
    return CostMatrix(L, n, m)


def auction_assign(cost: CostMatrix) -> Assignment:
    """Maximize tr(A^T L) with an epsilon-scaling forward auction.

    The rectangular problem is embedded in a square one: each measurement
    gains a zero-value dummy row that takes either its own column (the
    measurement stays unassociated) or any free misdetection column. Every
    perfect matching of the square problem then corresponds one-to-one to a
    feasible assignment with the same objective, and the symmetric auction
    optimality guarantee applies.

    -inf detection entries are sentinels excluded from bidding. A -inf
    misdetection diagonal (detection probability 1) is mapped to a finite
    fallback strictly worse than any finite total, so a row falls back to
    misdetection only when it cannot win any measurement.
    """
    n, m = cost.n_components, cost.n_measurements
    if n == 0:
        return Assignment([], list(range(m)))

    size = n + m
    finite_input = np.isfinite(cost.values)
    if finite_input.any():
        lo, hi = cost.values[finite_input].min(), cost.values[finite_input].max()
    else:
        lo = hi = 0.0
    span = max(hi - lo, abs(lo), abs(hi), 1.0)
    # Forced-misdetection fallback: worse than any achievable finite total.
    fallback = min(lo, 0.0) - (size + 1) * (span + 1.0)

    V = np.full((size, size), NEG_INF)
    V[:n, : m + n] = cost.values
    for i in range(n):
        if not np.isfinite(V[i, m + i]):
            V[i, m + i] = fallback
    for j in range(m):
        V[n + j, j] = 0.0
        V[n + j, m : m + n] = 0.0

    rows = []
    for i in range(size):
        cols = np.flatnonzero(np.isfinite(V[i]))
        rows.append(list(zip(cols.tolist(), V[i, cols].tolist())))
    prices = [0.0] * size
    row_to = [-1] * size
    owner = [-1] * size

    # Each phase ends in epsilon-complementary slackness, so the assignment
    # is within size*eps of optimal; the primal-dual gap certifies when the
    # remaining error is below resolution and later phases can be skipped.
    eps_final = span * 1e-12 / (size + 1)
    gap_tol = span * 1e-12
    eps = span / 2.0
    while True:
        for idx in range(size):
            row_to[idx] = -1
            owner[idx] = -1
        queue = deque(range(size))
        while queue:
            i = queue.popleft()
            best = second = NEG_INF
            best_j = -1
            for j, v in rows[i]:
                net = v - prices[j]
                if net > best:
                    second = best
                    best = net
                    best_j = j
                elif net > second:
                    second = net
            bid = eps if second == NEG_INF else best - second + eps
            prices[best_j] += bid
            prev = owner[best_j]
            owner[best_j] = i
            row_to[i] = best_j
            if prev >= 0:
                row_to[prev] = -1
                queue.append(prev)
        primal = sum(V[i, row_to[i]] for i in range(size))
        dual = sum(prices) + sum(
            max(v - prices[j] for j, v in rows[i]) for i in range(size)
        )
        if dual - primal <= gap_tol or eps <= eps_final:
            break
        eps = max(eps / 5.0, eps_final)

    landmark_to = [int(j) if j < m else None for j in row_to[:n]]
    taken = {j for j in landmark_to if j is not None}
    return Assignment(landmark_to, [j for j in range(m) if j not in taken])
