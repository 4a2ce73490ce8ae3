"""Geometric measurement models for LOS, reflection and scattering paths.

Landmark conventions:
  * BS  — the base station itself (known position, LOS path).
  * VA  — virtual anchor, the mirror image of the BS across a reflecting
          plane; the reflected path length equals the VA-to-UE distance.
  * SP  — scattering point; path runs BS -> SP -> UE.

A measurement is the 5-vector [d, DOA_az, DOA_el, DOD_az, DOD_el] where d is
the delay expressed as range in meters (clock bias included), DOA angles are
in the UE local frame (global azimuth minus heading) and DOD angles are in
the global (BS) frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateGeometry, SingularInformation

# Direction vectors shorter than this are treated as degenerate.
DEGENERACY_EPS = 1e-9


class LandmarkType(Enum):
    BS = "bs"
    VA = "va"
    SP = "sp"


@dataclass
class Measurement:
    """One channel-estimate output: 5-vector z and its noise covariance."""

    z: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)


@dataclass
class LandmarkEstimate:
    pos: np.ndarray
    kind: LandmarkType

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=float)


def wrap_angle(theta):
    """Wrap an angle (or array of angles) to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta), 2.0 * np.pi)


def _bearing(w: np.ndarray) -> tuple[float, float]:
    """Azimuth/elevation of direction vector w; raises on degenerate input."""
    rho = np.hypot(w[0], w[1])
    if np.linalg.norm(w) < DEGENERACY_EPS or rho < DEGENERACY_EPS:
        raise DegenerateGeometry("direction vector too short for a bearing")
    return float(np.arctan2(w[1], w[0])), float(np.arctan2(w[2], rho))


def _bearing_grads(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of azimuth and elevation with respect to the vector w."""
    rho2 = w[0] ** 2 + w[1] ** 2
    rho = np.sqrt(rho2)
    r2 = rho2 + w[2] ** 2
    d_az = np.array([-w[1] / rho2, w[0] / rho2, 0.0])
    d_el = np.array([-w[0] * w[2] / (r2 * rho), -w[1] * w[2] / (r2 * rho), rho / r2])
    return d_az, d_el


def _ue_position(ue: np.ndarray, ue_height: float) -> np.ndarray:
    return np.array([ue[0], ue[1], ue_height])


def incidence_point(p: np.ndarray, bs: np.ndarray, va: np.ndarray) -> np.ndarray:
    """Point where the reflected ray VA->UE crosses the reflecting plane.

    The wall is the bisector plane of bs and its mirror image va; the
    returned point is the intersection of the line p->va with that plane.
    """
    p = np.asarray(p, dtype=float)
    bs = np.asarray(bs, dtype=float)
    va = np.asarray(va, dtype=float)
    axis = va - bs
    length = np.linalg.norm(axis)
    if length < DEGENERACY_EPS:
        raise DegenerateGeometry("virtual anchor coincides with the BS")
    u = axis / length
    q = va - p
    denom = q @ u
    if abs(denom) < DEGENERACY_EPS:
        raise DegenerateGeometry("ray parallel to the reflecting plane")
    t = ((bs + va) / 2.0 - p) @ u / denom
    return p + t * q


def _incidence_jacobians(p, bs, va) -> tuple[np.ndarray, np.ndarray]:
    """d(incidence point)/dp and d(incidence point)/dva, both 3x3."""
    axis = va - bs
    length = np.linalg.norm(axis)
    u = axis / length
    mid = (bs + va) / 2.0
    q = va - p
    c = (mid - p) @ u
    e = q @ u
    t = c / e

    dt_dp = ((c - e) / e**2) * u
    ds_dp = (1.0 - t) * np.eye(3) + np.outer(q, dt_dp)

    proj = (np.eye(3) - np.outer(u, u)) / length
    dc_dva = 0.5 * u + proj @ (mid - p)
    de_dva = u + proj @ q
    dt_dva = (e * dc_dva - c * de_dva) / e**2
    ds_dva = np.outer(q, dt_dva) + t * np.eye(3)
    return ds_dp, ds_dva


def measure(ue, lm, kind: LandmarkType, bs, ue_height: float = 0.0) -> np.ndarray:
    """Noise-free measurement z = g(ue, lm) for one landmark.

    Args:
        ue: vehicle state 4-vector [x, y, heading, clock bias].
        lm: landmark position 3-vector (ignored for kind=BS).
        kind: landmark type.
        bs: BS position 3-vector.
        ue_height: known vehicle elevation.

    Returns:
        5-vector [d, DOA_az, DOA_el, DOD_az, DOD_el], angles wrapped.
    """
    ue = np.asarray(ue, dtype=float)
    bs = np.asarray(bs, dtype=float)
    p = _ue_position(ue, ue_height)
    alpha, bias = ue[2], ue[3]

    if kind is LandmarkType.BS:
        arrival = bs - p
        d = np.linalg.norm(arrival) + bias
        departure = p - bs
    elif kind is LandmarkType.VA:
        lm = np.asarray(lm, dtype=float)
        arrival = lm - p
        d = np.linalg.norm(arrival) + bias
        s = incidence_point(p, bs, lm)
        departure = s - bs
    elif kind is LandmarkType.SP:
        lm = np.asarray(lm, dtype=float)
        arrival = lm - p
        leg = lm - bs
        if np.linalg.norm(leg) < DEGENERACY_EPS:
            raise DegenerateGeometry("zero-length BS->SP leg")
        d = np.linalg.norm(leg) + np.linalg.norm(arrival) + bias
        departure = leg
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown landmark type {kind}")

    doa_az, doa_el = _bearing(arrival)
    dod_az, dod_el = _bearing(departure)
    return np.array(
        [d, wrap_angle(doa_az - alpha), doa_el, wrap_angle(dod_az), dod_el]
    )


def measurement_jacobian(ue, lm, kind: LandmarkType, bs, ue_height: float = 0.0) -> np.ndarray:
    """Closed-form Jacobian of :func:`measure`, shape 5x7.

    Columns are ordered [x, y, heading, bias, lm_x, lm_y, lm_z]; the BS type
    has identically zero landmark columns (its position is known).
    """
    ue = np.asarray(ue, dtype=float)
    bs = np.asarray(bs, dtype=float)
    lm = None if kind is LandmarkType.BS else np.asarray(lm, dtype=float)
    p = _ue_position(ue, ue_height)

    G = np.zeros((5, 7))
    # d(p)/d(x, y): only the horizontal UE coordinates are free.
    dp = np.zeros((3, 2))
    dp[0, 0] = dp[1, 1] = 1.0

    # Delay row.
    G[0, 3] = 1.0
    if kind is LandmarkType.BS:
        w = bs - p
        rng = np.linalg.norm(w)
        G[0, 0:2] = -w[:2] / rng
    else:
        w = lm - p
        rng = np.linalg.norm(w)
        G[0, 0:2] = -w[:2] / rng
        G[0, 4:7] = w / rng
        if kind is LandmarkType.SP:
            leg = lm - bs
            G[0, 4:7] += leg / np.linalg.norm(leg)

    # DOA rows: arrival direction from the UE toward the source.
    arrival = (bs - p) if kind is LandmarkType.BS else (lm - p)
    if np.linalg.norm(arrival) < DEGENERACY_EPS or np.hypot(*arrival[:2]) < DEGENERACY_EPS:
        raise DegenerateGeometry("degenerate arrival direction")
    d_az, d_el = _bearing_grads(arrival)
    G[1, 0:2] = d_az @ (-dp)
    G[2, 0:2] = d_el @ (-dp)
    G[1, 2] = -1.0  # local frame rotates with the heading
    if kind is not LandmarkType.BS:
        G[1, 4:7] = d_az
        G[2, 4:7] = d_el

    # DOD rows: departure direction at the BS, global frame.
    if kind is LandmarkType.BS:
        w = p - bs
        d_az, d_el = _bearing_grads(w)
        G[3, 0:2] = d_az @ dp
        G[4, 0:2] = d_el @ dp
    elif kind is LandmarkType.SP:
        w = lm - bs
        if np.linalg.norm(w) < DEGENERACY_EPS or np.hypot(*w[:2]) < DEGENERACY_EPS:
            raise DegenerateGeometry("degenerate departure direction")
        d_az, d_el = _bearing_grads(w)
        G[3, 4:7] = d_az
        G[4, 4:7] = d_el
    else:  # VA: departure points from the BS to the wall incidence point
        s = incidence_point(p, bs, lm)
        w = s - bs
        if np.linalg.norm(w) < DEGENERACY_EPS or np.hypot(*w[:2]) < DEGENERACY_EPS:
            raise DegenerateGeometry("degenerate departure direction")
        d_az, d_el = _bearing_grads(w)
        ds_dp, ds_dva = _incidence_jacobians(p, bs, lm)
        G[3, 0:2] = d_az @ ds_dp @ dp
        G[4, 0:2] = d_el @ ds_dp @ dp
        G[3, 4:7] = d_az @ ds_dva
        G[4, 4:7] = d_el @ ds_dva

    return G


def birth_mean(z, m, bs, kind: LandmarkType) -> np.ndarray:
    """Landmark position implied by a single measurement.

    Places the point at range d - bias along the global arrival direction
    (VA); for an SP the point is pulled back onto the scattering position by
    intersecting with the sphere of equal path length.
    """
    z = np.asarray(z, dtype=float)
    m = np.asarray(m, dtype=float)
    bs = np.asarray(bs, dtype=float)
    if kind not in (LandmarkType.VA, LandmarkType.SP):
        raise ValueError("births are only generated for VA and SP types")

    path = z[0] - m[3]
    phi = z[1] + m[2]  # DOA azimuth back in the global frame
    horizontal = path * np.cos(z[2])
    mu_check = np.array(
        [
            m[0] + horizontal * np.cos(phi),
            m[1] + horizontal * np.sin(phi),
            path * np.sin(z[2]),
        ]
    )
    if kind is LandmarkType.VA:
        return mu_check

    p_hat = np.array([m[0], m[1], 0.0])
    n = bs - mu_check
    n_norm = np.linalg.norm(n)
    if n_norm < DEGENERACY_EPS:
        raise DegenerateGeometry("birth candidate coincides with the BS")
    q = p_hat - mu_check
    denom = q @ n / n_norm
    if abs(denom) < DEGENERACY_EPS:
        raise DegenerateGeometry("SP birth projection denominator is zero")
    coef = (n @ n) / (2.0 * (q @ n))
    return mu_check + coef * q


def birth_mean_jacobian(z, m, bs, kind: LandmarkType) -> np.ndarray:
    """Closed-form d(birth_mean)/d(m), shape 3x4."""
    z = np.asarray(z, dtype=float)
    m = np.asarray(m, dtype=float)
    bs = np.asarray(bs, dtype=float)

    path = z[0] - m[3]
    phi = z[1] + m[2]
    cos_el, sin_el = np.cos(z[2]), np.sin(z[2])
    horizontal = path * cos_el
    A_check = np.array(
        [
            [1.0, 0.0, -horizontal * np.sin(phi), -cos_el * np.cos(phi)],
            [0.0, 1.0, horizontal * np.cos(phi), -cos_el * np.sin(phi)],
            [0.0, 0.0, 0.0, -sin_el],
        ]
    )
    if kind is LandmarkType.VA:
        return A_check

    mu_check = np.array(
        [m[0] + horizontal * np.cos(phi), m[1] + horizontal * np.sin(phi), path * sin_el]
    )
    p_hat = np.array([m[0], m[1], 0.0])
    dp_hat = np.zeros((3, 4))
    dp_hat[0, 0] = dp_hat[1, 1] = 1.0

    n = bs - mu_check
    q = p_hat - mu_check
    dn = -A_check
    dq = dp_hat - A_check
    g = n @ n
    h = 2.0 * (q @ n)
    dg = 2.0 * n @ dn
    dh = 2.0 * (n @ dq + q @ dn)
    c = g / h
    dc = (h * dg - g * dh) / h**2
    return A_check + np.outer(q, dc) + c * dq


def birth_covariance(z, m, P, sigma, bs, kind: LandmarkType) -> np.ndarray:
    """Covariance of a birth component.

    The first term inverts the measurement information seen through the
    landmark columns of the Jacobian; the second propagates the vehicle
    belief covariance P through the birth construction.
    """
    z = np.asarray(z, dtype=float)
    m = np.asarray(m, dtype=float)
    P = np.asarray(P, dtype=float)
    sigma = np.asarray(sigma, dtype=float)

    mu = birth_mean(z, m, bs, kind)
    G_lm = measurement_jacobian(m, mu, kind, bs, ue_height=0.0)[:, 4:7]
    info = G_lm.T @ np.linalg.solve(sigma, G_lm)
    if np.linalg.cond(info) > 1e12:
        raise SingularInformation("birth information matrix is ill-conditioned")
    C_meas = np.linalg.inv(info)
    A = birth_mean_jacobian(z, m, bs, kind)
    C = C_meas + A @ P @ A.T
    return 0.5 * (C + C.T)
