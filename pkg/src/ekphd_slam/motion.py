"""Coordinated-turn vehicle dynamics and EKF prediction of the vehicle belief."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import wrap_angle

# Below this turn rate (rad/s) the transition uses its straight-line limit.
OMEGA_EPS = 1e-8


@dataclass
class VehicleState:
    """Gaussian belief over the UE state [x, y, heading, clock bias]."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)


@dataclass
class MotionParams:
    """Known speed/turn-rate inputs and the process noise of the UE model."""

    v: float
    omega: float
    T: float
    Q: np.ndarray

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        if self.T <= 0:
            raise ValueError("sampling interval must be positive")


def ct_transition(x, p: MotionParams) -> np.ndarray:
    """One coordinated-turn step; heading wrapped, clock bias unchanged."""
    x = np.asarray(x, dtype=float)
    alpha = x[2]
    if abs(p.omega) < OMEGA_EPS:
        dx = p.v * p.T * np.cos(alpha)
        dy = p.v * p.T * np.sin(alpha)
    else:
        chord = 2.0 * p.v / p.omega * np.sin(p.omega * p.T / 2.0)
        dx = chord * np.cos(alpha + p.omega * p.T / 2.0)
        dy = chord * np.sin(alpha + p.omega * p.T / 2.0)
    return np.array(
        [x[0] + dx, x[1] + dy, wrap_angle(alpha + p.omega * p.T), x[3]]
    )


def ct_jacobian(x, p: MotionParams) -> np.ndarray:
    """Jacobian of :func:`ct_transition`; rows/cols ordered [x, y, heading, bias]."""
    x = np.asarray(x, dtype=float)
    alpha = x[2]
    if abs(p.omega) < OMEGA_EPS:
        dx_da = -p.v * p.T * np.sin(alpha)
        dy_da = p.v * p.T * np.cos(alpha)
    else:
        chord = 2.0 * p.v / p.omega * np.sin(p.omega * p.T / 2.0)
        dx_da = -chord * np.sin(alpha + p.omega * p.T / 2.0)
        dy_da = chord * np.cos(alpha + p.omega * p.T / 2.0)
    F = np.eye(4)
    F[0, 2] = dx_da
    F[1, 2] = dy_da
    return F


def predict_vehicle(state: VehicleState, p: MotionParams) -> VehicleState:
    """EKF prediction of the vehicle belief through the turn model."""
    F = ct_jacobian(state.mean, p)
    cov = F @ state.cov @ F.T + p.Q
    return VehicleState(ct_transition(state.mean, p), 0.5 * (cov + cov.T))
