import numpy as np
import pytest

from ekphd_slam.geometry import wrap_angle
from ekphd_slam.motion import MotionParams, VehicleState, ct_jacobian, ct_transition, predict_vehicle

Q_UE = np.diag([0.2**2, 0.2**2, 0.001**2, 0.2**2])


def params(v, omega, T=0.5, Q=None):
    return MotionParams(v=v, omega=omega, T=T, Q=Q_UE if Q is None else Q)


def fd_jacobian(x, p, h=1e-6):
    J = np.zeros((4, 4))
    for c in range(4):
        xp, xm = np.array(x, dtype=float), np.array(x, dtype=float)
        xp[c] += h
        xm[c] -= h
        d = ct_transition(xp, p) - ct_transition(xm, p)
        d[2] = wrap_angle(d[2])
        J[:, c] = d / (2 * h)
    return J


def test_straight_line_limit():
    out = ct_transition([0.0, 0.0, 0.0, 5.0], params(v=10.0, omega=0.0))
    np.testing.assert_allclose(out, [5.0, 0.0, 0.0, 5.0], atol=1e-12)


def test_heading_advance_on_circle():
    out = ct_transition([70.73, 0.0, np.pi / 2, 300.0], params(v=22.22, omega=np.pi / 10))
    assert out[2] == pytest.approx(np.pi / 2 + np.pi / 20, abs=1e-12)
    assert out[3] == 300.0


def test_zero_speed_keeps_position():
    x = np.array([3.0, -4.0, 0.7, 12.0])
    out = ct_transition(x, params(v=0.0, omega=0.2))
    np.testing.assert_allclose(out[:2], x[:2], atol=1e-12)
    assert out[2] == pytest.approx(0.7 + 0.2 * 0.5)
    assert out[3] == 12.0


def test_omega_zero_continuity():
    p_small = params(v=15.0, omega=1e-9)
    x = np.array([1.0, 2.0, 0.3, 7.0])
    straight = x + np.array([15.0 * 0.5 * np.cos(0.3), 15.0 * 0.5 * np.sin(0.3), 0.0, 0.0])
    assert np.linalg.norm(ct_transition(x, p_small)[:2] - straight[:2]) < 1e-6


def test_heading_always_wrapped():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.uniform(-10, 10, 4)
        x[2] = rng.uniform(-4 * np.pi, 4 * np.pi)
        out = ct_transition(x, params(v=5.0, omega=rng.uniform(-1, 1)))
        assert -np.pi < out[2] <= np.pi


def test_jacobian_straight_line_example():
    F = ct_jacobian([0.0, 0.0, 0.0, 5.0], params(v=10.0, omega=0.0))
    expected = np.array([[1, 0, 0, 0], [0, 1, 5, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])
    np.testing.assert_allclose(F, expected, atol=1e-12)


def test_jacobian_bias_row():
    rng = np.random.default_rng(1)
    for _ in range(20):
        F = ct_jacobian(rng.uniform(-5, 5, 4), params(v=rng.uniform(0, 30), omega=rng.uniform(-1, 1)))
        np.testing.assert_array_equal(F[3], [0, 0, 0, 1])


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        x = np.array(
            [rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-np.pi, np.pi), rng.uniform(0, 500)]
        )
        omega = rng.choice([-1, 1]) * 10 ** rng.uniform(-6, 0)
        p = params(v=rng.uniform(0, 30), omega=omega)
        F = ct_jacobian(x, p)
        err = np.max(np.abs(F - fd_jacobian(x, p))) / max(1.0, np.max(np.abs(F)))
        worst = max(worst, err)
    assert worst < 1e-5


def test_predict_zero_prior_cov_gives_q():
    state = VehicleState(np.array([0.0, 0.0, 0.0, 0.0]), np.zeros((4, 4)))
    out = predict_vehicle(state, params(v=10.0, omega=0.1))
    np.testing.assert_allclose(out.cov, Q_UE, atol=1e-15)


def test_predict_default_priors_psd():
    P0 = np.diag([0.3**2, 0.3**2, 0.0052**2, 0.3**2])
    state = VehicleState(np.array([70.73, 0.0, np.pi / 2, 300.0]), P0)
    out = predict_vehicle(state, params(v=22.22, omega=np.pi / 10))
    assert np.all(np.linalg.eigvalsh(out.cov) > 0)
    assert np.trace(out.cov) > 0


def test_repeated_prediction_position_trace_monotone():
    state = VehicleState(np.array([70.73, 0.0, np.pi / 2, 300.0]), np.diag([0.09, 0.09, 2.7e-5, 0.09]))
    p = params(v=22.22, omega=np.pi / 10)
    prev = np.trace(state.cov[:2, :2])
    for _ in range(100):
        state = predict_vehicle(state, p)
        cur = np.trace(state.cov[:2, :2])
        assert cur >= prev - 1e-12
        prev = cur


def test_covariance_stays_symmetric_psd():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A = rng.standard_normal((4, 4))
        state = VehicleState(rng.uniform(-5, 5, 4), A @ A.T)
        out = predict_vehicle(state, params(v=rng.uniform(0, 30), omega=rng.uniform(-1, 1)))
        np.testing.assert_allclose(out.cov, out.cov.T, atol=1e-12)
        assert np.linalg.eigvalsh(out.cov).min() > -1e-12 * np.trace(out.cov)
