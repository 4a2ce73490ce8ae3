import numpy as np
import pytest
from scipy.stats import chi2, multivariate_normal

from ekphd_slam.association import (
    CostMatrix,
    auction_assign,
    build_cost_matrix,
    gate_threshold,
    misdetection_cost,
    pair_cost,
)
from ekphd_slam.geometry import LandmarkType, Measurement, measure, measurement_jacobian
from ekphd_slam.motion import VehicleState
from ekphd_slam.phd import GaussianComponent, MapPhd

P_UE = np.diag([0.09, 0.09, 2.7e-5, 0.09])
CLUTTER = 1.0 / (4.0 * 200.0 * np.pi**4)


def brute_force_assignment(L, n, m):
    """Exhaustive enumeration over all valid row-to-column assignments."""
    best = [-np.inf, None]

    def rec(i, used, total, chosen):
        if i == n:
            if total > best[0]:
                best[0], best[1] = total, chosen[:]
            return
        rec(i + 1, used, total + L[i, m + i], chosen + [None])
        for j in range(m):
            if j not in used and np.isfinite(L[i, j]):
                rec(i + 1, used | {j}, total + L[i, j], chosen + [j])

    rec(0, frozenset(), 0.0, [])
    return best


def objective(L, assign, m):
    return sum(
        L[i, j] if j is not None else L[i, m + i] for i, j in enumerate(assign.landmark_to)
    )


def random_cost_matrix(rng, n, m, gating=0.3):
    L = np.full((n, m + n), -np.inf)
    L[:, :m] = rng.uniform(-10, 10, (n, m))
    L[:, :m][rng.random((n, m)) < gating] = -np.inf
    for i in range(n):
        L[i, m + i] = rng.uniform(-10, 10)
    return L


def test_misdetection_cost_example():
    assert misdetection_cost(0.9) == pytest.approx(np.log(0.1), abs=1e-12)


def test_pair_cost_at_predicted_mean(bs, sigma):
    # Oracle: at zero innovation the cost is log(P_D / lambda_c) plus the
    # Gaussian log-density at its own mean (scipy implementation).
    ue = VehicleState(np.array([70.73, 0.0, np.pi / 2, 300.0]), P_UE)
    comp = GaussianComponent(0.0, np.array([65.0, 65.0, 20.0]), 0.5 * np.eye(3), LandmarkType.SP)
    z_vec = measure(ue.mean, comp.mean, comp.kind, bs)
    G = measurement_jacobian(ue.mean, comp.mean, comp.kind, bs)
    P_joint = np.zeros((7, 7))
    P_joint[:4, :4] = ue.cov
    P_joint[4:, 4:] = comp.cov
    S = G @ P_joint @ G.T + sigma
    expected = np.log(0.9 / CLUTTER) + multivariate_normal.logpdf(z_vec, mean=z_vec, cov=S)
    got = pair_cost(comp, ue, Measurement(z_vec, sigma), CLUTTER, 1e-9, 0.9, bs)
    assert got == pytest.approx(expected, rel=1e-12)


def test_pair_cost_gates_far_measurement(bs, sigma):
    ue = VehicleState(np.array([0.0, 0.0, 0.0, 0.0]), P_UE)
    comp = GaussianComponent(0.0, np.array([65.0, 65.0, 20.0]), 1e-4 * np.eye(3), LandmarkType.SP)
    z_vec = measure(ue.mean, comp.mean, comp.kind, bs)
    z_vec[0] += 50.0  # dozens of sigma away in delay
    assert pair_cost(comp, ue, Measurement(z_vec, sigma), CLUTTER, 1e-9, 0.9, bs) == -np.inf


def test_gate_is_chi_square_quantile():
    assert gate_threshold(1e-9) == pytest.approx(chi2.isf(1e-9, 5), rel=1e-12)
    assert gate_threshold(1e-9) == pytest.approx(chi2.ppf(1 - 1e-9, 5), rel=1e-6)


def test_zero_detection_probability_disables_pairing(bs, sigma):
    ue = VehicleState(np.array([0.0, 0.0, 0.0, 0.0]), P_UE)
    comp = GaussianComponent(0.0, np.array([65.0, 65.0, 20.0]), np.eye(3), LandmarkType.SP)
    z_vec = measure(ue.mean, comp.mean, comp.kind, bs)
    assert pair_cost(comp, ue, Measurement(z_vec, sigma), CLUTTER, 1e-9, 0.0, bs) == -np.inf
    assert misdetection_cost(0.0) == 0.0


class TestBuildCostMatrix:
    def test_empty_map(self, bs, sigma):
        ue = VehicleState(np.zeros(4), P_UE)
        z = Measurement(np.array([10.0, 0, 0, 0, 0]), sigma)
        L = build_cost_matrix(MapPhd([]), ue, [z, z], CLUTTER, 1e-9, lambda *_: 0.9, bs)
        assert L.values.shape == (0, 2)
        assign = auction_assign(L)
        assert assign.landmark_to == []
        assert assign.unassociated_measurements == [0, 1]

    def test_block_shape(self, bs, sigma):
        ue = VehicleState(np.array([70.73, 0.0, np.pi / 2, 300.0]), P_UE)
        comps = [
            GaussianComponent(0.0, np.array([0.0, 0.0, 40.0]), 1e-9 * np.eye(3), LandmarkType.BS),
            GaussianComponent(0.0, np.array([200.0, 0.0, 40.0]), np.eye(3), LandmarkType.VA),
        ]
        zs = [
            Measurement(measure(ue.mean, c.mean, c.kind, bs), sigma) for c in comps
        ] + [Measurement(np.array([100.0, 1.0, 0.3, -1.0, 0.2]), sigma)]
        L = build_cost_matrix(MapPhd(comps), ue, zs, CLUTTER, 1e-9, lambda *_: 0.9, bs)
        assert L.values.shape == (2, 5)
        # Off-diagonal right block is -inf, diagonal finite.
        assert L.values[0, 4] == -np.inf and L.values[1, 3] == -np.inf
        assert np.isfinite(L.values[0, 3]) and np.isfinite(L.values[1, 4])

    def test_matches_pair_cost(self, bs, sigma):
        ue = VehicleState(np.array([70.73, 0.0, np.pi / 2, 300.0]), P_UE)
        comp = GaussianComponent(0.0, np.array([65.0, 65.0, 20.0]), 0.3 * np.eye(3), LandmarkType.SP)
        rng = np.random.default_rng(3)
        zs = [
            Measurement(
                measure(ue.mean, comp.mean, comp.kind, bs) + rng.normal(0, 0.01, 5), sigma
            )
            for _ in range(4)
        ]
        L = build_cost_matrix(MapPhd([comp]), ue, zs, CLUTTER, 1e-9, lambda *_: 0.9, bs)
        for j, z in enumerate(zs):
            assert L.values[0, j] == pytest.approx(
                pair_cost(comp, ue, z, CLUTTER, 1e-9, 0.9, bs), rel=1e-12
            )

    def test_all_gated_gives_all_misdetect(self, bs, sigma):
        ue = VehicleState(np.array([70.73, 0.0, np.pi / 2, 300.0]), P_UE)
        comp = GaussianComponent(0.0, np.array([65.0, 65.0, 20.0]), 1e-4 * np.eye(3), LandmarkType.SP)
        far = Measurement(np.array([5.0, 1.0, 1.0, 1.0, 1.0]), sigma)
        L = build_cost_matrix(MapPhd([comp]), ue, [far], CLUTTER, 1e-9, lambda *_: 0.9, bs)
        assign = auction_assign(L)
        assert assign.landmark_to == [None]
        assert assign.unassociated_measurements == [0]


class TestAuction:
    def test_single_row(self):
        a = auction_assign(CostMatrix(np.array([[5.0, 1.0]]), 1, 1))
        assert a.landmark_to == [0]

    def test_spec_example(self):
        L = np.array([[10.0, -np.inf, 0.0, -np.inf], [2.0, 9.0, -np.inf, 0.0]])
        a = auction_assign(CostMatrix(L, 2, 2))
        assert a.landmark_to == [0, 1]
        assert objective(L, a, 2) == pytest.approx(19.0)

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n, m = int(rng.integers(1, 6)), int(rng.integers(0, 6))
            L = random_cost_matrix(rng, n, m)
            a = auction_assign(CostMatrix(L, n, m))
            best, _ = brute_force_assignment(L, n, m)
            assert objective(L, a, m) == best

    def test_row_shift_keeps_assignment(self):
        rng = np.random.default_rng(18)
        for _ in range(30):
            n, m = int(rng.integers(2, 6)), int(rng.integers(2, 6))
            L = random_cost_matrix(rng, n, m, gating=0.0)
            base = auction_assign(CostMatrix(L, n, m))
            shifted = L.copy()
            row = int(rng.integers(0, n))
            shifted[row, np.isfinite(shifted[row])] += rng.uniform(-50, 50)
            assert auction_assign(CostMatrix(shifted, n, m)).landmark_to == base.landmark_to

    def test_no_measurement_used_twice(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            n, m = int(rng.integers(1, 8)), int(rng.integers(1, 8))
            a = auction_assign(CostMatrix(random_cost_matrix(rng, n, m), n, m))
            used = [j for j in a.landmark_to if j is not None]
            assert len(used) == len(set(used))
            assert set(a.unassociated_measurements) == set(range(m)) - set(used)

    def test_forced_misdetection_when_diagonal_is_minus_inf(self):
        # Detection probability 1: a row may carry -inf misdetection cost but
        # must still fall back to it when it cannot win a measurement.
        L = np.array([[8.0, -np.inf, -np.inf], [7.9, -np.inf, -np.inf]])
        a = auction_assign(CostMatrix(L, 2, 1))
        assert sorted([a.landmark_to[0] is None, a.landmark_to[1] is None]) == [False, True]
        assert a.landmark_to[0] == 0  # higher value row wins the measurement
