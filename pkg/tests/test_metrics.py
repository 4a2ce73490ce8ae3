import itertools

import numpy as np
import pytest

from ekphd_slam.errors import LengthMismatch
from ekphd_slam.metrics import gospa, rmse_series


def brute_force_gospa(X, Y, p, c, alpha=2.0):
    """Minimum over all partial assignments of the GOSPA objective."""
    n, m = len(X), len(Y)
    best = np.inf
    for k in range(min(n, m) + 1):
        for rows in itertools.combinations(range(n), k):
            for cols in itertools.permutations(range(m), k):
                cost = sum(
                    min(np.linalg.norm(np.asarray(X[i]) - np.asarray(Y[j])), c) ** p
                    for i, j in zip(rows, cols)
                )
                cost += c**p / alpha * ((n - k) + (m - k))
                best = min(best, cost)
    return best ** (1.0 / p)


def random_sets(rng, max_card=5, scale=30.0):
    n, m = int(rng.integers(0, max_card + 1)), int(rng.integers(0, max_card + 1))
    X = [rng.uniform(-scale, scale, 3) for _ in range(n)]
    Y = [rng.uniform(-scale, scale, 3) for _ in range(m)]
    return X, Y


class TestGospa:
    def test_identical_sets(self):
        X = [np.array([1.0, 2.0, 3.0]), np.array([-4.0, 0.0, 1.0])]
        result = gospa(X, [x.copy() for x in X])
        assert result.total == pytest.approx(0.0, abs=1e-12)
        assert result.missed == 0.0 and result.false_alarm == 0.0

    def test_single_missed_target(self):
        result = gospa([np.zeros(3)], [], p=2.0, c=20.0)
        assert result.total == pytest.approx(np.sqrt(20.0**2 / 2.0), abs=1e-12)
        assert result.missed == pytest.approx(np.sqrt(200.0))
        assert result.localization == 0.0 and result.false_alarm == 0.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(20)
        for _ in range(200):
            X, Y = random_sets(rng)
            got = gospa(X, Y, p=2.0, c=20.0).total
            want = brute_force_gospa(X, Y, p=2.0, c=20.0)
            assert got == pytest.approx(want, abs=1e-12)

    def test_decomposition_recombines(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            X, Y = random_sets(rng)
            r = gospa(X, Y)
            assert r.total**2 == pytest.approx(
                r.localization**2 + r.missed**2 + r.false_alarm**2, rel=1e-12, abs=1e-12
            )

    def test_symmetry(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            X, Y = random_sets(rng)
            assert gospa(X, Y).total == pytest.approx(gospa(Y, X).total, abs=1e-9)

    def test_triangle_inequality_spot_check(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            X, Y = random_sets(rng, max_card=4)
            Z, _ = random_sets(rng, max_card=4)
            assert gospa(X, Y).total <= gospa(X, Z).total + gospa(Z, Y).total + 1e-9

    def test_subadditive_against_empty(self):
        rng = np.random.default_rng(24)
        for _ in range(50):
            X, Y = random_sets(rng)
            assert gospa(X, Y).total <= gospa(X, []).total + gospa([], Y).total + 1e-9

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            gospa([], [], alpha=1.0)
        with pytest.raises(ValueError):
            gospa([], [], c=0.0)


class TestRmseSeries:
    def test_zero_errors(self):
        out = rmse_series([np.zeros(5), np.zeros(5)])
        np.testing.assert_array_equal(out, np.zeros(5))

    def test_single_run_is_absolute_error(self):
        out = rmse_series([np.array([-3.0, 4.0])])
        np.testing.assert_allclose(out, [3.0, 4.0])

    def test_hand_arithmetic(self):
        out = rmse_series([np.array([3.0]), np.array([4.0])])
        assert out[0] == pytest.approx(np.sqrt(12.5), abs=1e-12)

    def test_heading_errors_wrapped(self):
        # 2*pi - 0.1 is an error of -0.1 once wrapped.
        out = rmse_series([np.array([2 * np.pi - 0.1])], angular=True)
        assert out[0] == pytest.approx(0.1, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rmse_series([np.zeros(4), np.zeros(5)])
        with pytest.raises(LengthMismatch):
            rmse_series([])
