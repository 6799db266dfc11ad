import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqkern.adaptive import (
    adaptive_estimate,
    build_grid,
    default_lambda,
    omega_matrix,
    omega_sequence,
    select_index,
    select_indices,
)
from seqkern.process import Path, PathConfig, simulate_path
from seqkern.signals import make_benchmark_signal

Z0 = 0.70710678118654746


class TestGridConstruction:
    def test_frozen_ladder_n100(self):
        g = build_grid(100, 0.6, 0.8)
        assert g.d_n == 21.714724095162591
        assert g.m == 4
        assert g.beta_points[0] == 0.6
        assert g.beta_points[-1] == 0.8
        assert list(g.beta_points) == pytest.approx([0.6, 0.65, 0.7, 0.75, 0.8], rel=1e-15)
        assert list(g.h_points) == [
            0.24682230399977281,
            0.2623025251253549,
            0.27734416620910751,
            0.29194313930831395,
            0.30610027851578542,
        ]
        assert list(g.N_points) == [
            2.3150978881868931,
            2.3865931707271639,
            2.4540684686116006,
            2.5178293670452838,
            2.5781549785501077,
        ]
        assert g.N_ext == 2.6353000018441444
        assert g.lam == 7.6323098970431076

    @pytest.mark.parametrize(
        "n,m", [(100, 4), (1000, 5), (5000, 7), (10000, 7), (1000000, 12)]
    )
    def test_step_count(self, n, m):
        assert build_grid(n, 0.6, 0.8).m == m

    def test_ladder_monotone(self):
        g = build_grid(1000, 0.6, 0.8)
        assert np.all(np.diff(g.h_points) > 0)
        assert np.all(np.diff(g.N_points) > 0)
        assert np.all(np.diff(g.thresholds) < 0)
        assert g.N_ext > g.N_points[-1]

    def test_extension_caps_at_exponent_one(self):
        g = build_grid(500, 0.9, 1.0)
        assert g.N_ext == pytest.approx(g.d_n ** (1.0 / 3.0), rel=1e-15)

    def test_identities_frozen_scale(self):
        # sqrt(n*h_j)/N_j = sqrt(ln n) for every candidate.
        g = build_grid(100, 0.6, 0.8)
        target = 2.1459660262893472  # sqrt(ln 100)
        for j in range(g.m + 1):
            val = math.sqrt(100 * g.h_points[j]) / g.N_points[j]
            assert val == pytest.approx(target, rel=1e-12)

    @given(n=st.integers(min_value=3, max_value=10**6))
    def test_identities_everywhere(self, n):
        g = build_grid(n, 0.6, 0.8)
        for j in range(g.m + 1):
            lhs = g.N_points[j] ** 2
            rhs = g.d_n * g.h_points[j]
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs))
            lhs2 = math.sqrt(n * g.h_points[j]) / g.N_points[j]
            rhs2 = math.sqrt(math.log(n))
            assert abs(lhs2 - rhs2) <= 1e-12 * rhs2

    def test_information_thresholds(self):
        g = build_grid(100, 0.6, 0.8)
        assert list(g.information_thresholds()) == [100 * h for h in g.h_points]

    def test_validation(self):
        with pytest.raises(ValueError):
            build_grid(2, 0.6, 0.8)
        with pytest.raises(ValueError):
            build_grid(100, 0.8, 0.6)
        with pytest.raises(ValueError):
            build_grid(100, 0.0, 0.8)
        with pytest.raises(ValueError):
            build_grid(100, 0.6, 1.2)
        with pytest.raises(ValueError):
            build_grid(100, 0.6, 0.8, lambda_override=-1.0)


class TestDefaultLambda:
    def test_frozen_values(self):
        assert default_lambda(1.0, 0.6) == 7.6323098970431076
        assert default_lambda(1.0, 1.0) == 7.350379011392155
        assert default_lambda(1.0, 0.99) == 7.355695892000603

    def test_scales_with_increment_constant(self):
        base = default_lambda(1.0, 0.6)
        assert default_lambda(2.0, 0.6) == pytest.approx(base + 1.01, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            default_lambda(0.0, 0.6)
        with pytest.raises(ValueError):
            default_lambda(1.0, 0.0)


class TestOmegaAndSelection:
    def test_frozen_example(self):
        g = build_grid(100, 0.6, 0.8)
        est = np.array([0.0, 10.0, 0.0, 0.0, 0.0])
        omega = omega_sequence(est, g)
        assert omega[0] == -3.1979936885169424  # -lambda / N_1
        assert omega[1] == 6.8020063114830576  # 10 - lambda / N_1
        chain = g.rate_chain()
        # for j >= 2 the max is attained at k=1 (the outlier), so the
        # subtracted rate stays chain[1] instead of following j
        expected = [
            -g.lam / chain[0],
            10.0 - g.lam / chain[0],
            10.0 - g.lam / chain[1],
            10.0 - g.lam / chain[1],
            10.0 - g.lam / chain[1],
        ]
        assert list(omega) == expected
        assert g.thresholds[0] == 3.2967547229808396
        assert g.thresholds[1] == 3.1979936885169424
        assert select_index(omega, g) == 0  # first breach at j=1

    def test_equal_estimates_select_finest(self):
        g = build_grid(100, 0.6, 0.8)
        omega = omega_sequence(np.full(g.m + 1, 0.37), g)
        assert list(omega) == list(-g.lam / g.rate_chain())
        assert select_index(omega, g) == g.m

    def test_first_candidate_never_breaches(self):
        g = build_grid(100, 0.6, 0.8)
        # omega_0 is the negative self-penalty regardless of the values.
        for vals in ([5.0, 0, 0, 0, 0], [-3.0, 1, 1, 1, 1]):
            omega = omega_sequence(np.array(vals, dtype=float), g)
            assert omega[0] == -g.lam / g.N_points[1]
            assert omega[0] < g.thresholds[0]

    def test_shape_validation(self):
        g = build_grid(100, 0.6, 0.8)
        with pytest.raises(ValueError):
            omega_sequence(np.zeros(3), g)
        with pytest.raises(ValueError):
            omega_matrix(np.zeros((4, 3)), g)

    @given(
        vals=st.lists(
            st.lists(st.floats(min_value=-50, max_value=50), min_size=6, max_size=6),
            min_size=1,
            max_size=8,
        )
    )
    def test_matrix_matches_scalar_and_bounds(self, vals):
        g = build_grid(1000, 0.6, 0.8)  # m = 5 -> six candidates
        mat = np.array(vals, dtype=np.float64)
        om = omega_matrix(mat, g)
        k_hat, chosen = select_indices(mat, g)
        for i in range(mat.shape[0]):
            row_omega = omega_sequence(mat[i], g)
            assert np.array_equal(om[i], row_omega)
            k = select_index(row_omega, g)
            assert k_hat[i] == k
            assert 0 <= k <= g.m
            assert chosen[i] == mat[i, k]


class TestAdaptiveEstimate:
    def test_untriggered_everywhere_selects_finest(self):
        vals = np.zeros(101)
        p = Path(values=vals, config=PathConfig(n=100, seed=0, replication_index=0))
        g = build_grid(100, 0.6, 0.8)
        ad = adaptive_estimate(p, 0.5, g)
        assert ad.value == 0.0
        assert ad.k_hat == g.m
        assert all(not e.triggered for e in ad.grid_estimates)

    def test_consistency_on_simulated_path(self):
        sig = make_benchmark_signal(0.7, Z0)
        p = simulate_path(sig, PathConfig(n=500, seed=88, replication_index=0))
        g = build_grid(500, 0.6, 0.8)
        ad = adaptive_estimate(p, Z0, g)
        assert 0 <= ad.k_hat <= g.m
        assert ad.value == ad.grid_estimates[ad.k_hat].value
        assert ad.h_hat == g.h_points[ad.k_hat]
        assert ad.omega_values[0] == -g.lam / g.N_points[1]
        assert len(ad.grid_estimates) == g.m + 1

    def test_size_mismatch_rejected(self):
        sig = make_benchmark_signal(0.7, Z0)
        p = simulate_path(sig, PathConfig(n=100, seed=88, replication_index=0))
        with pytest.raises(ValueError):
            adaptive_estimate(p, Z0, build_grid(200, 0.6, 0.8))
