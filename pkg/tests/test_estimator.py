import numpy as np
import pytest

import mimosync as ms

from conftest import relerr

# Channel seed 1 places a tap at the last delay (25), which pins down the
# timing offset: without such a tap, a channel delayed by one tap and a
# timing offset reduced by one explain the observation equally well.
ANCHORED_CHANNEL_SEED = 1
TRUTH = ms.ImpairmentParams(epsilon=0.10, eta=1e-4, theta=2)


@pytest.fixture(scope="module")
def noiseless_rx(link_cfg, link_pilots):
    channel = ms.generate_channel(link_cfg, ANCHORED_CHANNEL_SEED)
    a1 = ms.model_matrix(link_cfg, link_pilots, TRUTH)
    return channel, a1 @ channel.taps


class TestResidualCost:
    def test_zero_on_exact_fit(self):
        a = np.eye(3)
        h = np.array([1.0, 2.0, 3.0])
        assert ms.residual_cost(a, h, a @ h) == 0.0

    def test_known_value(self):
        # r - a h = (1, -2j); cost = 1 + 4 = 5
        a = np.eye(2, dtype=complex)
        h = np.array([1.0, 1.0 + 2j])
        r = np.array([2.0, 1.0])
        assert ms.residual_cost(a, h, r) == pytest.approx(5.0)

    def test_matches_independent_sum(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((20, 7)) + 1j * rng.standard_normal((20, 7))
        h = rng.standard_normal(7) + 1j * rng.standard_normal(7)
        r = rng.standard_normal(20) + 1j * rng.standard_normal(20)
        expected = sum(abs(v) ** 2 for v in (r - a @ h))
        assert ms.residual_cost(a, h, r) == pytest.approx(expected, rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ms.residual_cost(np.eye(3), np.zeros(2), np.zeros(3))


class TestGridSpec:
    def test_axis_values(self, reduced_grids):
        eps = reduced_grids.eps_values()
        assert eps.size == 11
        assert eps[0] == pytest.approx(0.05)
        assert eps[-1] == pytest.approx(0.15)
        eta = reduced_grids.eta_values()
        assert eta.size == 11
        assert eta[4] == pytest.approx(0.0, abs=1e-12)
        theta = reduced_grids.theta_values()
        assert theta.dtype.kind == "i"
        assert np.array_equal(theta, [0, 1, 2, 3, 4, 5])

    def test_endpoint_inclusive_despite_rounding(self):
        # 0.4 - (-0.4) = 0.8 is not an exact multiple of 0.01 in binary
        g = ms.GridSpec(-0.4, 0.4, 0.01, -5e-3, 5e-3, 1e-4, 0, 5)
        assert g.eps_values().size == 81
        assert g.eta_values().size == 101

    def test_single_point_axes(self):
        g = ms.GridSpec(0.1, 0.1, 0.01, 0.0, 0.0, 1e-4, 2, 2)
        assert np.array_equal(g.eps_values(), [0.1])
        assert np.array_equal(g.eta_values(), [0.0])
        assert np.array_equal(g.theta_values(), [2])

    def test_validation(self):
        with pytest.raises(ValueError, match="max < min"):
            ms.GridSpec(0.2, 0.1, 0.01, 0, 0, 1e-4, 0, 5)
        with pytest.raises(ValueError, match="step"):
            ms.GridSpec(0, 0.1, 0.0, 0, 0, 1e-4, 0, 5)


class TestNoiselessExactness:
    def test_sp_full_selection(self, link_cfg, link_pilots, reduced_grids,
                               noiseless_rx):
        channel, r = noiseless_rx
        sel = ms.select_samples(link_cfg, link_cfg.n_subcarriers, seed=7)
        res = ms.joint_estimate_sp(r, sel, reduced_grids, link_cfg, link_pilots)
        assert res.epsilon_hat == pytest.approx(TRUTH.epsilon, abs=1e-12)
        assert res.eta_hat == pytest.approx(TRUTH.eta, abs=1e-15)
        assert res.theta_hat == TRUTH.theta
        assert relerr(res.h_hat, channel.taps) <= 1e-9
        assert res.min_cost_timing <= 1e-18

    def test_sp_reduced_selection(self, link_cfg, link_pilots, reduced_grids,
                                  noiseless_rx):
        channel, r = noiseless_rx
        sel = ms.select_samples(link_cfg, 45, seed=7)
        res = ms.joint_estimate_sp(ms.row_subsample(r, sel), sel, reduced_grids,
                                   link_cfg, link_pilots)
        assert res.epsilon_hat == pytest.approx(TRUTH.epsilon, abs=1e-12)
        assert res.eta_hat == pytest.approx(TRUTH.eta, abs=1e-15)
        assert res.theta_hat == TRUTH.theta
        assert relerr(res.h_hat, channel.taps) <= 1e-9

    def test_ls_needs_more_samples(self, link_cfg, link_pilots, reduced_grids,
                                   noiseless_rx):
        channel, r = noiseless_rx
        # 75 samples per antenna: 150 rows >= 124 embedded unknowns
        sel = ms.select_samples(link_cfg, 75, seed=7)
        res = ms.joint_estimate_ls(ms.row_subsample(r, sel), sel, reduced_grids,
                                   link_cfg, link_pilots)
        assert res.epsilon_hat == pytest.approx(TRUTH.epsilon, abs=1e-12)
        assert res.eta_hat == pytest.approx(TRUTH.eta, abs=1e-15)
        assert res.theta_hat == TRUTH.theta
        assert relerr(res.h_hat, channel.taps) <= 1e-8

    def test_ls_underdetermined_is_uninformative(self, link_cfg, link_pilots,
                                                 reduced_grids, noiseless_rx):
        _, r = noiseless_rx
        # 45 samples per antenna: 90 rows < 104 unknowns; the min-norm fit
        # drives the residual to zero at every grid point.
        sel = ms.select_samples(link_cfg, 45, seed=7)
        res = ms.joint_estimate_ls(ms.row_subsample(r, sel), sel, reduced_grids,
                                   link_cfg, link_pilots)
        assert np.max(res.offset_costs) <= 1e-12
        assert np.max(res.timing_costs) <= 1e-12


class TestGridSearchBehaviour:
    def test_result_consistent_with_cost_tables(self, link_cfg, link_pilots,
                                                reduced_grids, noiseless_rx):
        _, r = noiseless_rx
        noisy = r + 0.05 * (np.random.default_rng(3).standard_normal(r.shape)
                            + 1j * np.random.default_rng(4).standard_normal(r.shape))
        sel = ms.select_samples(link_cfg, 45, seed=7)
        r_u = ms.row_subsample(noisy, sel)
        res = ms.joint_estimate_sp(r_u, sel, reduced_grids, link_cfg, link_pilots)
        i, j = np.unravel_index(np.argmin(res.offset_costs), res.offset_costs.shape)
        assert res.epsilon_hat == pytest.approx(reduced_grids.eps_values()[i])
        assert res.eta_hat == pytest.approx(reduced_grids.eta_values()[j])
        assert res.min_cost_offset == pytest.approx(res.offset_costs[i, j])
        assert res.theta_hat == reduced_grids.theta_values()[np.argmin(res.timing_costs)]
        assert res.min_cost_timing == pytest.approx(np.min(res.timing_costs))
        assert res.n_offset_evals == res.offset_costs.size
        assert res.n_timing_evals == res.timing_costs.size
        assert res.wall_time > 0

    def test_off_grid_truth_snaps_to_nearest_point(self, link_cfg, link_pilots,
                                                   reduced_grids):
        channel = ms.generate_channel(link_cfg, ANCHORED_CHANNEL_SEED)
        params = ms.ImpairmentParams(epsilon=0.102, eta=1e-4, theta=2)
        r = ms.model_matrix(link_cfg, link_pilots, params) @ channel.taps
        sel = ms.select_samples(link_cfg, 45, seed=7)
        res = ms.joint_estimate_sp(ms.row_subsample(r, sel), sel, reduced_grids,
                                   link_cfg, link_pilots)
        assert res.epsilon_hat == pytest.approx(0.10)   # nearest grid value
        assert res.eta_hat == pytest.approx(1e-4)
        assert res.theta_hat == 2

    def test_deterministic(self, link_cfg, link_pilots, reduced_grids,
                           noiseless_rx):
        _, r = noiseless_rx
        sel = ms.select_samples(link_cfg, 45, seed=7)
        r_u = ms.row_subsample(r, sel)
        res1 = ms.joint_estimate_sp(r_u, sel, reduced_grids, link_cfg, link_pilots)
        res2 = ms.joint_estimate_sp(r_u, sel, reduced_grids, link_cfg, link_pilots)
        assert res1.epsilon_hat == res2.epsilon_hat
        assert res1.eta_hat == res2.eta_hat
        assert res1.theta_hat == res2.theta_hat
        assert np.array_equal(res1.h_hat, res2.h_hat)
        assert np.array_equal(res1.offset_costs, res2.offset_costs)

    def test_refinement_does_not_increase_cost(self, link_cfg, link_pilots,
                                               noiseless_rx):
        _, r = noiseless_rx
        noisy = r + 0.1 * (np.random.default_rng(5).standard_normal(r.shape)
                           + 1j * np.random.default_rng(6).standard_normal(r.shape))
        sel = ms.select_samples(link_cfg, 45, seed=7)
        r_u = ms.row_subsample(noisy, sel)
        coarse = ms.GridSpec(0.06, 0.14, 0.04, -4e-4, 6e-4, 5e-4, 0, 5)
        fine = ms.GridSpec(0.06, 0.14, 0.02, -4e-4, 6e-4, 2.5e-4, 0, 5)
        res_c = ms.joint_estimate_sp(r_u, sel, coarse, link_cfg, link_pilots)
        res_f = ms.joint_estimate_sp(r_u, sel, fine, link_cfg, link_pilots)
        # the fine grid contains every coarse point, so its minimum can
        # only be lower
        assert res_f.min_cost_offset <= res_c.min_cost_offset + 1e-12

    def test_timing_grid_beyond_config_rejected(self, link_cfg, link_pilots,
                                                noiseless_rx):
        _, r = noiseless_rx
        sel = ms.select_samples(link_cfg, 45, seed=7)
        bad = ms.GridSpec(0.05, 0.15, 0.01, -4e-4, 6e-4, 1e-4, 0, 9)
        with pytest.raises(ValueError, match="theta_max"):
            ms.joint_estimate_sp(ms.row_subsample(r, sel), sel, bad,
                                 link_cfg, link_pilots)

    def test_observation_length_mismatch(self, link_cfg, link_pilots,
                                         reduced_grids):
        sel = ms.select_samples(link_cfg, 45, seed=7)
        with pytest.raises(ValueError, match="selection"):
            ms.joint_estimate_sp(np.zeros(80, dtype=complex), sel,
                                 reduced_grids, link_cfg, link_pilots)
