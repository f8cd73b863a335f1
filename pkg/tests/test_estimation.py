import math

import numpy as np
import pytest

from miisac import (
    LinkConfig,
    MleConfig,
    PilotBlock,
    Theta,
    channel_gain,
    matched_filter,
    mle_conditional,
    mle_joint,
    nll,
    noise_variance_mf,
)
from miisac.estimation import DegeneratePilotError, constant_pilots

DEFAULTS = LinkConfig()
TRUTH = Theta(10, 0.01)


def noiseless_block(h, cfg):
    x = constant_pilots(cfg)
    return PilotBlock(symbols=x, received=tuple(h * xi for xi in x))


class TestMatchedFilter:
    def test_noiseless_identity(self):
        h = 0.5 + 0.5j
        assert matched_filter(noiseless_block(h, DEFAULTS)) == pytest.approx(h, abs=1e-15)

    def test_constant_pilot_reduction(self):
        # x_l = c: the statistic reduces to sum(y) / (L c)
        c = 2.0 + 0.0j
        rng = np.random.default_rng(1)
        y = tuple(map(complex, rng.normal(size=8) + 1j * rng.normal(size=8)))
        block = PilotBlock(symbols=(c,) * 8, received=y)
        assert matched_filter(block) == pytest.approx(sum(y) / (8 * c), abs=1e-14)

    def test_noise_law(self):
        # variance of the statistic over noisy draws matches N0*B/(L*P_tx)
        cfg = LinkConfig(pilots_l=8)
        h = channel_gain(TRUTH, cfg)
        x = np.array(constant_pilots(cfg))
        var_n = cfg.noise_psd * cfg.bandwidth_b  # per-symbol noise variance
        rng = np.random.default_rng(7)
        n_draws = 10_000
        noise = rng.normal(0, math.sqrt(var_n / 2), (n_draws, cfg.pilots_l, 2))
        ests = []
        for k in range(n_draws):
            y = h * x + noise[k, :, 0] + 1j * noise[k, :, 1]
            ests.append(matched_filter(PilotBlock(tuple(x), tuple(map(complex, y)))))
        ests = np.array(ests)
        expected = noise_variance_mf(cfg)
        sample_var = np.var(ests.real) + np.var(ests.imag)
        assert sample_var == pytest.approx(expected, rel=0.05)
        # unbiasedness, to Monte Carlo error
        assert abs(ests.mean() - h) < 4 * math.sqrt(expected / n_draws)

    def test_degenerate_pilots(self):
        block = PilotBlock(symbols=(0j, 0j), received=(1 + 0j, 1 + 0j))
        with pytest.raises(DegeneratePilotError):
            matched_filter(block)


class TestNll:
    def test_zero_at_exact_fit(self):
        h = channel_gain(TRUTH, DEFAULTS)
        assert nll(TRUTH, h, DEFAULTS) == 0.0

    def test_positive_away_from_fit(self):
        h = channel_gain(TRUTH, DEFAULTS)
        assert nll(Theta(10.1, 0.01), h, DEFAULTS) > 0
        assert nll(Theta(10, 0.011), h, DEFAULTS) > 0

    def test_matches_definition(self):
        h_mf = 1e-7 + 2e-7j
        th = Theta(7, 0.02)
        resid = h_mf - channel_gain(th, DEFAULTS)
        expected = (
            DEFAULTS.pilots_l * DEFAULTS.p_tx * abs(resid) ** 2
            / (DEFAULTS.noise_psd * DEFAULTS.bandwidth_b)
        )
        assert nll(th, h_mf, DEFAULTS) == pytest.approx(expected, rel=1e-12)

    def test_single_basin_at_high_snr(self):
        # noiseless objective: exactly one grid-local minimum within 1e-3
        # of the global minimum value
        h = channel_gain(TRUTH, DEFAULTS)
        rs = np.logspace(math.log10(0.5), 2, 120)
        ss = np.logspace(-4, 0, 120)
        z = np.empty((120, 120))
        for i, r in enumerate(rs):
            for j, s in enumerate(ss):
                z[i, j] = nll(Theta(r, s), h, DEFAULTS)
        interior = z[1:-1, 1:-1]
        local_min = (
            (interior <= z[:-2, 1:-1]) & (interior <= z[2:, 1:-1])
            & (interior <= z[1:-1, :-2]) & (interior <= z[1:-1, 2:])
        )
        near_global = interior <= z.min() + 1e-3
        assert np.count_nonzero(local_min & near_global) == 1


class TestMleJoint:
    def test_noiseless_recovery(self):
        est = mle_joint(channel_gain(TRUTH, DEFAULTS), DEFAULTS)
        assert est.converged
        assert est.theta_hat.r == pytest.approx(TRUTH.r, rel=1e-6)
        assert est.theta_hat.sigma_m == pytest.approx(TRUTH.sigma_m, rel=1e-6)
        assert est.nll_value >= 0

    def test_noiseless_recovery_random_truths(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            r = math.exp(rng.uniform(math.log(1), math.log(50)))
            s = math.exp(rng.uniform(math.log(1e-3), math.log(0.5)))
            truth = Theta(r, s)
            est = mle_joint(channel_gain(truth, DEFAULTS), DEFAULTS)
            assert est.theta_hat.r == pytest.approx(r, rel=1e-5)
            assert est.theta_hat.sigma_m == pytest.approx(s, rel=1e-5)

    def test_within_bounds(self):
        # an observation matching a channel outside the box still yields
        # an in-box estimate, flagged as a boundary hit
        mle_cfg = MleConfig(r_bounds=(5.0, 8.0))
        est = mle_joint(channel_gain(TRUTH, DEFAULTS), DEFAULTS, mle_cfg)
        assert 5.0 <= est.theta_hat.r <= 8.0
        assert est.on_boundary

    def test_start_density_robustness(self):
        h = channel_gain(TRUTH, DEFAULTS)
        e4 = mle_joint(h, DEFAULTS, MleConfig(starts_per_axis=4))
        e8 = mle_joint(h, DEFAULTS, MleConfig(starts_per_axis=8))
        assert e8.theta_hat.r == pytest.approx(e4.theta_hat.r, rel=1e-6)
        assert e8.starts_used == 64 and e4.starts_used == 16

    def test_nonconvergence_flagged(self):
        est = mle_joint(
            channel_gain(TRUTH, DEFAULTS), DEFAULTS, MleConfig(max_iters=3)
        )
        assert not est.converged


class TestMleConditional:
    def test_noiseless_recovery(self):
        est = mle_conditional(channel_gain(TRUTH, DEFAULTS), TRUTH.sigma_m, DEFAULTS)
        assert est.converged
        assert est.theta_hat.r == pytest.approx(TRUTH.r, rel=1e-6)
        assert est.theta_hat.sigma_m == TRUTH.sigma_m

    def test_wrong_sigma_biases_range(self):
        h = channel_gain(TRUTH, DEFAULTS)
        est = mle_conditional(h, 2 * TRUTH.sigma_m, DEFAULTS)
        assert est.converged
        assert abs(est.theta_hat.r - TRUTH.r) > 1e-3  # model mismatch
        assert est.nll_value > 1e-6  # nonzero residual

    def test_sigma_validation(self):
        from miisac import DomainError

        with pytest.raises(DomainError):
            mle_conditional(1 + 1j, -0.01, DEFAULTS)
