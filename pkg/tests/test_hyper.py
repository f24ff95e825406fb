"""Tests for hyperpriors and slice-sampling MCMC."""

import math

import numpy as np
import pytest

from esp_optimizer.models.gp import History, Hyperparams, log_marginal
from esp_optimizer.models.hyper import (
    ChainSettings,
    HyperPrior,
    LogNormalPrior,
    UniformPrior,
    WarmChain,
    log_posterior,
    sample_chain,
)
from esp_optimizer.space import Box


class TestPriors:
    """Test the individual prior families."""

    def test_log_normal_density(self) -> None:
        """Test the log-normal log density against the closed form."""
        prior = LogNormalPrior(loc=0.5, scale=1.5)
        x = 2.0
        expected = (
            -math.log(x * 1.5 * math.sqrt(2.0 * math.pi)) - (math.log(x) - 0.5) ** 2 / (2.0 * 1.5**2)
        )
        assert prior.log_density(x) == pytest.approx(expected)
        assert prior.log_density(0.0) == -math.inf
        assert prior.centre == pytest.approx(math.exp(0.5))

    def test_uniform_density(self) -> None:
        """Test the uniform prior has constant density inside and none outside."""
        prior = UniformPrior(-1.0, 3.0)
        assert prior.log_density(0.0) == pytest.approx(-math.log(4.0))
        assert prior.log_density(3.5) == -math.inf
        assert prior.clip(5.0) == 3.0
        assert prior.centre == 1.0

    def test_invalid_priors(self) -> None:
        """Test degenerate parameters are rejected."""
        with pytest.raises(ValueError):
            LogNormalPrior(0.0, 0.0)
        with pytest.raises(ValueError):
            UniformPrior(1.0, 1.0)


class TestHyperPrior:
    """Test the box-scaled default prior."""

    def test_default_for_scales_with_box(self, small_history: History, unit_square: Box) -> None:
        """Test lengthscale priors centre on a quarter of the box width."""
        prior = HyperPrior.default_for(small_history, unit_square)
        assert prior.dim == 2
        assert prior.lengthscales[0].centre == pytest.approx(0.25)
        assert prior.amplitude.centre == pytest.approx(float(np.var(small_history.values)))
        assert prior.noise.centre == pytest.approx(1e-2)

    def test_mean_prior_spans_data(self, small_history: History, unit_square: Box) -> None:
        """Test the mean prior extends one data range beyond the observations."""
        prior = HyperPrior.default_for(small_history, unit_square)
        y = small_history.values
        spread = y.max() - y.min()
        assert prior.mean.low == pytest.approx(y.min() - spread)
        assert prior.mean.high == pytest.approx(y.max() + spread)

    def test_short_history_defaults(self, unit_square: Box) -> None:
        """Test fewer than two observations give unit amplitude and a [-1, 1] mean prior."""
        history = History(np.array([[0.5, 0.5]]), np.array([3.0]), unit_square)
        prior = HyperPrior.default_for(history, unit_square)
        assert prior.amplitude.centre == pytest.approx(1.0)
        assert (prior.mean.low, prior.mean.high) == (-1.0, 1.0)

    def test_constant_observations(self, unit_square: Box) -> None:
        """Test identical observations still give a proper mean prior."""
        history = History(np.array([[0.1, 0.1], [0.9, 0.9]]), np.array([2.0, 2.0]), unit_square)
        prior = HyperPrior.default_for(history, unit_square)
        assert (prior.mean.low, prior.mean.high) == (1.0, 3.0)
        assert prior.amplitude.centre == pytest.approx(1.0)

    def test_unconstrained_round_trip(self, small_history: History, unit_square: Box, hp2: Hyperparams) -> None:
        """Test the log transform is inverted exactly."""
        prior = HyperPrior.default_for(small_history, unit_square)
        restored = prior.from_unconstrained(prior.to_unconstrained(hp2))
        assert np.allclose(restored.pack(), hp2.pack())

    def test_clamp_moves_mean_inside(self, small_history: History, unit_square: Box, hp2: Hyperparams) -> None:
        """Test clamp only changes the mean."""
        prior = HyperPrior.default_for(small_history, unit_square)
        far = Hyperparams(hp2.lengthscales, hp2.amplitude, hp2.noise, 100.0)
        clamped = prior.clamp(far)
        assert clamped.mean == prior.mean.high
        assert clamped.amplitude == hp2.amplitude


class TestLogPosterior:
    """Test the unnormalized log posterior."""

    def test_sum_of_prior_and_likelihood(self, small_history: History, unit_square: Box, hp2: Hyperparams) -> None:
        """Test log p(psi | D) = log p(psi) + log p(D | psi)."""
        prior = HyperPrior.default_for(small_history, unit_square)
        expected = prior.log_density(hp2) + log_marginal(small_history, hp2)
        assert log_posterior(hp2, small_history, prior) == pytest.approx(expected)

    def test_packed_vector(self, small_history: History, unit_square: Box, hp2: Hyperparams) -> None:
        """Test a packed vector gives the same value as Hyperparams."""
        prior = HyperPrior.default_for(small_history, unit_square)
        assert log_posterior(hp2.pack(), small_history, prior) == pytest.approx(
            log_posterior(hp2, small_history, prior)
        )

    def test_off_support(self, small_history: History, unit_square: Box, hp2: Hyperparams) -> None:
        """Test negative entries and means outside the prior give -inf."""
        prior = HyperPrior.default_for(small_history, unit_square)
        vector = hp2.pack()
        vector[0] = -0.1
        assert log_posterior(vector, small_history, prior) == -math.inf
        far = Hyperparams(hp2.lengthscales, hp2.amplitude, hp2.noise, 100.0)
        assert log_posterior(far, small_history, prior) == -math.inf

    def test_wrong_vector_length(self, small_history: History, unit_square: Box) -> None:
        """Test a packed vector of the wrong size is rejected."""
        prior = HyperPrior.default_for(small_history, unit_square)
        with pytest.raises(ValueError, match="entries"):
            log_posterior(np.ones(4), small_history, prior)


class TestSampleChain:
    """Test slice sampling."""

    def test_sample_count_and_support(self, small_history: History, unit_square: Box, rng: np.random.Generator) -> None:
        """Test m samples are returned and every one has finite log posterior."""
        prior = HyperPrior.default_for(small_history, unit_square)
        chain = sample_chain(small_history, prior.centre(), prior, 4, rng, burn_in=2, thin=1)
        assert len(chain) == 4
        assert chain.diagnostics.n_sweeps == 6
        for hp in chain.samples:
            assert math.isfinite(log_posterior(hp, small_history, prior))
            assert prior.mean.low <= hp.mean <= prior.mean.high

    def test_deterministic_for_a_seed(self, small_history: History, unit_square: Box) -> None:
        """Test equal seeds give identical chains."""
        prior = HyperPrior.default_for(small_history, unit_square)
        first = sample_chain(small_history, prior.centre(), prior, 2, np.random.default_rng(9), burn_in=1)
        second = sample_chain(small_history, prior.centre(), prior, 2, np.random.default_rng(9), burn_in=1)
        assert np.array_equal(first.last.pack(), second.last.pack())

    def test_chain_moves(self, small_history: History, unit_square: Box, rng: np.random.Generator) -> None:
        """Test the chain leaves its starting state."""
        prior = HyperPrior.default_for(small_history, unit_square)
        chain = sample_chain(small_history, prior.centre(), prior, 2, rng, burn_in=2)
        assert not np.allclose(chain.last.pack(), chain.init.pack())

    def test_recovers_prior_without_data(self) -> None:
        """Test with no observations the chain's log-lengthscale and log-amplitude means match the prior within 0.1."""
        bounds = Box(np.zeros(1), np.full(1, 2.0))
        history = History.empty(bounds)
        prior = HyperPrior.default_for(history, bounds)
        chain = sample_chain(history, prior.centre(), prior, 2000, np.random.default_rng(8), burn_in=50, thin=3)
        assert len(chain) == 2000

        log_lengthscales = np.log([hp.lengthscales[0] for hp in chain.samples])
        log_amplitudes = np.log([hp.amplitude for hp in chain.samples])
        assert prior.lengthscales[0].loc == pytest.approx(math.log(0.5))
        assert abs(log_lengthscales.mean() - prior.lengthscales[0].loc) <= 0.1
        assert abs(log_amplitudes.mean() - prior.amplitude.loc) <= 0.1
        assert log_lengthscales.std() == pytest.approx(prior.lengthscales[0].scale, abs=0.15)

    def test_init_off_support(self, small_history: History, unit_square: Box, hp2: Hyperparams, rng: np.random.Generator) -> None:
        """Test a start outside the mean prior is rejected."""
        prior = HyperPrior.default_for(small_history, unit_square)
        far = Hyperparams(hp2.lengthscales, hp2.amplitude, hp2.noise, 100.0)
        with pytest.raises(ValueError, match="off the prior support"):
            sample_chain(small_history, far, prior, 2, rng)

    def test_invalid_schedule(self, small_history: History, unit_square: Box, rng: np.random.Generator) -> None:
        """Test m and thin must be positive."""
        prior = HyperPrior.default_for(small_history, unit_square)
        with pytest.raises(ValueError, match="Invalid chain schedule"):
            sample_chain(small_history, prior.centre(), prior, 0, rng)

    def test_step_out_cap(self, small_history: History, unit_square: Box, rng: np.random.Generator) -> None:
        """Test a tiny width with a cap of one step still yields valid samples."""
        prior = HyperPrior.default_for(small_history, unit_square)
        chain = sample_chain(
            small_history, prior.centre(), prior, 2, rng, burn_in=1, width=1e-3, max_step_out=1
        )
        assert chain.diagnostics.n_cap_hits > 0
        assert len(chain) == 2


class TestWarmChain:
    """Test the persistent chain."""

    def test_cold_then_warm(self, small_history: History, unit_square: Box, fast_chain: ChainSettings) -> None:
        """Test the first refresh burns in fully and later ones continue from the last state."""
        warm = WarmChain(fast_chain)
        first = warm.refresh(small_history, unit_square, np.random.default_rng(1))
        assert warm.n_refreshes == 1
        assert first.diagnostics.n_sweeps == fast_chain.burn_in + fast_chain.n_samples * fast_chain.thin

        longer = small_history.augment(np.array([0.35, 0.35]), 0.0)
        second = warm.refresh(longer, unit_square, np.random.default_rng(2))
        assert warm.n_refreshes == 2
        assert second.diagnostics.n_sweeps == fast_chain.warm_burn_in + fast_chain.n_samples * fast_chain.thin
        assert np.allclose(second.init.lengthscales, first.last.lengthscales)
        assert warm.state is second.last

    def test_empty_history(self, unit_square: Box, fast_chain: ChainSettings) -> None:
        """Test refreshing with no data samples the prior."""
        warm = WarmChain(fast_chain)
        chain = warm.refresh(History.empty(unit_square), unit_square, np.random.default_rng(0))
        assert len(chain) == fast_chain.n_samples

    def test_settings_validation(self) -> None:
        """Test invalid schedules are rejected."""
        with pytest.raises(ValueError):
            ChainSettings(n_samples=0)
        with pytest.raises(ValueError):
            ChainSettings(width=0.0)
