"""Tests for the base acquisition strategies."""

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from esp_optimizer.models.gp import History, Hyperparams, fit_posterior, predict_batch
from esp_optimizer.space import Box
from esp_optimizer.strategies.acquisition import (
    Candidate,
    Expert,
    ExpertKind,
    build_portfolio,
    ei_value,
    integrated_acquisition,
    pi_value,
    propose,
    propose_integrated,
    propose_random,
    propose_thompson,
)
from esp_optimizer.strategies.optimizer import OptimizerSettings


class TestClosedForms:
    """Test expected and probability of improvement."""

    def test_ei_standard_normal(self) -> None:
        """Test EI at mean 0, sd 1, incumbent 0 is phi(0)."""
        assert ei_value(0.0, 1.0, 0.0) == pytest.approx(0.3989422804)

    def test_pi_one_sd_above(self) -> None:
        """Test PI at mean 1, sd 1, incumbent 0 is Phi(-1)."""
        assert pi_value(1.0, 1.0, 0.0) == pytest.approx(0.1586552539)

    def test_zero_sd(self) -> None:
        """Test zero variance reduces to the deterministic improvement."""
        assert ei_value(-2.0, 0.0, 1.0) == pytest.approx(3.0)
        assert ei_value(2.0, 0.0, 1.0) == 0.0
        assert pi_value(-2.0, 0.0, 1.0) == 1.0
        assert pi_value(2.0, 0.0, 1.0) == 0.0

    def test_ei_matches_quadrature(self) -> None:
        """Test EI at mean = incumbent - 0.5, sd = 2 against numerical integration."""
        incumbent, mean, sd = 1.0, 0.5, 2.0

        def integrand(f: float) -> float:
            weight = np.exp(-0.5 * ((f - mean) / sd) ** 2) / (sd * np.sqrt(2.0 * np.pi))
            return (incumbent - f) * weight

        expected, _ = integrate.quad(integrand, mean - 12.0 * sd, incumbent)
        assert ei_value(mean, sd, incumbent) == pytest.approx(expected, abs=1e-6)

    def test_random_triples_match_quadrature(self) -> None:
        """Test EI and PI on 1000 random (mean, sd, incumbent) triples against integration and the normal CDF."""
        rng = np.random.default_rng(41)
        mean = rng.uniform(-3.0, 3.0, 1000)
        sd = rng.uniform(0.05, 3.0, 1000)
        incumbent = rng.uniform(-3.0, 3.0, 1000)
        ei = ei_value(mean, sd, incumbent)
        pi = pi_value(mean, sd, incumbent)

        for k in range(1000):
            z = (incumbent[k] - mean[k]) / sd[k]
            # EI = sd * integral of (z - t) phi(t) over t < z
            expected_ei, _ = integrate.quad(lambda t: (z - t) * norm.pdf(t), -np.inf, z, epsabs=1e-10)
            assert ei[k] == pytest.approx(sd[k] * expected_ei, abs=1e-6)
            assert pi[k] == pytest.approx(norm(loc=mean[k], scale=sd[k]).cdf(incumbent[k]), abs=1e-6)

    def test_pi_symmetric_case(self) -> None:
        """Test PI is one half when the mean equals the incumbent."""
        assert pi_value(0.7, 0.3, 0.7) == pytest.approx(0.5)

    def test_vectorized(self) -> None:
        """Test arrays are evaluated elementwise."""
        mean = np.array([0.0, 1.0, -1.0])
        sd = np.array([1.0, 1.0, 0.0])
        ei = ei_value(mean, sd, 0.0)
        assert ei.shape == (3,)
        assert ei[0] == pytest.approx(ei_value(0.0, 1.0, 0.0))
        assert ei[2] == pytest.approx(1.0)
        assert np.all(ei >= 0.0)

    def test_ei_increases_with_uncertainty(self) -> None:
        """Test EI grows with sd at a fixed mean."""
        values = ei_value(0.5, np.array([0.1, 0.5, 1.0, 2.0]), 0.0)
        assert np.all(np.diff(values) > 0)


class TestBuildPortfolio:
    """Test portfolio assembly."""

    def test_base_portfolio(self) -> None:
        """Test the base portfolio is EI, PI, Thompson."""
        experts = build_portfolio()
        assert [e.name for e in experts] == ["ei", "pi", "thompson"]
        assert all(e.needs_model for e in experts)

    def test_random_experts_are_numbered(self) -> None:
        """Test random experts come after the base ones as random1..n."""
        experts = build_portfolio(3)
        assert [e.name for e in experts[3:]] == ["random1", "random2", "random3"]
        assert not experts[-1].needs_model

    def test_custom_composition(self) -> None:
        """Test a single-strategy portfolio."""
        experts = build_portfolio(0, composition=("pi",))
        assert experts == [Expert(ExpertKind.PI, "pi")]

    def test_invalid_counts(self) -> None:
        """Test negative and empty portfolios are rejected."""
        with pytest.raises(ValueError):
            build_portfolio(-1)
        with pytest.raises(ValueError):
            build_portfolio(0, composition=())


class TestIntegratedAcquisition:
    """Test hyperparameter-averaged acquisition."""

    def test_average_of_identical_states(self, small_history: History, hp2: Hyperparams) -> None:
        """Test averaging M copies of one state equals that state's value."""
        state = fit_posterior(small_history, hp2)
        x = np.array([[0.5, 0.5], [0.2, 0.8]])
        mean, variance = predict_batch(state, x)
        expected = ei_value(mean, np.sqrt(variance), small_history.best_value)
        values = integrated_acquisition(ExpertKind.EI, [state, state, state], x, small_history.best_value)
        assert np.allclose(values, expected)

    def test_mixture_is_average(self, small_history: History, hp2: Hyperparams) -> None:
        """Test two different states are averaged with equal weight."""
        other = Hyperparams(np.array([0.1, 0.1]), 0.5, 1e-3, 0.0)
        states = [fit_posterior(small_history, hp2), fit_posterior(small_history, other)]
        x = np.array([[0.5, 0.9]])
        incumbent = small_history.best_value
        single = [integrated_acquisition(ExpertKind.PI, [s], x, incumbent)[0] for s in states]
        both = integrated_acquisition(ExpertKind.PI, states, x, incumbent)[0]
        assert both == pytest.approx(0.5 * sum(single))


class TestPropose:
    """Test candidate proposals."""

    def test_integrated_ei_in_box(self, small_history: History, hp2: Hyperparams, unit_square: Box, rng: np.random.Generator, fast_optimizer: OptimizerSettings) -> None:
        """Test the EI candidate lies in the box and is tagged ei."""
        candidate = propose_integrated(ExpertKind.EI, small_history, [hp2], unit_square, rng, fast_optimizer)
        assert candidate.source == "ei"
        assert unit_square.contains(candidate.point)

    def test_integrated_maximizes_acquisition(self, small_history: History, hp2: Hyperparams, unit_square: Box, rng: np.random.Generator) -> None:
        """Test the EI candidate scores at least as well as random points."""
        candidate = propose_integrated(ExpertKind.EI, small_history, [hp2], unit_square, rng)
        state = fit_posterior(small_history, hp2)
        incumbent = small_history.best_value
        chosen = integrated_acquisition(ExpertKind.EI, [state], candidate.point, incumbent)[0]
        others = integrated_acquisition(ExpertKind.EI, [state], rng.random((50, 2)), incumbent)
        assert chosen >= others.max() - 1e-9

    def test_empty_history_gives_uniform_point(self, unit_square: Box, hp2: Hyperparams, rng: np.random.Generator) -> None:
        """Test EI with no observations falls back to a uniform draw."""
        candidate = propose_integrated(ExpertKind.PI, History.empty(unit_square), [hp2], unit_square, rng)
        assert unit_square.contains(candidate.point)

    def test_rejects_other_kinds(self, small_history: History, hp2: Hyperparams, unit_square: Box, rng: np.random.Generator) -> None:
        """Test only EI and PI have integrated forms."""
        with pytest.raises(ValueError, match="supports ei and pi"):
            propose_integrated(ExpertKind.THOMPSON, small_history, [hp2], unit_square, rng)

    def test_needs_hyperparameters(self, small_history: History, unit_square: Box, rng: np.random.Generator) -> None:
        """Test at least one hyperparameter sample is required."""
        with pytest.raises(ValueError, match="at least one"):
            propose_integrated(ExpertKind.EI, small_history, [], unit_square, rng)

    def test_thompson(self, small_history: History, hp2: Hyperparams, unit_square: Box, rng: np.random.Generator, fast_optimizer: OptimizerSettings) -> None:
        """Test the Thompson candidate lies in the box."""
        candidate = propose_thompson(small_history, hp2, unit_square, 50, rng, fast_optimizer)
        assert candidate.source == "thompson"
        assert unit_square.contains(candidate.point)

    def test_thompson_finds_known_minimizer(self) -> None:
        """Test Thompson candidates land within 0.2 of the minimizer of sin(6x) in at least 7 of 10 seeds."""
        bounds = Box(np.zeros(1), np.ones(1))
        points = np.linspace(0.0, 1.0, 12)[:, None]
        history = History(points, np.sin(6.0 * points[:, 0]), bounds)
        hp = Hyperparams(np.array([0.2]), amplitude=1.0, noise=1e-4, mean=0.0)
        settings = OptimizerSettings(sweep_per_dim=200, n_starts=2, n_iter=20)
        minimizer = np.pi / 4.0

        hits = 0
        for seed in range(10):
            candidate = propose_thompson(history, hp, bounds, 500, np.random.default_rng(seed), settings)
            hits += abs(float(candidate.point[0]) - minimizer) <= 0.2
        assert hits >= 7

    def test_random(self, unit_square: Box, rng: np.random.Generator) -> None:
        """Test the random candidate lies in the box."""
        candidate = propose_random(unit_square, rng)
        assert isinstance(candidate, Candidate)
        assert unit_square.contains(candidate.point)

    def test_propose_tags_expert_name(self, small_history: History, hp2: Hyperparams, unit_square: Box, fast_optimizer: OptimizerSettings) -> None:
        """Test every expert's candidate carries its own name."""
        for expert in build_portfolio(2):
            candidate = propose(
                expert, small_history, [hp2], unit_square, np.random.default_rng(0), 50, fast_optimizer
            )
            assert candidate.source == expert.name
            assert candidate.point.shape == (2,)

    def test_propose_is_deterministic(self, small_history: History, hp2: Hyperparams, unit_square: Box, fast_optimizer: OptimizerSettings) -> None:
        """Test equal generators give equal candidates."""
        expert = Expert(ExpertKind.THOMPSON, "thompson")
        first = propose(expert, small_history, [hp2], unit_square, np.random.default_rng(3), 50, fast_optimizer)
        second = propose(expert, small_history, [hp2], unit_square, np.random.default_rng(3), 50, fast_optimizer)
        assert np.array_equal(first.point, second.point)
