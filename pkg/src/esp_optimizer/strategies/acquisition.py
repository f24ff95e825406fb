"""Base acquisition strategies: integrated EI, integrated PI, Thompson and random.

Each strategy nominates one candidate point per iteration. EI and PI are
averaged over the hyperparameter samples before being maximized with the
shared inner optimizer; Thompson minimizes one random-feature sample path
built from the last MCMC sample.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import norm

from esp_optimizer.models.gp import History, Hyperparams, PosteriorState, fit_posterior, predict_batch
from esp_optimizer.models.spectral import (
    DEFAULT_FEATURES,
    fit_linear_posterior,
    sample_spectral,
    thompson_minimizer,
)
from esp_optimizer.space import Box
from esp_optimizer.strategies.optimizer import OptimizerSettings, minimize_box

ArrayLike = Union[float, np.ndarray]


class ExpertKind(str, Enum):
    EI = "ei"
    PI = "pi"
    THOMPSON = "thompson"
    RANDOM = "random"


BASE_COMPOSITION: Tuple[ExpertKind, ...] = (ExpertKind.EI, ExpertKind.PI, ExpertKind.THOMPSON)


@dataclass(frozen=True)
class Expert:
    """A portfolio member: a strategy kind plus a display name."""

    kind: ExpertKind
    name: str

    @property
    def needs_model(self) -> bool:
        return self.kind is not ExpertKind.RANDOM


@dataclass(frozen=True, eq=False)
class Candidate:
    """A point nominated by one strategy.

    Attributes:
        point: Input vector inside the search box
        source: Name of the nominating expert
    """

    point: np.ndarray
    source: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float).reshape(-1))


def build_portfolio(
    n_random_experts: int = 0,
    composition: Sequence[Union[str, ExpertKind]] = BASE_COMPOSITION,
) -> List[Expert]:
    """
    Assemble the expert list for a portfolio method.

    Args:
        n_random_experts: Number of uniform-random experts appended after the base ones
        composition: Base strategy kinds, in order

    Returns:
        Experts named after their kind; random experts are numbered from 1
    """
    if n_random_experts < 0:
        raise ValueError(f"n_random_experts must be non-negative, got {n_random_experts}")
    experts = [Expert(ExpertKind(kind), ExpertKind(kind).value) for kind in composition]
    experts += [Expert(ExpertKind.RANDOM, f"random{i}") for i in range(1, n_random_experts + 1)]
    if not experts:
        raise ValueError("A portfolio needs at least one expert")
    return experts


def _output(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def ei_value(mean: ArrayLike, sd: ArrayLike, incumbent: ArrayLike) -> ArrayLike:
    """Expected improvement E[max(0, incumbent - f)] for f ~ N(mean, sd^2); broadcasts over arrays."""
    mean, sd, incumbent = np.broadcast_arrays(
        np.asarray(mean, dtype=float), np.asarray(sd, dtype=float), np.asarray(incumbent, dtype=float)
    )
    improvement = incumbent - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        z = improvement / sd
        value = improvement * norm.cdf(z) + sd * norm.pdf(z)
    value = np.where(sd > 0, value, np.maximum(improvement, 0.0))
    return _output(np.maximum(value, 0.0))


def pi_value(mean: ArrayLike, sd: ArrayLike, incumbent: ArrayLike) -> ArrayLike:
    """Probability of improvement Phi((incumbent - mean) / sd), zero margin; broadcasts over arrays."""
    mean, sd, incumbent = np.broadcast_arrays(
        np.asarray(mean, dtype=float), np.asarray(sd, dtype=float), np.asarray(incumbent, dtype=float)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (incumbent - mean) / sd
        value = norm.cdf(z)
    value = np.where(sd > 0, value, (mean < incumbent).astype(float))
    return _output(value)


_CLOSED_FORMS = {ExpertKind.EI: ei_value, ExpertKind.PI: pi_value}


def integrated_acquisition(
    kind: ExpertKind,
    states: Sequence[PosteriorState],
    x: np.ndarray,
    incumbent: float,
) -> np.ndarray:
    """(1/M) sum_i a(x; psi_i) at every row of x."""
    closed_form = _CLOSED_FORMS[ExpertKind(kind)]
    total = np.zeros(np.atleast_2d(x).shape[0])
    for state in states:
        mean, variance = predict_batch(state, x)
        total += closed_form(mean, np.sqrt(variance), incumbent)
    return total / len(states)


def propose_integrated(
    kind: ExpertKind,
    history: History,
    hps: Sequence[Hyperparams],
    bounds: Box,
    rng: np.random.Generator,
    settings: Optional[OptimizerSettings] = None,
    states: Optional[Sequence[PosteriorState]] = None,
) -> Candidate:
    """
    Maximize the hyperparameter-averaged EI or PI over the box.

    Args:
        kind: ExpertKind.EI or ExpertKind.PI
        history: Observation set
        hps: M >= 1 hyperparameter samples
        bounds: Search box
        rng: Seeded random source
        settings: Inner optimizer settings
        states: Posteriors already fitted for hps, refitted when None

    Returns:
        Candidate; a uniform random point when the history is empty
    """
    kind = ExpertKind(kind)
    if kind not in _CLOSED_FORMS:
        raise ValueError(f"Integrated acquisition supports ei and pi, got {kind.value}")
    if len(hps) < 1:
        raise ValueError("Integrated acquisition needs at least one hyperparameter sample")
    if len(history) == 0:
        return Candidate(bounds.sample(rng), kind.value)

    if states is None:
        states = [fit_posterior(history, hp) for hp in hps]
    incumbent = history.best_value
    point, _ = minimize_box(
        lambda x: -integrated_acquisition(kind, states, x, incumbent), bounds, rng, settings
    )
    return Candidate(point, kind.value)


def propose_thompson(
    history: History,
    hp_last: Hyperparams,
    bounds: Box,
    m: int,
    rng: np.random.Generator,
    settings: Optional[OptimizerSettings] = None,
) -> Candidate:
    """Minimizer of one random-feature posterior sample path under the last MCMC sample."""
    feature_map = sample_spectral(hp_last, m, rng)
    posterior = fit_linear_posterior(feature_map, history, hp_last)
    return Candidate(thompson_minimizer(posterior, bounds, rng, settings), ExpertKind.THOMPSON.value)


def propose_random(bounds: Box, rng: np.random.Generator) -> Candidate:
    return Candidate(bounds.sample(rng), ExpertKind.RANDOM.value)


def propose(
    expert: Expert,
    history: History,
    hps: Sequence[Hyperparams],
    bounds: Box,
    rng: np.random.Generator,
    m_features: int = DEFAULT_FEATURES,
    settings: Optional[OptimizerSettings] = None,
    states: Optional[Sequence[PosteriorState]] = None,
) -> Candidate:
    """Ask one expert for its candidate; the candidate is tagged with the expert's name."""
    if expert.kind is ExpertKind.RANDOM:
        candidate = propose_random(bounds, rng)
    elif expert.kind is ExpertKind.THOMPSON:
        candidate = propose_thompson(history, hps[-1], bounds, m_features, rng, settings)
    else:
        candidate = propose_integrated(expert.kind, history, hps, bounds, rng, settings, states)
    return Candidate(candidate.point, expert.name)
