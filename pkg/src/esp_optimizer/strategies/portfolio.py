"""Portfolio meta-policies choosing among the candidates nominated each iteration.

- Entropy Search Portfolio: pick the candidate whose hallucinated observation
  leaves the least expected entropy in the minimizer distribution over a fixed
  set of representer points.
- Hedge: exponential weights over cumulative rewards.
- Random portfolio: uniform choice.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.special import softmax

from esp_optimizer.models.gp import (
    History,
    Hyperparams,
    PosteriorState,
    fit_posterior,
    predict_batch,
    sample_joint,
)
from esp_optimizer.models.spectral import (
    DEFAULT_FEATURES,
    fit_linear_posterior,
    sample_spectral,
    thompson_minimizer,
)
from esp_optimizer.space import Box
from esp_optimizer.strategies.acquisition import Candidate
from esp_optimizer.strategies.optimizer import OptimizerSettings
from esp_optimizer.utils.logger import get_logger
from esp_optimizer.utils.workers import capped

logger = get_logger(__name__)

HALLUCINATION_MODES = ("stratified", "monte-carlo")
SIMPLEX_TOLERANCE = 1e-12


@dataclass(frozen=True)
class EspSettings:
    """Entropy Search Portfolio settings.

    Attributes:
        n_representers: Representer points G, split equally over hyperparameter samples
        n_hallucinations: Hallucinated observations N per candidate and hyperparameter sample
        n_samples: Joint posterior samples S per hallucination
        m_features: Random features used to draw representers
        hallucination: "stratified" normal quantiles or plain "monte-carlo" draws
        max_workers: Threads used to score candidates, capped by ESP_OPT_THREADS
    """

    n_representers: int = 500
    n_hallucinations: int = 5
    n_samples: int = 1000
    m_features: int = DEFAULT_FEATURES
    hallucination: str = "stratified"
    max_workers: int = 1

    def __post_init__(self) -> None:
        if min(self.n_representers, self.n_hallucinations, self.n_samples, self.m_features) < 1:
            raise ValueError(f"ESP counts must all be at least 1: {self}")
        if self.hallucination not in HALLUCINATION_MODES:
            raise ValueError(
                f"Unknown hallucination mode '{self.hallucination}', expected one of {HALLUCINATION_MODES}"
            )
        if self.max_workers < 1:
            raise ValueError(f"max_workers must be at least 1, got {self.max_workers}")


@dataclass(frozen=True, eq=False)
class RepresenterSet:
    """Representer points z_1..z_G and the block owned by each hyperparameter sample.

    Attributes:
        points: Representers, shape (G, d)
        blocks: One index range per hyperparameter sample
    """

    points: np.ndarray
    blocks: Tuple[range, ...]

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def block(self, i: int) -> np.ndarray:
        return self.points[self.blocks[i].start : self.blocks[i].stop]

    @classmethod
    def shared(cls, points: np.ndarray, n_hyperparams: int) -> "RepresenterSet":
        """Use the same points for every hyperparameter sample."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        full = range(0, points.shape[0])
        return cls(points, tuple(full for _ in range(n_hyperparams)))


@dataclass(frozen=True, eq=False)
class EmpiricalPmin:
    """Relative argmin counts over the representers."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError(f"pmin must be a non-empty vector, got shape {probs.shape}")
        if np.any(probs < 0) or abs(float(np.sum(probs)) - 1.0) > SIMPLEX_TOLERANCE:
            raise ValueError("pmin must lie on the probability simplex")
        object.__setattr__(self, "probs", probs)


def _block_sizes(g: int, m: int) -> List[int]:
    size, remainder = divmod(g, m)
    return [size + remainder] + [size] * (m - 1)


def sample_representers(
    history: History,
    hps: Sequence[Hyperparams],
    g: int,
    m_features: int,
    rng: np.random.Generator,
    bounds: Optional[Box] = None,
    settings: Optional[OptimizerSettings] = None,
) -> RepresenterSet:
    """
    Draw G approximate samples of the minimizer location.

    Each hyperparameter sample gets floor(G / M) independent Thompson draws,
    the first also takes the remainder.

    Args:
        history: Observation set
        hps: M hyperparameter samples
        g: Total representer count, at least M
        m_features: Random features per Thompson draw
        rng: Seeded random source
        bounds: Search box (defaults to the history's bounds)
        settings: Inner optimizer settings for each draw

    Returns:
        RepresenterSet with one block per hyperparameter sample
    """
    bounds = bounds or history.bounds
    if bounds is None:
        raise ValueError("Representer sampling needs a search box")
    if len(hps) < 1:
        raise ValueError("Representer sampling needs at least one hyperparameter sample")
    if g < len(hps):
        raise ValueError(f"Need at least one representer per hyperparameter sample, got G={g} for M={len(hps)}")

    points: List[np.ndarray] = []
    blocks: List[range] = []
    start = 0
    for hp, size, block_rng in zip(hps, _block_sizes(g, len(hps)), rng.spawn(len(hps))):
        for _ in range(size):
            feature_map = sample_spectral(hp, m_features, block_rng)
            posterior = fit_linear_posterior(feature_map, history, hp)
            points.append(thompson_minimizer(posterior, bounds, block_rng, settings))
        blocks.append(range(start, start + size))
        start += size
    return RepresenterSet(np.vstack(points), tuple(blocks))


def empirical_pmin(f_samples: np.ndarray) -> EmpiricalPmin:
    """Fraction of rows (samples) attaining their minimum at each column; ties go to the lowest column."""
    f_samples = np.atleast_2d(np.asarray(f_samples, dtype=float))
    s, g = f_samples.shape
    if s < 1 or g < 1:
        raise ValueError(f"Need at least one sample and one representer, got shape {f_samples.shape}")
    counts = np.bincount(np.argmin(f_samples, axis=1), minlength=g)
    return EmpiricalPmin(counts / s)


def entropy(p: Union[EmpiricalPmin, np.ndarray]) -> float:
    """Shannon entropy in nats, with 0 log 0 = 0."""
    probs = p.probs if isinstance(p, EmpiricalPmin) else EmpiricalPmin(p).probs
    return float(stats.entropy(probs))


def _hallucination_quantiles(settings: EspSettings, rng: np.random.Generator) -> np.ndarray:
    n = settings.n_hallucinations
    if settings.hallucination == "stratified":
        return stats.norm.ppf((np.arange(n) + 0.5) / n)
    return rng.standard_normal(n)


def _candidate_utility(
    point: np.ndarray,
    history: History,
    states: Sequence[PosteriorState],
    representers: RepresenterSet,
    quantiles: Sequence[np.ndarray],
    settings: EspSettings,
    seed: int,
) -> float:
    total = 0.0
    for i, state in enumerate(states):
        hp = state.hyperparams
        block = representers.block(i)
        mean, variance = predict_batch(state, point[None, :])
        predictive_sd = float(np.sqrt(variance[0] + hp.noise))
        for n, q in enumerate(quantiles[i]):
            y = float(mean[0]) + predictive_sd * float(q)
            hallucinated = fit_posterior(history.augment(point, y), hp)
            # Same stream for every candidate: common random numbers
            rng = np.random.default_rng([seed, i, n])
            samples = sample_joint(hallucinated, block, settings.n_samples, rng)
            total += entropy(empirical_pmin(samples))
    return -total / (len(states) * settings.n_hallucinations)


def esp_utilities(
    candidates: Sequence[Candidate],
    history: History,
    hps: Sequence[Hyperparams],
    representers: RepresenterSet,
    settings: EspSettings,
    seed: int,
    states: Optional[Sequence[PosteriorState]] = None,
) -> np.ndarray:
    """
    Negative expected posterior entropy of the minimizer for every candidate.

    Args:
        candidates: K nominated points
        history: Observation set
        hps: M hyperparameter samples
        representers: Representer points, one block per hyperparameter sample
        settings: ESP settings
        seed: Base seed of the per-(hyperparameter, hallucination) streams
        states: Posteriors already fitted for hps

    Returns:
        Utility vector u of length K
    """
    if len(representers.blocks) != len(hps):
        raise ValueError(f"Representer set has {len(representers.blocks)} blocks for {len(hps)} samples")
    if states is None:
        states = [fit_posterior(history, hp) for hp in hps]
    quantiles = [
        _hallucination_quantiles(settings, np.random.default_rng([seed, i, settings.n_hallucinations]))
        for i in range(len(hps))
    ]

    def score(candidate: Candidate) -> float:
        return _candidate_utility(candidate.point, history, states, representers, quantiles, settings, seed)

    workers = capped(settings.max_workers)
    if workers > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            utilities = list(pool.map(score, candidates))
    else:
        utilities = [score(candidate) for candidate in candidates]
    return np.asarray(utilities, dtype=float)


def esp_select(
    candidates: Sequence[Candidate],
    history: History,
    hps: Sequence[Hyperparams],
    settings: EspSettings,
    rng: np.random.Generator,
    representers: Optional[RepresenterSet] = None,
    states: Optional[Sequence[PosteriorState]] = None,
    optimizer_settings: Optional[OptimizerSettings] = None,
) -> int:
    """
    Entropy Search Portfolio selection.

    Args:
        candidates: K >= 1 nominated points
        history: Observation set
        hps: M hyperparameter samples
        settings: ESP settings
        rng: Seeded random source for representers and the utility seed
        representers: Fixed representer set, sampled when None
        states: Posteriors already fitted for hps
        optimizer_settings: Inner optimizer settings for representer draws

    Returns:
        Index of the candidate with the highest utility, lowest index on ties

    Raises:
        ValueError: If there are no candidates
    """
    if len(candidates) == 0:
        raise ValueError("esp_select needs at least one candidate")
    if len(candidates) == 1:
        return 0

    if representers is None:
        representers = sample_representers(
            history, hps, settings.n_representers, settings.m_features, rng, settings=optimizer_settings
        )
    seed = int(rng.integers(2**63))
    utilities = esp_utilities(candidates, history, hps, representers, settings, seed, states)
    selected = int(np.argmax(utilities))
    logger.debug(
        "ESP utilities: "
        + ", ".join(f"{c.source}={u:.4f}" for c, u in zip(candidates, utilities))
        + f" -> {candidates[selected].source}"
    )
    return selected


@dataclass(frozen=True, eq=False)
class HedgeState:
    """Cumulative expert rewards and the Hedge learning rate."""

    gains: np.ndarray
    eta: float = 1.0

    def __post_init__(self) -> None:
        gains = np.atleast_1d(np.asarray(self.gains, dtype=float))
        if gains.ndim != 1 or gains.size == 0 or not np.all(np.isfinite(gains)):
            raise ValueError(f"Hedge gains must be a finite non-empty vector, got {gains}")
        if not self.eta > 0:
            raise ValueError(f"Hedge learning rate must be positive, got {self.eta}")
        object.__setattr__(self, "gains", gains)

    @classmethod
    def initial(cls, k: int, eta: float = 1.0) -> "HedgeState":
        if k < 1:
            raise ValueError(f"Hedge needs at least one expert, got {k}")
        return cls(np.zeros(k), eta)

    @property
    def k(self) -> int:
        return int(self.gains.shape[0])

    def probabilities(self) -> np.ndarray:
        """exp(eta g_k) / sum_j exp(eta g_j)."""
        return softmax(self.eta * self.gains)


def hedge_select(state: HedgeState, rng: np.random.Generator) -> int:
    cumulative = np.cumsum(state.probabilities())
    index = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return min(index, state.k - 1)


def hedge_update(state: HedgeState, rewards: np.ndarray) -> HedgeState:
    rewards = np.asarray(rewards, dtype=float)
    if rewards.shape != state.gains.shape:
        raise ValueError(f"Expected {state.k} rewards, got shape {rewards.shape}")
    if not np.all(np.isfinite(rewards)):
        raise ValueError(f"Hedge rewards must be finite, got {rewards}")
    return HedgeState(state.gains + rewards, state.eta)


def hedge_rewards(
    candidates: Sequence[Candidate],
    history: History,
    hps: Sequence[Hyperparams],
    states: Optional[Sequence[PosteriorState]] = None,
) -> np.ndarray:
    """Negated hyperparameter-averaged posterior mean at every candidate."""
    if states is None:
        states = [fit_posterior(history, hp) for hp in hps]
    points = np.vstack([c.point for c in candidates])
    means = np.mean([predict_batch(state, points)[0] for state in states], axis=0)
    return -means


def random_portfolio_select(k: int, rng: np.random.Generator) -> int:
    if k < 1:
        raise ValueError(f"Random portfolio needs at least one expert, got {k}")
    return int(rng.integers(k))


@dataclass
class SelectionLog:
    """Running count of how often each expert was selected."""

    names: List[str]
    counts: List[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.counts:
            self.counts = [0] * len(self.names)

    def record(self, index: int) -> None:
        self.counts[index] += 1

    def frequencies(self) -> np.ndarray:
        total = sum(self.counts)
        if total == 0:
            return np.zeros(len(self.names))
        return np.asarray(self.counts, dtype=float) / total
