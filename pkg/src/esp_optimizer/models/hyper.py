"""Hyperpriors and slice-sampling MCMC over GP hyperparameters.

Positive parameters (lengthscales, amplitude, noise) are sampled as their
logarithms; the constant mean is sampled directly inside its uniform prior.
In that unconstrained space a log-normal prior is a normal density, so the
sampler targets log N(log psi; loc, scale) + log p(D | psi).
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from scipy import stats

from esp_optimizer.models.gp import CholeskyError, History, Hyperparams, log_marginal
from esp_optimizer.space import Box
from esp_optimizer.utils.logger import get_logger

logger = get_logger(__name__)

NOISE_PRIOR_LOC = math.log(1e-2)
NOISE_PRIOR_SCALE = 2.0
MIN_SLICE_WIDTH = 1e-12


@dataclass(frozen=True)
class LogNormalPrior:
    """log x ~ N(loc, scale^2)."""

    loc: float
    scale: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.loc) or not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"Invalid log-normal prior: loc={self.loc}, scale={self.scale}")

    def log_density(self, x: float) -> float:
        if not x > 0:
            return -math.inf
        return float(stats.lognorm.logpdf(x, s=self.scale, scale=math.exp(self.loc)))

    def log_density_unconstrained(self, log_x: float) -> float:
        """Density of log x, the quantity the sampler moves."""
        return float(stats.norm.logpdf(log_x, loc=self.loc, scale=self.scale))

    @property
    def centre(self) -> float:
        return math.exp(self.loc)


@dataclass(frozen=True)
class UniformPrior:
    """x ~ Uniform[low, high]."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.low) and math.isfinite(self.high) and self.low < self.high):
            raise ValueError(f"Invalid uniform prior: [{self.low}, {self.high}]")

    def log_density(self, x: float) -> float:
        return float(stats.uniform.logpdf(x, loc=self.low, scale=self.high - self.low))

    @property
    def centre(self) -> float:
        return 0.5 * (self.low + self.high)

    def clip(self, x: float) -> float:
        return float(min(max(x, self.low), self.high))


@dataclass(frozen=True)
class HyperPrior:
    """Independent priors over every entry of Hyperparams.

    Attributes:
        lengthscales: One log-normal prior per input dimension
        amplitude: Log-normal prior on nu2
        noise: Log-normal prior on s2
        mean: Uniform prior on mu0
    """

    lengthscales: Tuple[LogNormalPrior, ...]
    amplitude: LogNormalPrior
    noise: LogNormalPrior
    mean: UniformPrior

    @property
    def dim(self) -> int:
        return len(self.lengthscales)

    @property
    def positive(self) -> Tuple[LogNormalPrior, ...]:
        return (*self.lengthscales, self.amplitude, self.noise)

    @classmethod
    def default_for(cls, history: History, bounds: Box) -> "HyperPrior":
        """
        Weakly informative, box-scaled priors.

        Lengthscales ~ logN(log(0.25 * width_j), 1), nu2 ~ logN(log var(y), 1),
        s2 ~ logN(log 1e-2, 2), mu0 ~ U[min y - range y, max y + range y].
        With fewer than two observations the amplitude centre is 1 and the
        mean prior is U[-1, 1].
        """
        lengthscales = tuple(LogNormalPrior(math.log(0.25 * w), 1.0) for w in bounds.width)

        amplitude_centre = 1.0
        mean_prior = UniformPrior(-1.0, 1.0)
        if len(history) >= 2:
            y = history.values
            variance = float(np.var(y))
            if variance > 0:
                amplitude_centre = variance
            y_min, y_max = float(np.min(y)), float(np.max(y))
            spread = y_max - y_min
            if spread > 0:
                mean_prior = UniformPrior(y_min - spread, y_max + spread)
            else:
                mean_prior = UniformPrior(y_min - 1.0, y_max + 1.0)

        return cls(
            lengthscales=lengthscales,
            amplitude=LogNormalPrior(math.log(amplitude_centre), 1.0),
            noise=LogNormalPrior(NOISE_PRIOR_LOC, NOISE_PRIOR_SCALE),
            mean=mean_prior,
        )

    def log_density(self, hp: Hyperparams) -> float:
        """log p(psi) in the natural parameterization."""
        if hp.dim != self.dim:
            raise ValueError(f"Prior has dimension {self.dim}, hyperparameters {hp.dim}")
        total = sum(p.log_density(v) for p, v in zip(self.lengthscales, hp.lengthscales))
        total += self.amplitude.log_density(hp.amplitude)
        total += self.noise.log_density(hp.noise)
        total += self.mean.log_density(hp.mean)
        return float(total)

    def log_density_unconstrained(self, u: np.ndarray) -> float:
        total = sum(p.log_density_unconstrained(v) for p, v in zip(self.positive, u[:-1]))
        return float(total + self.mean.log_density(u[-1]))

    def to_unconstrained(self, hp: Hyperparams) -> np.ndarray:
        packed = hp.pack()
        return np.concatenate([np.log(packed[:-1]), packed[-1:]])

    def from_unconstrained(self, u: np.ndarray) -> Hyperparams:
        with np.errstate(over="ignore"):
            positive = np.exp(u[:-1])
        return Hyperparams.unpack(np.concatenate([positive, u[-1:]]))

    def centre(self) -> Hyperparams:
        return Hyperparams(
            np.array([p.centre for p in self.lengthscales]),
            self.amplitude.centre,
            self.noise.centre,
            self.mean.centre,
        )

    def clamp(self, hp: Hyperparams) -> Hyperparams:
        """Move mu0 back inside the mean prior, leaving the rest untouched."""
        return Hyperparams(hp.lengthscales, hp.amplitude, hp.noise, self.mean.clip(hp.mean))


@dataclass(frozen=True)
class ChainSettings:
    """Slice-sampler schedule.

    Attributes:
        n_samples: Samples M kept per refresh
        burn_in: Sweeps discarded on a cold start
        warm_burn_in: Sweeps discarded when continuing from a previous state
        thin: Sweeps between kept samples
        width: Initial slice width in unconstrained space
        max_step_out: Step-out cap per side
    """

    n_samples: int = 10
    burn_in: int = 20
    warm_burn_in: int = 5
    thin: int = 2
    width: float = 1.0
    max_step_out: int = 50

    def __post_init__(self) -> None:
        if self.n_samples < 1 or self.thin < 1:
            raise ValueError(f"n_samples and thin must be at least 1: {self}")
        if self.burn_in < 0 or self.warm_burn_in < 0 or self.max_step_out < 1:
            raise ValueError(f"Invalid burn-in or step-out settings: {self}")
        if not self.width > 0:
            raise ValueError(f"Slice width must be positive, got {self.width}")


@dataclass
class ChainDiagnostics:
    """Counters collected while slice sampling."""

    n_sweeps: int = 0
    n_evaluations: int = 0
    n_step_outs: int = 0
    n_shrinks: int = 0
    n_cap_hits: int = 0
    n_collapsed: int = 0

    def __str__(self) -> str:
        return (
            f"{self.n_sweeps} sweeps, {self.n_evaluations} evaluations, "
            f"{self.n_step_outs} step-outs, {self.n_shrinks} shrinks, "
            f"{self.n_cap_hits} cap hits, {self.n_collapsed} collapsed slices"
        )


@dataclass(frozen=True, eq=False)
class HyperChain:
    """Thinned MCMC output.

    Attributes:
        samples: M hyperparameter samples; the last one is the chain's final state
        init: State the chain started from
        diagnostics: Sampler counters
        prior: Prior the chain targeted
    """

    samples: List[Hyperparams]
    init: Hyperparams
    diagnostics: ChainDiagnostics = field(default_factory=ChainDiagnostics)
    prior: Optional[HyperPrior] = None

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def last(self) -> Hyperparams:
        return self.samples[-1]


def log_posterior(
    hp: Union[Hyperparams, np.ndarray],
    history: History,
    prior: HyperPrior,
) -> float:
    """
    Unnormalized log p(psi | D) = log p(psi) + log p(D | psi).

    Args:
        hp: Hyperparams, or a packed vector (lengthscales..., amplitude, noise, mean)
        history: Observation set
        prior: Hyperprior

    Returns:
        Log posterior density, -inf off the prior support or when the
        covariance cannot be factorized
    """
    if not isinstance(hp, Hyperparams):
        vector = np.asarray(hp, dtype=float)
        if vector.ndim != 1 or vector.size != prior.dim + 3:
            raise ValueError(f"Packed hyperparameters need {prior.dim + 3} entries, got {vector.shape}")
        if np.any(vector[:-1] <= 0) or not np.all(np.isfinite(vector)):
            return -math.inf
        hp = Hyperparams.unpack(vector)

    log_prior = prior.log_density(hp)
    if not math.isfinite(log_prior):
        return -math.inf
    try:
        return log_prior + log_marginal(history, hp)
    except CholeskyError:
        return -math.inf


def _unconstrained_target(history: History, prior: HyperPrior) -> Callable[[np.ndarray], float]:
    def target(u: np.ndarray) -> float:
        log_prior = prior.log_density_unconstrained(u)
        if not math.isfinite(log_prior):
            return -math.inf
        try:
            hp = prior.from_unconstrained(u)
        except ValueError:
            return -math.inf
        try:
            value = log_prior + log_marginal(history, hp)
        except CholeskyError:
            return -math.inf
        return value if math.isfinite(value) else -math.inf

    return target


def _slice_coordinate(
    target: Callable[[np.ndarray], float],
    u: np.ndarray,
    f_u: float,
    index: int,
    width: float,
    max_step_out: int,
    rng: np.random.Generator,
    diagnostics: ChainDiagnostics,
) -> Tuple[np.ndarray, float]:
    def at(value: float) -> float:
        trial = u.copy()
        trial[index] = value
        diagnostics.n_evaluations += 1
        return target(trial)

    level = f_u - rng.exponential()
    x0 = u[index]
    left = x0 - width * rng.random()
    right = left + width

    steps = 0
    while steps < max_step_out and at(left) > level:
        left -= width
        steps += 1
    hit_left = steps == max_step_out
    diagnostics.n_step_outs += steps

    steps = 0
    while steps < max_step_out and at(right) > level:
        right += width
        steps += 1
    hit_right = steps == max_step_out
    diagnostics.n_step_outs += steps

    if hit_left or hit_right:
        diagnostics.n_cap_hits += 1
        left -= width if hit_left else 0.0
        right += width if hit_right else 0.0
        logger.warning(f"Slice step-out cap hit on coordinate {index}; widened to [{left:.3g}, {right:.3g}]")

    while right - left > MIN_SLICE_WIDTH:
        proposal = left + rng.random() * (right - left)
        f_proposal = at(proposal)
        if f_proposal > level:
            moved = u.copy()
            moved[index] = proposal
            return moved, f_proposal
        diagnostics.n_shrinks += 1
        if proposal < x0:
            left = proposal
        else:
            right = proposal

    diagnostics.n_collapsed += 1
    return u, f_u


def sample_chain(
    history: History,
    init: Hyperparams,
    prior: HyperPrior,
    m: int,
    rng: np.random.Generator,
    burn_in: int = 20,
    thin: int = 2,
    width: float = 1.0,
    max_step_out: int = 50,
) -> HyperChain:
    """
    Draw m hyperparameter samples from p(psi | D) by coordinate-wise slice sampling.

    Args:
        history: Observation set
        init: Starting state, must lie on the prior support
        prior: Hyperprior
        m: Number of samples to keep
        rng: Seeded random source
        burn_in: Sweeps discarded before the first kept sample
        thin: Sweeps between kept samples
        width: Slice width in unconstrained space
        max_step_out: Step-out cap per side

    Returns:
        HyperChain whose last sample is the final chain state

    Raises:
        ValueError: If init is off the prior support or the schedule is invalid
    """
    if m < 1 or thin < 1 or burn_in < 0:
        raise ValueError(f"Invalid chain schedule: m={m}, burn_in={burn_in}, thin={thin}")

    target = _unconstrained_target(history, prior)
    u = prior.to_unconstrained(init)
    f_u = target(u)
    if not math.isfinite(f_u):
        raise ValueError(f"Chain initial state {init} is off the prior support")

    diagnostics = ChainDiagnostics()
    samples: List[Hyperparams] = []
    total_sweeps = burn_in + m * thin
    for sweep in range(1, total_sweeps + 1):
        for index in range(u.shape[0]):
            u, f_u = _slice_coordinate(target, u, f_u, index, width, max_step_out, rng, diagnostics)
        diagnostics.n_sweeps += 1
        if sweep > burn_in and (sweep - burn_in) % thin == 0:
            samples.append(prior.from_unconstrained(u))

    logger.debug(f"Slice chain on {len(history)} points: {diagnostics}")
    return HyperChain(samples, init, diagnostics, prior)


class WarmChain:
    """
    Hyperparameter chain that persists across optimization iterations.

    The first refresh starts from the prior centre with the full burn-in;
    later refreshes continue from the previous final state with the short
    warm burn-in.
    """

    def __init__(self, settings: Optional[ChainSettings] = None):
        self.settings = settings or ChainSettings()
        self.state: Optional[Hyperparams] = None
        self.chain: Optional[HyperChain] = None
        self.n_refreshes = 0

    def refresh(self, history: History, bounds: Box, rng: np.random.Generator) -> HyperChain:
        prior = HyperPrior.default_for(history, bounds)
        if self.state is None:
            init, burn_in = prior.centre(), self.settings.burn_in
        else:
            init, burn_in = prior.clamp(self.state), self.settings.warm_burn_in

        try:
            self.chain = self._run(history, init, prior, burn_in, rng)
        except ValueError:
            if self.state is None:
                raise
            logger.warning(f"Previous chain state {self.state} rejected by the new posterior, restarting cold")
            self.chain = self._run(history, prior.centre(), prior, self.settings.burn_in, rng)
        self.state = self.chain.last
        self.n_refreshes += 1
        return self.chain

    def _run(
        self,
        history: History,
        init: Hyperparams,
        prior: HyperPrior,
        burn_in: int,
        rng: np.random.Generator,
    ) -> HyperChain:
        return sample_chain(
            history,
            init,
            prior,
            self.settings.n_samples,
            rng,
            burn_in=burn_in,
            thin=self.settings.thin,
            width=self.settings.width,
            max_step_out=self.settings.max_step_out,
        )
