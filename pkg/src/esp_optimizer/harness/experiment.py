"""Experiment configuration."""

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from esp_optimizer.models.hyper import ChainSettings
from esp_optimizer.models.spectral import DEFAULT_FEATURES
from esp_optimizer.strategies.acquisition import Expert, ExpertKind, build_portfolio
from esp_optimizer.strategies.optimizer import OptimizerSettings
from esp_optimizer.strategies.portfolio import EspSettings
from esp_optimizer.testbed.functions import BENCHMARKS, Objective

BENCHMARK_NOISE_SD = 1e-3
METRICS = ("auto", "true", "observed")


class Method(str, enum.Enum):
    """Optimization method: a portfolio meta-policy or a single base strategy."""

    ESP = "esp"
    HEDGE = "hedge"
    RANDOM_PORTFOLIO = "random-portfolio"
    EI = "ei"
    PI = "pi"
    THOMPSON = "thompson"

    @property
    def is_portfolio(self) -> bool:
        return self in (Method.ESP, Method.HEDGE, Method.RANDOM_PORTFOLIO)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a set of runs.

    Attributes:
        objective: Objective identifier (branin, hartmann3, csv:<path>)
        method: Method to run
        horizon: Total evaluations T
        n_init: Uniform-random evaluations before any model-based choice
        seeds: Master seeds, one run each
        noise_sd: Observation noise; None picks 1e-3 for benchmarks and 0 for datasets
        n_random_experts: Random experts appended to a portfolio
        eta: Hedge learning rate
        m_features: Random features for the Thompson expert
        metric: Summary metric (auto, true, observed)
        record_wall_time: Write per-query wall time into trace files
        esp: Entropy Search Portfolio settings
        chain: Hyperparameter MCMC settings
        optimizer: Inner optimizer settings
    """

    objective: str
    method: Method = Method.ESP
    horizon: int = 100
    n_init: int = 2
    seeds: Tuple[int, ...] = (0,)
    noise_sd: Optional[float] = None
    n_random_experts: int = 0
    eta: float = 1.0
    m_features: int = DEFAULT_FEATURES
    metric: str = "auto"
    record_wall_time: bool = False
    esp: EspSettings = field(default_factory=EspSettings)
    chain: ChainSettings = field(default_factory=ChainSettings)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.objective:
            raise ValueError("An objective is required")
        if self.horizon < 1:
            raise ValueError(f"horizon must be at least 1, got {self.horizon}")
        if self.n_init < 1:
            raise ValueError(f"n_init must be at least 1, got {self.n_init}")
        if self.n_init > self.horizon:
            raise ValueError(f"n_init ({self.n_init}) cannot exceed the horizon ({self.horizon})")
        if not self.seeds:
            raise ValueError("At least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise ValueError(f"Seeds must be non-negative, got {self.seeds}")
        if self.noise_sd is not None and not self.noise_sd >= 0:
            raise ValueError(f"noise_sd must be non-negative, got {self.noise_sd}")
        if self.n_random_experts < 0:
            raise ValueError(f"n_random_experts must be non-negative, got {self.n_random_experts}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.m_features < 1:
            raise ValueError(f"m_features must be at least 1, got {self.m_features}")
        if self.metric not in METRICS:
            raise ValueError(f"Unknown metric '{self.metric}', expected one of {METRICS}")

    @property
    def label(self) -> str:
        """Method name as used in file names, e.g. esp or esp9 with nine random experts."""
        if self.method.is_portfolio and self.n_random_experts:
            return f"{self.method.value}{self.n_random_experts}"
        return self.method.value

    def experts(self) -> List[Expert]:
        if self.method.is_portfolio:
            return build_portfolio(self.n_random_experts)
        return build_portfolio(0, composition=(ExpertKind(self.method.value),))

    def noise_sd_for(self, objective: Objective) -> float:
        if self.noise_sd is not None:
            return self.noise_sd
        return BENCHMARK_NOISE_SD if objective.name in BENCHMARKS else 0.0
