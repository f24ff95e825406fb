"""Configuration loader for esp-optimizer experiments."""

from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from esp_optimizer.harness.experiment import ExperimentConfig
from esp_optimizer.models.hyper import ChainSettings
from esp_optimizer.strategies.optimizer import OptimizerSettings
from esp_optimizer.strategies.portfolio import EspSettings
from esp_optimizer.utils.workers import capped

YAML_SUFFIXES = (".yaml", ".yml")

# Flat names accepted in key=value files and as CLI overrides
FLAT_KEYS: Dict[str, Tuple[str, str]] = {
    "objective": ("experiment", "objective"),
    "method": ("experiment", "method"),
    "horizon": ("experiment", "horizon"),
    "n_init": ("experiment", "n_init"),
    "seeds": ("experiment", "seeds"),
    "noise_sd": ("experiment", "noise_sd"),
    "n_random_experts": ("experiment", "n_random_experts"),
    "metric": ("experiment", "metric"),
    "out": ("output", "dir"),
    "record_wall_time": ("output", "record_wall_time"),
    "db": ("output", "database_url"),
    "eta": ("hedge", "eta"),
    "n_features": ("spectral", "n_features"),
}


def parse_seeds(value: Any) -> Tuple[int, ...]:
    """
    Parse a seed specification.

    Accepts an integer, a list of integers, "a..b" (inclusive range) or a
    comma-separated list such as "0,3,7".

    Raises:
        ValueError: If the specification is malformed or empty
    """
    if isinstance(value, bool):
        raise ValueError(f"Invalid seeds: {value!r}")
    if isinstance(value, int):
        return (value,)
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)

    text = str(value).strip()
    try:
        if ".." in text:
            start, end = (int(part) for part in text.split("..", 1))
            if end < start:
                raise ValueError(f"Empty seed range: {text}")
            return tuple(range(start, end + 1))
        seeds = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise ValueError(f"Invalid seeds '{text}': {e}") from e
    if not seeds:
        raise ValueError(f"Invalid seeds '{text}'")
    return seeds


def _coerce(raw: str) -> Any:
    text = raw.strip()
    lowered = text.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null", ""):
        return None
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def _parse_key_values(text: str, source: Path) -> Dict[str, Dict[str, Any]]:
    config: Dict[str, Dict[str, Any]] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{number}: expected key=value, got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if "." in key:
            section, name = key.split(".", 1)
        elif key in FLAT_KEYS:
            section, name = FLAT_KEYS[key]
        else:
            raise ValueError(f"{source}:{number}: unknown key '{key}'")
        config.setdefault(section, {})[name] = _coerce(value)
    return config


class Config:
    """Configuration manager for experiments."""

    def __init__(self, config_path: str | None = None):
        """
        Initialize configuration from a YAML or key=value file.

        Args:
            config_path: Path to config file. If None, uses default config/experiment.yaml
        """
        if config_path is None:
            project_root = Path(__file__).parent.parent.parent
            config_path = project_root / "config" / "experiment.yaml"

        self.config_path: Optional[Path] = Path(config_path)
        self._config = self._load_config()

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Any]) -> "Config":
        """Build a configuration from an in-memory nested mapping."""
        config = cls.__new__(cls)
        config.config_path = None
        config._config = {section: dict(values or {}) for section, values in mapping.items()}
        return config

    def _load_config(self) -> Dict[str, Any]:
        """Load and parse the configuration file."""
        if not self.config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self.config_path}")
        if not self.config_path.is_file():
            raise ValueError(f"Config path is not a file: {self.config_path}")

        with open(self.config_path, "r", encoding="utf-8") as f:
            text = f.read()

        if self.config_path.suffix in YAML_SUFFIXES:
            config = yaml.safe_load(text)
        else:
            config = _parse_key_values(text, self.config_path)

        if not config or not isinstance(config, dict):
            raise ValueError(f"Empty or invalid config file: {self.config_path}")

        return config

    def section(self, name: str) -> Dict[str, Any]:
        return self._config.get(name) or {}

    def get(self, section: str, key: str, default: Any = None) -> Any:
        value = self.section(section).get(key)
        return default if value is None else value

    @property
    def objective(self) -> Optional[str]:
        """Objective identifier, None when not configured."""
        return self.get("experiment", "objective")

    @property
    def method(self) -> str:
        return str(self.get("experiment", "method", "esp"))

    @property
    def horizon(self) -> int:
        return int(self.get("experiment", "horizon", 100))

    @property
    def n_init(self) -> int:
        return int(self.get("experiment", "n_init", 2))

    @property
    def seeds(self) -> Tuple[int, ...]:
        return parse_seeds(self.get("experiment", "seeds", "0..24"))

    @property
    def noise_sd(self) -> Optional[float]:
        value = self.get("experiment", "noise_sd")
        return None if value is None else float(value)

    @property
    def n_random_experts(self) -> int:
        return int(self.get("experiment", "n_random_experts", 0))

    @property
    def metric(self) -> str:
        return str(self.get("experiment", "metric", "auto"))

    @property
    def n_features(self) -> int:
        return int(self.get("spectral", "n_features", 1000))

    @property
    def eta(self) -> float:
        return float(self.get("hedge", "eta", 1.0))

    @property
    def esp_settings(self) -> EspSettings:
        return EspSettings(
            n_representers=int(self.get("esp", "n_representers", 500)),
            n_hallucinations=int(self.get("esp", "n_hallucinations", 5)),
            n_samples=int(self.get("esp", "n_samples", 1000)),
            m_features=self.n_features,
            hallucination=str(self.get("esp", "hallucination", "stratified")),
            max_workers=capped(int(self.get("esp", "max_workers", 1))),
        )

    @property
    def chain_settings(self) -> ChainSettings:
        return ChainSettings(
            n_samples=int(self.get("mcmc", "n_samples", 10)),
            burn_in=int(self.get("mcmc", "burn_in", 20)),
            warm_burn_in=int(self.get("mcmc", "warm_burn_in", 5)),
            thin=int(self.get("mcmc", "thin", 2)),
            width=float(self.get("mcmc", "slice_width", 1.0)),
            max_step_out=int(self.get("mcmc", "max_step_out", 50)),
        )

    @property
    def optimizer_settings(self) -> OptimizerSettings:
        return OptimizerSettings(
            sweep_per_dim=int(self.get("optimizer", "sweep_per_dim", 1000)),
            n_starts=int(self.get("optimizer", "n_starts", 5)),
            n_iter=int(self.get("optimizer", "n_iter", 50)),
            tol=float(self.get("optimizer", "tol", 1e-6)),
        )

    @property
    def out_dir(self) -> str:
        return str(self.get("output", "dir", "results"))

    @property
    def record_wall_time(self) -> bool:
        return bool(self.get("output", "record_wall_time", False))

    @property
    def database_url(self) -> Optional[str]:
        return self.get("output", "database_url")

    def apply(self, overrides: Mapping[str, Any]) -> "Config":
        """Return a copy with flat-named overrides applied; None values are ignored."""
        merged = {section: dict(values or {}) for section, values in self._config.items()}
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in FLAT_KEYS:
                raise ValueError(f"Unknown override '{key}'")
            section, name = FLAT_KEYS[key]
            merged.setdefault(section, {})[name] = value
        config = Config.from_mapping(merged)
        config.config_path = self.config_path
        return config

    def overlay(self, other: "Config") -> "Config":
        """Return a copy where every value set in other replaces this one."""
        merged = {section: dict(values or {}) for section, values in self._config.items()}
        for section, values in other._config.items():
            for key, value in (values or {}).items():
                if value is not None:
                    merged.setdefault(section, {})[key] = value
        config = Config.from_mapping(merged)
        config.config_path = other.config_path
        return config

    def experiment_config(self, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
        """
        Build the validated experiment configuration.

        Args:
            overrides: Flat-named values (e.g. from CLI flags) taking precedence over the file

        Raises:
            ValueError: If a value is missing or invalid
        """
        config = self.apply(overrides or {})
        if not config.objective:
            raise ValueError("No objective configured (use --objective or experiment.objective)")
        return ExperimentConfig(
            objective=str(config.objective),
            method=config.method,
            horizon=config.horizon,
            n_init=config.n_init,
            seeds=config.seeds,
            noise_sd=config.noise_sd,
            n_random_experts=config.n_random_experts,
            eta=config.eta,
            m_features=config.n_features,
            metric=config.metric,
            record_wall_time=config.record_wall_time,
            esp=config.esp_settings,
            chain=config.chain_settings,
            optimizer=config.optimizer_settings,
        )


def load_config(config_path: str | None = None) -> Config:
    """
    Load configuration from file.

    Args:
        config_path: Path to config file. If None, uses default config/experiment.yaml

    Returns:
        Config instance
    """
    return Config(config_path)
