"""Pytest configuration and fixtures."""

import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest
import yaml
from sqlalchemy import create_engine
from sqlalchemy.orm import Session, sessionmaker

from esp_optimizer.database.connection import DatabaseConnection
from esp_optimizer.database.models import Base
from esp_optimizer.models.gp import History, Hyperparams
from esp_optimizer.models.hyper import ChainSettings
from esp_optimizer.space import Box
from esp_optimizer.strategies.optimizer import OptimizerSettings
from esp_optimizer.strategies.portfolio import EspSettings


@pytest.fixture
def sample_config() -> dict:
    """Return a sample configuration dictionary."""
    return {
        'experiment': {
            'objective': 'branin',
            'method': 'hedge',
            'horizon': 12,
            'n_init': 3,
            'seeds': '0..2',
            'n_random_experts': 2,
            'metric': 'true',
        },
        'esp': {
            'n_representers': 20,
            'n_hallucinations': 3,
            'n_samples': 100,
            'hallucination': 'monte-carlo',
        },
        'mcmc': {
            'n_samples': 4,
            'burn_in': 6,
            'slice_width': 0.5,
        },
        'spectral': {
            'n_features': 200,
        },
        'optimizer': {
            'sweep_per_dim': 100,
            'n_starts': 3,
        },
        'hedge': {
            'eta': 0.5,
        },
        'output': {
            'dir': 'out/traces',
            'record_wall_time': True,
            'database_url': 'sqlite:///:memory:',
        },
    }


@pytest.fixture
def config_file(sample_config: dict) -> Generator[Path, None, None]:
    """Create a temporary config file with sample data."""
    with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
        yaml.dump(sample_config, f)
        temp_path = Path(f.name)

    yield temp_path

    # Cleanup
    temp_path.unlink()


@pytest.fixture
def empty_config_file() -> Generator[Path, None, None]:
    """Create an empty config file."""
    with tempfile.NamedTemporaryFile(mode='w', suffix='.yaml', delete=False) as f:
        temp_path = Path(f.name)

    yield temp_path

    # Cleanup
    temp_path.unlink()


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a freshly seeded generator."""
    return np.random.default_rng(12345)


@pytest.fixture
def unit_square() -> Box:
    """Return the box [0, 1]^2."""
    return Box(np.zeros(2), np.ones(2))


@pytest.fixture
def small_history(unit_square: Box) -> History:
    """Return six noisy-free observations of a smooth bowl on the unit square."""
    points = np.array(
        [
            [0.1, 0.2],
            [0.8, 0.1],
            [0.4, 0.6],
            [0.9, 0.9],
            [0.3, 0.3],
            [0.6, 0.4],
        ]
    )
    values = np.sum((points - 0.35) ** 2, axis=1)
    return History(points, values, unit_square)


@pytest.fixture
def hp2() -> Hyperparams:
    """Return moderate 2-D hyperparameters."""
    return Hyperparams(np.array([0.3, 0.3]), amplitude=0.1, noise=1e-4, mean=0.2)


@pytest.fixture
def fast_optimizer() -> OptimizerSettings:
    """Return a cheap inner optimizer for tests."""
    return OptimizerSettings(sweep_per_dim=50, n_starts=2, n_iter=10)


@pytest.fixture
def fast_chain() -> ChainSettings:
    """Return a short slice-sampling schedule for tests."""
    return ChainSettings(n_samples=2, burn_in=3, warm_burn_in=1, thin=1)


@pytest.fixture
def fast_esp() -> EspSettings:
    """Return small ESP settings for tests."""
    return EspSettings(n_representers=6, n_hallucinations=2, n_samples=50, m_features=50)


@pytest.fixture
def db_engine() -> Generator:
    """Create an in-memory SQLite database engine for testing."""
    engine = create_engine("sqlite:///:memory:")
    Base.metadata.create_all(engine)
    yield engine
    Base.metadata.drop_all(engine)
    engine.dispose()


@pytest.fixture
def db_session(db_engine) -> Generator[Session, None, None]:
    """Create a database session for testing."""
    SessionLocal = sessionmaker(bind=db_engine)
    session = SessionLocal()
    yield session
    session.close()


@pytest.fixture
def db_connection(db_engine) -> Generator[DatabaseConnection, None, None]:
    """Create a DatabaseConnection instance for testing."""
    # Share the in-memory engine so the fixture tables are visible
    db = DatabaseConnection("sqlite:///:memory:")
    db.engine = db_engine
    db.SessionLocal.configure(bind=db_engine)
    yield db
    db.close()
