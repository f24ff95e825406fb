"""Results-store schema creation."""

from sqlalchemy import Engine

from esp_optimizer.database.models import Base
from esp_optimizer.utils.logger import get_logger

logger = get_logger(__name__)


def create_tables(engine: Engine) -> None:
    """
    Create all results-store tables. Idempotent.

    Args:
        engine: SQLAlchemy engine instance
    """
    logger.debug("Creating results-store tables")
    Base.metadata.create_all(engine)

