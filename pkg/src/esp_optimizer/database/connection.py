"""Connection to the results store."""

from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Generator

from sqlalchemy import Engine, create_engine
from sqlalchemy.engine import make_url
from sqlalchemy.orm import Session, scoped_session, sessionmaker

from esp_optimizer.database.schema import create_tables
from esp_optimizer.utils.logger import get_logger

logger = get_logger(__name__)


class DatabaseConnection:
    """
    Engine and session factory for one results-store URL.

    SQLite file URLs get their parent directory created, so
    `sqlite:///results/runs.db` works before `results/` exists.
    """

    def __init__(self, database_url: str, echo: bool = False, create_schema: bool = True):
        """
        Open the results store.

        Args:
            database_url: SQLAlchemy database URL
            echo: Whether to echo SQL statements
            create_schema: Create missing tables on open
        """
        self.database_url = database_url
        url = make_url(database_url)
        connect_args: Dict[str, Any] = {}
        if url.get_backend_name() == "sqlite":
            # Seeds finish on worker threads
            connect_args["check_same_thread"] = False
            if url.database and url.database != ":memory:":
                Path(url.database).parent.mkdir(parents=True, exist_ok=True)

        self.engine: Engine = create_engine(url, echo=echo, connect_args=connect_args)
        self.SessionLocal = scoped_session(
            sessionmaker(autocommit=False, autoflush=False, bind=self.engine)
        )
        if create_schema:
            create_tables(self.engine)
        logger.debug(f"Opened results store {url.render_as_string(hide_password=True)}")

    @contextmanager
    def session_scope(self) -> Generator[Session, None, None]:
        """Yield a session that commits on success and rolls back on any exception."""
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()

    def close(self) -> None:
        self.SessionLocal.remove()
        self.engine.dispose()

    def __enter__(self) -> "DatabaseConnection":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:  # type: ignore
        self.close()
