from sqlalchemy import create_engine, event
from sqlalchemy.engine import Engine
from sqlalchemy.orm import declarative_base, sessionmaker
from sqlalchemy.pool import StaticPool

# SQLite file next to the working directory unless --archive / LTID_ARCHIVE_URL say otherwise
DEFAULT_ARCHIVE_URL = "sqlite:///./ltid_runs.db"

Base = declarative_base()


def _set_sqlite_pragmas(dbapi_connection, connection_record):
    """Apply journal PRAGMAs on every new SQLite connection."""
    cursor = dbapi_connection.cursor()
    cursor.execute("PRAGMA journal_mode=WAL")
    cursor.execute("PRAGMA synchronous=NORMAL")
    cursor.close()


def make_engine(url: str = DEFAULT_ARCHIVE_URL) -> Engine:
    if url in ("sqlite://", "sqlite:///:memory:"):
        # in-memory databases live on a single shared connection
        return create_engine(url, connect_args={"check_same_thread": False}, poolclass=StaticPool)
    if url.startswith("sqlite"):
        engine = create_engine(url, connect_args={"check_same_thread": False}, pool_pre_ping=True)
        event.listen(engine, "connect", _set_sqlite_pragmas)
        return engine
    return create_engine(url, pool_pre_ping=True)


def make_session_factory(url: str = DEFAULT_ARCHIVE_URL) -> sessionmaker:
    engine = make_engine(url)
    Base.metadata.create_all(bind=engine)
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)
