"""
SQLAlchemy models for the results registry.
Works with SQLite by default; any SQLAlchemy URL can be passed instead.
"""

import logging
import os
from datetime import datetime
from pathlib import Path

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text, create_engine
from sqlalchemy.engine import make_url
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

logger = logging.getLogger(__name__)

Base = declarative_base()

DEFAULT_DB_URL = "sqlite:///data/localsv.db"


class TrainingRun(Base):
    """One completed training run."""
    __tablename__ = 'training_runs'

    id = Column(Integer, primary_key=True)
    model = Column(String(32), nullable=False)
    config_text = Column(Text, nullable=False)
    manifest_path = Column(String(1024))
    num_speakers = Column(Integer)
    steps = Column(Integer, nullable=False)
    final_loss = Column(Float)
    checkpoint_path = Column(String(1024))
    created_at = Column(DateTime, default=datetime.utcnow)

    # Relationships
    evaluations = relationship('EvaluationRun', back_populates='training_run')

    def __repr__(self):
        return f"<TrainingRun(model='{self.model}', steps={self.steps}, final_loss={self.final_loss})>"


class EvaluationRun(Base):
    """EER / minDCF of one scored trial list."""
    __tablename__ = 'evaluation_runs'

    id = Column(Integer, primary_key=True)
    training_run_id = Column(Integer, ForeignKey('training_runs.id'))
    name = Column(String(255), nullable=False)
    model = Column(String(32))
    checkpoint_path = Column(String(1024))
    trials_path = Column(String(1024))
    eer = Column(Float, nullable=False)
    eer_threshold = Column(Float)
    min_dcf = Column(Float, nullable=False)
    dcf_threshold = Column(Float)
    p_target = Column(Float)
    target_trials = Column(Integer)
    nontarget_trials = Column(Integer)
    created_at = Column(DateTime, default=datetime.utcnow)

    # Relationships
    training_run = relationship('TrainingRun', back_populates='evaluations')

    def __repr__(self):
        return f"<EvaluationRun(name='{self.name}', eer={self.eer}, min_dcf={self.min_dcf})>"


# Database connection and session management
class DatabaseManager:
    """Manage database connections and sessions."""

    def __init__(self, db_url: str = None):
        """
        Args:
            db_url: Database URL. Defaults to $LOCALSV_DB_URL, then a local SQLite file.
        """
        if db_url is None:
            db_url = os.getenv("LOCALSV_DB_URL", DEFAULT_DB_URL)

        url = make_url(db_url)
        if url.drivername.startswith("sqlite") and url.database not in (None, "", ":memory:"):
            Path(url.database).parent.mkdir(parents=True, exist_ok=True)

        self.db_url = db_url
        self.engine = create_engine(db_url, echo=False)
        self.SessionLocal = sessionmaker(bind=self.engine)

    def create_tables(self):
        """Create all tables in the database."""
        Base.metadata.create_all(self.engine)
        logger.debug("Results tables ready at %s", self.db_url)

    def get_session(self):
        """Get a new database session."""
        return self.SessionLocal()

    def drop_tables(self):
        """Drop all tables (use with caution!)."""
        Base.metadata.drop_all(self.engine)
        logger.warning("Dropped results tables at %s", self.db_url)
