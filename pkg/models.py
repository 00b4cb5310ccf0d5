from sqlalchemy import Column, Integer, String, Float, DateTime, ForeignKey, Text, JSON
from sqlalchemy.orm import relationship
from database import Base
from datetime import datetime, timezone
import uuid

def generate_uuid():
    return str(uuid.uuid4())

class ExperimentRun(Base):
    __tablename__ = "experiment_runs"
    id = Column(String, primary_key=True, default=generate_uuid)
    mode = Column(String, nullable=False, index=True)  # predict, simulate, bound, optimize, dist, ripple
    created_at = Column(DateTime, default=lambda: datetime.now(timezone.utc))
    master_seed = Column(Integer, default=0)
    k = Column(Integer, nullable=False)
    dist_spec = Column(String, nullable=True)  # CLI grammar, e.g. rsd:0.09266,0.001993
    strategy = Column(String, nullable=True)
    trials = Column(Integer, nullable=True)
    epsilon_grid = Column(JSON, nullable=True)
    output_path = Column(String, nullable=True)
    summary = Column(JSON, nullable=True)  # one dict per CSV row
    anneal_results = relationship("AnnealResult", back_populates="run", cascade="all, delete-orphan")

class AnnealResult(Base):
    __tablename__ = "anneal_results"
    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(String, ForeignKey("experiment_runs.id"), nullable=False, index=True)
    best_energy = Column(Float, nullable=False)
    n_inact = Column(Float, nullable=True)
    pf_bound = Column(Float, nullable=True)
    evaluations = Column(Integer, default=0)
    best_distribution = Column(Text, nullable=False)  # DegreeDistribution.to_json()
    constraints = Column(JSON, nullable=True)
    run = relationship("ExperimentRun", back_populates="anneal_results")
