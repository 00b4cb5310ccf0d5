#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
run_archive.py - Experiment Run Archive

Optional SQLite (SQLAlchemy) record of toolkit runs:
- record_experiment: mode, seed, k, distribution, grid and summary rows
- record_anneal: optimizer result with the best distribution
- list_runs / get_run / load_best_distribution
"""

import logging
from typing import Any, Dict, List, Optional

from database import DEFAULT_ARCHIVE_URL, make_session_factory
from degree_dist import DegreeDistribution
from harness import ExperimentSpec
from models import AnnealResult, ExperimentRun
from sa_optimizer import AnnealConfig, AnnealRun

logger = logging.getLogger("ltid-archive")


def _run_to_dict(run: ExperimentRun) -> Dict[str, Any]:
    return {
        "id": run.id,
        "mode": run.mode,
        "created_at": run.created_at.isoformat() if run.created_at else None,
        "master_seed": run.master_seed,
        "k": run.k,
        "dist_spec": run.dist_spec,
        "strategy": run.strategy,
        "trials": run.trials,
        "epsilon_grid": run.epsilon_grid,
        "output_path": run.output_path,
        "summary": run.summary,
    }


class RunArchive:
    """Stores experiment and annealing runs in a database"""

    def __init__(self, url: str = DEFAULT_ARCHIVE_URL):
        self.url = url
        self.Session = make_session_factory(url)

    def record_experiment(self, spec: ExperimentSpec, summary: List[Dict[str, Any]]) -> str:
        """
        Store one experiment run

        Args:
            spec: The experiment that was run
            summary: One dict per output CSV row

        Returns:
            The new run id
        """
        db = self.Session()
        try:
            run = ExperimentRun(
                mode=spec.mode,
                master_seed=spec.master_seed,
                k=spec.k,
                dist_spec=spec.dist,
                strategy=spec.strategy.value,
                trials=spec.trials,
                epsilon_grid=list(spec.epsilon_grid),
                output_path=spec.output,
                summary=summary,
            )
            db.add(run)
            db.commit()
            logger.info(f"Archived {spec.mode} run {run.id}")
            return run.id
        except Exception as e:
            db.rollback()
            logger.error(f"Failed to archive {spec.mode} run: {e}")
            raise
        finally:
            db.close()

    def record_anneal(self, config: AnnealConfig, result: AnnealRun,
                      output_path: Optional[str] = None) -> str:
        """Store an optimizer run and its best distribution; returns the run id."""
        db = self.Session()
        try:
            constraints = config.constraints
            run = ExperimentRun(
                mode="optimize",
                master_seed=config.seed,
                k=constraints.k,
                epsilon_grid=[constraints.pf_eval_epsilon],
                output_path=output_path,
                summary=[{"step": h.step, "energy": h.energy} for h in result.history[-1:]],
            )
            breakdown = result.best_breakdown
            run.anneal_results.append(AnnealResult(
                best_energy=result.best_energy,
                n_inact=breakdown.n_inact if breakdown else None,
                pf_bound=breakdown.pf_bound if breakdown else None,
                evaluations=result.evaluations,
                best_distribution=result.best_dist.to_json(),
                constraints=constraints.model_dump(),
            ))
            db.add(run)
            db.commit()
            logger.info(f"Archived optimize run {run.id} (best energy {result.best_energy:.4f})")
            return run.id
        except Exception as e:
            db.rollback()
            logger.error(f"Failed to archive optimize run: {e}")
            raise
        finally:
            db.close()

    def list_runs(self, mode: Optional[str] = None, limit: int = 50) -> List[Dict[str, Any]]:
        """Most recent runs first"""
        db = self.Session()
        try:
            query = db.query(ExperimentRun)
            if mode:
                query = query.filter(ExperimentRun.mode == mode)
            runs = query.order_by(ExperimentRun.created_at.desc()).limit(limit).all()
            return [_run_to_dict(r) for r in runs]
        finally:
            db.close()

    def get_run(self, run_id: str) -> Optional[Dict[str, Any]]:
        db = self.Session()
        try:
            run = db.query(ExperimentRun).filter(ExperimentRun.id == run_id).first()
            if not run:
                return None
            data = _run_to_dict(run)
            data["anneal_results"] = [
                {
                    "best_energy": a.best_energy,
                    "n_inact": a.n_inact,
                    "pf_bound": a.pf_bound,
                    "evaluations": a.evaluations,
                    "constraints": a.constraints,
                }
                for a in run.anneal_results
            ]
            return data
        finally:
            db.close()

    def load_best_distribution(self, run_id: str) -> Optional[DegreeDistribution]:
        """Best distribution of an optimize run, or None"""
        db = self.Session()
        try:
            result = (
                db.query(AnnealResult)
                .filter(AnnealResult.run_id == run_id)
                .order_by(AnnealResult.best_energy)
                .first()
            )
            if not result:
                return None
            return DegreeDistribution.from_json(result.best_distribution)
        finally:
            db.close()
