"""
Results registry: record training and evaluation runs, query them back
as DataFrames.
"""

import logging
from typing import Dict, Optional

import pandas as pd
from sqlalchemy.orm import Session

from .models import DatabaseManager, EvaluationRun, TrainingRun

logger = logging.getLogger(__name__)


class ResultsDatabase:
    """High-level operations on the results registry."""

    def __init__(self, db_url: str = None):
        """
        Args:
            db_url: Database URL. Defaults to SQLite.
        """
        self.db_manager = DatabaseManager(db_url)
        self.db_manager.create_tables()

    def session(self) -> Session:
        return self.db_manager.get_session()

    def add_training_run(
        self,
        model: str,
        config_text: str,
        steps: int,
        final_loss: Optional[float] = None,
        checkpoint_path: Optional[str] = None,
        manifest_path: Optional[str] = None,
        num_speakers: Optional[int] = None,
    ) -> int:
        """
        Returns:
            Id of the new row
        """
        with self.session() as session:
            run = TrainingRun(
                model=model,
                config_text=config_text,
                steps=steps,
                final_loss=final_loss,
                checkpoint_path=checkpoint_path,
                manifest_path=manifest_path,
                num_speakers=num_speakers,
            )
            session.add(run)
            session.commit()
            logger.info("Recorded training run %d (%s, %d steps)", run.id, model, steps)
            return run.id

    def add_evaluation_run(
        self,
        name: str,
        metrics: Dict,
        model: Optional[str] = None,
        checkpoint_path: Optional[str] = None,
        trials_path: Optional[str] = None,
        p_target: Optional[float] = None,
        training_run_id: Optional[int] = None,
    ) -> int:
        """
        Save an evaluation.

        Args:
            name: Run label (used to look up baselines)
            metrics: Dictionary from EvaluationReport.calculate_metrics()

        Returns:
            Id of the new row
        """
        with self.session() as session:
            run = EvaluationRun(
                name=name,
                model=model,
                checkpoint_path=checkpoint_path,
                trials_path=trials_path,
                training_run_id=training_run_id,
                eer=metrics['eer'],
                eer_threshold=metrics.get('eer_threshold'),
                min_dcf=metrics['min_dcf'],
                dcf_threshold=metrics.get('dcf_threshold'),
                p_target=p_target,
                target_trials=metrics.get('target_trials'),
                nontarget_trials=metrics.get('nontarget_trials'),
            )
            session.add(run)
            session.commit()
            logger.info("Recorded evaluation run %d (%s, EER %.4f)", run.id, name, run.eer)
            return run.id

    def latest_evaluation(self, name: str) -> Optional[Dict]:
        """Most recent evaluation recorded under `name`, as a dict."""
        with self.session() as session:
            run = (
                session.query(EvaluationRun)
                .filter_by(name=name)
                .order_by(EvaluationRun.created_at.desc(), EvaluationRun.id.desc())
                .first()
            )
            if run is None:
                return None
            return {column.name: getattr(run, column.name) for column in EvaluationRun.__table__.columns}

    def get_training_runs(self, model: Optional[str] = None) -> pd.DataFrame:
        with self.session() as session:
            query = session.query(TrainingRun)
            if model is not None:
                query = query.filter_by(model=model)
            return pd.read_sql(query.order_by(TrainingRun.id).statement, session.bind)

    def get_evaluation_runs(self, name: Optional[str] = None) -> pd.DataFrame:
        with self.session() as session:
            query = session.query(EvaluationRun)
            if name is not None:
                query = query.filter_by(name=name)
            return pd.read_sql(query.order_by(EvaluationRun.id).statement, session.bind)

    def compare_evaluations(self) -> pd.DataFrame:
        """Best EER and minDCF per evaluation name, sorted by EER."""
        runs = self.get_evaluation_runs()
        if runs.empty:
            return runs
        summary = runs.groupby('name').agg(
            runs=('id', 'count'), best_eer=('eer', 'min'), best_min_dcf=('min_dcf', 'min')
        )
        return summary.sort_values('best_eer').reset_index()


def main():
    """Record a demo evaluation in an in-memory registry."""
    db = ResultsDatabase("sqlite:///:memory:")
    run_id = db.add_training_run("le_conformer", "model = le_conformer\n", steps=300, final_loss=2.1)
    db.add_evaluation_run("toy-le", {"eer": 0.04, "min_dcf": 0.3}, model="le_conformer", training_run_id=run_id)
    db.add_evaluation_run("toy-le", {"eer": 0.03, "min_dcf": 0.25}, model="le_conformer", training_run_id=run_id)
    print(db.compare_evaluations().to_string(index=False))
    print(f"Latest: {db.latest_evaluation('toy-le')['eer']}")


if __name__ == "__main__":
    main()
