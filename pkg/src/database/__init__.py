"""Results registry for training and evaluation runs."""

from .db_manager import ResultsDatabase
from .models import Base, DatabaseManager, EvaluationRun, TrainingRun

__all__ = ["Base", "DatabaseManager", "EvaluationRun", "ResultsDatabase", "TrainingRun"]
