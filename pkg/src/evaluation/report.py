"""
Verification report: EER, minDCF, bootstrap interval and relative change
against a baseline run.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from .metrics import C_FA, C_MISS, P_TARGET, compute_eer, compute_min_dcf
from .trials import ScoreSet

logger = logging.getLogger(__name__)


class EvaluationReport:
    """Summarise one scored trial list."""

    def __init__(
        self,
        scores: ScoreSet,
        model_name: str = "model",
        p_target: float = P_TARGET,
        c_miss: float = C_MISS,
        c_fa: float = C_FA,
        baseline_eer: Optional[float] = None,
        baseline_name: Optional[str] = None,
        n_bootstrap: int = 1000,
        seed: int = 0,
    ):
        """
        Args:
            scores: Scored trials
            model_name: Label printed in the report header
            p_target, c_miss, c_fa: Detection cost parameters
            baseline_eer: EER of a reference run for the relative change line
            baseline_name: Label of the reference run
            n_bootstrap: Resamples for the EER confidence interval (0 disables it)
            seed: Seed of the bootstrap resampler
        """
        self.scores = scores
        self.model_name = model_name
        self.p_target = p_target
        self.c_miss = c_miss
        self.c_fa = c_fa
        self.baseline_eer = baseline_eer
        self.baseline_name = baseline_name
        self.n_bootstrap = n_bootstrap
        self.seed = seed

    def calculate_metrics(self) -> Dict:
        """
        Returns:
            Dictionary with trial counts, EER, minDCF, thresholds and the
            bootstrap interval
        """
        eer, eer_threshold = compute_eer(self.scores)
        min_dcf, dcf_threshold = compute_min_dcf(self.scores, self.p_target, self.c_miss, self.c_fa)
        metrics = {
            "total_trials": len(self.scores),
            "target_trials": int(self.scores.targets.size),
            "nontarget_trials": int(self.scores.nontargets.size),
            "eer": eer,
            "eer_threshold": eer_threshold,
            "min_dcf": min_dcf,
            "dcf_threshold": dcf_threshold,
            "mean_target_score": float(self.scores.targets.mean()),
            "mean_nontarget_score": float(self.scores.nontargets.mean()),
            "eer_confidence_interval": self.eer_confidence_interval(),
        }
        if self.baseline_eer is not None:
            metrics["relative_eer_change"] = self.relative_eer_change(eer, self.baseline_eer)
        return metrics

    @staticmethod
    def relative_eer_change(eer: float, baseline_eer: float) -> Optional[float]:
        """Relative EER change in percent (negative = improvement); None for a zero baseline."""
        if baseline_eer == 0:
            return None
        return (eer - baseline_eer) / baseline_eer * 100.0

    def eer_confidence_interval(self, confidence: float = 0.95) -> Tuple[float, float]:
        """
        Bootstrap interval of the EER.

        Targets and nontargets are resampled separately so every resample
        keeps both classes.
        """
        if self.n_bootstrap <= 0:
            eer, _ = compute_eer(self.scores)
            return (eer, eer)
        rng = np.random.default_rng(self.seed)
        targets, nontargets = self.scores.targets, self.scores.nontargets
        labels = np.concatenate([np.ones(targets.size, dtype=bool), np.zeros(nontargets.size, dtype=bool)])
        bootstrap_eers = np.empty(self.n_bootstrap)
        for i in range(self.n_bootstrap):
            sample = np.concatenate(
                [
                    targets[rng.integers(targets.size, size=targets.size)],
                    nontargets[rng.integers(nontargets.size, size=nontargets.size)],
                ]
            )
            bootstrap_eers[i], _ = compute_eer(ScoreSet(scores=sample, labels=labels))
        lower = float(np.percentile(bootstrap_eers, (1 - confidence) * 100 / 2))
        upper = float(np.percentile(bootstrap_eers, (1 + confidence) * 100 / 2))
        return (lower, upper)

    def generate_report(self) -> str:
        metrics = self.calculate_metrics()
        lower, upper = metrics["eer_confidence_interval"]

        report = f"""
=== Verification Report: {self.model_name} ===

Trials:
- Total: {metrics['total_trials']}
- Target: {metrics['target_trials']}
- Nontarget: {metrics['nontarget_trials']}

Error Rates:
- EER: {metrics['eer'] * 100:.2f}%
- EER 95% CI: ({lower * 100:.2f}%, {upper * 100:.2f}%)
- EER Threshold: {metrics['eer_threshold']:.4f}
- minDCF (p_target={self.p_target}): {metrics['min_dcf']:.4f}
- minDCF Threshold: {metrics['dcf_threshold']:.4f}

Score Distribution:
- Mean Target Score: {metrics['mean_target_score']:.4f}
- Mean Nontarget Score: {metrics['mean_nontarget_score']:.4f}
"""
        if self.baseline_eer is not None:
            change = metrics["relative_eer_change"]
            name = self.baseline_name or "baseline"
            report += f"""
Baseline Comparison:
- {name} EER: {self.baseline_eer * 100:.2f}%
- Relative EER Change: {'n/a' if change is None else f'{change:+.1f}%'}
"""
        return report


def main():
    """Report on a synthetic score set."""
    rng = np.random.default_rng(0)
    scores = np.concatenate([rng.normal(0.6, 0.15, 200), rng.normal(0.1, 0.15, 800)])
    labels = np.concatenate([np.ones(200, dtype=bool), np.zeros(800, dtype=bool)])
    report = EvaluationReport(ScoreSet(scores=scores, labels=labels), model_name="demo", baseline_eer=0.1)
    print(report.generate_report())


if __name__ == "__main__":
    main()
