"""Gradient-check suite and attention scaling benchmark."""

from .bench import AttentionBenchmark, bench_attention, scaling_exponents
from .gradcheck_suite import REGISTRY, SCOPES, GradCheckCase, run_gradcheck

__all__ = [
    "AttentionBenchmark",
    "GradCheckCase",
    "REGISTRY",
    "SCOPES",
    "bench_attention",
    "run_gradcheck",
    "scaling_exponents",
]
