"""Experimental harness: tasks, baselines, metrics, sweeps, ablations, scaling, poisoning."""

from .experiments import (
    AdversarialReport,
    ScalingRow,
    SweepResult,
    ablation_grid,
    ablation_variants,
    adversarial_suite,
    calibration_set,
    scaling_curve,
    sweep_grid,
    sweep_threshold,
)
from .harness import BenchReport, LinearProjection, MethodStats, default_task_source, run_benchmark
from .methods import (
    MethodUnderTest,
    cli_lazy,
    default_methods,
    discovery_prompt,
    full_schema,
    simple_retrieval,
    static_pruning,
    stratified_subset,
    tool_attention,
)
from .tasks import Task, calibration_pairs, compose_query, generate_tasks, grant_all

__all__ = [
    "AdversarialReport",
    "BenchReport",
    "LinearProjection",
    "MethodStats",
    "MethodUnderTest",
    "ScalingRow",
    "SweepResult",
    "Task",
    "ablation_grid",
    "ablation_variants",
    "adversarial_suite",
    "calibration_pairs",
    "calibration_set",
    "cli_lazy",
    "compose_query",
    "default_methods",
    "default_task_source",
    "discovery_prompt",
    "full_schema",
    "generate_tasks",
    "grant_all",
    "run_benchmark",
    "scaling_curve",
    "simple_retrieval",
    "static_pruning",
    "stratified_subset",
    "sweep_grid",
    "sweep_threshold",
    "tool_attention",
]
