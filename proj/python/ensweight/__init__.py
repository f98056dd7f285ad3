"""Class-specific soft-voting ensemble weighting."""

from ._core import (
    DomainError,
    Error,
    InfeasibleError,
    ParseError,
    ShapeError,
    auprc,
    baseline,
    confusion_metrics,
    imbalance_ratio,
    improvement_pct,
    objective,
    predict,
    ratio_targets,
    resample,
    solve_weighting,
    step_targets,
    stratified_folds,
    validate_constraints,
)

__all__ = [
    "DomainError",
    "Error",
    "InfeasibleError",
    "ParseError",
    "ShapeError",
    "auprc",
    "baseline",
    "confusion_metrics",
    "imbalance_ratio",
    "improvement_pct",
    "objective",
    "predict",
    "ratio_targets",
    "resample",
    "solve_weighting",
    "step_targets",
    "stratified_folds",
    "validate_constraints",
]
