"""Multi-task thermal-comfort prediction toolkit.

Thin wrapper over the C++ core: synthetic data generation, multi-task
training, prediction, cross-validation, metrics, and the full CLI.
"""

from ._core import (
    DivergenceError,
    cross_validate_json,
    dataset_summary_json,
    default_config,
    macro_metrics,
    predict_record,
    run_cli,
    synth_csv,
    train_model,
)

__all__ = [
    "DivergenceError",
    "cross_validate_json",
    "dataset_summary_json",
    "default_config",
    "macro_metrics",
    "predict_record",
    "run_cli",
    "synth_csv",
    "train_model",
]

__version__ = "1.0.0"
