"""Datasets, configuration, experiment runner and the ``artifact-bench`` CLI."""

from .config import BenchConfig, load_config
from .datasets import (Dataset, DatasetSpec, FormatError, ground_truth, load_fvecs, load_ivecs, synth_dataset,
                       write_fvecs, write_ivecs)
from .runner import Report, StageError, run_ablation, run_benchmark

__all__ = [
    "BenchConfig", "Dataset", "DatasetSpec", "FormatError", "Report", "StageError", "ground_truth",
    "load_config", "load_fvecs", "load_ivecs", "run_ablation", "run_benchmark", "synth_dataset",
    "write_fvecs", "write_ivecs",
]
