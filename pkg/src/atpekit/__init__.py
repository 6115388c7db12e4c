"""TPE and adaptive-TPE hyperparameter optimization toolkit."""
from .benchmarks import (
    BENCHMARK_NAMES,
    Benchmark,
    evaluate,
    get_benchmark,
    reference_minimum,
)
from .core import (
    History,
    HyperparameterSpec,
    RngStream,
    SearchSpace,
    SpaceError,
    Trial,
    encode_numeric,
    sample_prior,
    space_from_json,
    space_to_json,
)
from .harness import ExperimentConfig, round_seed, run_experiment, summarize
from .optimizer import OptimizerSession
from .predictor import (
    AtpeParams,
    FallbackModel,
    ParamModel,
    fallback_params,
    load_model,
    save_model,
    train,
)
from .tpe import TpeConfig, suggest
from .variants import VARIANTS, VariantSpec, get_variant

__version__ = "0.1.0"

__all__ = [
    "BENCHMARK_NAMES",
    "Benchmark",
    "evaluate",
    "get_benchmark",
    "reference_minimum",
    "History",
    "HyperparameterSpec",
    "RngStream",
    "SearchSpace",
    "SpaceError",
    "Trial",
    "encode_numeric",
    "sample_prior",
    "space_from_json",
    "space_to_json",
    "ExperimentConfig",
    "round_seed",
    "run_experiment",
    "summarize",
    "OptimizerSession",
    "AtpeParams",
    "FallbackModel",
    "ParamModel",
    "fallback_params",
    "load_model",
    "save_model",
    "train",
    "TpeConfig",
    "suggest",
    "VARIANTS",
    "VariantSpec",
    "get_variant",
    "__version__",
]
