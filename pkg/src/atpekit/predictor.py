"""Cascaded per-parameter prediction of the adaptive controller vector.

Each control parameter gets its own boosted-tree model; parameter j sees
the 56 state statistics plus the j previously decided parameters, in a
frozen declaration order (categorical fields first, then reals). A static
fallback model keeps the optimizer runnable without trained artifacts.

Training imitates parameter draws from the best quartile of random-rollout
runs on surrogate objectives, weighted by run quality.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .blocking import BlockingParams
from .core import RngStream
from .filtering import FilterParams
from .gbdt import BoostedClassifier, BoostedRegressor
from .stats import FEATURE_NAMES, N_FEATURES
from .surrogate import SurrogateFunction, unit_space
from .tpe import TpeConfig
from .variants import VariantSpec

MODEL_FORMAT = "atpekit-param-model"
MODEL_VERSION = 1

GOOD_CAP = 25  # not predicted; reference-implementation constant


class TrainingSetError(ValueError):
    """Raised when too few examples exist; callers should use the fallback."""


class ModelFormatError(ValueError):
    """Raised on corrupt, truncated, or incompatible model files."""


@dataclass(frozen=True)
class ParamField:
    name: str
    kind: str  # "cat" | "real" | "int"
    choices: tuple[str, ...] = ()
    lo: float = 0.0
    hi: float = 1.0
    default: Any = None


# Declaration order is a published constant: models are trained against it
# and the layout checksum pins it.
PARAM_FIELDS: tuple[ParamField, ...] = (
    ParamField("filter_mode", "cat",
               ("none", "random", "age", "loss", "clustering", "zscore"),
               default="loss"),
    ParamField("cutoff_mode", "cat",
               ("count_original", "count_reversed", "threshold"),
               default="count_original"),
    ParamField("probability_mode", "cat",
               ("fixed", "correlation_weighted"), default="fixed"),
    ParamField("value_mode", "cat", ("random", "elite"), default="elite"),
    ParamField("random_probability", "real", lo=0.0, hi=1.0, default=0.3),
    ParamField("age_multiplier", "real", lo=0.0, hi=1.0, default=0.5),
    ParamField("loss_multiplier", "real", lo=0.0, hi=1.0, default=1.0),
    ParamField("clusters_quantile", "real", lo=0.01, hi=1.0, default=0.25),
    ParamField("zscore_threshold", "real", lo=-3.0, hi=3.0, default=0.0),
    ParamField("secondary_cutoff", "real", lo=-1.0, hi=1.0, default=0.5),
    ParamField("correlation_exponent", "real", lo=0.5, hi=3.0, default=2.0),
    ParamField("fixed_probability", "real", lo=0.0, hi=1.0, default=0.5),
    ParamField("correlation_multiplier", "real", lo=0.0, hi=3.0, default=1.0),
    ParamField("elite_percentile", "real", lo=0.01, hi=1.0, default=0.3),
    ParamField("anova_exponent", "real", lo=0.5, hi=3.0, default=2.0),
    ParamField("cat_cutoff", "real", lo=-1.0, hi=1.0, default=0.5),
    ParamField("anova_multiplier", "real", lo=0.0, hi=3.0, default=1.0),
)

# Core TPE settings stay at their reference defaults rather than being
# controlled per iteration: the upstream controller's parameter list does
# not cover them, and adapting them only adds variance against a
# fixed-setting baseline.
N_PARAMS = len(PARAM_FIELDS)


@dataclass(frozen=True)
class AtpeParams:
    """One iteration's control vector for the adaptive optimizer."""

    filter: FilterParams
    blocking: BlockingParams
    tpe: TpeConfig

    def field_value(self, name: str) -> Any:
        if name == "filter_mode":
            return self.filter.mode
        if hasattr(self.filter, name):
            return getattr(self.filter, name)
        if hasattr(self.blocking, name):
            return getattr(self.blocking, name)
        return getattr(self.tpe, name)

    def as_vector(self) -> np.ndarray:
        """Numeric packing used as cascade features and training targets."""
        out = np.empty(N_PARAMS)
        for j, f in enumerate(PARAM_FIELDS):
            v = self.field_value(f.name)
            out[j] = f.choices.index(v) if f.kind == "cat" else float(v)
        return out


def params_from_values(values: dict[str, Any]) -> AtpeParams:
    return AtpeParams(
        filter=FilterParams(
            mode=values["filter_mode"],
            random_probability=values["random_probability"],
            age_multiplier=values["age_multiplier"],
            loss_multiplier=values["loss_multiplier"],
            clusters_quantile=values["clusters_quantile"],
            zscore_threshold=values["zscore_threshold"],
        ),
        blocking=BlockingParams(
            secondary_cutoff=values["secondary_cutoff"],
            correlation_exponent=values["correlation_exponent"],
            cutoff_mode=values["cutoff_mode"],
            probability_mode=values["probability_mode"],
            fixed_probability=values["fixed_probability"],
            correlation_multiplier=values["correlation_multiplier"],
            value_mode=values["value_mode"],
            elite_percentile=values["elite_percentile"],
            anova_exponent=values["anova_exponent"],
            cat_cutoff=values["cat_cutoff"],
            anova_multiplier=values["anova_multiplier"],
        ),
        tpe=TpeConfig(good_cap=GOOD_CAP),
    )


def _gate(field: ParamField, value: Any, variant: VariantSpec) -> Any:
    """Clamp a raw predicted/drawn value into what the variant allows."""
    if field.name == "cutoff_mode":
        return variant.cutoff_mode
    if field.name == "filter_mode" and value not in variant.filter_menu:
        return "loss" if "loss" in variant.filter_menu else variant.filter_menu[0]
    if field.kind == "real":
        return float(min(max(float(value), field.lo), field.hi))
    if field.kind == "int":
        return int(min(max(int(round(float(value))), int(field.lo)), int(field.hi)))
    return value


def fallback_params(variant: VariantSpec) -> AtpeParams:
    """The documented static defaults, with the variant's cutoff mode."""
    values = {f.name: f.default for f in PARAM_FIELDS}
    values["cutoff_mode"] = variant.cutoff_mode
    return params_from_values(values)


def draw_uniform_params(variant: VariantSpec, rng: RngStream) -> AtpeParams:
    """Uniform draw over field ranges, gated by the variant."""
    values: dict[str, Any] = {}
    for f in PARAM_FIELDS:
        if f.name == "filter_mode":
            menu = variant.filter_menu
            values[f.name] = menu[int(rng.np.integers(0, len(menu)))]
        elif f.name == "cutoff_mode":
            values[f.name] = variant.cutoff_mode
        elif f.kind == "cat":
            values[f.name] = f.choices[int(rng.np.integers(0, len(f.choices)))]
        elif f.kind == "int":
            values[f.name] = int(rng.np.integers(int(f.lo), int(f.hi) + 1))
        else:
            values[f.name] = float(rng.np.uniform(f.lo, f.hi))
    return params_from_values(values)


def layout_checksum() -> str:
    """Checksum over the cascade declaration and the feature manifest."""
    doc = {
        "features": list(FEATURE_NAMES),
        "fields": [
            {"name": f.name, "kind": f.kind, "choices": list(f.choices),
             "lo": f.lo, "hi": f.hi}
            for f in PARAM_FIELDS
        ],
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


class ParamModel:
    """Trained cascade: one boosted ensemble per declared parameter."""

    def __init__(
        self,
        models: list[BoostedRegressor | BoostedClassifier],
        variant_name: str,
    ) -> None:
        if len(models) != N_PARAMS:
            raise ValueError(f"expected {N_PARAMS} per-parameter models")
        self.models = models
        self.variant_name = variant_name
        self.checksum = layout_checksum()

    def predict(
        self,
        stats: np.ndarray,
        variant: VariantSpec,
        rng: RngStream | None = None,
    ) -> AtpeParams:
        """Deterministic cascade; `rng` is accepted for interface parity with
        stochastic predictor backends and is not consumed."""
        del rng
        stats = np.asarray(stats, dtype=float)
        if stats.shape != (N_FEATURES,):
            raise ValueError(f"expected a {N_FEATURES}-feature statistics vector")
        values: dict[str, Any] = {}
        encoded: list[float] = []
        for j, f in enumerate(PARAM_FIELDS):
            x = np.concatenate((stats, np.asarray(encoded)))
            model = self.models[j]
            if f.kind == "cat":
                assert isinstance(model, BoostedClassifier)
                scores = model.scores_one(x)
                raw = f.choices[_allowed_argmax(scores, f, variant)]
            else:
                assert isinstance(model, BoostedRegressor)
                raw = model.predict_one(x)
            v = _gate(f, raw, variant)
            values[f.name] = v
            encoded.append(float(f.choices.index(v)) if f.kind == "cat" else float(v))
        return params_from_values(values)


def _allowed_argmax(scores: np.ndarray, field: ParamField, variant: VariantSpec) -> int:
    if field.name == "filter_mode":
        allowed = [i for i, c in enumerate(field.choices) if c in variant.filter_menu]
    else:
        allowed = list(range(len(field.choices)))
    return allowed[int(np.argmax(scores[allowed]))]


class FallbackModel:
    """Constant predictor used when no trained artifact is available."""

    def __init__(self, variant_name: str = "atpe") -> None:
        self.variant_name = variant_name
        self.checksum = layout_checksum()

    def predict(
        self,
        stats: np.ndarray,
        variant: VariantSpec,
        rng: RngStream | None = None,
    ) -> AtpeParams:
        del stats, rng
        return fallback_params(variant)


@dataclass(frozen=True)
class TrainingExample:
    features: np.ndarray  # statistics at the iteration
    target: AtpeParams  # parameters actually used
    quality: float  # 1 - normalized final-loss rank of the producing run

    def __post_init__(self) -> None:
        if not (0.0 <= self.quality <= 1.0):
            raise ValueError("quality must be in [0, 1]")


def _rollout_function(
    args: tuple,
) -> list[tuple[float, int, list[tuple[np.ndarray, "AtpeParams"]]]]:
    """All runs for one surrogate; returns (final loss, run index, pairs)."""
    from .optimizer import OptimizerSession  # import here: optimizer uses this module

    fn, variant, run_seeds, steps = args
    space = unit_space(fn.dims)
    runs = []
    for run_idx, seed in enumerate(run_seeds):
        pairs: list[tuple[np.ndarray, AtpeParams]] = []

        def source(stats: np.ndarray, r: RngStream) -> AtpeParams:
            params = draw_uniform_params(variant, r)
            pairs.append((stats.copy(), params))
            return params

        session = OptimizerSession(
            space, variant=variant, rng=RngStream(seed), param_source=source
        )
        for _ in range(steps):
            cfg = session.ask()
            loss = fn.evaluate([cfg[f"h{d}"] for d in range(fn.dims)])
            session.tell(cfg, loss)
        runs.append((session.incumbent.loss, run_idx, pairs))
    return runs


def build_training_set(
    corpus: list[SurrogateFunction],
    variant: VariantSpec,
    runs_per_function: int,
    steps: int,
    rng: RngStream,
    progress: Callable[[int, int], None] | None = None,
    workers: int = 1,
) -> list[TrainingExample]:
    """Random-rollout imitation data.

    Each surrogate gets `runs_per_function` optimizations with uniformly
    drawn parameters per iteration; pairs from the best quartile of runs
    (by final incumbent loss, ties to the lower run index) are kept.
    Run seeds are pre-drawn from the caller's stream, so rollouts are
    independent and may execute in parallel without changing the output.
    """
    if runs_per_function < 4:
        raise ValueError("need at least 4 runs per function for a quartile")
    tasks = []
    for fn in corpus:
        seeds = [int(rng.np.integers(0, 2**62)) for _ in range(runs_per_function)]
        tasks.append((fn, variant, seeds, steps))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            all_runs = []
            for fi, runs in enumerate(pool.map(_rollout_function, tasks, chunksize=1)):
                all_runs.append(runs)
                if progress is not None:
                    progress(fi + 1, len(corpus))
    else:
        all_runs = []
        for fi, task in enumerate(tasks):
            all_runs.append(_rollout_function(task))
            if progress is not None:
                progress(fi + 1, len(corpus))

    examples: list[TrainingExample] = []
    for runs in all_runs:
        runs.sort(key=lambda r: (r[0], r[1]))
        n_keep = max(1, runs_per_function // 4)
        for rank, (_, _, pairs) in enumerate(runs[:n_keep]):
            if runs_per_function > 1:
                quality = 1.0 - rank / (runs_per_function - 1)
            else:
                quality = 1.0
            for stats, params in pairs:
                examples.append(TrainingExample(stats, params, quality))
    return examples


# Trees stay within the depth <= 4 contract; depth 2 regularizes harder,
# which matters at desk scale where the imitation targets are noisy.
TREE_DEPTH = 2
N_TREES = 100
LEARNING_RATE = 0.1


def _fit_field(args: tuple) -> "BoostedRegressor | BoostedClassifier":
    f, x, y, weights = args
    if f.kind == "cat":
        clf = BoostedClassifier(
            n_classes=len(f.choices), n_trees=N_TREES, max_depth=TREE_DEPTH,
            learning_rate=LEARNING_RATE,
        )
        return clf.fit(x, y.astype(int), weights)
    reg = BoostedRegressor(
        n_trees=N_TREES, max_depth=TREE_DEPTH, learning_rate=LEARNING_RATE
    )
    return reg.fit(x, y, weights)


def train(
    examples: list[TrainingExample],
    variant: VariantSpec,
    workers: int = 1,
) -> ParamModel:
    """Fit the cascade: 100 trees, depth <= 4, learning rate 0.1 per field,
    squared error for reals, one-vs-rest log-loss for categoricals, sample
    weights equal to example quality. Fields are independent given the
    teacher-forced targets, so they may be fit in parallel."""
    if len(examples) < 50:
        raise TrainingSetError(
            f"{len(examples)} examples is fewer than 50; use the fallback model"
        )
    feats = np.array([e.features for e in examples])
    targets = np.array([e.target.as_vector() for e in examples])
    weights = np.array([e.quality for e in examples])
    tasks = [
        (f, np.hstack((feats, targets[:, :j])), targets[:, j], weights)
        for j, f in enumerate(PARAM_FIELDS)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(_fit_field, tasks, chunksize=1))
    else:
        models = [_fit_field(t) for t in tasks]
    return ParamModel(models, variant.name)


def save_model(model: ParamModel, path: str) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "layout_checksum": model.checksum,
        "variant": model.variant_name,
        "fields": [
            {
                "name": f.name,
                "kind": f.kind,
                "model": m.to_json(),
            }
            for f, m in zip(PARAM_FIELDS, model.models)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path: str) -> ParamModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"{path} is not a parameter-model file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"model version {doc.get('version')} does not match {MODEL_VERSION}"
        )
    if doc.get("layout_checksum") != layout_checksum():
        raise ModelFormatError("model layout checksum does not match this build")
    fields = doc.get("fields")
    if not isinstance(fields, list) or len(fields) != N_PARAMS:
        raise ModelFormatError("model file does not cover the parameter cascade")
    models: list[BoostedRegressor | BoostedClassifier] = []
    for f, entry in zip(PARAM_FIELDS, fields):
        if entry.get("name") != f.name or entry.get("kind") != f.kind:
            raise ModelFormatError(f"parameter {f.name} missing or out of order")
        if f.kind == "cat":
            models.append(BoostedClassifier.from_json(entry["model"]))
        else:
            models.append(BoostedRegressor.from_json(entry["model"]))
    return ParamModel(models, doc.get("variant", "atpe"))
