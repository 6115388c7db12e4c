"""The adaptive optimizer loop.

Per iteration: measure correlations and state statistics on the full
history, let the controller pick the iteration's parameters, filter the
history, lock a subset of hyperparameters to values copied from past
trials, run the unmodified TPE step on the remaining sub-space against the
filtered history, and merge the locked values back in. The plain TPE
variant bypasses the adaptive layer entirely.
"""
from __future__ import annotations

import math
from collections import Counter
from typing import Any, Callable

import numpy as np

from . import tpe
from .blocking import (
    assign_locked_values,
    build_anova_report,
    build_correlation_report,
    choose_locked,
    select_categorical_candidates,
    select_numeric_candidates,
)
from .core import History, RngStream, SearchSpace, Trial, sample_prior
from .filtering import filter_history
from .predictor import AtpeParams, FallbackModel, ParamModel
from .stats import compute_statistics
from .variants import VariantSpec, get_variant

WARMUP_TRIALS = 10

ParamSource = Callable[[np.ndarray, RngStream], AtpeParams]


class OptimizerSession:
    """One ask/tell optimization run. Not safe for overlapping calls."""

    def __init__(
        self,
        space: SearchSpace,
        variant: str | VariantSpec = "tpe",
        rng: RngStream | None = None,
        model: ParamModel | FallbackModel | None = None,
        param_source: ParamSource | None = None,
        tpe_config: tpe.TpeConfig | None = None,
        warmup: int = WARMUP_TRIALS,
    ) -> None:
        self.space = space
        self.variant = get_variant(variant) if isinstance(variant, str) else variant
        self.rng = rng if rng is not None else RngStream(0)
        self.model = model if model is not None else FallbackModel(self.variant.name)
        self.param_source = param_source
        self.tpe_config = tpe_config if tpe_config is not None else tpe.TpeConfig()
        self.warmup = warmup
        self.history = History()
        self.incumbent: Trial | None = None
        self.filter_mode_counts: Counter[str] = Counter()
        self._next_id = 0

    # -- core loop ---------------------------------------------------------

    def ask(self) -> dict[str, Any]:
        if not self.variant.adaptive:
            return tpe.suggest(self.history, self.space, self.tpe_config, self.rng)
        if len(self.history) < self.warmup:
            return sample_prior(self.space, self.rng)
        return self._adaptive_ask()

    def tell(self, config: dict[str, Any], loss: float) -> Trial:
        loss = float(loss)
        if not math.isfinite(loss):
            raise ValueError(f"loss must be finite, got {loss}")
        self.space.validate_config(config)
        trial = Trial(self._next_id, dict(config), loss, iteration=self._next_id)
        self.history.append(trial)
        self._next_id += 1
        if self.incumbent is None or loss < self.incumbent.loss:
            self.incumbent = trial
        return trial

    @property
    def best(self) -> Trial | None:
        return self.incumbent

    # -- adaptive pipeline ---------------------------------------------------

    def _choose_params(self, stats: np.ndarray) -> AtpeParams:
        if self.param_source is not None:
            return self.param_source(stats, self.rng)
        return self.model.predict(stats, self.variant)

    def _adaptive_ask(self) -> dict[str, Any]:
        corr = build_correlation_report(self.history, self.space)
        stats = compute_statistics(self.history, corr)
        params = self._choose_params(stats)
        self.filter_mode_counts[params.filter.mode] += 1

        filtered = filter_history(
            self.history, params.filter, self.space, self.rng
        ).history

        corr_w = corr.with_exponent(params.blocking.correlation_exponent)
        candidates = select_numeric_candidates(corr_w, params.blocking)
        locked_idx = choose_locked(
            candidates, corr_w, params.blocking, self.rng,
            multiplier=params.blocking.correlation_multiplier,
        )
        if self.variant.categorical_blocking:
            anova = build_anova_report(
                self.history, self.space, params.blocking.anova_exponent
            )
            if len(anova):
                cat_candidates = select_categorical_candidates(anova, params.blocking)
                locked_idx |= choose_locked(
                    cat_candidates, anova, params.blocking, self.rng,
                    multiplier=params.blocking.anova_multiplier,
                )

        locked_names = [self.space.specs[i].name for i in sorted(locked_idx)]
        locked_values = assign_locked_values(
            locked_names, self.history, params.blocking, self.rng
        )

        free = [s.name for s in self.space if s.name not in locked_values]
        if free:
            sub_space = self.space.subspace(free)
            sub_history = filtered.project(free)
            config = tpe.suggest(sub_history, sub_space, params.tpe, self.rng)
        else:
            config = {}
        config.update(locked_values)
        return config
