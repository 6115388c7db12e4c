"""Hyperparameter locking: correlation/ANOVA candidate selection, the
original vs reversed count cutoffs plus the cumulative-threshold scheme,
random subset choice, and value assignment from history.

Numeric dimensions are ranked by |Spearman rho|^alpha; categorical
dimensions by |one-way F|^alpha. Locked dimensions are excluded from the
TPE model and re-injected verbatim into the suggested config.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import History, RngStream, SearchSpace

CUTOFF_MODES = ("count_original", "count_reversed", "threshold")
PROBABILITY_MODES = ("fixed", "correlation_weighted")
VALUE_MODES = ("random", "elite")


@dataclass(frozen=True)
class BlockingParams:
    secondary_cutoff: float = 0.0
    correlation_exponent: float = 2.0
    cutoff_mode: str = "count_original"
    probability_mode: str = "fixed"
    fixed_probability: float = 0.5
    correlation_multiplier: float = 1.0
    value_mode: str = "elite"
    elite_percentile: float = 0.3
    anova_exponent: float = 2.0
    cat_cutoff: float = 0.0
    anova_multiplier: float = 1.0

    def __post_init__(self) -> None:
        if not (-1.0 <= self.secondary_cutoff <= 1.0):
            raise ValueError("secondary_cutoff must be in [-1, 1]")
        if not (-1.0 <= self.cat_cutoff <= 1.0):
            raise ValueError("cat_cutoff must be in [-1, 1]")
        if self.correlation_exponent <= 0 or self.anova_exponent <= 0:
            raise ValueError("exponents must be > 0")
        if self.cutoff_mode not in CUTOFF_MODES:
            raise ValueError(f"unknown cutoff mode {self.cutoff_mode!r}")
        if self.probability_mode not in PROBABILITY_MODES:
            raise ValueError(f"unknown probability mode {self.probability_mode!r}")
        if self.value_mode not in VALUE_MODES:
            raise ValueError(f"unknown value mode {self.value_mode!r}")
        if not (0.0 <= self.fixed_probability <= 1.0):
            raise ValueError("fixed_probability must be in [0, 1]")
        if not (0.0 < self.elite_percentile <= 1.0):
            raise ValueError("elite_percentile must be in (0, 1]")
        if self.correlation_multiplier < 0 or self.anova_multiplier < 0:
            raise ValueError("multipliers must be >= 0")


def average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the average of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(values: np.ndarray, losses: np.ndarray) -> float:
    """Rank correlation with average ranks for ties; degenerate inputs give 0."""
    rho, _ = spearman_flagged(values, losses)
    return rho


def spearman_flagged(values: np.ndarray, losses: np.ndarray) -> tuple[float, bool]:
    values = np.asarray(values, dtype=float)
    losses = np.asarray(losses, dtype=float)
    if len(values) < 2:
        return 0.0, True
    rv = average_ranks(values)
    rl = average_ranks(losses)
    dv = rv - rv.mean()
    dl = rl - rl.mean()
    denom = math.sqrt(float(dv @ dv) * float(dl @ dl))
    if denom == 0.0:
        return 0.0, True
    return float(dv @ dl) / denom, False


def anova_f(labels: list[Any], losses: np.ndarray) -> tuple[float, bool]:
    """One-way F statistic of losses grouped by category label.

    Fewer than two observed groups, or zero within-group variance
    everywhere, degenerates to (0, flagged).
    """
    losses = np.asarray(losses, dtype=float)
    groups: dict[Any, list[float]] = {}
    for lab, loss in zip(labels, losses):
        groups.setdefault(lab, []).append(float(loss))
    k = len(groups)
    n = len(losses)
    if k < 2 or n - k < 1:
        return 0.0, True
    grand = losses.mean()
    ssb = 0.0
    ssw = 0.0
    for member in groups.values():
        arr = np.asarray(member)
        ssb += len(arr) * float((arr.mean() - grand) ** 2)
        ssw += float(((arr - arr.mean()) ** 2).sum())
    if ssw == 0.0:
        return 0.0, True
    return (ssb / (k - 1)) / (ssw / (n - k)), False


@dataclass(frozen=True)
class ReportEntry:
    index: int  # position in space order
    name: str
    score: float  # rho for numeric dims, F for categorical dims


@dataclass(frozen=True)
class CorrelationReport:
    """Per-dimension Spearman rho for non-categorical dims with at least two
    distinct observed values, plus the weighting exponent in force."""

    entries: tuple[ReportEntry, ...]
    exponent: float = 1.0

    def with_exponent(self, alpha: float) -> "CorrelationReport":
        return type(self)(self.entries, float(alpha))

    def weighted(self, entry: ReportEntry) -> float:
        return abs(entry.score) ** self.exponent

    def ordered(self) -> list[ReportEntry]:
        """Descending by weighted score; ties broken by space order."""
        return sorted(self.entries, key=lambda e: (-self.weighted(e), e.index))

    def abs_scores(self) -> np.ndarray:
        return np.array([abs(e.score) for e in self.entries], dtype=float)

    def __len__(self) -> int:
        return len(self.entries)


class AnovaReport(CorrelationReport):
    """Same shape as CorrelationReport but scores are one-way F values."""


def build_correlation_report(
    history: History, space: SearchSpace, alpha: float = 1.0
) -> CorrelationReport:
    losses = history.losses()
    entries = []
    for i, s in enumerate(space):
        if s.is_categorical:
            continue
        vals = np.array([t.config[s.name] for t in history], dtype=float)
        if len(vals) < 2 or len(np.unique(vals)) < 2:
            continue
        rho, _ = spearman_flagged(vals, losses)
        entries.append(ReportEntry(index=i, name=s.name, score=rho))
    return CorrelationReport(tuple(entries), float(alpha))


def build_anova_report(
    history: History, space: SearchSpace, alpha: float = 1.0
) -> AnovaReport:
    losses = history.losses()
    entries = []
    for i, s in enumerate(space):
        if not s.is_categorical:
            continue
        labels = [t.config[s.name] for t in history]
        if len(set(labels)) < 2:
            continue
        f, _ = anova_f(labels, losses)
        entries.append(ReportEntry(index=i, name=s.name, score=f))
    return AnovaReport(tuple(entries), float(alpha))


def select_numeric_candidates(
    report: CorrelationReport, params: BlockingParams
) -> set[int]:
    """Candidate dim indices under the configured cutoff interpretation."""
    n = len(report)
    if n == 0:
        return set()
    c = params.secondary_cutoff
    order = report.ordered()
    if params.cutoff_mode == "count_original":
        m = int(math.floor(abs(c) * n))
        if c == 0.0:
            return set()
        chosen = order[:m] if c < 0 else order[n - m :] if m else []
    elif params.cutoff_mode == "count_reversed":
        m = n - int(math.floor(abs(c) * n))
        if c == 0.0:
            chosen = order
        else:
            chosen = order[:m] if c < 0 else order[n - m :] if m else []
    else:
        weights = [report.weighted(e) for e in order]
        chosen = _threshold_select(order, weights, sum(weights) * abs(c), c >= 0)
    return {e.index for e in chosen}


def select_categorical_candidates(
    report: AnovaReport, params: BlockingParams
) -> set[int]:
    """Cumulative-threshold selection with T scaled by (1 - |cat_cutoff|)."""
    n = len(report)
    if n == 0:
        return set()
    beta = params.cat_cutoff
    order = report.ordered()
    weights = [report.weighted(e) for e in order]
    t = sum(weights) * (1.0 - abs(beta))
    chosen = _threshold_select(order, weights, t, beta >= 0)
    return {e.index for e in chosen}


def _threshold_select(
    order: list[ReportEntry], weights: list[float], t: float, from_top: bool
) -> list[ReportEntry]:
    """Prefix of the descending order (from_top) or suffix otherwise, taken
    while the inclusive cumulative weight stays within t."""
    chosen = []
    if from_top:
        acc = 0.0
        for e, w in zip(order, weights):
            acc += w
            if acc <= t:
                chosen.append(e)
            else:
                break
    else:
        acc = 0.0
        for e, w in zip(reversed(order), reversed(weights)):
            acc += w
            if acc <= t:
                chosen.append(e)
            else:
                break
    return chosen


def choose_locked(
    candidates: set[int],
    report: CorrelationReport,
    params: BlockingParams,
    rng: RngStream,
    multiplier: float | None = None,
) -> set[int]:
    """Random subset of the candidates: fixed keep probability, or a
    probability proportional to the weighted score (clipped to 1)."""
    if multiplier is None:
        multiplier = params.correlation_multiplier
    by_index = {e.index: e for e in report.entries}
    locked = set()
    for idx in sorted(candidates):
        if params.probability_mode == "fixed":
            p_keep = params.fixed_probability
        else:
            p_keep = min(1.0, report.weighted(by_index[idx]) * multiplier)
        if rng.np.random() < p_keep:
            locked.add(idx)
    return locked


def assign_locked_values(
    locked_names: list[str],
    history: History,
    params: BlockingParams,
    rng: RngStream,
) -> dict[str, Any]:
    """Per locked dim, copy a value from a random trial (random mode) or
    from a random trial in the best elite_percentile fraction (elite)."""
    if len(history) == 0:
        raise ValueError("cannot assign locked values from an empty history")
    if params.value_mode == "elite":
        n_elite = int(math.ceil(params.elite_percentile * len(history)))
        pool = sorted(history, key=lambda t: (t.loss, t.id))[:n_elite]
    else:
        pool = list(history)
    values: dict[str, Any] = {}
    for name in locked_names:
        t = pool[int(rng.np.integers(0, len(pool)))]
        values[name] = t.config[name]
    return values
