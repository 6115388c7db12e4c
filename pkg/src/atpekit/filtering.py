"""History reduction schemes applied before the TPE model is built.

Six modes: identity, random elimination, age-rank elimination, loss-rank
elimination, k-means cluster representatives, and z-score selection on
standardized losses. The output is always a subsequence of the input and
never empty for non-empty input (the incumbent best survives as fallback).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import kmeans_labels
from .core import History, RngStream, SearchSpace, Trial, encode_numeric

FILTER_MODES = ("none", "random", "age", "loss", "clustering", "zscore")


@dataclass(frozen=True)
class FilterParams:
    mode: str = "none"
    random_probability: float = 0.0
    age_multiplier: float = 0.0
    loss_multiplier: float = 0.0
    clusters_quantile: float = 1.0
    zscore_threshold: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in FILTER_MODES:
            raise ValueError(f"unknown filter mode {self.mode!r}")
        if not (0.0 <= self.random_probability <= 1.0):
            raise ValueError("random_probability must be in [0, 1]")
        if self.age_multiplier < 0.0 or self.loss_multiplier < 0.0:
            raise ValueError("multipliers must be >= 0")
        if not (0.0 < self.clusters_quantile <= 1.0):
            raise ValueError("clusters_quantile must be in (0, 1]")
        if not (-3.0 <= self.zscore_threshold <= 3.0):
            raise ValueError("zscore_threshold must be in [-3, 3]")


@dataclass(frozen=True)
class FilterResult:
    history: History
    degenerate: bool = False  # zscore with zero loss spread fell back to identity


def filter_history(
    history: History, params: FilterParams, space: SearchSpace, rng: RngStream
) -> FilterResult:
    n = len(history)
    if n == 0 or params.mode == "none":
        return FilterResult(History(history))

    trials = list(history)
    if params.mode == "random":
        keep = [t for t in trials if rng.np.random() >= params.random_probability]
    elif params.mode == "age":
        keep = _rank_eliminate(trials, _age_ranks(trials), params.age_multiplier, rng)
    elif params.mode == "loss":
        keep = _rank_eliminate(trials, _loss_ranks(trials), params.loss_multiplier, rng)
    elif params.mode == "clustering":
        keep = _cluster_representatives(trials, params.clusters_quantile, space, rng)
    else:
        kept, degenerate = _zscore_select(trials, params.zscore_threshold)
        if degenerate:
            return FilterResult(History(trials), degenerate=True)
        keep = kept

    if not keep:
        keep = [min(trials, key=lambda t: (t.loss, t.id))]
    keep.sort(key=lambda t: t.id)
    return FilterResult(History(keep))


def _age_ranks(trials: list[Trial]) -> dict[int, int]:
    """Rank 1 = newest trial, N = oldest."""
    ordered = sorted(trials, key=lambda t: t.id, reverse=True)
    return {t.id: r for r, t in enumerate(ordered, start=1)}


def _loss_ranks(trials: list[Trial]) -> dict[int, int]:
    """Rank 1 = best loss; ties broken by id."""
    ordered = sorted(trials, key=lambda t: (t.loss, t.id))
    return {t.id: r for r, t in enumerate(ordered, start=1)}


def _rank_eliminate(
    trials: list[Trial], ranks: dict[int, int], multiplier: float, rng: RngStream
) -> list[Trial]:
    n = len(trials)
    keep = []
    for t in trials:
        p_elim = min(1.0, multiplier * ranks[t.id] / n)
        if rng.np.random() >= p_elim:
            keep.append(t)
    return keep


def _cluster_representatives(
    trials: list[Trial], quantile: float, space: SearchSpace, rng: RngStream
) -> list[Trial]:
    n = len(trials)
    k = max(1, int(np.floor(quantile * n)))
    points = np.array([encode_numeric(t.config, space) for t in trials])
    labels = kmeans_labels(points, k, rng, n_iters=20)
    keep = []
    for j in range(labels.max() + 1):
        members = [t for t, lbl in zip(trials, labels) if lbl == j]
        if members:
            keep.append(members[int(rng.np.integers(0, len(members)))])
    return keep


def _zscore_select(
    trials: list[Trial], threshold: float
) -> tuple[list[Trial], bool]:
    losses = np.array([t.loss for t in trials], dtype=float)
    mu = losses.mean()
    sigma = losses.std()  # population sigma: defined for a single sample
    if sigma == 0.0:
        return list(trials), True
    z = (losses - mu) / sigma
    if threshold < 0:
        mask = z > abs(threshold)
    else:
        mask = z < 3.0 - abs(threshold)
    return [t for t, m in zip(trials, mask) if m], False
