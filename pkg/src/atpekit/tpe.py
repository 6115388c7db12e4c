"""Classic Tree-Structured Parzen Estimator suggest step.

Two density estimators are fit per dimension: l over the good split of the
history and g over the rest. Candidates are drawn coordinate-wise from l
and ranked by the summed log density ratio. Conventions (sqrt-N split,
candidate count, adjacent-neighbor bandwidths, prior blending) mirror the
reference TPE ecosystem so that the adaptive wrapper changes behavior only
through its own mechanisms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.special import ndtr, ndtri

from .core import (
    KIND_CATEGORICAL,
    KIND_INTEGER,
    History,
    RngStream,
    SearchSpace,
    Trial,
    decode_value,
    encode_value,
    sample_prior,
)

_LOG_EPS = 1e-300


class EmptyHistoryError(ValueError):
    """Splitting needs at least one trial; use prior sampling instead."""


@dataclass(frozen=True)
class TpeConfig:
    gamma: float = 0.25
    n_ei_candidates: int = 24
    good_cap: int = 25

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must be in (0, 1)")
        if self.n_ei_candidates < 1 or self.good_cap < 1:
            raise ValueError("candidate count and good cap must be positive")


def split_history(history: History, cfg: TpeConfig) -> tuple[list[Trial], list[Trial]]:
    """Sort trials by loss (ties by id) and split off the good fraction.

    n_good = min(ceil(gamma * sqrt(N)), good_cap).
    """
    n = len(history)
    if n == 0:
        raise EmptyHistoryError("empty history: use prior sampling")
    ranked = sorted(history, key=lambda t: (t.loss, t.id))
    n_good = min(int(math.ceil(cfg.gamma * math.sqrt(n))), cfg.good_cap)
    return ranked[:n_good], ranked[n_good:]


@dataclass(frozen=True)
class ContinuousParzen:
    """Truncated Gaussian mixture on [0, 1].

    One component per observation plus a wide prior component at 0.5.
    Components are truncated to the unit interval and renormalized.
    """

    mus: np.ndarray
    sigmas: np.ndarray
    weights: np.ndarray

    @property
    def _norm(self) -> np.ndarray:
        # truncation mass of each component on [0, 1]
        a = (0.0 - self.mus) / self.sigmas
        b = (1.0 - self.mus) / self.sigmas
        return ndtr(b) - ndtr(a)

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = (x[:, None] - self.mus[None, :]) / self.sigmas[None, :]
        log_comp = (
            -0.5 * z * z
            - 0.5 * math.log(2.0 * math.pi)
            - np.log(self.sigmas)[None, :]
            - np.log(self._norm)[None, :]
        )
        log_comp = log_comp + np.log(self.weights)[None, :]
        m = np.max(log_comp, axis=1, keepdims=True)
        return (m + np.log(np.sum(np.exp(log_comp - m), axis=1, keepdims=True)))[:, 0]

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        comp = rng.np.choice(len(self.weights), size=n, p=self.weights)
        u = rng.np.random(n)
        mu = self.mus[comp]
        sigma = self.sigmas[comp]
        lo = ndtr((0.0 - mu) / sigma)
        hi = ndtr((1.0 - mu) / sigma)
        return mu + sigma * ndtri(lo + u * (hi - lo))


@dataclass(frozen=True)
class CategoricalParzen:
    """Add-one smoothed frequency table over the choice indices."""

    probs: np.ndarray

    def logpdf(self, idx: np.ndarray) -> np.ndarray:
        return np.log(self.probs[np.asarray(idx, dtype=int)] + _LOG_EPS)

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        return rng.np.choice(len(self.probs), size=n, p=self.probs)


def _adjacent_bandwidths(sorted_mus: np.ndarray, n_obs: int) -> np.ndarray:
    """Bandwidth = max gap to sorted neighbors, with the domain edges 0 and 1
    acting as outermost neighbors; clipped to [1/min(100, N+2), 1]."""
    padded = np.concatenate(([0.0], sorted_mus, [1.0]))
    left = padded[1:-1] - padded[:-2]
    right = padded[2:] - padded[1:-1]
    bw = np.maximum(left, right)
    lo = 1.0 / min(100.0, n_obs + 2.0)
    return np.clip(bw, lo, 1.0)


def fit_continuous(values: np.ndarray) -> ContinuousParzen:
    """Mixture over encoded observations in [0, 1] plus the unit prior.

    An empty observation list yields the prior-only estimator.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        return ContinuousParzen(
            mus=np.array([0.5]), sigmas=np.array([1.0]), weights=np.array([1.0])
        )
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    bw_sorted = _adjacent_bandwidths(sorted_vals, n)
    bw = np.empty(n)
    bw[order] = bw_sorted
    mus = np.concatenate((values, [0.5]))
    sigmas = np.concatenate((bw, [1.0]))
    weights = np.full(n + 1, 1.0 / (n + 1))
    return ContinuousParzen(mus=mus, sigmas=sigmas, weights=weights)


def fit_categorical(indices: np.ndarray, n_choices: int) -> CategoricalParzen:
    counts = np.bincount(np.asarray(indices, dtype=int), minlength=n_choices)
    probs = (counts + 1.0) / (len(indices) + n_choices)
    return CategoricalParzen(probs=probs)


def fit_parzen(
    trials: list[Trial], space: SearchSpace
) -> dict[str, ContinuousParzen | CategoricalParzen]:
    """Per-dimension density estimators over encoded trial values."""
    model: dict[str, ContinuousParzen | CategoricalParzen] = {}
    for s in space:
        if s.kind == KIND_CATEGORICAL:
            idx = np.array(
                [s.choices.index(t.config[s.name]) for t in trials], dtype=int
            )
            model[s.name] = fit_categorical(idx, len(s.choices))
        else:
            vals = np.array([encode_value(s, t.config[s.name]) for t in trials])
            model[s.name] = fit_continuous(vals)
    return model


def _candidate_matrix(
    model: dict[str, ContinuousParzen | CategoricalParzen],
    space: SearchSpace,
    n: int,
    rng: RngStream,
) -> dict[str, np.ndarray]:
    """Draw n per-dimension values from l, emitting encoded positions.

    Integer dims are rounded to their grid before scoring so the score
    matches the emitted config.
    """
    draws: dict[str, np.ndarray] = {}
    for s in space:
        est = model[s.name]
        if isinstance(est, CategoricalParzen):
            draws[s.name] = est.sample(n, rng)
        else:
            x = np.clip(est.sample(n, rng), 0.0, 1.0)
            if s.kind == KIND_INTEGER:
                emitted = np.array([decode_value(s, v) for v in x], dtype=float)
                x = (emitted - s.lower) / (s.upper - s.lower)
            draws[s.name] = x
    return draws


def _score(
    draws: dict[str, np.ndarray],
    good: dict[str, ContinuousParzen | CategoricalParzen],
    bad: dict[str, ContinuousParzen | CategoricalParzen],
    space: SearchSpace,
) -> np.ndarray:
    total = None
    for s in space:
        x = draws[s.name]
        part = good[s.name].logpdf(x) - bad[s.name].logpdf(x)
        total = part if total is None else total + part
    assert total is not None
    return total


def scored_candidates(
    history: History, space: SearchSpace, cfg: TpeConfig, rng: RngStream
) -> tuple[list[dict[str, Any]], np.ndarray]:
    """Draw the candidate pool from l and score it against l and g.

    Returns the decoded candidate configs and their log-density-ratio
    scores, in draw order.
    """
    good, bad = split_history(history, cfg)
    l_model = fit_parzen(good, space)
    g_model = fit_parzen(bad, space)
    draws = _candidate_matrix(l_model, space, cfg.n_ei_candidates, rng)
    scores = _score(draws, l_model, g_model, space)
    configs = []
    for i in range(cfg.n_ei_candidates):
        config: dict[str, Any] = {}
        for s in space:
            v = draws[s.name][i]
            if s.kind == KIND_CATEGORICAL:
                config[s.name] = s.choices[int(v)]
            else:
                config[s.name] = decode_value(s, float(v))
        configs.append(config)
    return configs, scores


def suggest(
    history: History, space: SearchSpace, cfg: TpeConfig, rng: RngStream
) -> dict[str, Any]:
    """Propose the candidate maximizing sum(log l - log g) over dimensions.

    Empty history falls back to a prior sample.
    """
    if len(history) == 0:
        return sample_prior(space, rng)
    configs, scores = scored_candidates(history, space, cfg, rng)
    return configs[int(np.argmax(scores))]
