"""Fixed-length feature vector describing the optimization state.

Seven statistics (three max/percentile ratios, excess kurtosis, a
percentile ratio, skewness, std/max) over seven loss ranges, plus the same
seven statistics over the per-dimension absolute rank correlations:
49 + 7 = 56 features in a frozen order.

Ratio statistics are computed on min-shifted values (min maps to 1) so
they are shift-invariant and well defined for negative losses; moments are
computed on the raw values. Degenerate inputs map to fixed constants
instead of NaN.
"""
from __future__ import annotations

import numpy as np

from .blocking import CorrelationReport
from .core import History

STAT_NAMES = (
    "max_over_p25",
    "max_over_p50",
    "max_over_p75",
    "kurtosis",
    "p25_over_p5",
    "skewness",
    "std_over_max",
)

RANGE_NAMES = ("all", "last10", "last15", "last25", "top10", "top20", "top30")

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"loss_{r}_{s}" for r in RANGE_NAMES for s in STAT_NAMES
) + tuple(f"corr_{s}" for s in STAT_NAMES)

N_FEATURES = len(FEATURE_NAMES)  # 56

_DENOM_EPS = 1e-12


def seven_stats(values: np.ndarray, shift: bool = True) -> np.ndarray:
    """The seven statistics over one multiset of values.

    Zero-variance inputs give ratios 1, skewness/kurtosis 0, std/max 0.
    A ratio whose denominator vanishes (possible only without shifting)
    maps to 0.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return np.zeros(len(STAT_NAMES))
    shifted = v - v.min() + 1.0 if shift else v
    m2 = float(np.mean((v - v.mean()) ** 2))
    if m2 == 0.0:
        return np.array([1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0])
    p5, p25, p50, p75 = np.percentile(shifted, [5.0, 25.0, 50.0, 75.0])
    mx = float(shifted.max())
    std = float(np.sqrt(m2))
    m3 = float(np.mean((v - v.mean()) ** 3))
    m4 = float(np.mean((v - v.mean()) ** 4))
    return np.array(
        [
            _ratio(mx, p25),
            _ratio(mx, p50),
            _ratio(mx, p75),
            m4 / (m2 * m2) - 3.0,
            _ratio(p25, p5),
            m3 / m2**1.5,
            _ratio(std, mx),
        ]
    )


def _ratio(num: float, den: float) -> float:
    if abs(den) <= _DENOM_EPS:
        return 0.0
    return num / den


def _range_values(history: History, name: str) -> np.ndarray:
    losses = history.losses()
    if name == "all":
        return losses
    kind, k = name[:-2], int(name[-2:])
    if kind == "last":
        return losses[-k:]
    ids = np.array([t.id for t in history])
    order = np.lexsort((ids, losses))  # by loss, ties by id
    return losses[order[:k]]


def compute_statistics(history: History, correlations: CorrelationReport) -> np.ndarray:
    """The 56-feature vector for a non-empty history.

    Loss ranges shorter than their nominal size use the whole history.
    The correlation block uses |rho| without shifting; with no numeric
    dims it is all zeros.
    """
    if len(history) == 0:
        raise ValueError("statistics need at least one trial")
    parts = [seven_stats(_range_values(history, r), shift=True) for r in RANGE_NAMES]
    abs_rho = correlations.abs_scores()
    if abs_rho.size == 0:
        parts.append(np.zeros(len(STAT_NAMES)))
    else:
        parts.append(seven_stats(abs_rho, shift=False))
    return np.concatenate(parts)


def write_feature_manifest(path: str) -> None:
    """Persist the frozen feature order so trained models stay portable."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, name in enumerate(FEATURE_NAMES):
            fh.write(f"{i}\t{name}\n")
