import math

import numpy as np
import pytest

from atpekit.blocking import CorrelationReport, ReportEntry, build_correlation_report
from atpekit.core import History, HyperparameterSpec, RngStream, SearchSpace, Trial
from atpekit.stats import (
    FEATURE_NAMES,
    N_FEATURES,
    RANGE_NAMES,
    STAT_NAMES,
    compute_statistics,
    seven_stats,
    write_feature_manifest,
)

EMPTY_CORR = CorrelationReport((), 1.0)

SPACE = SearchSpace((HyperparameterSpec("x", "continuous", 0.0, 1.0),))


def hist(losses):
    return History(
        Trial(i, {"x": 0.5}, float(loss), i) for i, loss in enumerate(losses)
    )


# ------------------------------------------------------------ oracle pieces

def oracle_moments(values):
    """Loop-based skewness and excess kurtosis."""
    n = len(values)
    mean = sum(values) / n
    m2 = sum((v - mean) ** 2 for v in values) / n
    m3 = sum((v - mean) ** 3 for v in values) / n
    m4 = sum((v - mean) ** 4 for v in values) / n
    return m3 / m2**1.5, m4 / m2**2 - 3.0


def oracle_percentile(values, q):
    """Linear-interpolation percentile, written independently."""
    s = sorted(values)
    pos = (len(s) - 1) * q / 100.0
    lo = math.floor(pos)
    hi = math.ceil(pos)
    if lo == hi:
        return s[int(pos)]
    return s[lo] + (pos - lo) * (s[hi] - s[lo])


def test_seven_stats_match_oracle():
    gen = np.random.default_rng(123)
    for _ in range(100):
        v = gen.normal(loc=gen.uniform(-5, 5), scale=gen.uniform(0.5, 3), size=30)
        got = seven_stats(v, shift=True)
        shifted = v - v.min() + 1.0
        skew, kurt = oracle_moments(list(v))
        assert got[3] == pytest.approx(kurt, abs=1e-9)
        assert got[5] == pytest.approx(skew, abs=1e-9)
        mx = shifted.max()
        assert got[0] == pytest.approx(mx / oracle_percentile(shifted, 25), abs=1e-9)
        assert got[1] == pytest.approx(mx / oracle_percentile(shifted, 50), abs=1e-9)
        assert got[2] == pytest.approx(mx / oracle_percentile(shifted, 75), abs=1e-9)
        assert got[4] == pytest.approx(
            oracle_percentile(shifted, 25) / oracle_percentile(shifted, 5), abs=1e-9
        )
        std = math.sqrt(sum((x - v.mean()) ** 2 for x in v) / len(v))
        assert got[6] == pytest.approx(std / mx, abs=1e-9)


def test_constant_losses_conventions():
    vec = compute_statistics(hist([5.0, 5.0, 5.0, 5.0]), EMPTY_CORR)
    by_name = dict(zip(FEATURE_NAMES, vec))
    for r in RANGE_NAMES:
        assert by_name[f"loss_{r}_max_over_p25"] == 1.0
        assert by_name[f"loss_{r}_max_over_p50"] == 1.0
        assert by_name[f"loss_{r}_max_over_p75"] == 1.0
        assert by_name[f"loss_{r}_p25_over_p5"] == 1.0
        assert by_name[f"loss_{r}_skewness"] == 0.0
        assert by_name[f"loss_{r}_kurtosis"] == 0.0
        assert by_name[f"loss_{r}_std_over_max"] == 0.0


def test_worked_example_one_to_ten():
    vec = compute_statistics(hist(range(1, 11)), EMPTY_CORR)
    by_name = dict(zip(FEATURE_NAMES, vec))
    assert by_name["loss_all_max_over_p50"] == pytest.approx(10 / 5.5, abs=1e-12)


def test_short_history_ranges_collapse_to_all():
    vec = compute_statistics(hist([3.0, 1.0, 4.0, 1.5, 9.0]), EMPTY_CORR)
    by_name = dict(zip(FEATURE_NAMES, vec))
    for s in STAT_NAMES:
        assert by_name[f"loss_all_{s}"] == by_name[f"loss_last10_{s}"]
        assert by_name[f"loss_all_{s}"] == by_name[f"loss_top10_{s}"]


def test_shift_invariance():
    gen = np.random.default_rng(7)
    losses = gen.normal(size=40)
    a = compute_statistics(hist(losses), EMPTY_CORR)
    b = compute_statistics(hist(losses - 1234.5), EMPTY_CORR)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_last_and_top_ranges_differ():
    # quadratic growth: the newest ten values have a different shape (after
    # the min shift) than the ten best values
    losses = [float(i * i) for i in range(1, 41)]
    vec = compute_statistics(hist(losses), EMPTY_CORR)
    by_name = dict(zip(FEATURE_NAMES, vec))
    last10 = seven_stats(np.array(losses[-10:]), shift=True)
    top10 = seven_stats(np.array(sorted(losses)[:10]), shift=True)
    assert by_name["loss_last10_max_over_p50"] == pytest.approx(last10[1])
    assert by_name["loss_top10_max_over_p50"] == pytest.approx(top10[1])
    assert by_name["loss_last10_max_over_p50"] != by_name["loss_top10_max_over_p50"]


def test_correlation_block():
    entries = tuple(
        ReportEntry(i, f"p{i}", rho) for i, rho in enumerate((-0.5, 0.25, 0.8))
    )
    vec = compute_statistics(hist([1.0, 2.0, 3.0]), CorrelationReport(entries, 1.0))
    by_name = dict(zip(FEATURE_NAMES, vec))
    expected = seven_stats(np.array([0.5, 0.25, 0.8]), shift=False)
    for s, e in zip(STAT_NAMES, expected):
        assert by_name[f"corr_{s}"] == pytest.approx(e, abs=1e-12)
    # no numeric dims -> zeros
    vec0 = compute_statistics(hist([1.0, 2.0]), EMPTY_CORR)
    assert all(v == 0.0 for v in vec0[-len(STAT_NAMES):])


def test_vector_shape_and_order_are_frozen():
    assert N_FEATURES == 56
    assert len(FEATURE_NAMES) == 56
    assert FEATURE_NAMES[0] == "loss_all_max_over_p25"
    assert FEATURE_NAMES[49] == "corr_max_over_p25"
    assert FEATURE_NAMES[-1] == "corr_std_over_max"


def test_serialization_round_trip_is_exact():
    import json

    gen = np.random.default_rng(11)
    vec = compute_statistics(hist(gen.normal(size=30)), EMPTY_CORR)
    back = np.array(json.loads(json.dumps(list(vec))))
    np.testing.assert_array_equal(vec, back)


def test_manifest_written(tmp_path):
    path = tmp_path / "features.txt"
    write_feature_manifest(str(path))
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 56
    assert lines[0] == "0\tloss_all_max_over_p25"


def test_statistics_on_real_history_are_finite():
    space = SearchSpace(
        (
            HyperparameterSpec("x", "continuous", 0.0, 1.0),
            HyperparameterSpec("y", "continuous", 0.0, 1.0),
        )
    )
    gen = np.random.default_rng(5)
    h = History()
    for i in range(60):
        x, y = gen.random(), gen.random()
        h.append(Trial(i, {"x": x, "y": y}, (x - 0.3) ** 2 + 0.1 * y, i))
    rep = build_correlation_report(h, space)
    vec = compute_statistics(h, rep)
    assert vec.shape == (56,)
    assert np.all(np.isfinite(vec))
