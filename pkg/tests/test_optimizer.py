import math

import numpy as np
import pytest

from atpekit import optimizer as opt_mod
from atpekit.benchmarks import get_benchmark
from atpekit.core import History, HyperparameterSpec, RngStream, SearchSpace
from atpekit.optimizer import WARMUP_TRIALS, OptimizerSession
from atpekit.predictor import draw_uniform_params, fallback_params, params_from_values
from atpekit.predictor import PARAM_FIELDS
from atpekit.tpe import TpeConfig, suggest
from atpekit.variants import get_variant

MIXED_SPACE = SearchSpace(
    (
        HyperparameterSpec("x", "continuous", 0.0, 1.0),
        HyperparameterSpec("y", "continuous", -2.0, 2.0),
        HyperparameterSpec("c", "categorical", choices=("A", "B", "C")),
    )
)


def quadratic_loss(cfg):
    penalty = {"A": 0.0, "B": 0.3, "C": 0.9}[cfg["c"]]
    return (cfg["x"] - 0.3) ** 2 + (cfg["y"] - 0.5) ** 2 + penalty


def run_session(session, steps, loss_fn=quadratic_loss):
    for _ in range(steps):
        cfg = session.ask()
        session.tell(cfg, loss_fn(cfg))
    return session


def forced_params(**overrides):
    values = {f.name: f.default for f in PARAM_FIELDS}
    values.update(overrides)
    params = params_from_values(values)
    return lambda stats, rng: params


# ------------------------------------------------------------------ ask/tell

def test_fresh_session_returns_prior_sample():
    s = OptimizerSession(MIXED_SPACE, variant="atpe", rng=RngStream(0))
    cfg = s.ask()
    MIXED_SPACE.validate_config(cfg)


def test_warmup_phase_uses_prior():
    s = OptimizerSession(MIXED_SPACE, variant="atpe", rng=RngStream(1))
    run_session(s, WARMUP_TRIALS - 1)
    assert sum(s.filter_mode_counts.values()) == 0  # adaptive layer inert
    run_session(s, 3)
    assert sum(s.filter_mode_counts.values()) == 2  # active from trial 10 on


def test_tell_updates_incumbent_strictly():
    s = OptimizerSession(MIXED_SPACE, variant="tpe", rng=RngStream(2))
    cfg = s.ask()
    s.tell(cfg, 5.0)
    first = s.incumbent
    s.tell(cfg, 5.0)  # equal loss: incumbent unchanged
    assert s.incumbent is first
    s.tell(cfg, 4.0)
    assert s.incumbent.loss == 4.0


def test_tell_rejects_non_finite_loss():
    s = OptimizerSession(MIXED_SPACE, variant="tpe", rng=RngStream(3))
    cfg = s.ask()
    with pytest.raises(ValueError):
        s.tell(cfg, math.nan)
    with pytest.raises(ValueError):
        s.tell(cfg, math.inf)
    assert len(s.history) == 0  # rejection leaves history unchanged


def test_tell_rejects_out_of_domain_config():
    s = OptimizerSession(MIXED_SPACE, variant="tpe", rng=RngStream(4))
    with pytest.raises(Exception):
        s.tell({"x": 2.0, "y": 0.0, "c": "A"}, 1.0)


def test_incumbent_loss_non_increasing():
    s = OptimizerSession(MIXED_SPACE, variant="atpe", rng=RngStream(5))
    best = math.inf
    for _ in range(40):
        cfg = s.ask()
        s.tell(cfg, quadratic_loss(cfg))
        assert s.incumbent.loss <= best + 1e-15
        best = s.incumbent.loss


def test_every_ask_is_in_domain_across_variants():
    for variant in ("tpe", "atpe", "atpe-r", "atpe-f", "atpe-c", "atpe-cf-zscore"):
        s = OptimizerSession(MIXED_SPACE, variant=variant, rng=RngStream(6))

        def source(stats, rng):
            return draw_uniform_params(s.variant, rng)

        s.param_source = source
        for _ in range(45):
            cfg = s.ask()
            MIXED_SPACE.validate_config(cfg)
            s.tell(cfg, quadratic_loss(cfg))


def test_bit_reproducibility():
    def run(seed):
        s = OptimizerSession(MIXED_SPACE, variant="atpe-f", rng=RngStream(seed))
        s.param_source = lambda stats, rng: draw_uniform_params(s.variant, rng)
        configs = []
        for _ in range(35):
            cfg = s.ask()
            s.tell(cfg, quadratic_loss(cfg))
            configs.append(cfg)
        return configs

    assert run(123) == run(123)
    assert run(123) != run(124)


# --------------------------------------------------------------- inertness

def test_variant_tpe_is_bit_identical_to_direct_suggest():
    bench = get_benchmark("Hartmann3")
    space = bench.space()
    session = OptimizerSession(space, variant="tpe", rng=RngStream(77))
    direct_rng = RngStream(77)
    direct_history = History()
    for step in range(50):
        cfg_session = session.ask()
        cfg_direct = suggest(direct_history, space, TpeConfig(), direct_rng)
        assert cfg_session == cfg_direct
        loss = bench.evaluate([cfg_direct[f"x{i}"] for i in range(3)])
        session.tell(cfg_session, loss)
        direct_history.append(
            type(session.history[-1])(step, dict(cfg_direct), loss, step)
        )


# ----------------------------------------------------------------- locking

def test_all_dims_locked_returns_historical_values(monkeypatch):
    space = SearchSpace(
        (
            HyperparameterSpec("x", "continuous", 0.0, 1.0),
            HyperparameterSpec("y", "continuous", 0.0, 1.0),
        )
    )
    captured = {}
    real_assign = opt_mod.assign_locked_values

    def spy(names, history, params, rng):
        out = real_assign(names, history, params, rng)
        captured.update(out)
        return out

    monkeypatch.setattr(opt_mod, "assign_locked_values", spy)
    s = OptimizerSession(space, variant="atpe", rng=RngStream(8))
    # count_reversed with cutoff 0 selects every dim; probability 1 locks all
    s.param_source = forced_params(
        cutoff_mode="count_reversed",
        secondary_cutoff=0.0,
        probability_mode="fixed",
        fixed_probability=1.0,
    )
    run_session(s, WARMUP_TRIALS, lambda c: (c["x"] - 0.5) ** 2 + c["y"])
    captured.clear()
    cfg = s.ask()
    assert captured and cfg == captured  # empty TPE sub-space: pure merge
    xs = {t.config["x"] for t in s.history}
    ys = {t.config["y"] for t in s.history}
    assert cfg["x"] in xs and cfg["y"] in ys


def test_locked_dimension_round_trip(monkeypatch):
    captured = {}
    real_assign = opt_mod.assign_locked_values

    def spy(names, history, params, rng):
        out = real_assign(names, history, params, rng)
        captured.update(out)
        return out

    monkeypatch.setattr(opt_mod, "assign_locked_values", spy)
    s = OptimizerSession(MIXED_SPACE, variant="atpe", rng=RngStream(9))
    # lock exactly the highest-correlated numeric dim
    s.param_source = forced_params(
        cutoff_mode="count_original",
        secondary_cutoff=-0.5,  # floor(0.5 * 2 numeric dims) = 1
        fixed_probability=1.0,
    )
    run_session(s, WARMUP_TRIALS + 5)
    for _ in range(5):
        captured.clear()
        cfg = s.ask()
        s.tell(cfg, quadratic_loss(cfg))
        assert len(captured) == 1
        for name, value in captured.items():
            assert cfg[name] == value  # re-injected verbatim


def test_categorical_blocking_only_when_variant_enables_it(monkeypatch):
    calls = []
    real = opt_mod.build_anova_report

    def spy(history, space, alpha=1.0):
        calls.append(1)
        return real(history, space, alpha)

    monkeypatch.setattr(opt_mod, "build_anova_report", spy)
    for variant, expected in (("atpe", 0), ("atpe-c", 1)):
        calls.clear()
        s = OptimizerSession(MIXED_SPACE, variant=variant, rng=RngStream(10))
        run_session(s, WARMUP_TRIALS)
        s.ask()
        assert (len(calls) > 0) == bool(expected)


def test_fallback_filter_mode_recorded():
    s = OptimizerSession(MIXED_SPACE, variant="atpe", rng=RngStream(11))
    run_session(s, WARMUP_TRIALS + 10)
    assert set(s.filter_mode_counts) == {"loss"}  # fallback default only
    assert sum(s.filter_mode_counts.values()) == 10  # asks at sizes 10..19


def test_adaptive_layer_actually_filters_and_locks():
    # with aggressive locking the suggested values repeat historical ones
    s = OptimizerSession(MIXED_SPACE, variant="atpe", rng=RngStream(12))
    s.param_source = forced_params(
        filter_mode="loss",
        loss_multiplier=1.0,
        cutoff_mode="count_reversed",
        secondary_cutoff=0.0,
        fixed_probability=1.0,
        value_mode="elite",
        elite_percentile=0.2,
    )
    run_session(s, 30)
    assert s.incumbent.loss < 1.0


def test_fallback_atpe_optimizes():
    gen_space = SearchSpace(
        (
            HyperparameterSpec("x", "continuous", -5.0, 5.0),
            HyperparameterSpec("y", "continuous", -5.0, 5.0),
        )
    )
    s = OptimizerSession(gen_space, variant="atpe", rng=RngStream(13))
    run_session(s, 80, lambda c: c["x"] ** 2 + c["y"] ** 2)
    assert s.incumbent.loss < 1.0
