"""Experiment runner: rounds x steps per (benchmark, variant), mean/median
summary tables, convergence traces, and filter-mode frequency output.

Per-round seeds come from a stable 64-bit hash of (base seed, benchmark,
variant, round), so results are independent of scheduling and of which
other benchmarks run.
"""
from __future__ import annotations

import csv
import hashlib
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import BENCHMARK_NAMES, get_benchmark
from .core import RngStream
from .optimizer import OptimizerSession
from .predictor import FallbackModel, ParamModel, load_model
from .variants import get_variant

_MODEL_CACHE: dict[str, ParamModel] = {}


def round_seed(base_seed: int, benchmark: str, variant: str, round_index: int) -> int:
    """Stable 64-bit per-round seed; adding benchmarks never perturbs others."""
    key = f"{base_seed}|{benchmark}|{variant}|{round_index}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


@dataclass
class ExperimentConfig:
    benchmarks: list[str]
    variants: list[str]
    rounds: int = 50
    steps: int = 200
    seed: int = 42
    model_path: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.rounds < 1 or self.steps < 1:
            raise ValueError("rounds and steps must be >= 1")
        for b in self.benchmarks:
            get_benchmark(b)
        for v in self.variants:
            get_variant(v)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    losses: dict[tuple[str, str], list[float]] = field(default_factory=dict)
    traces: dict[tuple[str, str], list[list[float]]] = field(default_factory=dict)
    filter_counts: dict[tuple[str, str], Counter] = field(default_factory=dict)

    def mean(self, benchmark: str, variant: str) -> float:
        return float(np.mean(self.losses[(benchmark, variant)]))

    def median(self, benchmark: str, variant: str) -> float:
        return float(np.median(self.losses[(benchmark, variant)]))


def _resolve_model_path(model_path: str | None, variant: str) -> str | None:
    if model_path is None:
        return None
    if os.path.isdir(model_path):
        candidate = os.path.join(model_path, f"{variant}.json")
        return candidate if os.path.exists(candidate) else None
    return model_path


def _load_cached_model(path: str | None, variant: str) -> ParamModel | FallbackModel:
    if path is None:
        return FallbackModel(variant)
    if path not in _MODEL_CACHE:
        _MODEL_CACHE[path] = load_model(path)
    model = _MODEL_CACHE[path]
    if model.variant_name != variant:
        return FallbackModel(variant)
    return model


def run_round(
    benchmark: str,
    variant: str,
    seed: int,
    steps: int,
    model_path: str | None,
) -> tuple[float, list[float], dict[str, int]]:
    """One seeded session; returns (final loss, incumbent trace, filter counts)."""
    bench = get_benchmark(benchmark)
    spec = get_variant(variant)
    model = (
        _load_cached_model(_resolve_model_path(model_path, spec.name), spec.name)
        if spec.adaptive
        else None
    )
    session = OptimizerSession(
        bench.space(), variant=spec, rng=RngStream(seed), model=model
    )
    trace = []
    for _ in range(steps):
        config = session.ask()
        point = [config[f"x{i}"] for i in range(bench.dims)]
        session.tell(config, bench.evaluate(point))
        trace.append(session.incumbent.loss)
    return session.incumbent.loss, trace, dict(session.filter_mode_counts)


def _run_round_star(args: tuple) -> tuple[float, list[float], dict[str, int]]:
    return run_round(*args)


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    tasks = []
    for b in cfg.benchmarks:
        for v in cfg.variants:
            v = get_variant(v).name
            for r in range(cfg.rounds):
                tasks.append((b, v, round_seed(cfg.seed, b, v, r), cfg.steps,
                              cfg.model_path))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outputs = list(pool.map(_run_round_star, tasks, chunksize=1))
    else:
        outputs = [_run_round_star(t) for t in tasks]

    result = ExperimentResult(cfg)
    for (b, v, _, _, _), (final, trace, counts) in zip(tasks, outputs):
        key = (b, v)
        result.losses.setdefault(key, []).append(final)
        result.traces.setdefault(key, []).append(trace)
        result.filter_counts.setdefault(key, Counter()).update(counts)
    return result


def summarize(result: ExperimentResult, outdir: str) -> dict[str, str]:
    """Write summary.csv, traces.csv, filters.csv; returns the file paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "summary": os.path.join(outdir, "summary.csv"),
        "traces": os.path.join(outdir, "traces.csv"),
        "filters": os.path.join(outdir, "filters.csv"),
    }
    cfg = result.config
    with open(paths["summary"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["benchmark", "variant", "mean", "median", "std", "best"])
        for b in cfg.benchmarks:
            for v in cfg.variants:
                v = get_variant(v).name
                losses = np.array(result.losses[(b, v)])
                w.writerow(
                    [b, v, repr(float(losses.mean())), repr(float(np.median(losses))),
                     repr(float(losses.std())), repr(float(losses.min()))]
                )
    with open(paths["traces"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["benchmark", "variant", "round", "step", "incumbent"])
        for b in cfg.benchmarks:
            for v in cfg.variants:
                v = get_variant(v).name
                for r, trace in enumerate(result.traces[(b, v)]):
                    for s, inc in enumerate(trace):
                        w.writerow([b, v, r, s, repr(float(inc))])
    with open(paths["filters"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["benchmark", "variant", "mode", "frequency"])
        for b in cfg.benchmarks:
            for v in cfg.variants:
                v = get_variant(v).name
                counts = result.filter_counts.get((b, v), Counter())
                total = sum(counts.values())
                if total == 0:
                    continue
                for mode in sorted(counts):
                    w.writerow([b, v, mode, repr(counts[mode] / total)])
    return paths


def plot_results(results_dir: str) -> list[str]:
    """Render convergence and filter-frequency SVGs from the CSV files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    traces_path = os.path.join(results_dir, "traces.csv")
    rows = []
    with open(traces_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append(row)
    by_bench: dict[str, dict[str, dict[int, list[tuple[int, float]]]]] = {}
    for row in rows:
        by_bench.setdefault(row["benchmark"], {}).setdefault(
            row["variant"], {}
        ).setdefault(int(row["round"]), []).append(
            (int(row["step"]), float(row["incumbent"]))
        )
    written = []
    for bench, variants in by_bench.items():
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for variant, rounds in variants.items():
            n_steps = max(len(v) for v in rounds.values())
            grid = np.full((len(rounds), n_steps), np.nan)
            for i, (_, pts) in enumerate(sorted(rounds.items())):
                for s, inc in pts:
                    grid[i, s] = inc
            ax.plot(np.nanmedian(grid, axis=0), label=variant)
        ax.set_xlabel("step")
        ax.set_ylabel("median incumbent loss")
        ax.set_title(bench)
        ax.legend(fontsize=8)
        out = os.path.join(results_dir, f"convergence_{bench}.svg")
        fig.savefig(out, format="svg")
        plt.close(fig)
        written.append(out)

    filters_path = os.path.join(results_dir, "filters.csv")
    if os.path.exists(filters_path):
        freq: dict[str, dict[str, dict[str, float]]] = {}
        with open(filters_path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                freq.setdefault(row["benchmark"], {}).setdefault(
                    row["variant"], {}
                )[row["mode"]] = float(row["frequency"])
        for bench, variants in freq.items():
            fig, ax = plt.subplots(figsize=(7, 4.5))
            modes = sorted({m for v in variants.values() for m in v})
            width = 0.8 / max(1, len(variants))
            xs = np.arange(len(modes))
            for i, (variant, table) in enumerate(sorted(variants.items())):
                ax.bar(
                    xs + i * width,
                    [table.get(m, 0.0) for m in modes],
                    width,
                    label=variant,
                )
            ax.set_xticks(xs + 0.4 - width / 2)
            ax.set_xticklabels(modes, fontsize=8)
            ax.set_ylabel("selection frequency")
            ax.set_title(f"{bench} filter modes")
            ax.legend(fontsize=8)
            out = os.path.join(results_dir, f"filters_{bench}.svg")
            fig.savefig(out, format="svg")
            plt.close(fig)
            written.append(out)
    return written


def all_benchmark_names() -> list[str]:
    return list(BENCHMARK_NAMES)
