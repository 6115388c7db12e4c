"""Command-line interface: run experiments, generate surrogate corpora,
train controller models, list benchmarks, and plot results."""
from __future__ import annotations

import argparse
import os
import sys
import time

from .benchmarks import BENCHMARK_NAMES, get_benchmark
from .core import RngStream
from .harness import ExperimentConfig, plot_results, run_experiment, summarize
from .predictor import build_training_set, save_model, train
from .stats import write_feature_manifest
from .surrogate import cluster_corpus, generate_surrogate, load_corpus, save_corpus
from .variants import VARIANTS, get_variant


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atpe")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark experiment")
    run.add_argument("--benchmarks", default="all",
                     help="comma-separated names, or 'all'")
    run.add_argument("--variants", default="tpe,atpe",
                     help=f"comma-separated from: {','.join(VARIANTS)}")
    run.add_argument("--rounds", type=int, default=25)
    run.add_argument("--steps", type=int, default=200)
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--model", default=None,
                     help="model file, or directory with <variant>.json files")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", required=True, help="output directory for CSV files")

    corpus = sub.add_parser("corpus", help="generate a surrogate corpus")
    corpus.add_argument("--out", required=True, help="corpus JSONL path")
    corpus.add_argument("--count", type=int, default=200)
    corpus.add_argument("--dims-min", type=int, default=2)
    corpus.add_argument("--dims-max", type=int, default=8)
    corpus.add_argument("--atoms", choices=("base", "extended"), default="base")
    corpus.add_argument("--seed", type=int, default=42)

    tr = sub.add_parser("train", help="train a controller model on a corpus")
    tr.add_argument("--corpus", required=True)
    tr.add_argument("--out", required=True, help="model JSON path")
    tr.add_argument("--variant", default="atpe")
    tr.add_argument("--runs", type=int, default=8)
    tr.add_argument("--steps", type=int, default=50)
    tr.add_argument("--representatives", type=int, default=40)
    tr.add_argument("--probe-budget", type=int, default=200)
    tr.add_argument("--seed", type=int, default=42)
    tr.add_argument("--workers", type=int, default=1)

    bench = sub.add_parser("bench", help="query the benchmark registry")
    bench.add_argument("--list", action="store_true")

    plot = sub.add_parser("plot", help="render SVG plots from a results directory")
    plot.add_argument("results_dir")

    return parser


def _cmd_run(args: argparse.Namespace) -> None:
    benchmarks = (
        list(BENCHMARK_NAMES)
        if args.benchmarks == "all"
        else [b.strip() for b in args.benchmarks.split(",") if b.strip()]
    )
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    cfg = ExperimentConfig(
        benchmarks=benchmarks,
        variants=variants,
        rounds=args.rounds,
        steps=args.steps,
        seed=args.seed,
        model_path=args.model,
        workers=args.workers,
    )
    t0 = time.time()
    result = run_experiment(cfg)
    paths = summarize(result, args.out)
    print(f"completed {len(benchmarks)}x{len(variants)}x{args.rounds} rounds "
          f"in {time.time() - t0:.1f}s")
    print(f"{'benchmark':<16}{'variant':<16}{'mean':>14}{'median':>14}")
    for b in benchmarks:
        for v in variants:
            v = get_variant(v).name
            print(f"{b:<16}{v:<16}{result.mean(b, v):>14.4f}"
                  f"{result.median(b, v):>14.4f}")
    print("wrote", ", ".join(sorted(paths.values())))


def _cmd_corpus(args: argparse.Namespace) -> None:
    from .surrogate import BASE_POOL, EXTENDED_POOL

    pool = BASE_POOL if args.atoms == "base" else EXTENDED_POOL
    if args.dims_min < 1 or args.dims_max < args.dims_min:
        raise ValueError("need 1 <= dims-min <= dims-max")
    rng = RngStream(args.seed)
    functions = []
    for _ in range(args.count):
        dims = int(rng.np.integers(args.dims_min, args.dims_max + 1))
        functions.append(generate_surrogate(dims, pool, rng))
    save_corpus(functions, args.out)
    print(f"wrote {len(functions)} surrogate functions to {args.out}")


def _cmd_train(args: argparse.Namespace) -> None:
    variant = get_variant(args.variant)
    rng = RngStream(args.seed)
    functions = load_corpus(args.corpus)
    k = min(args.representatives, len(functions))
    reps = cluster_corpus(functions, k, args.probe_budget, rng)
    print(f"{len(functions)} functions -> {len(reps)} cluster representatives")
    t0 = time.time()
    examples = build_training_set(
        reps, variant, args.runs, args.steps, rng,
        progress=lambda done, total: print(f"  rollouts {done}/{total}", end="\r"),
        workers=args.workers,
    )
    print(f"\n{len(examples)} training examples in {time.time() - t0:.1f}s")
    t0 = time.time()
    model = train(examples, variant, workers=args.workers)
    print(f"trained cascade in {time.time() - t0:.1f}s")
    save_model(model, args.out)
    write_feature_manifest(os.path.join(os.path.dirname(args.out) or ".",
                                        "features.txt"))
    print(f"wrote {args.out}")


def _cmd_bench(args: argparse.Namespace) -> None:
    if args.list:
        for name in BENCHMARK_NAMES:
            b = get_benchmark(name)
            bounds = " x ".join(f"[{lo:g},{hi:g}]" for lo, hi in b.bounds)
            print(f"{name:<16}dims={b.dims}  domain {bounds}  "
                  f"ref_min={b.reference_min:.4f}")
    else:
        print("use --list to list benchmarks")


def _cmd_plot(args: argparse.Namespace) -> None:
    written = plot_results(args.results_dir)
    for path in written:
        print("wrote", path)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "corpus": _cmd_corpus,
        "train": _cmd_train,
        "bench": _cmd_bench,
        "plot": _cmd_plot,
    }
    try:
        handlers[args.command](args)
    except Exception as exc:  # CLI boundary: fail with a message, not a trace
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
