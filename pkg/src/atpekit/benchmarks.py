"""The nine black-box benchmark functions used by the experiment harness.

Standard closed forms and domains from the usual benchmark-library
conventions. Reference minima are dense-grid oracle values frozen at build
time (Sobol sweep plus local refinement); tests recompute them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import HyperparameterSpec, SearchSpace

REFERENCE_TOLERANCE = 1e-2


@dataclass(frozen=True)
class Benchmark:
    name: str
    dims: int
    bounds: tuple[tuple[float, float], ...]
    fn: Callable[[np.ndarray], float]
    reference_min: float

    def evaluate(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float)
        if x.shape != (self.dims,):
            raise ValueError(f"{self.name} expects {self.dims} coordinates")
        for i, (lo, hi) in enumerate(self.bounds):
            if not (lo <= x[i] <= hi):
                raise ValueError(
                    f"{self.name}: coordinate {i} = {x[i]} outside [{lo}, {hi}]"
                )
        return float(self.fn(x))

    def space(self) -> SearchSpace:
        return SearchSpace(
            tuple(
                HyperparameterSpec(
                    name=f"x{i}", kind="continuous", lower=lo, upper=hi
                )
                for i, (lo, hi) in enumerate(self.bounds)
            )
        )


def _bohachevsky(x: np.ndarray) -> float:
    return (
        x[0] ** 2
        + 2.0 * x[1] ** 2
        - 0.3 * math.cos(3.0 * math.pi * x[0])
        - 0.4 * math.cos(4.0 * math.pi * x[1])
        + 0.7
    )


def _branin(x: np.ndarray) -> float:
    a = 1.0
    b = 5.1 / (4.0 * math.pi**2)
    c = 5.0 / math.pi
    r = 6.0
    s = 10.0
    t = 1.0 / (8.0 * math.pi)
    return (
        a * (x[1] - b * x[0] ** 2 + c * x[0] - r) ** 2
        + s * (1.0 - t) * math.cos(x[0])
        + s
    )


def _camelback(x: np.ndarray) -> float:
    return (
        (4.0 - 2.1 * x[0] ** 2 + x[0] ** 4 / 3.0) * x[0] ** 2
        + x[0] * x[1]
        + (-4.0 + 4.0 * x[1] ** 2) * x[1] ** 2
    )


def _forrester(x: np.ndarray) -> float:
    return (6.0 * x[0] - 2.0) ** 2 * math.sin(12.0 * x[0] - 4.0)


def _goldstein_price(x: np.ndarray) -> float:
    a, b = x[0], x[1]
    part1 = 1.0 + (a + b + 1.0) ** 2 * (
        19.0 - 14.0 * a + 3.0 * a**2 - 14.0 * b + 6.0 * a * b + 3.0 * b**2
    )
    part2 = 30.0 + (2.0 * a - 3.0 * b) ** 2 * (
        18.0 - 32.0 * a + 12.0 * a**2 + 48.0 * b - 36.0 * a * b + 27.0 * b**2
    )
    return part1 * part2


_HARTMANN3_A = np.array(
    [[3.0, 10.0, 30.0], [0.1, 10.0, 35.0], [3.0, 10.0, 30.0], [0.1, 10.0, 35.0]]
)
_HARTMANN3_P = 1e-4 * np.array(
    [
        [3689.0, 1170.0, 2673.0],
        [4699.0, 4387.0, 7470.0],
        [1091.0, 8732.0, 5547.0],
        [381.0, 5743.0, 8828.0],
    ]
)
_HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_HARTMANN6_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
        [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
        [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
        [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
    ]
)
_HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])


def _hartmann(x: np.ndarray, a: np.ndarray, p: np.ndarray) -> float:
    inner = np.sum(a * (x[None, :] - p) ** 2, axis=1)
    return float(-np.sum(_HARTMANN_ALPHA * np.exp(-inner)))


def _hartmann3(x: np.ndarray) -> float:
    return _hartmann(x, _HARTMANN3_A, _HARTMANN3_P)


def _hartmann6(x: np.ndarray) -> float:
    return _hartmann(x, _HARTMANN6_A, _HARTMANN6_P)


def _levy(x: np.ndarray) -> float:
    w = 1.0 + (x - 1.0) / 4.0
    term1 = math.sin(math.pi * w[0]) ** 2
    middle = np.sum(
        (w[:-1] - 1.0) ** 2 * (1.0 + 10.0 * np.sin(math.pi * w[:-1] + 1.0) ** 2)
    )
    term3 = (w[-1] - 1.0) ** 2 * (1.0 + math.sin(2.0 * math.pi * w[-1]) ** 2)
    return float(term1 + middle + term3)


def _rosenbrock(x: np.ndarray) -> float:
    return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2


_BENCHMARKS: dict[str, Benchmark] = {
    b.name: b
    for b in (
        Benchmark(
            "Bohachevsky", 2, ((-100.0, 100.0), (-100.0, 100.0)), _bohachevsky, 0.0
        ),
        Benchmark("Branin", 2, ((-5.0, 10.0), (0.0, 15.0)), _branin, 0.39788735772973816),
        Benchmark("Camelback", 2, ((-3.0, 3.0), (-2.0, 2.0)), _camelback, -1.0316284534898774),
        Benchmark("Forrester", 1, ((0.0, 1.0),), _forrester, -6.020740055767083),
        Benchmark("GoldsteinPrice", 2, ((-2.0, 2.0), (-2.0, 2.0)), _goldstein_price, 3.0),
        Benchmark("Hartmann3", 3, ((0.0, 1.0),) * 3, _hartmann3, -3.8627797869493365),
        Benchmark("Hartmann6", 6, ((0.0, 1.0),) * 6, _hartmann6, -3.322368011391339),
        Benchmark("Levy", 2, ((-10.0, 10.0), (-10.0, 10.0)), _levy, 0.0),
        Benchmark("Rosenbrock", 2, ((-5.0, 10.0), (-5.0, 10.0)), _rosenbrock, 0.0),
    )
}

BENCHMARK_NAMES = tuple(_BENCHMARKS)


def get_benchmark(name: str) -> Benchmark:
    if name not in _BENCHMARKS:
        valid = ", ".join(BENCHMARK_NAMES)
        raise ValueError(f"unknown benchmark {name!r}; valid names: {valid}")
    return _BENCHMARKS[name]


def evaluate(name: str, point: Sequence[float]) -> float:
    return get_benchmark(name).evaluate(point)


def reference_minimum(name: str) -> tuple[float, float]:
    """Frozen oracle minimum and its tolerance."""
    return get_benchmark(name).reference_min, REFERENCE_TOLERANCE


def grid_oracle_minimum(name: str, n_samples: int = 1_000_000, seed: int = 7) -> float:
    """Independent dense-sweep oracle used to validate the frozen minima.

    Sobol sweep, Nelder-Mead refinement from the best sweep points
    (multi-start guards against secondary basins), then a zoomed sweep
    around the best refined point (guards against short-period ripples).
    """
    from scipy.optimize import minimize
    from scipy.stats import qmc

    bench = get_benchmark(name)
    lo = np.array([b[0] for b in bench.bounds])
    hi = np.array([b[1] for b in bench.bounds])

    def refine(start: np.ndarray) -> float:
        res = minimize(
            lambda p: bench.fn(np.clip(p, lo, hi)),
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000},
        )
        return float(res.fun), np.clip(res.x, lo, hi)

    sampler = qmc.Sobol(d=bench.dims, scramble=True, seed=seed)
    pts = lo + sampler.random(n_samples) * (hi - lo)
    vals = np.array([bench.fn(p) for p in pts])
    order = np.argsort(vals)[:16]
    best_val, best_pt = float(vals[order[0]]), pts[order[0]]
    for i in order:
        v, p = refine(pts[i])
        if v < best_val:
            best_val, best_pt = v, p

    span = 0.01 * (hi - lo)
    zlo = np.maximum(lo, best_pt - span)
    zhi = np.minimum(hi, best_pt + span)
    zoom = qmc.Sobol(d=bench.dims, scramble=True, seed=seed + 1)
    zpts = zlo + zoom.random(max(1024, n_samples // 8)) * (zhi - zlo)
    zvals = np.array([bench.fn(p) for p in zpts])
    zi = int(np.argmin(zvals))
    if zvals[zi] < best_val:
        best_val, best_pt = float(zvals[zi]), zpts[zi]
    v, _ = refine(best_pt)
    return min(best_val, v)
