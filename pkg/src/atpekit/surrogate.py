"""Simulated objective functions for predictor training.

A surrogate is a weighted sum of parameterized atoms on the unit
hypercube: one unary atom per dimension plus binary atoms over dimension
pairs that mimic hyperparameter interactions. The extended pool adds a
sigmoid unary atom and a sharper-gradient hyperbolic product.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .blocking import build_correlation_report
from .cluster import kmeans_labels
from .core import History, HyperparameterSpec, RngStream, SearchSpace, Trial
from .stats import compute_statistics

UNARY_KINDS = ("linear", "quadratic", "gaussian_peak", "sine_wave", "sigmoid")
BINARY_KINDS = ("gaussian_product", "sine_product", "hyperbolic_product")

BASE_POOL = frozenset(
    {"linear", "quadratic", "gaussian_peak", "sine_wave", "gaussian_product", "sine_product"}
)
EXTENDED_POOL = BASE_POOL | {"sigmoid", "hyperbolic_product"}


@dataclass(frozen=True)
class SurrogateAtom:
    kind: str
    dims: tuple[int, ...]
    a: float
    b: float
    c: float = 0.0
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.kind in UNARY_KINDS:
            if len(self.dims) != 1:
                raise ValueError(f"{self.kind} atom takes exactly one dimension")
        elif self.kind in BINARY_KINDS:
            if len(self.dims) != 2:
                raise ValueError(f"{self.kind} atom takes exactly two dimensions")
        else:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.kind == "hyperbolic_product" and self.c <= -1.0:
            raise ValueError("hyperbolic_product requires c > -1")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Atom value at points x of shape (n, total_dims)."""
        if self.kind == "linear":
            return self.a * (x[:, self.dims[0]] - self.b)
        if self.kind == "quadratic":
            return self.a * (x[:, self.dims[0]] - self.b) ** 2
        if self.kind == "gaussian_peak":
            return np.exp(-self.a * (x[:, self.dims[0]] - self.b) ** 2)
        if self.kind == "sine_wave":
            return np.sin(self.a * x[:, self.dims[0]] + self.b)
        if self.kind == "sigmoid":
            return 1.0 / (1.0 + np.exp(-self.a * (x[:, self.dims[0]] - self.b)))
        hi = x[:, self.dims[0]]
        hj = x[:, self.dims[1]]
        if self.kind == "gaussian_product":
            return np.exp(-self.a * (hi - self.b) ** 2) * np.exp(
                -self.a * (hj - self.c) ** 2
            )
        if self.kind == "sine_product":
            return np.sin(self.a * hi) * np.sin(self.b * hj)
        # hyperbolic_product; denominator >= c + 1 > 0 (cosh >= 1), no poles
        return np.sinh(self.a * hi) * np.sinh(self.b * hj) / (self.c + np.cosh(hi * hj))


@dataclass(frozen=True)
class SurrogateFunction:
    dims: int
    atoms: tuple[SurrogateAtom, ...]

    def __post_init__(self) -> None:
        if self.dims < 1:
            raise ValueError("surrogate needs >= 1 dimension")
        for atom in self.atoms:
            if any(d >= self.dims for d in atom.dims):
                raise ValueError("atom references a dimension outside the function")

    def evaluate(self, point: Sequence[float]) -> float:
        x = np.asarray(point, dtype=float).reshape(1, -1)
        return float(self.evaluate_batch(x)[0])

    def evaluate_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros(len(x))
        for atom in self.atoms:
            total += atom.weight * atom.evaluate(x)
        return total


def generate_surrogate(
    dims: int, atom_pool: Iterable[str], rng: RngStream
) -> SurrogateFunction:
    """One unary atom per dimension plus floor(dims/2) binary atoms over
    distinct pairs, all with random shape parameters."""
    pool = set(atom_pool)
    unary = [k for k in UNARY_KINDS if k in pool]
    binary = [k for k in BINARY_KINDS if k in pool]
    if not unary or (dims >= 2 and not binary):
        raise ValueError("atom pool must cover the required arities")
    atoms = []
    for d in range(dims):
        kind = unary[int(rng.np.integers(0, len(unary)))]
        atoms.append(
            SurrogateAtom(
                kind=kind,
                dims=(d,),
                a=float(rng.np.uniform(1.0, 20.0)),
                b=float(rng.np.uniform(0.0, 1.0)),
                weight=float(rng.np.uniform(0.5, 2.0)),
            )
        )
    perm = rng.np.permutation(dims)
    for p in range(dims // 2):
        kind = binary[int(rng.np.integers(0, len(binary)))]
        atoms.append(
            SurrogateAtom(
                kind=kind,
                dims=(int(perm[2 * p]), int(perm[2 * p + 1])),
                a=float(rng.np.uniform(0.5, 3.0)),
                b=float(rng.np.uniform(0.5, 3.0)),
                c=float(rng.np.uniform(0.0, 2.0)),
                weight=float(rng.np.uniform(0.5, 2.0)),
            )
        )
    return SurrogateFunction(dims=dims, atoms=tuple(atoms))


def unit_space(dims: int) -> SearchSpace:
    """Continuous [0,1]^dims space matching the surrogate domain."""
    return SearchSpace(
        tuple(
            HyperparameterSpec(name=f"h{i}", kind="continuous", lower=0.0, upper=1.0)
            for i in range(dims)
        )
    )


def profile_function(
    fn: SurrogateFunction, probe_budget: int, rng: RngStream
) -> np.ndarray:
    """Statistics vector of the function observed at random probe points."""
    space = unit_space(fn.dims)
    x = rng.np.random((probe_budget, fn.dims))
    losses = fn.evaluate_batch(x)
    history = History(
        Trial(i, {f"h{d}": float(x[i, d]) for d in range(fn.dims)}, float(losses[i]), i)
        for i in range(probe_budget)
    )
    report = build_correlation_report(history, space)
    return compute_statistics(history, report)


def cluster_corpus(
    functions: list[SurrogateFunction],
    k: int,
    probe_budget: int,
    rng: RngStream,
) -> list[SurrogateFunction]:
    """Group functions by statistical profile and keep one random
    representative per non-empty cluster.

    Profiles are z-scored per feature before clustering: the raw features
    mix ratios, moments, and std scales, and k-means distances would
    otherwise be dominated by whichever feature happens to spread widest.
    """
    if not (1 <= k <= len(functions)):
        raise ValueError("need |functions| >= k >= 1")
    profiles = np.array([profile_function(f, probe_budget, rng) for f in functions])
    spread = profiles.std(axis=0)
    spread[spread == 0.0] = 1.0
    profiles = (profiles - profiles.mean(axis=0)) / spread
    labels = kmeans_labels(profiles, k, rng, n_iters=20)
    reps = []
    for j in range(labels.max() + 1):
        members = [f for f, lbl in zip(functions, labels) if lbl == j]
        if members:
            reps.append(members[int(rng.np.integers(0, len(members)))])
    return reps


def save_corpus(functions: Iterable[SurrogateFunction], path: str) -> None:
    """One function per JSON line."""
    with open(path, "w", encoding="utf-8") as fh:
        for fn in functions:
            doc = {
                "dims": fn.dims,
                "atoms": [
                    {
                        "kind": a.kind,
                        "dims": list(a.dims),
                        "a": a.a,
                        "b": a.b,
                        "c": a.c,
                        "weight": a.weight,
                    }
                    for a in fn.atoms
                ],
            }
            fh.write(json.dumps(doc) + "\n")


def load_corpus(path: str) -> list[SurrogateFunction]:
    functions = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            atoms = tuple(
                SurrogateAtom(
                    kind=a["kind"],
                    dims=tuple(a["dims"]),
                    a=a["a"],
                    b=a["b"],
                    c=a.get("c", 0.0),
                    weight=a.get("weight", 1.0),
                )
                for a in doc["atoms"]
            )
            functions.append(SurrogateFunction(dims=doc["dims"], atoms=atoms))
    return functions
