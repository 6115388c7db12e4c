"""Search-space definitions, trial history, and deterministic randomness.

Everything downstream (density models, filtering, blocking, statistics)
works on the types defined here. Values are immutable after construction;
the single-threaded optimizer loop is the only place history grows.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

import numpy as np

KIND_CONTINUOUS = "continuous"
KIND_INTEGER = "integer"
KIND_CATEGORICAL = "categorical"

VALID_KINDS = (KIND_CONTINUOUS, KIND_INTEGER, KIND_CATEGORICAL)
VALID_SCALES = ("linear", "log")


class SpaceError(ValueError):
    """Raised when a hyperparameter space or config violates its invariants."""


@dataclass(frozen=True)
class HyperparameterSpec:
    """One dimension of the search space.

    continuous/integer use [lower, upper] bounds; continuous may be
    log-scaled (requires lower > 0). categorical holds an ordered list of
    at least two distinct choice labels.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    scale: str = "linear"
    choices: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SpaceError("hyperparameter name must be non-empty")
        if self.kind not in VALID_KINDS:
            raise SpaceError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == KIND_CATEGORICAL:
            if self.choices is None or len(self.choices) < 2:
                raise SpaceError(f"{self.name}: categorical needs >= 2 choices")
            if len(set(self.choices)) != len(self.choices):
                raise SpaceError(f"{self.name}: duplicate categorical choices")
            object.__setattr__(self, "choices", tuple(self.choices))
            return
        if self.lower is None or self.upper is None:
            raise SpaceError(f"{self.name}: bounds required for {self.kind}")
        if not (self.lower < self.upper):
            raise SpaceError(f"{self.name}: lower must be < upper")
        if self.scale not in VALID_SCALES:
            raise SpaceError(f"{self.name}: unknown scale {self.scale!r}")
        if self.kind == KIND_INTEGER and self.scale != "linear":
            raise SpaceError(f"{self.name}: integer dims are linear only")
        if self.scale == "log" and self.lower <= 0:
            raise SpaceError(f"{self.name}: log scale requires lower > 0")

    @property
    def is_categorical(self) -> bool:
        return self.kind == KIND_CATEGORICAL

    def contains(self, value: Any) -> bool:
        if self.kind == KIND_CATEGORICAL:
            return value in self.choices
        if self.kind == KIND_INTEGER:
            return float(value) == int(value) and self.lower <= value <= self.upper
        return isinstance(value, (int, float)) and self.lower <= value <= self.upper


@dataclass(frozen=True)
class SearchSpace:
    """Ordered, non-empty collection of hyperparameter specs.

    Order is load-bearing: numeric encoding and blocking refer to
    dimensions by index.
    """

    specs: tuple[HyperparameterSpec, ...]

    def __post_init__(self) -> None:
        specs = tuple(self.specs)
        if not specs:
            raise SpaceError("search space must have at least one dimension")
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate hyperparameter names")
        object.__setattr__(self, "specs", specs)

    def __len__(self) -> int:
        return len(self.specs)

    def __iter__(self) -> Iterator[HyperparameterSpec]:
        return iter(self.specs)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]

    def spec(self, name: str) -> HyperparameterSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise SpaceError(f"unknown hyperparameter {name!r}")

    def subspace(self, names: Iterable[str]) -> "SearchSpace":
        keep = set(names)
        return SearchSpace(tuple(s for s in self.specs if s.name in keep))

    def validate_config(self, config: dict[str, Any]) -> None:
        if set(config) != set(self.names):
            raise SpaceError(
                f"config keys {sorted(config)} do not match space {self.names}"
            )
        for s in self.specs:
            if not s.contains(config[s.name]):
                raise SpaceError(f"{s.name}: value {config[s.name]!r} out of domain")


@dataclass(frozen=True)
class Trial:
    """One evaluated configuration under the minimization convention."""

    id: int
    config: dict[str, Any]
    loss: float
    iteration: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.loss):
            raise ValueError(f"trial {self.id}: loss must be finite")


class History:
    """Append-only ordered record of trials with strictly increasing ids."""

    def __init__(self, trials: Iterable[Trial] = ()) -> None:
        self.trials: list[Trial] = []
        for t in trials:
            self.append(t)

    def append(self, trial: Trial) -> None:
        if self.trials and trial.id <= self.trials[-1].id:
            raise ValueError("trial ids must be strictly increasing")
        self.trials.append(trial)

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self) -> Iterator[Trial]:
        return iter(self.trials)

    def __getitem__(self, i: int) -> Trial:
        return self.trials[i]

    def losses(self) -> np.ndarray:
        return np.array([t.loss for t in self.trials], dtype=float)

    def best(self) -> Trial:
        if not self.trials:
            raise ValueError("empty history has no best trial")
        return min(self.trials, key=lambda t: (t.loss, t.id))

    def project(self, names: Iterable[str]) -> "History":
        """History restricted to a subset of dimensions (ids/losses kept)."""
        keep = set(names)
        out = History()
        for t in self.trials:
            cfg = {k: v for k, v in t.config.items() if k in keep}
            out.append(Trial(t.id, cfg, t.loss, t.iteration))
        return out


class RngStream:
    """Deterministic random stream keyed by (seed, stream id).

    Two streams constructed with the same key replay identical draws.
    The underlying numpy generator is exposed as ``.np``.
    """

    def __init__(self, seed: int, stream: int = 0) -> None:
        self.seed = int(seed)
        self.stream = int(stream)
        self.np = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        )

    def child(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)


def sample_prior(space: SearchSpace, rng: RngStream) -> dict[str, Any]:
    """Uniform prior draw: uniform on bounds (log-domain when scale=log),
    uniform integer, uniform categorical."""
    config: dict[str, Any] = {}
    for s in space:
        if s.kind == KIND_CATEGORICAL:
            config[s.name] = s.choices[int(rng.np.integers(0, len(s.choices)))]
        elif s.kind == KIND_INTEGER:
            config[s.name] = int(rng.np.integers(int(s.lower), int(s.upper) + 1))
        else:
            u = float(rng.np.random())
            if s.scale == "log":
                lo, hi = math.log(s.lower), math.log(s.upper)
                config[s.name] = math.exp(lo + u * (hi - lo))
            else:
                config[s.name] = s.lower + u * (s.upper - s.lower)
    return config


def encode_value(spec: HyperparameterSpec, value: Any) -> float:
    """Map one in-domain value to [0, 1]."""
    if spec.kind == KIND_CATEGORICAL:
        return spec.choices.index(value) / (len(spec.choices) - 1)
    if spec.scale == "log":
        lo, hi = math.log(spec.lower), math.log(spec.upper)
        return (math.log(value) - lo) / (hi - lo)
    return (float(value) - spec.lower) / (spec.upper - spec.lower)


def decode_value(spec: HyperparameterSpec, x: float) -> Any:
    """Inverse of encode_value; integers are rounded on emission.

    The result is clamped to the bounds (exp/log round trips can exceed
    them by one ulp at the boundary).
    """
    x = min(max(float(x), 0.0), 1.0)
    if spec.kind == KIND_CATEGORICAL:
        idx = int(round(x * (len(spec.choices) - 1)))
        return spec.choices[idx]
    if spec.scale == "log":
        lo, hi = math.log(spec.lower), math.log(spec.upper)
        v = math.exp(lo + x * (hi - lo))
        return min(max(v, spec.lower), spec.upper)
    v = spec.lower + x * (spec.upper - spec.lower)
    if spec.kind == KIND_INTEGER:
        return int(min(max(round(v), spec.lower), spec.upper))
    return min(max(v, spec.lower), spec.upper)


def encode_numeric(config: dict[str, Any], space: SearchSpace) -> np.ndarray:
    """Numeric embedding of a config in [0, 1]^d, following space order."""
    return np.array([encode_value(s, config[s.name]) for s in space], dtype=float)


def space_to_json(space: SearchSpace) -> dict[str, Any]:
    params = []
    for s in space:
        if s.kind == KIND_CATEGORICAL:
            params.append({"name": s.name, "kind": s.kind, "choices": list(s.choices)})
        else:
            p: dict[str, Any] = {
                "name": s.name,
                "kind": s.kind,
                "lower": s.lower,
                "upper": s.upper,
            }
            if s.kind == KIND_CONTINUOUS:
                p["scale"] = s.scale
            params.append(p)
    return {"params": params}


def space_from_json(doc: dict[str, Any] | str) -> SearchSpace:
    """Load a search space from its JSON document (dict or JSON text)."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict) or "params" not in doc:
        raise SpaceError("space document must be an object with a 'params' list")
    specs = []
    for i, p in enumerate(doc["params"]):
        if not isinstance(p, dict) or "name" not in p or "kind" not in p:
            raise SpaceError(f"params[{i}]: each entry needs 'name' and 'kind'")
        kind = p["kind"]
        if kind == KIND_CATEGORICAL:
            specs.append(
                HyperparameterSpec(
                    name=p["name"], kind=kind, choices=tuple(p.get("choices") or ())
                )
            )
        else:
            if "lower" not in p or "upper" not in p:
                raise SpaceError(f"{p['name']}: 'lower' and 'upper' are required")
            specs.append(
                HyperparameterSpec(
                    name=p["name"],
                    kind=kind,
                    lower=float(p["lower"]),
                    upper=float(p["upper"]),
                    scale=p.get("scale", "linear"),
                )
            )
    return SearchSpace(tuple(specs))
