"""Thin scripting wrapper over the optimizer session API.

Sessions are opaque handles created from a JSON-style space descriptor.
`ask` is repeatable (the pending suggestion is cached until the matching
`tell`), calls on a closed handle raise, and concurrent calls on one
handle are rejected rather than serialized.
"""
from __future__ import annotations

import math
import threading
from typing import Any

from atpekit import (
    OptimizerSession,
    RngStream,
    get_variant,
    load_model,
    space_from_json,
)

__all__ = [
    "BoundSession",
    "ClosedSessionError",
    "ConcurrencyError",
    "ask",
    "best",
    "close",
    "create_session",
    "tell",
]

__version__ = "0.1.0"


class ClosedSessionError(RuntimeError):
    """The handle was closed; no further calls are valid."""


class ConcurrencyError(RuntimeError):
    """Two threads hit the same handle at once; sessions are single-threaded."""


class BoundSession:
    """Opaque handle; all state lives behind it, none on the caller side."""

    def __init__(self, session: OptimizerSession) -> None:
        self._session = session
        self._pending: dict[str, Any] | None = None
        self._lock = threading.Lock()
        self._closed = False

    def _enter(self) -> None:
        if not self._lock.acquire(blocking=False):
            raise ConcurrencyError(
                "session is busy in another thread; use one session per thread"
            )
        if self._closed:
            self._lock.release()
            raise ClosedSessionError("session is closed")

    def _exit(self) -> None:
        self._lock.release()


def create_session(
    space: dict[str, Any] | str,
    variant: str = "tpe",
    seed: int = 0,
    model_path: str | None = None,
) -> BoundSession:
    """Open a session over a JSON space descriptor (dict or JSON text).

    Without a model path, adaptive variants use the static fallback
    controller.
    """
    parsed = space_from_json(space)
    spec = get_variant(variant)
    model = load_model(model_path) if model_path is not None else None
    session = OptimizerSession(
        parsed, variant=spec, rng=RngStream(int(seed)), model=model
    )
    return BoundSession(session)


def ask(handle: BoundSession) -> dict[str, Any]:
    """Next suggested config. Repeatable: asking again before tell returns
    the same config without advancing the session."""
    handle._enter()
    try:
        if handle._pending is None:
            handle._pending = handle._session.ask()
        return dict(handle._pending)
    finally:
        handle._exit()


def tell(handle: BoundSession, loss: float, config: dict[str, Any] | None = None) -> None:
    """Report the loss for the pending suggestion (or an explicit config)."""
    handle._enter()
    try:
        loss = float(loss)
        if math.isnan(loss) or math.isinf(loss):
            raise ValueError(f"loss must be finite, got {loss}")
        if config is None:
            if handle._pending is None:
                raise ValueError("tell without a pending ask needs an explicit config")
            config = handle._pending
        handle._session.tell(config, loss)
        handle._pending = None
    finally:
        handle._exit()


def best(handle: BoundSession) -> tuple[dict[str, Any], float] | None:
    """Best (config, loss) observed so far, or None before any tell."""
    handle._enter()
    try:
        incumbent = handle._session.best
        if incumbent is None:
            return None
        return dict(incumbent.config), incumbent.loss
    finally:
        handle._exit()


def close(handle: BoundSession) -> None:
    """Invalidate the handle; any later call on it raises."""
    handle._enter()
    try:
        handle._closed = True
    finally:
        handle._exit()
