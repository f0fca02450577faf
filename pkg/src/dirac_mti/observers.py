"""Observers invoked by the time loops at a fixed step cadence.

An observer is any callable taking the current state (an object with
``field``, ``t`` and ``step_index``) with an integer attribute ``every``.  The
loops call it at step 0, every ``every`` steps, and at the final time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .spectral import ModeTable, energy, mass


@dataclass
class Recorder:
    """Record ``(t, fn(state))`` pairs."""

    fn: Callable[[Any], Any]
    every: int = 1
    times: list[float] = field(default_factory=list)
    values: list[Any] = field(default_factory=list)

    def __call__(self, state) -> None:
        self.times.append(state.t)
        self.values.append(self.fn(state))

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.times), np.asarray(self.values)


def mass_recorder(every: int = 1) -> Recorder:
    return Recorder(lambda s: mass(s.field), every)


def energy_recorder(V, A1, table: ModeTable, every: int = 1) -> Recorder:
    return Recorder(lambda s: energy(s.field, V, A1, table), every)


def snapshot_recorder(every: int = 1) -> Recorder:
    return Recorder(lambda s: s.field.values.copy(), every)


def due(observers, step: int, final: bool) -> list:
    return [o for o in observers if final or step % max(int(o.every), 1) == 0]


def next_due(observers, step: int) -> int | None:
    """Smallest step index ``> step`` at which some observer fires (ignoring the final step)."""
    nxt = [(step // max(int(o.every), 1) + 1) * max(int(o.every), 1) for o in observers]
    return min(nxt) if nxt else None
