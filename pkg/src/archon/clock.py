"""Injectable clocks.

Run files must be byte-identical across repeated scripted runs, so timing
is measured against an injected clock: FixedClock advances one millisecond
per reading and is the default for scripted/surrogate configurations,
WallClock reads the OS monotonic clock.
"""

from __future__ import annotations

import time


class Clock:
    def now_ms(self) -> int:
        raise NotImplementedError


class FixedClock(Clock):
    """Deterministic counter clock: each reading advances by ``step`` ms."""

    def __init__(self, step: int = 1):
        self._t = 0
        self._step = step

    def now_ms(self) -> int:
        self._t += self._step
        return self._t


class WallClock(Clock):
    def now_ms(self) -> int:
        return time.monotonic_ns() // 1_000_000


def make_clock(kind: str) -> Clock:
    if kind == "fixed":
        return FixedClock()
    if kind == "wall":
        return WallClock()
    raise ValueError(f"unknown clock kind: {kind!r}")
