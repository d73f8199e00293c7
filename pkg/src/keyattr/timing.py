"""Cooperative deadlines for cancellable discovery and evaluation phases."""

from __future__ import annotations

import time


class PhaseTimeout(Exception):
    """Raised inside a phase when its deadline has passed."""


class Deadline:
    """Wall-clock budget checked cooperatively inside long loops."""

    def __init__(self, seconds: float):
        self.seconds = seconds
        self.t0 = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self.t0

    def expired(self) -> bool:
        return self.elapsed() > self.seconds

    def check(self):
        if self.expired():
            raise PhaseTimeout("phase exceeded %.3f s" % self.seconds)
