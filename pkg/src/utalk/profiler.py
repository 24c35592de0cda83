"""Span-based instrumentation: per-name call counts and cumulative time.

Times accumulate as integer nanoseconds from a monotonic clock, so the sum of
recorded spans equals the reported cumulative exactly, with no float drift.
Nested spans both record in full; cumulative entries may overlap and need not
sum to the total.
"""
from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

_NS = Decimal(10) ** 9
_CENT = Decimal("0.01")


def _fmt_seconds(ns: int) -> str:
    """Two decimals, round-half-up (integer ns in, exact decimal math)."""
    return str((Decimal(ns) / _NS).quantize(_CENT, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ProfileEntry:
    name: str
    cumulative_ns: int
    calls: int

    @property
    def cumulative_s(self) -> float:
        return self.cumulative_ns / 1e9


@dataclass(frozen=True)
class ProfileReport:
    entries: tuple  # ProfileEntry, descending cumulative then name ascending
    total_elapsed_s: float


class ProfilerRegistry:
    """Shared-mutable aggregation sink; record() is safe from any thread and
    report generation sees a consistent snapshot."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: dict[str, list[int]] = {}  # name -> [cumulative_ns, calls]
        self._started_ns = time.perf_counter_ns()

    def record(self, name: str, elapsed_ns: int) -> None:
        if elapsed_ns < 0:
            raise ValueError("elapsed_ns must be >= 0")
        with self._lock:
            entry = self._entries.get(name)
            if entry is None:
                self._entries[name] = [elapsed_ns, 1]
            else:
                entry[0] += elapsed_ns
                entry[1] += 1

    @contextmanager
    def span(self, name: str):
        start = time.perf_counter_ns()
        try:
            yield
        finally:
            self.record(name, time.perf_counter_ns() - start)

    def reset(self) -> None:
        with self._lock:
            self._entries.clear()
            self._started_ns = time.perf_counter_ns()

    def snapshot(self) -> ProfileReport:
        now = time.perf_counter_ns()
        with self._lock:
            items = [(name, v[0], v[1]) for name, v in self._entries.items()]
            started = self._started_ns
        items.sort(key=lambda t: (-t[1], t[0]))
        entries = tuple(ProfileEntry(name, ns, calls) for name, ns, calls in items)
        return ProfileReport(entries=entries, total_elapsed_s=(now - started) / 1e9)

    def calls(self, name: str) -> int:
        with self._lock:
            entry = self._entries.get(name)
            return entry[1] if entry else 0


def record(registry: ProfilerRegistry, name: str, elapsed_ns: int) -> None:
    registry.record(name, elapsed_ns)


def render_report(registry: ProfilerRegistry) -> str:
    """One line per entry: "<name> = <seconds>s (<calls>)", hottest first."""
    report = registry.snapshot()
    return "\n".join("%s = %ss (%d)" % (e.name, _fmt_seconds(e.cumulative_ns), e.calls)
                     for e in report.entries)


def report_json(registry: ProfilerRegistry) -> dict:
    report = registry.snapshot()
    return {
        "total_s": report.total_elapsed_s,
        "entries": [
            {"name": e.name, "cumulative_s": e.cumulative_s, "calls": e.calls}
            for e in report.entries
        ],
    }
