"""Span accounting: exact nanosecond totals, call counts, report format."""
import re
import threading
import time

import pytest

from utalk import ProfilerRegistry, render_report, report_json
from utalk.profiler import record


def test_record_accumulates_exactly():
    reg = ProfilerRegistry()
    reg.record("step", 1_500_000_000)
    reg.record("step", 2_000_000_000)
    reg.record("other", 10)
    snap = reg.snapshot()
    by_name = {e.name: e for e in snap.entries}
    assert by_name["step"].cumulative_ns == 3_500_000_000
    assert by_name["step"].calls == 2
    assert by_name["other"].calls == 1
    assert reg.calls("step") == 2
    assert reg.calls("missing") == 0


def test_record_rejects_negative():
    reg = ProfilerRegistry()
    with pytest.raises(ValueError):
        reg.record("x", -1)


def test_span_measures_elapsed_time():
    reg = ProfilerRegistry()
    with reg.span("sleepy"):
        time.sleep(0.01)
    entry = reg.snapshot().entries[0]
    assert entry.name == "sleepy"
    assert entry.calls == 1
    assert entry.cumulative_ns >= 9_000_000  # at least ~9ms


def test_span_records_on_exception():
    reg = ProfilerRegistry()
    with pytest.raises(RuntimeError):
        with reg.span("doomed"):
            raise RuntimeError("boom")
    assert reg.calls("doomed") == 1


def test_nested_spans_both_record():
    reg = ProfilerRegistry()
    with reg.span("outer"):
        with reg.span("inner"):
            pass
    assert reg.calls("outer") == 1
    assert reg.calls("inner") == 1


def test_reset_clears_entries():
    reg = ProfilerRegistry()
    reg.record("x", 5)
    reg.reset()
    assert reg.snapshot().entries == ()


def test_report_line_format_and_order():
    reg = ProfilerRegistry()
    reg.record("render", 9_530_000_000)
    reg.record("detect", 2_290_000_000)
    reg.record("detect", 0)
    text = render_report(reg)
    lines = text.splitlines()
    assert lines[0] == "render = 9.53s (1)"
    assert lines[1] == "detect = 2.29s (2)"
    for line in lines:
        assert re.fullmatch(r"\S+ = \d+\.\d\ds \(\d+\)", line)


def test_report_rounds_half_up():
    reg = ProfilerRegistry()
    reg.record("edge", 1_005_000_000)  # 1.005 s -> 1.01, not banker's 1.00
    assert render_report(reg) == "edge = 1.01s (1)"


def test_report_ties_sorted_by_name():
    reg = ProfilerRegistry()
    reg.record("zeta", 100)
    reg.record("alpha", 100)
    names = [line.split(" = ")[0] for line in render_report(reg).splitlines()]
    assert names == ["alpha", "zeta"]


def test_report_json_round_trip():
    reg = ProfilerRegistry()
    reg.record("a", 123_456_789)
    reg.record("a", 1)
    data = report_json(reg)
    assert data["entries"] == [
        {"name": "a", "cumulative_s": 123_456_790 / 1e9, "calls": 2}]
    assert data["total_s"] >= 0


def test_module_level_record_helper():
    reg = ProfilerRegistry()
    record(reg, "via_helper", 42)
    assert reg.calls("via_helper") == 1


def test_concurrent_records_lose_nothing():
    reg = ProfilerRegistry()
    threads_n, records_m = 8, 2000

    def worker(k):
        for i in range(records_m):
            reg.record("shared", 1)
            reg.record("mine_%d" % k, 2)

    threads = [threading.Thread(target=worker, args=(k,)) for k in range(threads_n)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    snap = {e.name: e for e in reg.snapshot().entries}
    assert snap["shared"].calls == threads_n * records_m
    assert snap["shared"].cumulative_ns == threads_n * records_m
    for k in range(threads_n):
        assert snap["mine_%d" % k].cumulative_ns == 2 * records_m
