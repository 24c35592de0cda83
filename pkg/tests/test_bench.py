"""Benchmark harness: statistics, presets, stabilization, reports."""
import json
import math
import statistics

import pytest

from utalk import (BenchStats, Busy, NonPositiveBaseline, TooFewSamples,
                   fps_sweep, load_fps_study, mean_sd, presets,
                   reduction_percent, run_ablation, select_fps)
from utalk.bench import (ABLATION_BUDGET, PRESET_NOTES, PRESET_ORDER,
                         STABILIZE_T, _paired_margin, _stabilize,
                         ablation_report_json, ablation_report_text,
                         format_percent, sweep_report_json, sweep_report_text)


# -- statistics ----------------------------------------------------------------

def test_mean_sd_matches_statistics_module():
    samples = [1.2, 3.4, 2.2, 5.0]
    mean, sd = mean_sd(samples)
    assert mean == statistics.mean(samples)
    assert sd == statistics.stdev(samples)
    with pytest.raises(TooFewSamples):
        mean_sd([1.0])
    with pytest.raises(TooFewSamples):
        mean_sd([])


def test_reduction_percent():
    assert reduction_percent(100.0, 50.0) == 50.0
    assert reduction_percent(10.0, 12.0) == pytest.approx(-20.0)
    for bad in (0.0, -4.0):
        with pytest.raises(NonPositiveBaseline):
            reduction_percent(bad, 1.0)


def test_format_percent_half_up():
    assert format_percent(27.689) == "27.69"
    assert format_percent(27.685) == "27.69"  # exact half rounds up
    assert format_percent(1.744) == "1.74"
    assert format_percent(0.0) == "0.00"
    assert format_percent(-3.005) == "-3.01"


def test_bench_stats_from_runs():
    stats = BenchStats.from_runs([2.0, 4.0], baseline_mean_s=6.0)
    assert stats.mean_s == 3.0
    assert stats.sd_s == statistics.stdev([2.0, 4.0])
    assert stats.reduction_vs_baseline_pct == pytest.approx(50.0)
    assert stats.stabilized is False
    assert BenchStats.from_runs([1.0, 1.0]).reduction_vs_baseline_pct == 0.0


# -- presets -------------------------------------------------------------------

def test_preset_ladder_is_cumulative():
    table = presets()
    assert tuple(table) == PRESET_ORDER
    baseline = table["baseline"]
    assert baseline.fps == 25
    assert baseline.progress_callbacks is True
    assert baseline.resize_policy == "full512"
    assert baseline.detector == "heavy"
    assert baseline.edge_blur is True
    assert baseline.persist_intermediates is True
    assert baseline.writer == "buffered"

    mod1 = table["mod1"]
    assert mod1.progress_callbacks is False
    assert mod1.resize_policy == "full512"  # only the display changed

    mod2 = table["mod2"]
    assert (mod2.resize_policy, mod2.detector, mod2.edge_blur) == \
        ("fast256", "light", False)
    assert mod2.persist_intermediates is True

    mod3 = table["mod3"]
    assert mod3.persist_intermediates is False
    assert mod3.writer == "buffered"

    mod4 = table["mod4"]
    assert mod4.writer == "streaming"
    assert mod4.persist_intermediates is False
    assert all(PRESET_NOTES[name] for name in PRESET_ORDER)


# -- the viewer study ------------------------------------------------------------

def test_study_rows():
    study = load_fps_study()
    assert [r.fps for r in study] == list(range(16, 25))
    by_fps = {r.fps: r for r in study}
    assert by_fps[20].mean_score == 3.66
    assert by_fps[23].mean_score == 3.71
    assert all(1.0 <= r.mean_score <= 5.0 for r in study)
    assert all(r.min_score >= 1 and r.max_score <= 5 for r in study)


def test_select_fps_rule():
    study = load_fps_study()
    assert select_fps(study, 0.05) == 20
    assert select_fps(study, 0.0) == 23
    assert select_fps(study, 10.0) == 16  # everything qualifies -> smallest
    with pytest.raises(ValueError):
        select_fps([], 0.1)
    with pytest.raises(ValueError):
        select_fps(study, -0.01)


def test_study_row_validation():
    from utalk import FpsStudyRow
    with pytest.raises(ValueError):
        FpsStudyRow(fps=20, mean_score=5.5, sd=1.0, min_score=1, max_score=5)


# -- stabilization -------------------------------------------------------------

def test_paired_margin():
    assert _paired_margin([2.0, 2.0], [1.0, 1.0]) == math.inf
    assert _paired_margin([1.0, 1.0], [2.0, 2.0]) == -math.inf
    assert _paired_margin([2.0, 2.1], [1.0, 1.05]) == pytest.approx(41.0)


def test_stabilize_skips_clear_margins():
    runs = {"a": [2.0, 2.01], "b": [1.0, 1.005]}
    calls = []
    changed = _stabilize(lambda n: calls.append(n) or 1.0, runs,
                         [("a", "b")], budget=5)
    assert changed == set()
    assert calls == []


def test_stabilize_remeasures_alternating():
    runs = {"a": [1.0, 1.0], "b": [2.0, 2.0]}  # wrong direction
    replay = {"a": [3.0, 3.0], "b": [1.0, 1.0]}
    calls = []

    def run_one(name):
        calls.append(name)
        return replay[name].pop(0)

    changed = _stabilize(run_one, runs, [("a", "b")], budget=5)
    assert calls == ["a", "b", "a", "b"]  # strict alternation
    assert runs == {"a": [3.0, 3.0], "b": [1.0, 1.0]}
    assert changed == {"a", "b"}


def test_stabilize_respects_budget():
    runs = {"a": [1.0, 1.0], "b": [1.0, 1.0]}  # permanently inconclusive
    calls = []
    changed = _stabilize(lambda n: calls.append(n) or 1.0, runs,
                         [("a", "b")], budget=3)
    assert len(calls) == 3 * 4  # budget attempts x (2 rows x 2 repetitions)
    assert changed == {"a", "b"}


def test_stabilize_rechecks_left_neighbor():
    # fixing (b, c) perturbs row b, so (a, b) must be revisited
    runs = {"a": [5.0, 5.0], "b": [3.0, 3.0], "c": [4.0, 4.0]}
    replay = {"b": [4.5, 4.5], "c": [1.0, 1.0]}
    order = []

    def run_one(name):
        order.append(name)
        return replay[name].pop(0)

    changed = _stabilize(run_one, runs, [("a", "b"), ("b", "c")], budget=5)
    assert order == ["b", "c", "b", "c"]
    assert runs["b"] == [4.5, 4.5]
    assert changed == {"b", "c"}
    # after the re-measure, (a, b) was rechecked and still holds
    assert _paired_margin(runs["a"], runs["b"]) >= STABILIZE_T


def test_stabilize_spreads_budget_over_pairs():
    # a permanently inconclusive first pair must not starve later ones
    runs = {"a": [1.0, 1.0], "b": [1.0, 1.0],   # identical forever
            "c": [2.0, 2.0], "d": [2.5, 2.5]}   # wrong direction, fixable
    replay = {"c": [4.0, 4.0], "d": [1.0, 1.0]}

    def run_one(name):
        if replay.get(name):
            return replay[name].pop(0)
        return 1.0

    changed = _stabilize(run_one, runs, [("a", "b"), ("c", "d")], budget=3)
    assert runs["c"] == [4.0, 4.0]
    assert runs["d"] == [1.0, 1.0]
    assert {"c", "d"} <= changed


# -- harness entry points --------------------------------------------------------

def test_quiesce_guards(engine):
    with pytest.raises(TooFewSamples):
        run_ablation(engine, repetitions=1)
    with engine._job():
        with pytest.raises(Busy):
            run_ablation(engine, repetitions=2)
    with engine._job():
        with pytest.raises(Busy):
            fps_sweep(engine, repetitions=2)


def test_run_ablation_small(engine, small_avatar, short_clip):
    rows = run_ablation(engine, repetitions=2, clip=short_clip,
                        avatar=small_avatar)
    assert [r.label for r in rows] == list(PRESET_ORDER)
    assert all(len(r.stats.runs) == 2 for r in rows)
    assert all(r.fps == 25 for r in rows)
    assert rows[0].stats.reduction_vs_baseline_pct == 0.0
    for row in rows:
        assert row.stats.mean_s == statistics.mean(row.stats.runs)
        assert row.stats.mean_s > 0
        assert row.note == PRESET_NOTES[row.label]


def test_fps_sweep_small(engine, small_avatar, short_clip):
    rows = fps_sweep(engine, fps_list=(16, 20, 25), repetitions=2,
                     clip=short_clip, avatar=small_avatar)
    assert [r.fps for r in rows] == [16, 20, 25]
    assert [r.label for r in rows] == ["fps16", "fps20", "fps25"]
    assert rows[-1].stats.reduction_vs_baseline_pct == 0.0  # its own reference
    assert all(len(r.stats.runs) == 2 for r in rows)


def test_report_emitters_round_trip(engine, small_avatar, short_clip):
    rows = run_ablation(engine, repetitions=2, clip=short_clip,
                        avatar=small_avatar)
    report = ablation_report_json(rows)
    assert report["kind"] == "ablation"
    assert report["repetitions"] == 2
    assert [r["label"] for r in report["rows"]] == list(PRESET_ORDER)
    parsed = json.loads(json.dumps(report))  # JSON-serializable, lossless
    assert parsed["rows"][0]["runs"] == list(rows[0].stats.runs)

    text = ablation_report_text(rows)
    lines = text.splitlines()
    assert lines[0].split() == ["run", "modifications", "runtime", "(s)",
                                "reduction"]
    assert len([l for l in lines[1:] if l and not l.startswith("*")]) == 5
    for row, line in zip(rows, lines[1:6]):
        assert line.startswith(row.label)
        assert ("%.3f" % row.stats.mean_s) in line
        assert "±" in line


def test_sweep_report_emitters(engine, small_avatar, short_clip):
    rows = fps_sweep(engine, fps_list=(20, 25), repetitions=2,
                     clip=short_clip, avatar=small_avatar)
    report = sweep_report_json(rows)
    assert report["kind"] == "fps_sweep"
    assert "reduction_25_vs_20_pct" in report
    expected = reduction_percent(rows[1].stats.mean_s, rows[0].stats.mean_s)
    assert report["reduction_25_vs_20_pct"] == expected

    text = sweep_report_text(rows)
    assert "reduction, 25 fps -> 20 fps:" in text
    assert text.splitlines()[0].split() == ["fps", "runtime", "(s)", "reduction"]


def test_stabilized_rows_are_marked():
    stats = BenchStats.from_runs([1.0, 1.1], baseline_mean_s=2.0,
                                 stabilized=True)
    from utalk import BenchRow
    row = BenchRow(label="mod2", fps=25, note="x", stats=stats)
    text = ablation_report_text([row])
    assert text.splitlines()[1].endswith("%*")
    assert "* re-measured with alternating paired runs" in text
