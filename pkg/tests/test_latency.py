import random
import statistics

import pytest

from fluidwoz.errors import DuplicateMark, EmptyLog, IncompleteTrace
from fluidwoz.eventlog import STREAM_LATENCY_MARK, LogEvent
from fluidwoz.latency import (
    LatencyMark,
    MarkKind,
    MarkStore,
    compute_breakdown,
    render_table,
    report,
)


def mk(cid, kind, t):
    return LatencyMark(command_id=cid, kind=kind, t_mono_ms=t)


def test_first_mark_wins():
    store = MarkStore()
    store.mark(mk(7, MarkKind.USER_REQUEST, 1000))
    with pytest.raises(DuplicateMark):
        store.mark(mk(7, MarkKind.USER_REQUEST, 1002))
    assert store.marks_for(7)[MarkKind.USER_REQUEST].t_mono_ms == 1000


def test_marks_accumulate_in_order():
    store = MarkStore()
    store.mark(mk(7, MarkKind.WIZARD_INPUT, 1800))
    store.mark(mk(7, MarkKind.GOAL_ACTIVE, 1815))
    assert store.has(7, MarkKind.GOAL_ACTIVE)


def test_breakdown_arithmetic():
    bd = compute_breakdown([
        mk(7, MarkKind.USER_REQUEST, 1000),
        mk(7, MarkKind.WIZARD_INPUT, 1800),
        mk(7, MarkKind.GOAL_ACTIVE, 1815),
        mk(7, MarkKind.FIRST_MOTION_PERCEIVED, 1840),
    ])
    assert (bd.l1_ms, bd.l2_ms, bd.l3_ms, bd.l4_ms) == (800, 15, 25, None)


def test_breakdown_repair_component():
    bd = compute_breakdown([
        mk(9, MarkKind.WIZARD_INPUT, 4990),
        mk(9, MarkKind.GOAL_ACTIVE, 5005),
        mk(9, MarkKind.REPAIR_REQUESTED, 5000),
        mk(9, MarkKind.REPAIR_ACTIVE, 5030),
    ])
    assert bd.l4_ms == 30


def test_breakdown_requires_minimum_marks():
    with pytest.raises(IncompleteTrace):
        compute_breakdown([mk(7, MarkKind.USER_REQUEST, 1000)])


def test_telescoping_identity_is_exact():
    rng = random.Random(3)
    for _ in range(500):
        t0 = rng.randint(0, 10**9)
        ur = t0
        wi = ur + rng.randint(0, 5000)
        ga = wi + rng.randint(0, 100)
        fmp = ga + rng.randint(0, 200)
        bd = compute_breakdown([
            mk(1, MarkKind.USER_REQUEST, ur),
            mk(1, MarkKind.WIZARD_INPUT, wi),
            mk(1, MarkKind.GOAL_ACTIVE, ga),
            mk(1, MarkKind.FIRST_MOTION_PERCEIVED, fmp),
        ])
        assert bd.l1_ms + bd.l2_ms + bd.l3_ms == fmp - ur
        assert bd.l1_ms >= 0 and bd.l2_ms >= 0 and bd.l3_ms >= 0


def mark_event(i, cid, kind, t):
    return LogEvent(event_id=i, session_id="s", tick=0, t_mono_ms=t, t_wall_ms=t,
                    stream=STREAM_LATENCY_MARK,
                    payload=mk(cid, kind, t).to_payload())


def scenario_header_event():
    return LogEvent(event_id=0, session_id="s", tick=0, t_mono_ms=0, t_wall_ms=0,
                    stream="scenario", payload={"scenario": {}})


def test_report_single_command():
    events = [
        scenario_header_event(),
        mark_event(1, 7, MarkKind.USER_REQUEST, 1000),
        mark_event(2, 7, MarkKind.WIZARD_INPUT, 1800),
        mark_event(3, 7, MarkKind.GOAL_ACTIVE, 1815),
        mark_event(4, 7, MarkKind.FIRST_MOTION_PERCEIVED, 1840),
    ]
    rep = report(events)
    assert rep.commands == 1
    assert rep.components["l2_ms"].median_ms == 15
    assert rep.telescoping_ok


def test_report_empty_log():
    with pytest.raises(EmptyLog):
        report([scenario_header_event()])


def test_report_statistics_match_independent_oracle():
    # scripted l2 schedule across 100 commands; recompute stats separately
    rng = random.Random(17)
    schedule = [rng.randint(5, 60) for _ in range(100)]
    events = [scenario_header_event()]
    eid = 1
    t = 1000
    for cid, l2 in enumerate(schedule):
        events.append(mark_event(eid, cid, MarkKind.WIZARD_INPUT, t)); eid += 1
        events.append(mark_event(eid, cid, MarkKind.GOAL_ACTIVE, t + l2)); eid += 1
        t += 500
    rep = report(events)
    stats = rep.components["l2_ms"]
    assert stats.count == 100
    assert stats.median_ms == statistics.median(schedule)
    assert stats.min_ms == min(schedule)
    assert stats.max_ms == max(schedule)
    ordered = sorted(schedule)
    assert stats.p95_ms == ordered[-(-95 * len(ordered) // 100) - 1]


def test_render_table_is_aligned():
    events = [
        scenario_header_event(),
        mark_event(1, 7, MarkKind.WIZARD_INPUT, 1800),
        mark_event(2, 7, MarkKind.GOAL_ACTIVE, 1815),
    ]
    text = render_table(report(events))
    lines = text.splitlines()
    assert lines[0].startswith("component")
    assert any("l2_ms" in l for l in lines)
    assert "telescoping_ok: True" in lines[-1]
