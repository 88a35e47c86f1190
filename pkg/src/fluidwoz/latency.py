"""Latency marks, per-command breakdowns, and aggregate reporting.

Four components per command, all measured on the single server monotonic
clock (client timestamps ride along as payload but are never subtracted):

  l1  user request received   -> wizard input received
  l2  wizard input received   -> goal active
  l3  goal active             -> user acknowledged first moving delta
  l4  repair requested        -> repair active

Because every mark shares one integer-millisecond clock, l1+l2+l3 telescopes
to (first motion perceived - user request) exactly, with zero tolerance.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import DuplicateMark, EmptyLog, IncompleteTrace
from .eventlog import STREAM_LATENCY_MARK, LogEvent


class MarkKind(str, Enum):
    USER_REQUEST = "user_request"
    WIZARD_INPUT = "wizard_input"
    GOAL_ACTIVE = "goal_active"
    FIRST_MOTION_PERCEIVED = "first_motion_perceived"
    REPAIR_REQUESTED = "repair_requested"
    REPAIR_ACTIVE = "repair_active"


@dataclass(frozen=True)
class LatencyMark:
    command_id: int
    kind: MarkKind
    t_mono_ms: int
    client_t_ms: Optional[int] = None  # auxiliary only, never used in breakdowns

    def to_payload(self) -> dict:
        return {
            "command_id": self.command_id,
            "kind": self.kind.value,
            "t_mono_ms": self.t_mono_ms,
            "client_t_ms": self.client_t_ms,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "LatencyMark":
        return cls(
            command_id=int(payload["command_id"]),
            kind=MarkKind(payload["kind"]),
            t_mono_ms=int(payload["t_mono_ms"]),
            client_t_ms=payload.get("client_t_ms"),
        )


@dataclass
class LatencyBreakdown:
    command_id: int
    l1_ms: Optional[int] = None
    l2_ms: Optional[int] = None
    l3_ms: Optional[int] = None
    l4_ms: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "command_id": self.command_id,
            "l1_ms": self.l1_ms,
            "l2_ms": self.l2_ms,
            "l3_ms": self.l3_ms,
            "l4_ms": self.l4_ms,
        }


class MarkStore:
    """Append-only store of latency marks; first mark wins per (command, kind)."""

    def __init__(self):
        self._by_command: dict[int, dict[MarkKind, LatencyMark]] = {}

    def mark(self, m: LatencyMark) -> None:
        marks = self._by_command.setdefault(m.command_id, {})
        if m.kind in marks:
            raise DuplicateMark(f"command {m.command_id} already has {m.kind.value}")
        marks[m.kind] = m

    def has(self, command_id: int, kind: MarkKind) -> bool:
        return kind in self._by_command.get(command_id, {})

    def marks_for(self, command_id: int) -> dict[MarkKind, LatencyMark]:
        return dict(self._by_command.get(command_id, {}))

    def command_ids(self) -> list[int]:
        return sorted(self._by_command)


def compute_breakdown(marks: dict[MarkKind, LatencyMark] | Iterable[LatencyMark]) -> LatencyBreakdown:
    """Differences between marks; absent inputs leave components absent."""
    if not isinstance(marks, dict):
        marks = {m.kind: m for m in marks}
    if not marks:
        raise IncompleteTrace("no marks at all")
    command_id = next(iter(marks.values())).command_id
    if MarkKind.WIZARD_INPUT not in marks or MarkKind.GOAL_ACTIVE not in marks:
        raise IncompleteTrace(
            f"command {command_id}: need wizard_input and goal_active at minimum"
        )

    def t(kind: MarkKind) -> Optional[int]:
        m = marks.get(kind)
        return m.t_mono_ms if m else None

    ur, wi = t(MarkKind.USER_REQUEST), t(MarkKind.WIZARD_INPUT)
    ga, fmp = t(MarkKind.GOAL_ACTIVE), t(MarkKind.FIRST_MOTION_PERCEIVED)
    rr, ra = t(MarkKind.REPAIR_REQUESTED), t(MarkKind.REPAIR_ACTIVE)
    return LatencyBreakdown(
        command_id=command_id,
        l1_ms=wi - ur if ur is not None else None,
        l2_ms=ga - wi,
        l3_ms=fmp - ga if fmp is not None else None,
        l4_ms=ra - rr if rr is not None and ra is not None else None,
    )


@dataclass
class ComponentStats:
    count: int
    min_ms: int
    median_ms: float
    p95_ms: int
    max_ms: int

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "min_ms": self.min_ms,
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "max_ms": self.max_ms,
        }


@dataclass
class LatencyReport:
    components: dict[str, ComponentStats]
    commands: int
    breakdowns: list[LatencyBreakdown] = field(repr=False, default_factory=list)
    telescoping_violations: list[int] = field(default_factory=list)

    @property
    def telescoping_ok(self) -> bool:
        return not self.telescoping_violations

    def to_dict(self) -> dict:
        return {
            "commands": self.commands,
            "components": {k: v.to_dict() for k, v in self.components.items()},
            "telescoping_ok": self.telescoping_ok,
            "telescoping_violations": self.telescoping_violations,
        }


def _nearest_rank_p95(values: list[int]) -> int:
    ordered = sorted(values)
    rank = max(int(-(-95 * len(ordered) // 100)), 1)  # ceil(0.95 n), 1-based
    return ordered[rank - 1]


def _stats(values: list[int]) -> ComponentStats:
    return ComponentStats(
        count=len(values),
        min_ms=min(values),
        median_ms=statistics.median(values),
        p95_ms=_nearest_rank_p95(values),
        max_ms=max(values),
    )


def marks_from_events(events: Iterable[LogEvent]) -> MarkStore:
    store = MarkStore()
    for ev in events:
        if ev.stream != STREAM_LATENCY_MARK:
            continue
        try:
            store.mark(LatencyMark.from_payload(ev.payload))
        except DuplicateMark:
            pass  # first mark wins; duplicates were already reported at capture
    return store


def report(events: Iterable[LogEvent]) -> LatencyReport:
    """Aggregate statistics over every command in a session log.

    Also verifies, per fully-marked command, that l1+l2+l3 equals the raw
    end-to-end difference exactly (same clock, integer arithmetic).
    """
    return report_from_store(marks_from_events(events))


def report_from_store(store: MarkStore) -> LatencyReport:
    per_component: dict[str, list[int]] = {"l1_ms": [], "l2_ms": [], "l3_ms": [], "l4_ms": []}
    breakdowns: list[LatencyBreakdown] = []
    violations: list[int] = []
    for cid in store.command_ids():
        marks = store.marks_for(cid)
        try:
            bd = compute_breakdown(marks)
        except IncompleteTrace:
            continue
        breakdowns.append(bd)
        for name in per_component:
            v = getattr(bd, name)
            if v is not None:
                per_component[name].append(v)
        if bd.l1_ms is not None and bd.l3_ms is not None:
            end_to_end = (
                marks[MarkKind.FIRST_MOTION_PERCEIVED].t_mono_ms
                - marks[MarkKind.USER_REQUEST].t_mono_ms
            )
            if bd.l1_ms + bd.l2_ms + bd.l3_ms != end_to_end:
                violations.append(cid)

    if not any(per_component.values()):
        raise EmptyLog("no latency marks in log")
    components = {k: _stats(v) for k, v in per_component.items() if v}
    return LatencyReport(
        components=components,
        commands=len(breakdowns),
        breakdowns=breakdowns,
        telescoping_violations=violations,
    )


def render_table(rep: LatencyReport) -> str:
    """Aligned plain-text view of a report for the CLI."""
    headers = ("component", "count", "min", "median", "p95", "max")
    rows = [headers]
    for name in ("l1_ms", "l2_ms", "l3_ms", "l4_ms"):
        st = rep.components.get(name)
        if st is None:
            rows.append((name, "0", "-", "-", "-", "-"))
        else:
            rows.append((name, str(st.count), str(st.min_ms), f"{st.median_ms:g}",
                         str(st.p95_ms), str(st.max_ms)))
    widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
    lines.append(f"commands: {rep.commands}  telescoping_ok: {rep.telescoping_ok}")
    return "\n".join(lines)
