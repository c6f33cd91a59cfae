"""Atomic punch events, round/match records, and the line-delimited event log.

The log is UTF-8 JSON lines. A ``match`` header opens a record, ``round``
lines attach rounds to it and ``event`` lines attach punches to a round::

    {"type":"match","match_id":"m1","date":"2023-05-01","boxer_a":"A","boxer_b":"B","winner":"a"}
    {"type":"round","match_id":"m1","round_id":"r1","duration":180.0}
    {"type":"event","match_id":"m1","round_id":"r1","boxer":"A","t_start":12.34,...}
"""
from __future__ import annotations

import datetime as dt
import io
import json
from dataclasses import dataclass, field, replace
from typing import IO, Iterable

HANDS = ("lead", "rear")
DISTANCES = ("long", "mid", "close")
TECHNIQUES = ("straight", "hook", "uppercut")
TARGETS = ("head", "torso")
EFFECTS = ("effective", "ineffective")
WINNERS = ("a", "b")

DEFAULT_ROUND_SECONDS = 180.0

_ENUMS = {
    "hand": HANDS,
    "dist": DISTANCES,
    "tech": TECHNIQUES,
    "target": TARGETS,
    "eff": EFFECTS,
}


class EventLogError(ValueError):
    """Raised for a malformed or invariant-violating event log line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PunchEvent:
    boxer_id: str
    t_start: float
    t_end: float
    hand: str
    dist: str
    tech: str
    target: str
    eff: str

    @property
    def effective(self) -> bool:
        return self.eff == "effective"


@dataclass(frozen=True)
class RoundRecord:
    round_id: str
    duration: float = DEFAULT_ROUND_SECONDS
    events: tuple[PunchEvent, ...] = ()

    def __post_init__(self):
        # stable sort keeps file order on equal start times
        ordered = tuple(sorted(self.events, key=lambda e: e.t_start))
        object.__setattr__(self, "events", ordered)

    @property
    def boxer_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.events:
            seen.setdefault(e.boxer_id, None)
        return list(seen)

    @property
    def minutes(self) -> float:
        return self.duration / 60.0


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    date: dt.date
    boxer_a: str
    boxer_b: str
    winner: str
    rounds: tuple[RoundRecord, ...] = field(default=())

    @property
    def winner_id(self) -> str:
        return self.boxer_a if self.winner == "a" else self.boxer_b

    @property
    def loser_id(self) -> str:
        return self.boxer_b if self.winner == "a" else self.boxer_a

    @property
    def has_footage(self) -> bool:
        return len(self.rounds) > 0

    def with_rounds(self, rounds: Iterable[RoundRecord]) -> "MatchRecord":
        return replace(self, rounds=tuple(rounds))


def validate_match(record: MatchRecord) -> list[str]:
    """Return every violated invariant of ``record``; empty means valid."""
    violations = []
    if record.winner not in WINNERS:
        violations.append(f"winner {record.winner!r} not among listed boxers")
    if record.boxer_a == record.boxer_b:
        violations.append("boxer_a and boxer_b must differ")
    allowed = {record.boxer_a, record.boxer_b}
    for rnd in record.rounds:
        if not rnd.duration > 0:
            violations.append(f"round {rnd.round_id}: duration must be positive")
        ids = rnd.boxer_ids
        if len(ids) > 2:
            violations.append("at most two boxers")
        else:
            for bid in ids:
                if bid not in allowed:
                    violations.append(f"round {rnd.round_id}: boxer {bid!r} not in match")
        for e in rnd.events:
            violations.extend(_event_violations(e, rnd.duration))
    return violations


def _event_violations(e: PunchEvent, duration: float) -> list[str]:
    out = []
    if not e.t_start < e.t_end:
        out.append("t_start < t_end violated")
    if e.t_start < 0 or e.t_end > duration:
        out.append("time outside round duration")
    for name, allowed in _ENUMS.items():
        value = getattr(e, name)
        if value not in allowed:
            out.append(f"unknown {name} token {value!r}")
    return out


def _read_text(stream) -> str:
    if isinstance(stream, bytes):
        return stream.decode("utf-8")
    if isinstance(stream, str):
        return stream
    data = stream.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _field(obj: dict, key: str, lineno: int, kind=str):
    if key not in obj:
        raise EventLogError(f"missing field {key!r}", lineno)
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise EventLogError(f"field {key!r} must be a number", lineno)
        value = float(value)
        if value != value or value in (float("inf"), float("-inf")):
            raise EventLogError(f"field {key!r} must be finite", lineno)
        return value
    if not isinstance(value, str):
        raise EventLogError(f"field {key!r} must be a string", lineno)
    return value


def _enum(obj: dict, key: str, allowed: tuple[str, ...], lineno: int) -> str:
    value = _field(obj, key, lineno)
    if value not in allowed:
        raise EventLogError(f"unknown {key} token {value!r}", lineno)
    return value


def parse_event_log(stream: bytes | str | IO) -> list[MatchRecord]:
    """Parse an event log into match records, in file order.

    Raises :class:`EventLogError` naming the offending line on any malformed
    line, unknown enum token, bad timing, or dangling reference.
    """
    text = _read_text(stream)
    headers: dict[str, dict] = {}
    order: list[str] = []
    rounds: dict[str, dict[str, dict]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise EventLogError(f"malformed line ({exc.msg})", lineno) from None
        if not isinstance(obj, dict):
            raise EventLogError("line is not an object", lineno)
        kind = obj.get("type")
        if kind == "match":
            mid = _field(obj, "match_id", lineno)
            if mid in headers:
                raise EventLogError(f"duplicate match_id {mid!r}", lineno)
            try:
                date = dt.date.fromisoformat(_field(obj, "date", lineno))
            except ValueError:
                raise EventLogError(f"bad date {obj['date']!r}", lineno) from None
            a = _field(obj, "boxer_a", lineno)
            b = _field(obj, "boxer_b", lineno)
            if a == b:
                raise EventLogError("boxer_a and boxer_b must differ", lineno)
            winner = _field(obj, "winner", lineno)
            if winner not in WINNERS:
                raise EventLogError(f"winner {winner!r} not among listed boxers", lineno)
            headers[mid] = dict(match_id=mid, date=date, boxer_a=a, boxer_b=b, winner=winner)
            order.append(mid)
            rounds[mid] = {}
        elif kind == "round":
            mid = _field(obj, "match_id", lineno)
            if mid not in headers:
                raise EventLogError(f"round for unknown match {mid!r}", lineno)
            rid = _field(obj, "round_id", lineno)
            if rid in rounds[mid]:
                raise EventLogError(f"duplicate round_id {rid!r}", lineno)
            duration = _field(obj, "duration", lineno, float) if "duration" in obj else DEFAULT_ROUND_SECONDS
            if duration <= 0:
                raise EventLogError("round duration must be positive", lineno)
            rounds[mid][rid] = dict(duration=duration, events=[])
        elif kind == "event":
            mid = _field(obj, "match_id", lineno)
            rid = _field(obj, "round_id", lineno)
            if mid not in headers or rid not in rounds[mid]:
                raise EventLogError(f"event for unknown round {mid!r}/{rid!r}", lineno)
            head = headers[mid]
            rnd = rounds[mid][rid]
            boxer = _field(obj, "boxer", lineno)
            if boxer not in (head["boxer_a"], head["boxer_b"]):
                raise EventLogError(f"boxer {boxer!r} not in match {mid!r}", lineno)
            t0 = _field(obj, "t_start", lineno, float)
            t1 = _field(obj, "t_end", lineno, float)
            if not t0 < t1:
                raise EventLogError("t_start < t_end violated", lineno)
            if t0 < 0 or t1 > rnd["duration"]:
                raise EventLogError("time outside round duration", lineno)
            rnd["events"].append(
                PunchEvent(
                    boxer_id=boxer,
                    t_start=t0,
                    t_end=t1,
                    hand=_enum(obj, "hand", HANDS, lineno),
                    dist=_enum(obj, "dist", DISTANCES, lineno),
                    tech=_enum(obj, "tech", TECHNIQUES, lineno),
                    target=_enum(obj, "target", TARGETS, lineno),
                    eff=_enum(obj, "eff", EFFECTS, lineno),
                )
            )
        else:
            raise EventLogError(f"unknown line type {kind!r}", lineno)

    records = []
    for mid in order:
        rnds = tuple(
            RoundRecord(round_id=rid, duration=r["duration"], events=tuple(r["events"]))
            for rid, r in rounds[mid].items()
        )
        records.append(MatchRecord(rounds=rnds, **headers[mid]))
    return records


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def serialize_event_log(records: Iterable[MatchRecord]) -> bytes:
    """Inverse of :func:`parse_event_log` for invariant-valid records."""
    buf = io.StringIO()
    for m in records:
        buf.write(_dump({
            "type": "match", "match_id": m.match_id, "date": m.date.isoformat(),
            "boxer_a": m.boxer_a, "boxer_b": m.boxer_b, "winner": m.winner,
        }))
        buf.write("\n")
        for r in m.rounds:
            buf.write(_dump({
                "type": "round", "match_id": m.match_id, "round_id": r.round_id,
                "duration": float(r.duration),
            }))
            buf.write("\n")
            for e in r.events:
                buf.write(_dump({
                    "type": "event", "match_id": m.match_id, "round_id": r.round_id,
                    "boxer": e.boxer_id, "t_start": float(e.t_start), "t_end": float(e.t_end),
                    "hand": e.hand, "dist": e.dist, "tech": e.tech,
                    "target": e.target, "eff": e.eff,
                }))
                buf.write("\n")
    return buf.getvalue().encode("utf-8")


def log_stats(records: list[MatchRecord]) -> dict:
    """Summary counts for an ingested log."""
    boxers = set()
    n_rounds = n_events = 0
    for m in records:
        boxers.update((m.boxer_a, m.boxer_b))
        n_rounds += len(m.rounds)
        n_events += sum(len(r.events) for r in m.rounds)
    dates = [m.date for m in records]
    return {
        "matches": len(records),
        "matches_with_footage": sum(1 for m in records if m.has_footage),
        "boxers": len(boxers),
        "rounds": n_rounds,
        "events": n_events,
        "first_date": min(dates).isoformat() if dates else None,
        "last_date": max(dates).isoformat() if dates else None,
    }
