import datetime as dt
import json

import pytest
from hypothesis import given, settings, strategies as st

from boxmind.events import (
    DEFAULT_ROUND_SECONDS,
    EventLogError,
    log_stats,
    parse_event_log,
    serialize_event_log,
    validate_match,
)
from helpers import match, punch, rnd

HEADER = {"type": "match", "match_id": "m1", "date": "2023-05-01", "boxer_a": "A", "boxer_b": "B", "winner": "a"}
ROUND = {"type": "round", "match_id": "m1", "round_id": "r1", "duration": 180.0}


def event(**kw):
    base = {"type": "event", "match_id": "m1", "round_id": "r1", "boxer": "A", "t_start": 1.0, "t_end": 1.2,
            "hand": "lead", "dist": "long", "tech": "straight", "target": "head", "eff": "effective"}
    base.update(kw)
    return base


def lines(*objs):
    return "\n".join(json.dumps(o) for o in objs) + "\n"


def test_empty_stream():
    assert parse_event_log(b"") == []
    assert parse_event_log("\n\n") == []


def test_parse_basic_and_default_duration():
    text = lines(HEADER, {k: v for k, v in ROUND.items() if k != "duration"}, event())
    (m,) = parse_event_log(text)
    assert m.date == dt.date(2023, 5, 1)
    assert m.winner_id == "A" and m.loser_id == "B"
    assert m.rounds[0].duration == DEFAULT_ROUND_SECONDS
    assert m.rounds[0].events[0].effective


def test_round_trip_preserves_duration():
    m = match("m1", "2023-05-01", "A", "B", "b", [
        rnd(punch("A", 1.0), punch("B", 2.5, 2.7, hand="rear", dist="close", tech="hook"), duration=120.0),
        rnd(punch("B", 0.0, 0.3), rid="r2"),
    ])
    back = parse_event_log(serialize_event_log([m]))
    assert back == [m]
    assert back[0].rounds[0].duration == 120.0


def test_unknown_token_names_token_and_line():
    text = lines(HEADER, ROUND, event(), event(tech="jab"))
    with pytest.raises(EventLogError) as info:
        parse_event_log(text)
    assert "jab" in str(info.value)
    assert info.value.line == 4
    assert "line 4" in str(info.value)


@pytest.mark.parametrize("bad, fragment", [
    (event(t_start=2.0, t_end=1.0), "t_start < t_end"),
    (event(t_end=181.0), "outside round"),
    (event(boxer="C"), "not in match"),
    (event(round_id="zz"), "unknown round"),
    ({"type": "wat"}, "unknown line type"),
    (event(t_start="x"), "must be a number"),
])
def test_malformed_lines(bad, fragment):
    with pytest.raises(EventLogError, match=fragment):
        parse_event_log(lines(HEADER, ROUND, bad))


def test_malformed_json_line():
    with pytest.raises(EventLogError, match="line 2"):
        parse_event_log(lines(HEADER) + "{not json\n")


def test_header_errors():
    with pytest.raises(EventLogError, match="not among listed"):
        parse_event_log(lines(dict(HEADER, winner="c")))
    with pytest.raises(EventLogError, match="differ"):
        parse_event_log(lines(dict(HEADER, boxer_b="A")))
    with pytest.raises(EventLogError, match="duplicate"):
        parse_event_log(lines(HEADER, HEADER))


def test_validate_match_messages():
    bad = match("m", "2023-01-01", "A", "B", "a", [rnd(punch("A", 5.0, 4.0))])
    assert "t_start < t_end violated" in validate_match(bad)
    crowded = match("m", "2023-01-01", "A", "B", "a", [rnd(punch("A", 1), punch("B", 2), punch("C", 3))])
    assert "at most two boxers" in validate_match(crowded)
    ok = match("m", "2023-01-01", "A", "B", "a", [rnd(punch("A", 1))])
    assert validate_match(ok) == []


def test_events_sorted_by_start_stably():
    r = rnd(punch("A", 3.0), punch("B", 1.0), punch("A", 1.0, hand="rear"))
    assert [(e.boxer_id, e.t_start) for e in r.events] == [("B", 1.0), ("A", 1.0), ("A", 3.0)]


def test_log_stats():
    ms = [match("m1", "2023-01-01", "A", "B", "a", [rnd(punch("A", 1))]), match("m2", "2023-02-01", "B", "C", "b")]
    s = log_stats(ms)
    assert s["matches"] == 2 and s["matches_with_footage"] == 1 and s["boxers"] == 3
    assert s["events"] == 1 and s["first_date"] == "2023-01-01" and s["last_date"] == "2023-02-01"


_token = st.sampled_from
_times = st.floats(min_value=0.0, max_value=170.0, allow_nan=False)


@st.composite
def _records(draw):
    out = []
    for i in range(draw(st.integers(0, 3))):
        rounds = []
        for j in range(draw(st.integers(0, 2))):
            dur = draw(st.floats(min_value=171.0, max_value=300.0))
            evs = []
            for _ in range(draw(st.integers(0, 6))):
                t0 = draw(_times)
                evs.append(punch(draw(_token(["A", "B"])), t0, t0 + draw(st.floats(0.01, 1.0)),
                                 hand=draw(_token(["lead", "rear"])), dist=draw(_token(["long", "mid", "close"])),
                                 tech=draw(_token(["straight", "hook", "uppercut"])),
                                 target=draw(_token(["head", "torso"])), eff=draw(_token(["effective", "ineffective"]))))
            rounds.append(rnd(*evs, duration=dur, rid=f"r{j}"))
        out.append(match(f"m{i}", dt.date(2020, 1, 1) + dt.timedelta(days=draw(st.integers(0, 2000))),
                         "A", "B", draw(_token(["a", "b"])), rounds))
    return out


@settings(max_examples=60, deadline=None)
@given(_records())
def test_round_trip_property(records):
    assert parse_event_log(serialize_event_log(records)) == records


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=300))
def test_fuzz_never_crashes_unexpectedly(blob):
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        return
    try:
        parse_event_log(text)
    except EventLogError:
        pass


@settings(max_examples=100, deadline=None)
@given(st.lists(st.dictionaries(st.sampled_from(["type", "match_id", "round_id", "boxer", "t_start", "t_end", "tech"]),
                                st.one_of(st.text(max_size=4), st.floats(allow_nan=True), st.none(), st.integers())),
                max_size=5))
def test_fuzz_structured_objects(objs):
    text = lines(HEADER, ROUND, *objs)
    try:
        parse_event_log(text)
    except EventLogError:
        pass
