"""Builders and an independent brute-force indicator oracle used by tests."""
from __future__ import annotations

import datetime as dt

import numpy as np

from boxmind.events import MatchRecord, PunchEvent, RoundRecord


def punch(boxer, t0, t1=None, hand="lead", dist="long", tech="straight", target="head", eff="ineffective"):
    return PunchEvent(boxer, float(t0), float(t0 + 0.1 if t1 is None else t1), hand, dist, tech, target, eff)


def rnd(*events, duration=180.0, rid="r1"):
    return RoundRecord(rid, duration, tuple(events))


def match(mid, date, a, b, winner, rounds=()):
    if isinstance(date, str):
        date = dt.date.fromisoformat(date)
    return MatchRecord(mid, date, a, b, winner, tuple(rounds))


def random_round(rng: np.random.Generator, n: int, duration: float = 180.0, ids=("A", "B")) -> RoundRecord:
    """Random punches on a coarse time grid so that ties and boundary gaps
    (exactly 0.2 s, exactly 1.0 s) occur often."""
    events = []
    for _ in range(n):
        t0 = round(float(rng.integers(0, int(duration * 10) - 10)) / 10.0, 1)
        t1 = t0 + round(float(rng.integers(1, 6)) / 10.0, 1)
        events.append(PunchEvent(
            str(rng.choice(ids)), t0, min(t1, duration),
            str(rng.choice(["lead", "rear"])), str(rng.choice(["long", "mid", "close"])),
            str(rng.choice(["straight", "hook", "uppercut"])), str(rng.choice(["head", "torso"])),
            str(rng.choice(["effective", "ineffective"])),
        ))
    return RoundRecord("r", duration, tuple(events))


def brute_rhythm(rnd, boxer) -> list[str]:
    """Rhythm labels of ``boxer``'s punches by direct quadratic scan."""
    evs = list(rnd.events)
    out = []
    for i, e in enumerate(evs):
        if e.boxer_id != boxer:
            continue
        if any(o.boxer_id != boxer and o.t_start < e.t_start <= o.t_start + 0.2 for o in evs):
            out.append("counter")
            continue
        earlier = [o.t_end for o in evs[:i]]
        out.append("proactive" if not earlier or e.t_start - max(earlier) > 1.0 else "follow_up")
    return out


def brute_combo_kinds(rnd, boxer) -> list[str]:
    """Kinds of the maximal close-start runs of ``boxer``'s punches."""
    mine = [e for e in rnd.events if e.boxer_id == boxer]
    groups, group = [], []
    for e in mine:
        if group and e.t_start - group[-1].t_start > 1.0:
            groups.append(group)
            group = []
        group.append(e)
    groups.append(group)
    kinds = []
    for g in groups:
        if len(g) < 2:
            continue
        techs = [e.tech for e in g]
        kinds.append("uppercut" if "uppercut" in techs else "hook" if "hook" in techs else "straight_straight")
    return kinds


def brute_indicators(rounds, boxer) -> np.ndarray:
    """Re-derivation of the 18 indicators straight from their definitions,
    sharing no code with the library."""
    minutes = sum(r.duration for r in rounds) / 60.0
    own_all = [e for r in rounds for e in r.events if e.boxer_id == boxer]
    labels = [lab for r in rounds for lab in brute_rhythm(r, boxer)]
    kinds = [k for r in rounds for k in brute_combo_kinds(r, boxer)]
    n = len(own_all)
    v = np.zeros(18)

    def cnt(pred):
        return sum(1 for e in own_all if pred(e))

    eff = lambda e: e.eff == "effective"  # noqa: E731
    cm = lambda e: e.dist != "long"  # noqa: E731
    hml = lambda e: e.tech == "hook" and e.dist != "close"  # noqa: E731
    v[1] = cnt(lambda e: eff(e) and cm(e)) / minutes
    v[2] = cnt(lambda e: eff(e) and not cm(e)) / minutes
    v[4] = cnt(lambda e: eff(e) and e.hand == "lead") / minutes
    v[5] = cnt(lambda e: eff(e) and e.hand == "rear") / minutes
    v[7] = cnt(lambda e: eff(e) and e.target == "torso") / minutes
    v[8] = cnt(lambda e: eff(e) and e.target == "head") / minutes
    v[10] = cnt(lambda e: eff(e) and e.tech == "straight") / minutes
    v[12] = cnt(lambda e: eff(e) and hml(e)) / minutes
    if n:
        v[0] = cnt(cm) / n
        v[3] = cnt(lambda e: e.hand == "lead") / n
        v[6] = cnt(lambda e: e.target == "torso") / n
        v[9] = cnt(lambda e: e.tech == "straight") / n
        v[11] = cnt(hml) / n
        v[13] = labels.count("proactive") / n
        v[14] = labels.count("counter") / n
    if kinds:
        for j, kind in enumerate(("straight_straight", "hook", "uppercut")):
            v[15 + j] = kinds.count(kind) / len(kinds)
    return v


# criterion number -> (passed, detail); printed in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
