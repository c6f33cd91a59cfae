"""Aggregation of punch events into the 18 technical-tactical indicators.

Indicator order (1-based, as reported everywhere in this package):

 1 Prop. close & mid-range        10 Prop. straight
 2 No. eff. close & mid-range     11 No. eff. straight
 3 No. eff. long-range            12 Prop. mid & long-range hooks
 4 Prop. lead hand                13 No. eff. mid & long-range hooks
 5 No. eff. lead hand             14 Prop. proactive
 6 No. eff. rear hand             15 Prop. counter
 7 Prop. torso                    16 Prop. straight-straight combos
 8 No. eff. torso                 17 Prop. hook combos
 9 No. eff. head                  18 Prop. uppercut combos

"Prop." indicators divide by the boxer's punch count (16-18 by the number of
combinations); "No." indicators are effective punches per footage minute.
"""
from __future__ import annotations

import bisect
import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .events import MatchRecord, PunchEvent, RoundRecord

N_INDICATORS = 18

INDICATOR_NAMES = (
    "Prop. of Close- & Mid-Range Punches",
    "No. of Effective Close- & Mid-Range Punches",
    "No. of Effective Long-Range Punches",
    "Prop. of Lead Hand Punches",
    "No. of Effective Lead Hand Punches",
    "No. of Effective Rear Hand Punches",
    "Prop. of Punches Targeted at Torso",
    "No. of Effective Punches Targeted at Torso",
    "No. of Effective Punches Targeted at Head",
    "Prop. of Straight Punches",
    "No. of Effective Straight Punches",
    "Prop. of Mid- & Long-Range Hook Punches",
    "No. of Effective Mid- & Long-Range Hook Punches",
    "Prop. of Proactive Punches",
    "Prop. of Counter Punches",
    "Prop. of Straight-Straight Combo",
    "Prop. of Hook Combo",
    "Prop. of Uppercut Combo",
)

# 0-based positions
PROPORTION_INDEX = (0, 3, 6, 9, 11, 13, 14, 15, 16, 17)
RATE_INDEX = (1, 2, 4, 5, 7, 8, 10, 12)

PROACTIVE_PAUSE = 1.0
COUNTER_WINDOW = 0.2
COMBO_WINDOW = 1.0

RHYTHM_LABELS = ("proactive", "counter", "follow_up")
COMBO_KINDS = ("straight_straight", "hook", "uppercut")


class IndicatorError(ValueError):
    pass


@dataclass(frozen=True)
class IndicatorVector:
    """18 indicator values plus provenance flags.

    ``sparse`` marks a profile built from zero punches (proportions forced to
    0); ``missing`` marks the no-footage sentinel.
    """

    values: np.ndarray
    punch_count: int = 0
    footage_minutes: float = 0.0
    sparse: bool = False
    missing: bool = False

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float).reshape(-1)
        if arr.shape != (N_INDICATORS,):
            raise IndicatorError(f"expected {N_INDICATORS} indicator values, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __getitem__(self, k: int) -> float:
        """1-based access matching the indicator table."""
        return float(self.values[k - 1])

    def __eq__(self, other):
        if not isinstance(other, IndicatorVector):
            return NotImplemented
        return (
            np.array_equal(self.values, other.values)
            and self.punch_count == other.punch_count
            and self.footage_minutes == other.footage_minutes
            and self.sparse == other.sparse
            and self.missing == other.missing
        )

    __hash__ = None

    @classmethod
    def missing_profile(cls) -> "IndicatorVector":
        # placeholder values; consumers substitute the standardized zero
        return cls(np.zeros(N_INDICATORS), missing=True)

    def to_dict(self) -> dict:
        return {
            "indicators": [float(v) for v in self.values],
            "punch_count": self.punch_count,
            "footage_minutes": self.footage_minutes,
            "sparse": self.sparse,
        }


def invariant_violations(values: Sequence[float], tol: float = 1e-9) -> list[str]:
    v = np.asarray(values, dtype=float)
    out = []
    if not np.all(np.isfinite(v)):
        out.append("non-finite indicator")
    for i in PROPORTION_INDEX:
        if not (-tol <= v[i] <= 1 + tol):
            out.append(f"indicator {i + 1} outside [0, 1]")
    for i in RATE_INDEX:
        if v[i] < -tol:
            out.append(f"indicator {i + 1} negative")
    combos = v[15] + v[16] + v[17]
    if combos > tol and abs(combos - 1.0) > tol:
        out.append("combination proportions must sum to 1")
    if v[13] + v[14] > 1 + tol:
        out.append("proactive + counter exceeds 1")
    return out


@dataclass(frozen=True)
class Combination:
    events: tuple[PunchEvent, ...]
    kind: str


def _boxer_present(rnd: RoundRecord, boxer_id: str):
    if boxer_id not in rnd.boxer_ids:
        raise IndicatorError(f"boxer {boxer_id!r} absent from round {rnd.round_id!r}")


def _rhythm_all(rnd: RoundRecord) -> list[str]:
    """Rhythm label for every event of the round, in round order."""
    events = rnd.events
    starts: dict[str, list[float]] = {}
    for e in events:
        starts.setdefault(e.boxer_id, []).append(e.t_start)
    labels = []
    latest_end = None
    for e in events:
        label = None
        for bid, ss in starts.items():
            if bid == e.boxer_id:
                continue
            # any opponent start s with s < t <= s + window; the search bound
            # has slack because t - window and s + window round differently
            lo = bisect.bisect_left(ss, e.t_start - COUNTER_WINDOW - 1e-9)
            for s in ss[lo:]:
                if s >= e.t_start:
                    break
                if s < e.t_start <= s + COUNTER_WINDOW:
                    label = "counter"
                    break
            if label:
                break
        if label is None:
            if latest_end is None or e.t_start - latest_end > PROACTIVE_PAUSE:
                label = "proactive"
            else:
                label = "follow_up"
        labels.append(label)
        latest_end = e.t_end if latest_end is None else max(latest_end, e.t_end)
    return labels


def classify_rhythm(rnd: RoundRecord, boxer_id: str) -> list[str]:
    """Label each of ``boxer_id``'s punches as proactive, counter or follow_up.

    A punch starting within 0.2 s after an opponent's punch start is a counter.
    Otherwise it is proactive when more than one second separates it from the
    latest end of any earlier punch in the round (the round's first punch
    included), and a follow-up otherwise.
    """
    _boxer_present(rnd, boxer_id)
    labels = _rhythm_all(rnd)
    return [lab for e, lab in zip(rnd.events, labels) if e.boxer_id == boxer_id]


def _combo_kind(members: Sequence[PunchEvent]) -> str:
    techs = {e.tech for e in members}
    if "uppercut" in techs:
        return "uppercut"
    if "hook" in techs:
        return "hook"
    return "straight_straight"


def segment_combinations(rnd: RoundRecord, boxer_id: str, window: float = COMBO_WINDOW) -> list[Combination]:
    """Maximal runs (length >= 2) of the boxer's punches whose consecutive
    start times are at most ``window`` seconds apart."""
    if not window > 0:
        raise IndicatorError("combination window must be positive")
    own = [e for e in rnd.events if e.boxer_id == boxer_id]
    combos = []
    run: list[PunchEvent] = []
    for e in own:
        if run and e.t_start - run[-1].t_start > window:
            if len(run) >= 2:
                combos.append(Combination(tuple(run), _combo_kind(run)))
            run = []
        run.append(e)
    if len(run) >= 2:
        combos.append(Combination(tuple(run), _combo_kind(run)))
    return combos


def aggregate_indicators(
    rounds: Sequence[RoundRecord], boxer_id: str, window: float = COMBO_WINDOW
) -> IndicatorVector:
    """Indicator vector of ``boxer_id`` over the given rounds of footage."""
    if len(rounds) == 0:
        raise IndicatorError("aggregate_indicators needs at least one round")
    minutes = float(sum(r.duration for r in rounds)) / 60.0
    if not minutes > 0:
        raise IndicatorError("total footage minutes must be positive")

    counts = np.zeros(N_INDICATORS)
    n = 0
    n_combos = 0
    for rnd in rounds:
        own = [e for e in rnd.events if e.boxer_id == boxer_id]
        if not own:
            continue
        n += len(own)
        for e in own:
            cm = e.dist in ("close", "mid")
            hml = e.tech == "hook" and e.dist in ("mid", "long")
            eff = e.effective
            counts[0] += cm
            counts[1] += eff and cm
            counts[2] += eff and not cm
            counts[3] += e.hand == "lead"
            counts[4] += eff and e.hand == "lead"
            counts[5] += eff and e.hand == "rear"
            counts[6] += e.target == "torso"
            counts[7] += eff and e.target == "torso"
            counts[8] += eff and e.target == "head"
            counts[9] += e.tech == "straight"
            counts[10] += eff and e.tech == "straight"
            counts[11] += hml
            counts[12] += eff and hml
        for lab in classify_rhythm(rnd, boxer_id):
            counts[13] += lab == "proactive"
            counts[14] += lab == "counter"
        for combo in segment_combinations(rnd, boxer_id, window):
            n_combos += 1
            counts[15 + COMBO_KINDS.index(combo.kind)] += 1

    values = np.zeros(N_INDICATORS)
    for i in RATE_INDEX:
        values[i] = counts[i] / minutes
    if n > 0:
        for i in (0, 3, 6, 9, 11, 13, 14):
            values[i] = counts[i] / n
    if n_combos > 0:
        values[15:18] = counts[15:18] / n_combos
    return IndicatorVector(values, punch_count=n, footage_minutes=minutes, sparse=n == 0)


def match_indicators(match: MatchRecord, boxer_id: str) -> IndicatorVector | None:
    """Per-match indicators of one side, or ``None`` without footage."""
    if not match.has_footage:
        return None
    return aggregate_indicators(match.rounds, boxer_id)


def mean_profile(vectors: Iterable[IndicatorVector]) -> IndicatorVector:
    vectors = list(vectors)
    if not vectors:
        return IndicatorVector.missing_profile()
    total = np.zeros(N_INDICATORS)
    for v in vectors:
        total = total + v.values
    return IndicatorVector(
        total / len(vectors),
        punch_count=sum(v.punch_count for v in vectors),
        footage_minutes=sum(v.footage_minutes for v in vectors),
        sparse=any(v.sparse for v in vectors),
    )


def historical_profile(
    history: Iterable[tuple[MatchRecord, str]], boxer_id: str, before: dt.date
) -> IndicatorVector:
    """Unweighted mean of per-match vectors over footage matches dated
    strictly before ``before``.

    ``history`` pairs each match with the side (``"a"`` or ``"b"``) that
    ``boxer_id`` fought on. Returns the missing-profile sentinel when no prior
    footage exists.
    """
    vectors = []
    for match, side in history:
        if match.date >= before or not match.has_footage:
            continue
        bid = match.boxer_a if side == "a" else match.boxer_b
        if bid != boxer_id:
            raise IndicatorError(f"match {match.match_id!r} side {side!r} is not {boxer_id!r}")
        vectors.append(aggregate_indicators(match.rounds, boxer_id))
    return mean_profile(vectors)


def history_of(matches: Iterable[MatchRecord], boxer_id: str) -> list[tuple[MatchRecord, str]]:
    out = []
    for m in matches:
        if m.boxer_a == boxer_id:
            out.append((m, "a"))
        elif m.boxer_b == boxer_id:
            out.append((m, "b"))
    return out


def indicator_report(matches: Sequence[MatchRecord]) -> dict:
    """Per-boxer profile over all footage: {boxer_id: {...}}."""
    boxers = sorted({b for m in matches for b in (m.boxer_a, m.boxer_b)})
    report = {}
    for bid in boxers:
        rounds = [r for m in matches if bid in (m.boxer_a, m.boxer_b) for r in m.rounds]
        if rounds:
            report[bid] = aggregate_indicators(rounds, bid).to_dict()
        else:
            report[bid] = {
                "indicators": [0.0] * N_INDICATORS,
                "punch_count": 0,
                "footage_minutes": 0.0,
                "sparse": True,
            }
    return report
