"""Seeded synthetic boxing worlds with known ground truth.

Boxers get a latent strength trajectory and a style (a target indicator
vector). Outcomes follow ``logistic((s_a(t) - s_b(t) + payoff . (style_a -
style_b)) / temperature)``. Rounds are synthesized as event streams whose
aggregated indicators reproduce the target style up to count rounding.

Rounds are laid out as exchanges separated by pauses longer than one second.
An exchange is opened by one boxer's run of punches (the first is proactive,
the rest follow-ups). The other boxer may counter the last few punches of
that run 0.03-0.15 s after they start, then add follow-ups. Within an
exchange consecutive starts of one boxer are at most 0.8 s apart, so each
boxer's part of an exchange is one combination run.
"""
from __future__ import annotations

import datetime as dt
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .events import MatchRecord, PunchEvent, RoundRecord, serialize_event_log
from .indicators import COMBO_KINDS, N_INDICATORS, IndicatorVector, invariant_violations

MIN_PAUSE = 1.05
RUN_GAP = (0.4, 0.8)
FIRST_FOLLOW_GAP = (0.3, 0.7)
COUNTER_DELAY = (0.03, 0.15)
PUNCH_LENGTH = (0.12, 0.3)
DEFAULT_PUNCH_RATE = 40.0
STRUCTURE_ATTEMPTS = 8


class InfeasibleStyleError(ValueError):
    pass


# -- latent style parameters ---------------------------------------------------------

@dataclass
class StyleParams:
    """Generative parameters of a style. Shares are fractions of punches,
    ``eff_*`` are fractions of effective punches."""

    rate: float
    close_mid: float
    lead: float
    torso: float
    straight: float
    hook_ml: float
    proactive: float
    counter: float
    combo: tuple[float, float, float]
    eff: float
    eff_close_mid: float
    eff_lead: float
    eff_torso: float
    eff_straight: float
    eff_hook_ml: float

    def vector(self) -> IndicatorVector:
        E = self.rate * self.eff
        v = np.array([
            self.close_mid, E * self.eff_close_mid, E * (1 - self.eff_close_mid),
            self.lead, E * self.eff_lead, E * (1 - self.eff_lead),
            self.torso, E * self.eff_torso, E * (1 - self.eff_torso),
            self.straight, E * self.eff_straight,
            self.hook_ml, E * self.eff_hook_ml,
            self.proactive, self.counter,
            *self.combo,
        ])
        return IndicatorVector(v)


def _eff_share(rng, share: float, eff: float, spread: float = 0.1) -> float:
    # the effective punches in a category cannot exceed the category itself
    lo = max(0.05, 1 - (1 - share) / eff)
    hi = min(0.95, share / eff)
    return float(np.clip(share + rng.uniform(-spread, spread), lo, hi))


def random_style_params(rng: np.random.Generator, rate: tuple[float, float] = (12.0, 30.0)) -> StyleParams:
    straight = rng.uniform(0.4, 0.55)
    hook_ml = rng.uniform(0.2, min(0.3, 0.8 - straight))
    combo = rng.dirichlet([3.0, 3.0, 3.0])
    combo = np.maximum(combo, 0.1)
    combo = combo / combo.sum()
    eff = rng.uniform(0.3, 0.5)
    close_mid = rng.uniform(0.3, 0.7)
    lead = rng.uniform(0.35, 0.65)
    torso = rng.uniform(0.25, 0.5)
    return StyleParams(
        rate=rng.uniform(*rate),
        close_mid=close_mid,
        lead=lead,
        torso=torso,
        straight=straight,
        hook_ml=hook_ml,
        proactive=rng.uniform(0.15, 0.35),
        counter=rng.uniform(0.05, 0.2),
        combo=tuple(float(c) for c in combo),
        eff=eff,
        eff_close_mid=float(np.clip(_eff_share(rng, close_mid, eff), 0.25, 0.75)),
        eff_lead=float(np.clip(_eff_share(rng, lead, eff), 0.25, 0.75)),
        eff_torso=float(np.clip(_eff_share(rng, torso, eff), 0.25, 0.75)),
        eff_straight=_eff_share(rng, straight, eff),
        eff_hook_ml=max(0.12, _eff_share(rng, hook_ml, eff)),
    )


def jitter_params(p: StyleParams, rng: np.random.Generator, scale: float) -> StyleParams:
    """Per-match variation of a boxer's style, kept inside the sampler's box."""
    if scale <= 0:
        return p

    def j(x, lo, hi):
        return float(np.clip(x + rng.normal(0, scale), lo, hi))

    straight = j(p.straight, 0.3, 0.6)
    hook_ml = j(p.hook_ml, 0.12, min(0.32, 0.82 - straight))
    combo = np.maximum(np.array(p.combo) + rng.normal(0, scale, 3), 0.08)
    eff = j(p.eff, 0.25, 0.55)
    close_mid = j(p.close_mid, 0.25, 0.75)
    lead = j(p.lead, 0.3, 0.7)
    torso = j(p.torso, 0.2, 0.55)

    def js(x, share):
        lo = max(0.2, 1 - (1 - share) / eff)
        hi = min(0.8, share / eff)
        return float(np.clip(x + rng.normal(0, scale), lo, hi))

    return StyleParams(
        rate=float(max(8.0, p.rate * (1 + rng.normal(0, scale)))),
        close_mid=close_mid, lead=lead, torso=torso, straight=straight, hook_ml=hook_ml,
        proactive=j(p.proactive, 0.12, 0.38), counter=j(p.counter, 0.04, 0.22),
        combo=tuple(float(c) for c in combo / combo.sum()),
        eff=eff,
        eff_close_mid=js(p.eff_close_mid, close_mid), eff_lead=js(p.eff_lead, lead),
        eff_torso=js(p.eff_torso, torso),
        eff_straight=float(np.clip(p.eff_straight + rng.normal(0, scale), 0.05, min(0.95, straight / eff))),
        eff_hook_ml=float(np.clip(p.eff_hook_ml + rng.normal(0, scale), 0.1, min(0.95, hook_ml / eff))),
    )


# -- count targets ---------------------------------------------------------------------

def _largest_remainder(total: int, weights: Sequence[float]) -> list[int]:
    w = np.asarray(weights, dtype=float)
    if total == 0 or w.sum() <= 0:
        return [0] * len(w)
    raw = total * w / w.sum()
    base = np.floor(raw).astype(int)
    order = np.argsort(-(raw - base), kind="stable")
    for i in order[: total - base.sum()]:
        base[i] += 1
    return [int(b) for b in base]


def _allocate(total: int, caps: Sequence[int]) -> list[int]:
    """Split ``total`` over bins proportionally to their capacities."""
    caps = [int(c) for c in caps]
    if total < 0 or total > sum(caps):
        raise InfeasibleStyleError(f"cannot place {total} items in capacity {sum(caps)}")
    out = _largest_remainder(total, caps) if total else [0] * len(caps)
    # proportional rounding can exceed a cap by one; push the excess elsewhere
    for i, c in enumerate(caps):
        while out[i] > c:
            out[i] -= 1
            j = max((k for k in range(len(caps)) if out[k] < caps[k]), key=lambda k: caps[k] - out[k])
            out[j] += 1
    return out


@dataclass
class _Counts:
    n: int
    close_mid: int
    lead: int
    torso: int
    straight: int
    hook_ml: int
    proactive: int
    counter: int
    eff: int
    eff_close_mid: int
    eff_lead: int
    eff_torso: int
    eff_straight: int
    eff_hook_ml: int
    combo: tuple[float, float, float]


def _counts(style: IndicatorVector, n: int, minutes: float) -> _Counts:
    v = style.values
    bad = invariant_violations(v, tol=1e-6)
    if bad:
        raise InfeasibleStyleError("style violates indicator invariants: " + "; ".join(bad))
    if n < 0:
        raise InfeasibleStyleError("punch budget must be non-negative")

    def r(x):
        return int(round(x))

    eff_cm = r(v[1] * minutes)
    eff_long = r(v[2] * minutes)
    eff = eff_cm + eff_long
    totals = [v[1] + v[2], v[4] + v[5], v[7] + v[8]]
    if max(totals) - min(totals) > 0.02 * max(max(totals), 1e-9) + 1e-9:
        raise InfeasibleStyleError(
            "effective punch rates disagree across distance, hand and target splits"
        )
    c = _Counts(
        n=n,
        close_mid=r(v[0] * n),
        lead=r(v[3] * n),
        torso=r(v[6] * n),
        straight=r(v[9] * n),
        hook_ml=r(v[11] * n),
        proactive=r(v[13] * n),
        counter=r(v[14] * n),
        eff=eff,
        eff_close_mid=eff_cm,
        eff_lead=r(eff * v[4] / (v[4] + v[5])) if v[4] + v[5] > 0 else 0,
        eff_torso=r(eff * v[7] / (v[7] + v[8])) if v[7] + v[8] > 0 else 0,
        eff_straight=r(v[10] * minutes),
        eff_hook_ml=r(v[12] * minutes),
        combo=(float(v[15]), float(v[16]), float(v[17])),
    )
    problems = []
    if c.eff > n:
        problems.append(f"{c.eff} effective punches exceed the budget of {n}")
    if c.eff_close_mid > c.close_mid or eff_long > n - c.close_mid:
        problems.append("effective close/mid or long punches exceed their range totals")
    if c.eff_lead > c.lead or c.eff - c.eff_lead > n - c.lead:
        problems.append("effective lead or rear punches exceed their hand totals")
    if c.eff_torso > c.torso or c.eff - c.eff_torso > n - c.torso:
        problems.append("effective torso or head punches exceed their target totals")
    if c.eff_straight > c.straight or c.eff_hook_ml > c.hook_ml:
        problems.append("effective straights or hooks exceed their technique totals")
    if c.straight + c.hook_ml > n:
        problems.append("straights plus mid/long hooks exceed the budget")
    if c.eff_straight + c.eff_hook_ml > c.eff:
        problems.append("effective straights plus hooks exceed all effective punches")
    if c.proactive + c.counter > n:
        problems.append("proactive plus counter punches exceed the budget")
    if n > 0 and c.proactive == 0 and c.counter < n:
        problems.append("a boxer with follow-ups needs at least one proactive punch")
    if problems:
        raise InfeasibleStyleError("; ".join(problems))
    return c


# -- round structure ----------------------------------------------------------------------

@dataclass
class _Exchange:
    initiator: str
    responder: str
    k: int = 1
    counters: int = 0
    follow: int = 0


@dataclass
class _Slot:
    """One punch of a boxer: which exchange, which part, position in run."""

    exchange: int
    role: str  # "init" | "counter" | "follow"
    position: int


def _plan_exchanges(ids, counts: dict[str, _Counts], rng, fixed: set[str], concentration: float = 1.0) -> list[_Exchange]:
    """Exchange skeleton realizing each boxer's proactive/counter/follow-up
    counts. Boxers in ``fixed`` only supply the exchanges they open; a larger
    ``concentration`` piles follow-ups into fewer, longer runs."""
    a, b = ids
    exchanges = [
        _Exchange(initiator=x, responder=(b if x == a else a))
        for x in (a, b) for _ in range(counts[x].proactive)
    ]
    order = rng.permutation(len(exchanges))
    exchanges = [exchanges[i] for i in order]
    for x in (a, b):
        y = b if x == a else a
        hosts = [i for i, e in enumerate(exchanges) if e.initiator == y]
        cn = counts[x].counter
        if cn and not hosts:
            raise InfeasibleStyleError(f"{x} needs opponent punches to counter but the opponent opens no exchanges")
        if not hosts:
            continue
        base, extra = divmod(cn, len(hosts))
        bonus = set(rng.choice(len(hosts), size=extra, replace=False).tolist()) if extra else set()
        for j, i in enumerate(hosts):
            exchanges[i].counters = base + (1 if j in bonus else 0)
    for x in (a, b):
        if x in fixed:
            continue
        y = b if x == a else a
        own = [i for i, e in enumerate(exchanges) if e.initiator == x]
        follow = counts[x].n - counts[x].proactive - counts[x].counter
        # runs must be long enough to host the opponent's counters
        for i in own:
            need = max(0, exchanges[i].counters - 1)
            exchanges[i].k += need
            follow -= need
        if follow < 0:
            raise InfeasibleStyleError(f"{counts[y].counter} counters by {y} need more punches from {x}")
        slots = own + [i for i, e in enumerate(exchanges) if e.initiator == y]
        if follow and not slots:
            raise InfeasibleStyleError(f"{x} has follow-ups but no exchange to place them in")
        extra = np.zeros(len(slots))
        for _ in range(follow):
            # preferential growth clusters follow-ups into longer bursts
            w = 1.0 + concentration * extra
            j = int(rng.choice(len(slots), p=w / w.sum()))
            extra[j] += 1
        for j, i in enumerate(slots):
            if exchanges[i].initiator == x:
                exchanges[i].k += int(extra[j])
            else:
                exchanges[i].follow += int(extra[j])
    return exchanges


def _runs_of(boxer: str, exchanges: list[_Exchange]) -> list[list[_Slot]]:
    runs = []
    for i, e in enumerate(exchanges):
        if e.initiator == boxer:
            runs.append([_Slot(i, "init", p) for p in range(e.k)])
        elif e.counters + e.follow > 0:
            run = [_Slot(i, "counter", p) for p in range(e.counters)]
            run += [_Slot(i, "follow", e.counters + p) for p in range(e.follow)]
            runs.append(run)
    return runs


def _assign_techs(runs: list[list[_Slot]], c: _Counts, rng, strict: bool) -> tuple[list[str], int]:
    """Technique per slot (flattened run order) and the number of close hooks."""
    n = sum(len(r) for r in runs)
    combos = [i for i, r in enumerate(runs) if len(r) >= 2]
    K = len(combos)
    wanted = sum(c.combo)
    if K and wanted <= 0 and strict:
        raise InfeasibleStyleError("style has no combinations but the punch structure creates some")
    quotas = _largest_remainder(K, c.combo) if wanted > 0 else [0, 0, K]
    k_ss, k_h, k_u = quotas
    order = sorted(combos, key=lambda i: (len(runs[i]), rng.random()))
    kind = {}
    for pos, i in enumerate(order):
        kind[i] = COMBO_KINDS[0] if pos < k_ss else COMBO_KINDS[1] if pos < k_ss + k_h else COMBO_KINDS[2]
    close_hooks = max(0, k_h - c.hook_ml)
    S, H = c.straight, c.hook_ml + close_hooks
    U = n - S - H
    starts = np.cumsum([0] + [len(r) for r in runs])
    techs: list[str | None] = [None] * n
    try:
        l_ss = sum(len(runs[i]) for i in kind if kind[i] == "straight_straight")
        if S < l_ss or U < k_u or close_hooks > c.close_mid:
            raise InfeasibleStyleError("technique counts cannot realize the combination mix")
        s_left, h_left, u_left = S - l_ss, H - k_h, U - k_u
        restricted, free = [], []
        for i, r in enumerate(runs):
            idx = list(range(starts[i], starts[i + 1]))
            kd = kind.get(i)
            if kd == "straight_straight":
                for j in idx:
                    techs[j] = "straight"
            elif kd == "hook":
                lead = int(rng.choice(idx))
                techs[lead] = "hook"
                restricted += [j for j in idx if j != lead]
            elif kd == "uppercut":
                lead = int(rng.choice(idx))
                techs[lead] = "uppercut"
                free += [j for j in idx if j != lead]
            else:
                free += idx
        if u_left > len(free):
            raise InfeasibleStyleError("too many uppercuts for the available slots")
        free = [free[j] for j in rng.permutation(len(free))]
        for j in free[:u_left]:
            techs[j] = "uppercut"
        rest = free[u_left:] + restricted
        pool = ["straight"] * s_left + ["hook"] * h_left
        pool = [pool[j] for j in rng.permutation(len(pool))]
        for j, t in zip(rest, pool):
            techs[j] = t
    except InfeasibleStyleError:
        if strict:
            raise
        close_hooks = 0
        pool = ["straight"] * S + ["hook"] * c.hook_ml + ["uppercut"] * (n - S - c.hook_ml)
        techs = [pool[j] for j in rng.permutation(n)]
    return techs, close_hooks


def _assign_rest(techs: list[str], close_hooks: int, c: _Counts, rng) -> list[tuple[str, str, str, str]]:
    """(hand, dist, target, eff) per slot honouring every count target."""
    n = len(techs)
    hooks = [j for j, t in enumerate(techs) if t == "hook"]
    hooks = [hooks[j] for j in rng.permutation(len(hooks))]
    close_hook_set = set(hooks[:close_hooks])
    cls = {
        "straight": [j for j, t in enumerate(techs) if t == "straight"],
        "hook_ml": [j for j in hooks[close_hooks:]],
        "hook_close": sorted(close_hook_set),
        "uppercut": [j for j, t in enumerate(techs) if t == "uppercut"],
    }
    n_cls = {k: len(v) for k, v in cls.items()}
    e_other = c.eff - c.eff_straight - c.eff_hook_ml
    if c.eff_straight > n_cls["straight"] or c.eff_hook_ml > n_cls["hook_ml"]:
        raise InfeasibleStyleError("effective technique counts exceed technique totals")
    e_hc, e_up = _allocate(e_other, [n_cls["hook_close"], n_cls["uppercut"]])
    e_cls = {"straight": c.eff_straight, "hook_ml": c.eff_hook_ml, "hook_close": e_hc, "uppercut": e_up}
    movable = ("straight", "hook_ml", "uppercut")
    x_rem = c.eff_close_mid - e_hc
    y_rem = (c.close_mid - c.eff_close_mid) - (n_cls["hook_close"] - e_hc)
    xs = _allocate(x_rem, [e_cls[k] for k in movable])
    ys = _allocate(y_rem, [n_cls[k] - e_cls[k] for k in movable])
    x = dict(zip(movable, xs), hook_close=e_hc)
    y = dict(zip(movable, ys), hook_close=n_cls["hook_close"] - e_hc)

    dist: list[str | None] = [None] * n
    eff: list[bool | None] = [None] * n
    for k, slots in cls.items():
        slots = [slots[j] for j in rng.permutation(len(slots))]
        e = e_cls[k]
        plan = [(True, True)] * x[k] + [(True, False)] * (e - x[k]) + [(False, True)] * y[k]
        plan += [(False, False)] * (len(slots) - len(plan))
        for j, (is_eff, is_cm) in zip(slots, plan):
            eff[j] = is_eff
            if not is_cm:
                dist[j] = "long"
            elif k == "hook_ml":
                dist[j] = "mid"
            elif k == "hook_close":
                dist[j] = "close"
            else:
                dist[j] = "close" if rng.random() < 0.5 else "mid"

    def split(n_true_eff: int, n_true_total: int) -> list[bool]:
        eff_idx = [j for j in range(n) if eff[j]]
        ineff_idx = [j for j in range(n) if not eff[j]]
        flag = [False] * n
        for j in rng.permutation(eff_idx)[:n_true_eff]:
            flag[int(j)] = True
        for j in rng.permutation(ineff_idx)[: n_true_total - n_true_eff]:
            flag[int(j)] = True
        return flag

    lead = split(c.eff_lead, c.lead)
    torso = split(c.eff_torso, c.torso)
    return [
        ("lead" if lead[j] else "rear", dist[j], "torso" if torso[j] else "head",
         "effective" if eff[j] else "ineffective")
        for j in range(n)
    ]


def _random_attrs(rng, n: int) -> list[tuple[str, str, str, str, str]]:
    return [
        (str(rng.choice(["lead", "rear"])), str(rng.choice(["long", "mid", "close"])),
         str(rng.choice(["straight", "hook", "uppercut"])), str(rng.choice(["head", "torso"])),
         str(rng.choice(["effective", "ineffective"])))
        for _ in range(n)
    ]


def _layout(exchanges: list[_Exchange], duration: float, rng) -> list[list[dict[str, list[tuple[float, float]]]]]:
    """Absolute (start, end) times per exchange, per part."""
    local = []
    for e in exchanges:
        init = [0.0]
        for _ in range(e.k - 1):
            init.append(init[-1] + rng.uniform(*RUN_GAP))
        counters = [init[e.k - e.counters + j] + rng.uniform(*COUNTER_DELAY) for j in range(e.counters)]
        follow = []
        for _ in range(e.follow):
            if follow:
                follow.append(follow[-1] + rng.uniform(*RUN_GAP))
            elif counters:
                follow.append(counters[-1] + rng.uniform(*RUN_GAP))
            else:
                follow.append(init[-1] + rng.uniform(*FIRST_FOLLOW_GAP))
        parts = {}
        span = 0.0
        for name, starts in (("init", init), ("counter", counters), ("follow", follow)):
            iv = [(s, s + rng.uniform(*PUNCH_LENGTH)) for s in starts]
            parts[name] = iv
            if iv:
                span = max(span, max(t1 for _, t1 in iv))
        local.append((parts, span))
    need = sum(span for _, span in local) + MIN_PAUSE * max(len(local) - 1, 0)
    slack = duration - 1e-3 - need
    if slack < 0:
        raise InfeasibleStyleError(f"round of {duration:g}s is too short for the punch budget (needs {need:.1f}s)")
    gaps = rng.exponential(size=len(local) + 1)
    gaps = slack * gaps / gaps.sum()
    out = []
    clock = gaps[0]
    for i, (parts, span) in enumerate(local):
        out.append({k: [(clock + s, clock + t) for s, t in v] for k, v in parts.items()})
        clock += span + MIN_PAUSE + gaps[i + 1]
    return out


def generate_round(
    styles: dict[str, tuple[IndicatorVector, int]],
    duration: float,
    rng: np.random.Generator,
    round_id: str = "r1",
    strict: bool = True,
) -> RoundRecord:
    """Joint round for two boxers, each given (style, punch budget)."""
    if not duration > 0:
        raise InfeasibleStyleError("duration must be positive")
    ids = list(styles)
    if len(ids) != 2:
        raise InfeasibleStyleError("a round needs exactly two styled boxers")
    minutes = duration / 60.0
    counts = {b: _counts(styles[b][0], styles[b][1], minutes) for b in ids}
    return _realize(ids, counts, duration, rng, round_id, strict, fixed=set())


def _realize(ids, counts, duration, rng, round_id, strict, fixed, concentration: float = 1.0) -> RoundRecord:
    exchanges = _plan_exchanges(ids, counts, rng, fixed, concentration)
    times = _layout(exchanges, duration, rng)
    events = []
    for boxer in ids:
        runs = _runs_of(boxer, exchanges)
        slots = [s for r in runs for s in r]
        if boxer in fixed:
            attrs = _random_attrs(rng, len(slots))
        else:
            techs, close_hooks = _assign_techs(runs, counts[boxer], rng, strict)
            rest = _assign_rest(techs, close_hooks, counts[boxer], rng)
            attrs = [(h, d, t, tg, ef) for t, (h, d, tg, ef) in zip(techs, rest)]
        for slot, (hand, dist, tech, target, eff) in zip(slots, attrs):
            part = times[slot.exchange]
            if slot.role == "init":
                t0, t1 = part["init"][slot.position]
            elif slot.role == "counter":
                t0, t1 = part["counter"][slot.position]
            else:
                t0, t1 = part["follow"][slot.position - exchanges[slot.exchange].counters]
            events.append(PunchEvent(boxer, float(t0), float(min(t1, duration)), hand, dist, tech, target, eff))
    return RoundRecord(round_id=round_id, duration=float(duration), events=tuple(events))


def generate_event_stream(
    style: IndicatorVector,
    duration: float = 180.0,
    seed: int = 0,
    n_punches: int | None = None,
    boxer_id: str = "A",
    opponent_id: str = "B",
) -> RoundRecord:
    """A round whose aggregate indicators for ``boxer_id`` reproduce ``style``.

    ``n_punches`` is the boxer's punch budget (default 40 per minute). The
    opponent only throws the punches that the boxer counters.
    """
    if not duration > 0:
        raise InfeasibleStyleError("duration must be positive")
    rng = np.random.default_rng(seed)
    minutes = duration / 60.0
    n = int(round(DEFAULT_PUNCH_RATE * minutes)) if n_punches is None else int(n_punches)
    c = _counts(style, n, minutes)
    trigger = _Counts(
        n=c.counter, close_mid=0, lead=0, torso=0, straight=0, hook_ml=0,
        proactive=c.counter, counter=0, eff=0, eff_close_mid=0, eff_lead=0, eff_torso=0,
        eff_straight=0, eff_hook_ml=0, combo=(0.0, 0.0, 0.0),
    )
    last = None
    for attempt in range(STRUCTURE_ATTEMPTS):
        # later attempts leave more singletons and longer runs, which is what
        # uppercut-heavy styles with few uppercut combinations need
        try:
            return _realize([boxer_id, opponent_id], {boxer_id: c, opponent_id: trigger}, duration, rng, "r1", True,
                            fixed={opponent_id}, concentration=2.0 ** attempt)
        except InfeasibleStyleError as exc:
            last = exc
    raise InfeasibleStyleError(f"no exchange layout realizes the style: {last}")


# -- worlds ---------------------------------------------------------------------------------

@dataclass
class WorldConfig:
    n_boxers: int = 20
    n_matches: int = 200
    start_date: str = "2021-01-01"
    span_days: int = 1095
    strength_sd: float = 1.0
    drift: float = 0.3
    payoff: list[float] | None = None
    payoff_standardized: bool = False
    payoff_scale: float = 0.5
    temperature: float = 1.0
    style_jitter: float = 0.03
    rounds_per_match: int = 3
    round_seconds: float = 180.0
    footage_fraction: float = 1.0
    matchup_scale: float = 0.0
    matchup_pairs: int = 3
    archetypes: int = 0
    archetype_spread: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.n_boxers < 2:
            raise ValueError("need at least two boxers")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.n_matches < 1:
            raise ValueError("need at least one match")
        if self.payoff is not None and len(self.payoff) != N_INDICATORS:
            raise ValueError("payoff needs 18 coefficients")


@dataclass
class BoxerTruth:
    boxer_id: str
    strength_knots: list[tuple[float, float]]
    style: IndicatorVector
    params: StyleParams

    def strength(self, t: float) -> float:
        ts = [k[0] for k in self.strength_knots]
        vs = [k[1] for k in self.strength_knots]
        return float(np.interp(t, ts, vs))


@dataclass
class GroundTruth:
    payoff: np.ndarray
    boxers: dict[str, BoxerTruth] = field(default_factory=dict)
    temperature: float = 1.0
    # antisymmetric interaction on population-standardized styles
    matchup: np.ndarray = field(default_factory=lambda: np.zeros((N_INDICATORS, N_INDICATORS)))
    style_mean: np.ndarray = field(default_factory=lambda: np.zeros(N_INDICATORS))
    style_sd: np.ndarray = field(default_factory=lambda: np.ones(N_INDICATORS))

    def interaction(self, a: str, b: str) -> float:
        za = (self.boxers[a].style.values - self.style_mean) / self.style_sd
        zb = (self.boxers[b].style.values - self.style_mean) / self.style_sd
        return float(za @ self.matchup @ zb)

    def logit(self, a: str, b: str, t: float) -> float:
        ta, tb = self.boxers[a], self.boxers[b]
        linear = float(self.payoff @ (ta.style.values - tb.style.values))
        return (ta.strength(t) - tb.strength(t) + linear + self.interaction(a, b)) / self.temperature

    def win_probability(self, a: str, b: str, t: float) -> float:
        return float(expit(self.logit(a, b, t)))

    def to_dict(self) -> dict:
        return {
            "payoff": [float(p) for p in self.payoff],
            "temperature": self.temperature,
            "matchup": self.matchup.tolist(),
            "style_mean": self.style_mean.tolist(),
            "style_sd": self.style_sd.tolist(),
            "boxers": [
                {"id": bt.boxer_id, "strength_knots": [list(k) for k in bt.strength_knots],
                 "style": [float(v) for v in bt.style.values]}
                for bt in self.boxers.values()
            ],
        }


def _identity_directions() -> np.ndarray:
    # every realizable style satisfies n . v = const for these n
    rows = np.zeros((3, N_INDICATORS))
    rows[0, [1, 2]], rows[0, [4, 5]] = 1.0, -1.0
    rows[1, [1, 2]], rows[1, [7, 8]] = 1.0, -1.0
    rows[2, [15, 16, 17]] = 1.0
    return rows


def canonical_payoff(payoff: np.ndarray, sd: np.ndarray) -> np.ndarray:
    """Drop the payoff component that no data can identify.

    The projection is taken in standardized coordinates, where a payoff
    ``w`` acts as ``(w * sd) . z``; directions normal to the indicator
    identities are removed there and mapped back.
    """
    w = np.asarray(payoff, dtype=float) * sd
    basis = _identity_directions() * sd
    q, _ = np.linalg.qr(basis.T)
    w = w - q @ (q.T @ w)
    return w / sd


def generate_world(config: WorldConfig) -> tuple[list[MatchRecord], GroundTruth]:
    rng = np.random.default_rng(config.seed)
    width = len(str(config.n_boxers))
    ids = [f"B{i + 1:0{width}d}" for i in range(config.n_boxers)]
    if config.archetypes > 0:
        # boxers share a few base styles; profiles then identify the archetype, not the boxer
        bases = [random_style_params(rng) for _ in range(config.archetypes)]
        params = {b: jitter_params(bases[int(rng.integers(config.archetypes))], rng, config.archetype_spread) for b in ids}
    else:
        params = {b: random_style_params(rng) for b in ids}
    styles = {b: params[b].vector() for b in ids}
    pop = np.vstack([styles[b].values for b in ids])
    sd = np.maximum(pop.std(axis=0), 1e-6)
    if config.payoff is not None:
        payoff = np.asarray(config.payoff, dtype=float)
        if config.payoff_standardized:
            payoff = canonical_payoff(payoff / sd, sd)
    else:
        payoff = canonical_payoff(config.payoff_scale * rng.normal(size=N_INDICATORS) / sd, sd)
    matchup = np.zeros((N_INDICATORS, N_INDICATORS))
    if config.matchup_scale > 0:
        for _ in range(config.matchup_pairs):
            i, j = rng.choice(N_INDICATORS, size=2, replace=False)
            w = config.matchup_scale * rng.choice([-1.0, 1.0])
            matchup[i, j] += w
            matchup[j, i] -= w
    truth = GroundTruth(payoff=payoff, temperature=config.temperature, matchup=matchup,
                        style_mean=pop.mean(axis=0), style_sd=sd)
    for b in ids:
        s0 = rng.normal(0.0, config.strength_sd)
        s1 = s0 + rng.normal(0.0, config.drift)
        truth.boxers[b] = BoxerTruth(b, [(0.0, float(s0)), (1.0, float(s1))], styles[b], params[b])

    start = dt.date.fromisoformat(config.start_date)
    offsets = np.sort(rng.integers(0, config.span_days + 1, size=config.n_matches))
    mwidth = len(str(config.n_matches))
    matches = []
    for i, off in enumerate(offsets):
        a_i, b_i = rng.choice(config.n_boxers, size=2, replace=False)
        a, b = ids[a_i], ids[b_i]
        t = off / config.span_days if config.span_days else 0.0
        p = truth.win_probability(a, b, t)
        winner = "a" if rng.random() < p else "b"
        rounds = []
        if rng.random() < config.footage_fraction:
            for r in range(config.rounds_per_match):
                rounds.append(_world_round(params[a], params[b], a, b, config, rng, f"r{r + 1}"))
        matches.append(MatchRecord(
            match_id=f"m{i + 1:0{mwidth}d}", date=start + dt.timedelta(days=int(off)),
            boxer_a=a, boxer_b=b, winner=winner, rounds=tuple(rounds),
        ))
    return matches, truth


def _world_round(pa: StyleParams, pb: StyleParams, a: str, b: str, config: WorldConfig, rng, round_id: str) -> RoundRecord:
    minutes = config.round_seconds / 60.0
    last: Exception | None = None
    for _ in range(20):
        ja = jitter_params(pa, rng, config.style_jitter)
        jb = jitter_params(pb, rng, config.style_jitter)
        na = int(rng.poisson(ja.rate * minutes))
        nb = int(rng.poisson(jb.rate * minutes))
        styles = {a: (ja.vector(), na), b: (jb.vector(), nb)}
        try:
            return generate_round(styles, config.round_seconds, rng, round_id, strict=False)
        except InfeasibleStyleError as exc:
            last = exc
    raise InfeasibleStyleError(f"could not synthesize round {round_id} for {a} vs {b}: {last}")


# Balanced signs, unit magnitude per population sd, orthogonal to the indicator identities.
BALANCED_PAYOFF = (1, 1, -1, -1, 1, -1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, -1, 0)

PRESETS: dict[str, dict] = {
    # strength drift plus archetype matchups that no scalar rating can express
    "ablation": dict(
        n_boxers=40, n_matches=500, archetypes=3, archetype_spread=0.005, matchup_scale=2.0,
        drift=2.0, strength_sd=1.0, temperature=0.5, payoff_scale=0.2, style_jitter=0.05,
    ),
    # dominant linear style payoff with a known sign per indicator
    "linear": dict(
        n_boxers=40, n_matches=500, payoff=list(BALANCED_PAYOFF), payoff_standardized=True,
        strength_sd=0.5, temperature=0.5,
    ),
}


def preset(name: str, **overrides) -> WorldConfig:
    try:
        base = dict(PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown world preset {name!r}; choose from {', '.join(PRESETS)}") from None
    base.update(overrides)
    return WorldConfig(**base)


def world_files(matches: list[MatchRecord], truth: GroundTruth) -> tuple[bytes, bytes]:
    """Event log bytes and ground-truth sidecar bytes."""
    sidecar = json.dumps(truth.to_dict(), indent=1) + "\n"
    return serialize_event_log(matches), sidecar.encode("utf-8")


def config_dict(config: WorldConfig) -> dict:
    return asdict(config)
