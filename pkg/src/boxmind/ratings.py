"""Scalar rating baselines (Elo, Glicko, Whole-History Rating) and a
walk-forward evaluation harness shared with the predictor."""
from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import MatchEdge

log = logging.getLogger(__name__)

ELO_INITIAL = 1500.0
ELO_K = 32.0
ELO_GRID = float(2 ** 24)
GLICKO_INITIAL = 1500.0
GLICKO_MAX_RD = 350.0
GLICKO_Q = math.log(10) / 400.0
# RD regrows from 50 to 350 over 365 idle one-day periods
GLICKO_C = math.sqrt((350.0 ** 2 - 50.0 ** 2) / 365.0)
WHR_W2 = 0.0004
WHR_PRIOR_VAR = 1.0


class RatingError(ValueError):
    pass


def _score(outcome) -> float:
    if outcome in ("a", 1, 1.0, True):
        return 1.0
    if outcome in ("b", 0, 0.0, False):
        return 0.0
    raise RatingError(f"outcome must be 'a'/'b' or 1/0, got {outcome!r}")


# -- Elo -------------------------------------------------------------------------

def elo_expected(r_a: float, r_b: float) -> float:
    return 1.0 / (1.0 + 10.0 ** ((r_b - r_a) / 400.0))


def elo_update(r_a: float, r_b: float, outcome, K: float = ELO_K) -> tuple[float, float]:
    """Ratings after one game; ``outcome`` is 'a' or 'b' (or 1/0 for a)."""
    s_a = _score(outcome)
    # the change is snapped to a dyadic grid so that ratings on that grid
    # (the default initial rating included) add and subtract without rounding
    d = round(K * (s_a - elo_expected(r_a, r_b)) * ELO_GRID) / ELO_GRID
    return r_a + d, r_b - d


@dataclass
class EloState:
    ratings: dict[str, float] = field(default_factory=dict)
    K: float = ELO_K
    initial: float = ELO_INITIAL

    def rating(self, boxer_id: str) -> float:
        return self.ratings.get(boxer_id, self.initial)

    def predict(self, a: str, b: str, date: dt.date | None = None) -> float:
        return elo_expected(self.rating(a), self.rating(b))

    def update_day(self, games: Sequence[tuple[str, str, str]], day: dt.date):
        pre = dict(self.ratings)
        deltas: dict[str, float] = {}
        for a, b, winner in games:
            ra, rb = pre.get(a, self.initial), pre.get(b, self.initial)
            na, _ = elo_update(ra, rb, winner, self.K)
            d = na - ra
            deltas[a] = deltas.get(a, 0.0) + d
            deltas[b] = deltas.get(b, 0.0) - d
        for bid, d in deltas.items():
            self.ratings[bid] = pre.get(bid, self.initial) + d

    def dump(self) -> list[dict]:
        return [{"boxer_id": b, "rating": r, "aux": {"K": self.K}} for b, r in sorted(self.ratings.items())]


# -- Glicko ------------------------------------------------------------------------

def glicko_g(rd: float) -> float:
    return 1.0 / math.sqrt(1.0 + 3.0 * GLICKO_Q ** 2 * rd ** 2 / math.pi ** 2)


def glicko_expected(r: float, r_j: float, rd_j: float) -> float:
    return 1.0 / (1.0 + 10.0 ** (-glicko_g(rd_j) * (r - r_j) / 400.0))


def glicko_inflate(rd: float, periods: float, c: float = GLICKO_C) -> float:
    return min(math.sqrt(rd ** 2 + c ** 2 * max(periods, 0.0)), GLICKO_MAX_RD)


def glicko_rate(r: float, rd: float, results: Iterable[tuple[float, float, float]]) -> tuple[float, float]:
    """Glickman's single-period update from (r_j, RD_j, score) results.

    ``rd`` must already include any inactivity inflation.
    """
    results = list(results)
    if not results:
        return r, rd
    inv_d2 = 0.0
    total = 0.0
    for r_j, rd_j, s in results:
        g = glicko_g(rd_j)
        e = glicko_expected(r, r_j, rd_j)
        inv_d2 += g * g * e * (1.0 - e)
        total += g * (s - e)
    inv_d2 *= GLICKO_Q ** 2
    denom = 1.0 / rd ** 2 + inv_d2
    new_r = r + GLICKO_Q / denom * total
    new_rd = math.sqrt(1.0 / denom)
    return new_r, new_rd


@dataclass
class GlickoState:
    """Ratings as boxer -> (rating, RD, day ordinal of last rated period)."""

    ratings: dict[str, tuple[float, float, int]] = field(default_factory=dict)
    c: float = GLICKO_C
    initial: float = GLICKO_INITIAL
    max_rd: float = GLICKO_MAX_RD

    def current(self, boxer_id: str, day: int) -> tuple[float, float]:
        """Rating and RD inflated to ``day``."""
        if boxer_id not in self.ratings:
            return self.initial, self.max_rd
        r, rd, last = self.ratings[boxer_id]
        return r, glicko_inflate(rd, day - last, self.c)

    def predict(self, a: str, b: str, date: dt.date) -> float:
        day = date.toordinal()
        ra, rda = self.current(a, day)
        rb, rdb = self.current(b, day)
        return glicko_expected(ra, rb, math.sqrt(rda ** 2 + rdb ** 2))

    def update_day(self, games: Sequence[tuple[str, str, str]], day: dt.date):
        d = day.toordinal()
        results: dict[str, list[tuple[str, float]]] = {}
        for a, b, winner in games:
            s = _score(winner)
            results.setdefault(a, []).append((b, s))
            results.setdefault(b, []).append((a, 1.0 - s))
        for bid in list(results):
            self.ratings.setdefault(bid, (self.initial, self.max_rd, d))
        new = {bid: glicko_update(self, bid, res, d) for bid, res in results.items()}
        for bid, (r, rd) in new.items():
            self.ratings[bid] = (r, rd, d)

    def dump(self) -> list[dict]:
        return [
            {"boxer_id": b, "rating": r, "aux": {"rd": rd, "last_day": dt.date.fromordinal(last).isoformat()}}
            for b, (r, rd, last) in sorted(self.ratings.items())
        ]


def glicko_update(state: GlickoState, boxer_id: str, results: Sequence[tuple[str, float]], day: int) -> tuple[float, float]:
    """Updated (rating, RD) of ``boxer_id`` after one period's results.

    ``results`` lists (opponent_id, score). Inactivity since the boxer's last
    period inflates RD first (capped at the maximum); with no results only
    the inflation applies.
    """
    r, rd = state.current(boxer_id, day)
    rated = []
    for opp, s in results:
        if opp not in state.ratings:
            raise RatingError(f"unknown opponent {opp!r}")
        r_j, rd_j = state.current(opp, day)
        rated.append((r_j, rd_j, s))
    new_r, new_rd = glicko_rate(r, rd, rated)
    return new_r, min(max(new_rd, 1e-9), state.max_rd)


# -- Whole-History Rating -------------------------------------------------------------

def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class WhrState:
    """Per boxer: knot day ordinals and natural-scale ratings at those days."""

    days: dict[str, np.ndarray] = field(default_factory=dict)
    ratings: dict[str, np.ndarray] = field(default_factory=dict)
    w2: float = WHR_W2
    prior_var: float = WHR_PRIOR_VAR
    tol: float = 1e-6
    sweeps: int = 0
    converged: bool = True
    objective_trace: list[float] = field(default_factory=list)

    def rating_at(self, boxer_id: str, day: int) -> float:
        """Linear between knots, flat outside them, 0 when unrated."""
        if boxer_id not in self.days:
            return 0.0
        return float(np.interp(day, self.days[boxer_id], self.ratings[boxer_id]))

    def predict(self, a: str, b: str, date: dt.date) -> float:
        d = date.toordinal()
        return float(_sigmoid(self.rating_at(a, d) - self.rating_at(b, d)))

    def dump(self) -> list[dict]:
        return [
            {
                "boxer_id": b, "rating": float(self.ratings[b][-1]),
                "aux": {"knots": int(len(self.days[b])), "last_day": dt.date.fromordinal(int(self.days[b][-1])).isoformat()},
            }
            for b in sorted(self.days)
        ]


class _WhrProblem:
    """Index structures for one fit: games as (winner knot, loser knot)."""

    def __init__(self, games: Sequence[tuple[str, str, int]]):
        knots: dict[str, set[int]] = {}
        for w, l, d in games:
            knots.setdefault(w, set()).add(d)
            knots.setdefault(l, set()).add(d)
        self.boxers = sorted(knots)
        self.days = {b: np.array(sorted(knots[b]), dtype=int) for b in self.boxers}
        self.offset = {}
        pos = 0
        for b in self.boxers:
            self.offset[b] = pos
            pos += len(self.days[b])
        self.n = pos
        self.owner = np.empty(self.n, dtype=int)
        for i, b in enumerate(self.boxers):
            self.owner[self.offset[b]:self.offset[b] + len(self.days[b])] = i
        wk, lk = [], []
        for w, l, d in games:
            wk.append(self.offset[w] + int(np.searchsorted(self.days[w], d)))
            lk.append(self.offset[l] + int(np.searchsorted(self.days[l], d)))
        self.win_knot = np.array(wk, dtype=int)
        self.lose_knot = np.array(lk, dtype=int)
        # per boxer: game indices and sign (+1 won, -1 lost) with local knot index
        self.by_boxer: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}
        for b in self.boxers:
            lo, hi = self.offset[b], self.offset[b] + len(self.days[b])
            won = np.nonzero((self.win_knot >= lo) & (self.win_knot < hi))[0]
            lost = np.nonzero((self.lose_knot >= lo) & (self.lose_knot < hi))[0]
            local = np.concatenate([self.win_knot[won] - lo, self.lose_knot[lost] - lo])
            other = np.concatenate([self.lose_knot[won], self.win_knot[lost]])
            sign = np.concatenate([np.ones(len(won)), -np.ones(len(lost))])
            self.by_boxer[b] = (local, other, sign, np.concatenate([won, lost]))


def _tridiag_solve(diag: np.ndarray, off: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric tridiagonal system (Thomas algorithm)."""
    n = len(diag)
    c = np.zeros(n)
    d = np.zeros(n)
    c_prev = 0.0
    d_prev = 0.0
    for i in range(n):
        denom = diag[i] - (off[i - 1] * c_prev if i > 0 else 0.0)
        c[i] = off[i] / denom if i < n - 1 else 0.0
        d[i] = (rhs[i] - (off[i - 1] * d_prev if i > 0 else 0.0)) / denom
        c_prev, d_prev = c[i], d[i]
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def _whr_objective(prob: _WhrProblem, r: np.ndarray, w2: float, prior_var: float) -> float:
    total = float(np.sum(_log_sigmoid(r[prob.win_knot] - r[prob.lose_knot])))
    for b in prob.boxers:
        lo = prob.offset[b]
        days = prob.days[b]
        rb = r[lo:lo + len(days)]
        total -= rb[0] ** 2 / (2.0 * prior_var)
        if len(days) > 1:
            v = w2 * np.diff(days)
            total -= float(np.sum(np.diff(rb) ** 2 / (2.0 * v)))
    return total


def _local_objective(prob, r, b, rb, w2, prior_var) -> float:
    local, other, sign, _ = prob.by_boxer[b]
    days = prob.days[b]
    val = float(np.sum(_log_sigmoid(sign * (rb[local] - r[other])))) - rb[0] ** 2 / (2.0 * prior_var)
    if len(days) > 1:
        val -= float(np.sum(np.diff(rb) ** 2 / (2.0 * w2 * np.diff(days))))
    return val


def whr_fit(
    edges: Sequence[MatchEdge],
    w2: float = WHR_W2,
    prior_var: float = WHR_PRIOR_VAR,
    tol: float = 1e-6,
    max_sweeps: int = 200,
    init: WhrState | None = None,
) -> WhrState:
    """MAP rating trajectories under a Bradley-Terry likelihood and a Wiener
    prior (variance ``w2`` per day) anchored by N(0, prior_var) on each
    boxer's first knot.

    Each sweep takes one damped Newton step on every boxer's whole trajectory
    (tridiagonal Hessian), halving the step until that boxer's terms of the
    objective do not decrease, so the objective never decreases. Stops when
    the largest rating change drops below ``tol``.
    """
    games = [(e.winner_id, e.b if e.winner == "a" else e.a, e.date.toordinal()) for e in edges]
    if not games:
        raise RatingError("whr_fit needs at least one match")
    prob = _WhrProblem(games)
    r = np.zeros(prob.n)
    if init is not None:
        for b in prob.boxers:
            if b in init.days:
                lo = prob.offset[b]
                r[lo:lo + len(prob.days[b])] = np.interp(prob.days[b], init.days[b], init.ratings[b])
    trace = [_whr_objective(prob, r, w2, prior_var)]
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_step = 0.0
        for b in prob.boxers:
            lo = prob.offset[b]
            days = prob.days[b]
            k = len(days)
            rb = r[lo:lo + k].copy()
            local, other, sign, _ = prob.by_boxer[b]
            p = _sigmoid(sign * (rb[local] - r[other]))
            grad = np.zeros(k)
            hess = np.zeros(k)
            np.add.at(grad, local, sign * (1.0 - p))
            np.add.at(hess, local, -p * (1.0 - p))
            grad[0] -= rb[0] / prior_var
            hess[0] -= 1.0 / prior_var
            off = np.zeros(max(k - 1, 0))
            if k > 1:
                inv_v = 1.0 / (w2 * np.diff(days))
                diff = np.diff(rb)
                grad[:-1] += diff * inv_v
                grad[1:] -= diff * inv_v
                hess[:-1] -= inv_v
                hess[1:] -= inv_v
                off = inv_v
            step = _tridiag_solve(hess, off, -grad)
            before = _local_objective(prob, r, b, rb, w2, prior_var)
            for _ in range(60):
                cand = rb + step
                if _local_objective(prob, r, b, cand, w2, prior_var) >= before:
                    break
                step = step / 2.0
            else:
                step = np.zeros(k)
            r[lo:lo + k] = rb + step
            max_step = max(max_step, float(np.max(np.abs(step))))
        trace.append(_whr_objective(prob, r, w2, prior_var))
        if max_step < tol:
            converged = True
            break
    if not converged:
        log.warning("WHR did not converge in %d sweeps", max_sweeps)
    state = WhrState(w2=w2, prior_var=prior_var, tol=tol, sweeps=sweeps, converged=converged, objective_trace=trace)
    for b in prob.boxers:
        lo = prob.offset[b]
        state.days[b] = prob.days[b].copy()
        state.ratings[b] = r[lo:lo + len(prob.days[b])].copy()
    return state


def whr_objective(state: WhrState, edges: Sequence[MatchEdge]) -> float:
    """Log-posterior (up to a constant) of ``state`` on ``edges``."""
    games = [(e.winner_id, e.b if e.winner == "a" else e.a, e.date.toordinal()) for e in edges]
    prob = _WhrProblem(games)
    r = np.zeros(prob.n)
    for b in prob.boxers:
        lo = prob.offset[b]
        r[lo:lo + len(prob.days[b])] = np.interp(prob.days[b], state.days[b], state.ratings[b])
    return _whr_objective(prob, r, state.w2, state.prior_var)


# -- common prediction and walk-forward harness -------------------------------------

def baseline_predict(state, a: str, b: str, date: dt.date) -> float:
    """Probability that ``a`` beats ``b`` on ``date`` under a rating state."""
    return state.predict(a, b, date)


@dataclass
class BaselineReport:
    system: str
    accuracy: float | None
    n: int
    probabilities: list[float]
    match_ids: list[str]
    ties: list[str]
    state: object = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "system": self.system, "accuracy": self.accuracy, "n": self.n,
            "probabilities": self.probabilities, "match_ids": self.match_ids, "ties": self.ties,
        }


SYSTEMS = ("elo", "glicko", "whr")


def walk_forward(
    system: str,
    edges: Sequence[MatchEdge],
    evaluate_from: dt.date | None = None,
    params: dict | None = None,
) -> BaselineReport:
    """Predict each day's matches from strictly earlier results, then update.

    Accuracy covers edges dated on or after ``evaluate_from`` (all edges when
    None). A probability of exactly 0.5 counts as incorrect.
    """
    params = dict(params or {})
    if system not in SYSTEMS:
        raise RatingError(f"unknown rating system {system!r}")
    days: dict[dt.date, list[MatchEdge]] = {}
    for e in sorted(edges, key=lambda e: e.date):
        days.setdefault(e.date, []).append(e)

    if system == "elo":
        state = EloState(K=params.get("K", ELO_K), initial=params.get("initial", ELO_INITIAL))
    elif system == "glicko":
        state = GlickoState(c=params.get("c", GLICKO_C))
    else:
        state = WhrState(w2=params.get("w2", WHR_W2), prior_var=params.get("prior_var", WHR_PRIOR_VAR))

    seen: list[MatchEdge] = []
    probs, ids, ties = [], [], []
    correct = 0
    for day in sorted(days):
        todays = days[day]
        scored = evaluate_from is None or day >= evaluate_from
        if scored:
            if system == "whr" and seen:
                state = whr_fit(seen, w2=state.w2, prior_var=state.prior_var, init=state if state.days else None)
            for e in todays:
                p = baseline_predict(state, e.a, e.b, e.date)
                probs.append(p)
                ids.append(e.match_id)
                if p == 0.5:
                    ties.append(e.match_id)
                elif (p > 0.5) == (e.winner == "a"):
                    correct += 1
        if system != "whr":
            state.update_day([(e.a, e.b, e.winner) for e in todays], day)
        seen.extend(todays)
    if system == "whr" and seen:
        state = whr_fit(seen, w2=state.w2, prior_var=state.prior_var, init=state if state.days else None)
    n = len(probs)
    return BaselineReport(system, correct / n if n else None, n, probs, ids, ties, state)


def ratings_dump(state, system: str, as_of: dt.date) -> dict:
    return {"system": system, "as_of_date": as_of.isoformat(), "ratings": state.dump()}
