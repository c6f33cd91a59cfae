"""The competitive network: boxers as nodes, matches as dated edges."""
from __future__ import annotations

import datetime as dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .events import MatchRecord
from .indicators import N_INDICATORS, IndicatorVector, match_indicators, mean_profile

FORMAT_VERSION = 1
EMBED_INIT_STD = 0.1


class GraphError(ValueError):
    pass


@dataclass
class BoxerNode:
    """A boxer. ``coeffs[c]`` is the D-vector multiplying ``t**c``."""

    boxer_id: str
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)

    @property
    def C(self) -> int:
        return self.coeffs.shape[0]

    @property
    def D(self) -> int:
        return self.coeffs.shape[1]


@dataclass
class MatchEdge:
    match_id: str
    a: str
    b: str
    date: dt.date
    t: float
    winner: str
    ind_a: np.ndarray | None = None
    ind_b: np.ndarray | None = None

    @property
    def footage(self) -> bool:
        return self.ind_a is not None

    @property
    def winner_id(self) -> str:
        return self.a if self.winner == "a" else self.b

    def side_of(self, boxer_id: str) -> str:
        if boxer_id == self.a:
            return "a"
        if boxer_id == self.b:
            return "b"
        raise GraphError(f"{boxer_id!r} not in edge {self.match_id!r}")

    def indicators_of(self, boxer_id: str) -> np.ndarray | None:
        return self.ind_a if self.side_of(boxer_id) == "a" else self.ind_b

    def opponent_of(self, boxer_id: str) -> str:
        return self.b if self.side_of(boxer_id) == "a" else self.a


def _opt_equal(x, y) -> bool:
    if x is None or y is None:
        return x is None and y is None
    return np.array_equal(x, y)


@dataclass
class BoxerGraph:
    D: int
    C: int
    epoch: dt.date
    span_days: int
    nodes: dict[str, BoxerNode] = field(default_factory=dict)
    edges: list[MatchEdge] = field(default_factory=list)

    def __post_init__(self):
        self._history: dict[str, list[tuple[dt.date, np.ndarray]]] | None = None

    def time_of(self, date: dt.date) -> float:
        if self.span_days == 0:
            return 0.0
        return (date - self.epoch).days / self.span_days

    def date_of(self, t: float) -> dt.date:
        return self.epoch + dt.timedelta(days=int(math.floor(t * self.span_days + 1e-9)))

    @property
    def boxer_ids(self) -> list[str]:
        return list(self.nodes)

    def require(self, boxer_id: str) -> BoxerNode:
        try:
            return self.nodes[boxer_id]
        except KeyError:
            raise GraphError(f"unknown boxer {boxer_id!r}") from None

    def _footage_history(self) -> dict[str, list[tuple[dt.date, np.ndarray]]]:
        if self._history is None:
            hist: dict[str, list[tuple[dt.date, np.ndarray]]] = {b: [] for b in self.nodes}
            for e in self.edges:
                if e.footage:
                    hist[e.a].append((e.date, e.ind_a))
                    hist[e.b].append((e.date, e.ind_b))
            self._history = hist
        return self._history

    def profile_at(self, boxer_id: str, before: dt.date) -> IndicatorVector:
        """Mean per-match indicators over footage edges dated before ``before``."""
        self.require(boxer_id)
        vectors = [IndicatorVector(v) for d, v in self._footage_history()[boxer_id] if d < before]
        return mean_profile(vectors)

    def samples_of(self, boxer_id: str, before: dt.date | None = None) -> list[np.ndarray]:
        return [v for d, v in self._footage_history()[boxer_id] if before is None or d < before]

    def invalidate(self):
        self._history = None

    def __eq__(self, other):
        if not isinstance(other, BoxerGraph):
            return NotImplemented
        if (self.D, self.C, self.epoch, self.span_days) != (other.D, other.C, other.epoch, other.span_days):
            return False
        if list(self.nodes) != list(other.nodes):
            return False
        for k, n in self.nodes.items():
            if not np.array_equal(n.coeffs, other.nodes[k].coeffs):
                return False
        if len(self.edges) != len(other.edges):
            return False
        for e, f in zip(self.edges, other.edges):
            if (e.match_id, e.a, e.b, e.date, e.t, e.winner) != (f.match_id, f.a, f.b, f.date, f.t, f.winner):
                return False
            if not (_opt_equal(e.ind_a, f.ind_a) and _opt_equal(e.ind_b, f.ind_b)):
                return False
        return True


def init_coeffs(rng: np.random.Generator, D: int, C: int) -> np.ndarray:
    return rng.normal(0.0, EMBED_INIT_STD, size=(C, D))


def build_graph(matches: Sequence[MatchRecord], D: int = 8, C: int = 2, seed: int = 0) -> BoxerGraph:
    """One node per boxer (sorted by id), one edge per match (sorted by date).

    Edge times are the day count from the earliest match divided by the full
    date span, so the first match sits at t=0 and the last at t=1.
    """
    if D < 1 or C < 1:
        raise GraphError("D and C must be >= 1")
    if not matches:
        raise GraphError("cannot build a graph from zero matches")
    dates = [m.date for m in matches]
    epoch = min(dates)
    span = (max(dates) - epoch).days
    graph = BoxerGraph(D=D, C=C, epoch=epoch, span_days=span)
    rng = np.random.default_rng(seed)
    for bid in sorted({b for m in matches for b in (m.boxer_a, m.boxer_b)}):
        graph.nodes[bid] = BoxerNode(bid, init_coeffs(rng, D, C))
    for m in sorted(matches, key=lambda m: m.date):
        ia = match_indicators(m, m.boxer_a)
        ib = match_indicators(m, m.boxer_b)
        graph.edges.append(MatchEdge(
            match_id=m.match_id, a=m.boxer_a, b=m.boxer_b, date=m.date,
            t=graph.time_of(m.date), winner=m.winner,
            ind_a=None if ia is None else np.array(ia.values),
            ind_b=None if ib is None else np.array(ib.values),
        ))
    return graph


def temporal_split(graph: BoxerGraph, cutoff: dt.date) -> tuple[list[MatchEdge], list[MatchEdge]]:
    train = [e for e in graph.edges if e.date < cutoff]
    test = [e for e in graph.edges if e.date >= cutoff]
    return train, test


def graph_to_dict(graph: BoxerGraph) -> dict:
    def ind(v):
        return None if v is None else [float(x) for x in v]

    return {
        "format_version": FORMAT_VERSION,
        "D": graph.D,
        "C": graph.C,
        "epoch": graph.epoch.isoformat(),
        "span_days": graph.span_days,
        "nodes": [
            {"boxer_id": n.boxer_id, "coeffs": [[float(x) for x in row] for row in n.coeffs]}
            for n in graph.nodes.values()
        ],
        "edges": [
            {
                "match_id": e.match_id, "a": e.a, "b": e.b, "date": e.date.isoformat(),
                "t": e.t, "winner": e.winner, "footage": e.footage,
                "ind_a": ind(e.ind_a), "ind_b": ind(e.ind_b),
            }
            for e in graph.edges
        ],
    }


def _vector(raw, where: str) -> np.ndarray | None:
    if raw is None:
        return None
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (N_INDICATORS,):
        raise GraphError(f"{where}: expected {N_INDICATORS} indicators")
    return arr


def graph_from_dict(doc: dict) -> BoxerGraph:
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise GraphError("corrupted graph file: missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise GraphError(f"unsupported graph format_version {doc['format_version']!r} (expected {FORMAT_VERSION})")
    try:
        D, C = int(doc["D"]), int(doc["C"])
        graph = BoxerGraph(D=D, C=C, epoch=dt.date.fromisoformat(doc["epoch"]), span_days=int(doc["span_days"]))
        for n in doc["nodes"]:
            coeffs = np.asarray(n["coeffs"], dtype=float)
            if coeffs.shape != (C, D):
                raise GraphError(
                    f"shape mismatch for {n['boxer_id']!r}: coeffs {coeffs.shape}, header declares C={C}, D={D}"
                )
            if not np.all(np.isfinite(coeffs)):
                raise GraphError(f"non-finite coefficients for {n['boxer_id']!r}")
            graph.nodes[n["boxer_id"]] = BoxerNode(n["boxer_id"], coeffs)
        for e in doc["edges"]:
            edge = MatchEdge(
                match_id=e["match_id"], a=e["a"], b=e["b"], date=dt.date.fromisoformat(e["date"]),
                t=float(e["t"]), winner=e["winner"],
                ind_a=_vector(e["ind_a"], e["match_id"]), ind_b=_vector(e["ind_b"], e["match_id"]),
            )
            if bool(e["footage"]) != edge.footage or (edge.ind_a is None) != (edge.ind_b is None):
                raise GraphError(f"footage flag inconsistent on {edge.match_id!r}")
            graph.edges.append(edge)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GraphError):
            raise
        raise GraphError(f"corrupted graph file: {exc}") from None
    check_graph(graph)
    return graph


def check_graph(graph: BoxerGraph):
    prev = None
    for e in graph.edges:
        for bid in (e.a, e.b):
            if bid not in graph.nodes:
                raise GraphError(f"edge {e.match_id!r} references unknown boxer {bid!r}")
        if e.winner not in ("a", "b"):
            raise GraphError(f"edge {e.match_id!r} has bad winner {e.winner!r}")
        if prev is not None and e.date < prev:
            raise GraphError("edges not sorted by date")
        if abs(e.t - graph.time_of(e.date)) > 1e-12:
            raise GraphError(f"edge {e.match_id!r} time inconsistent with date")
        prev = e.date


def save_graph(graph: BoxerGraph, path) -> None:
    check_graph(graph)
    Path(path).write_text(json.dumps(graph_to_dict(graph), indent=1) + "\n", encoding="utf-8")


def load_graph(path) -> BoxerGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphError(f"corrupted graph file: {exc.msg}") from None
    return graph_from_dict(doc)


def edges_involving(edges: Iterable[MatchEdge], boxer_id: str) -> list[MatchEdge]:
    return [e for e in edges if boxer_id in (e.a, e.b)]
