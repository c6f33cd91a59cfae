"""Strategy recommendation from win-probability gradients, and KDE-based
advantage labels."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .graph import BoxerGraph
from .indicators import INDICATOR_NAMES, N_INDICATORS
from .predictor import PredictorModel, _resolve_time, pair_inputs, win_probability_grad

log = logging.getLogger(__name__)

TOP_K = 5
ADVANTAGE_THRESHOLD = 0.5
BANDWIDTH_FLOOR = 1e-9


class AdvisorError(ValueError):
    pass


@dataclass
class GradientReport:
    boxer: str
    opponent: str
    t: float
    probability: float
    gradients_std: np.ndarray
    gradients_raw: np.ndarray
    top: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "boxer": self.boxer,
            "opponent": self.opponent,
            "t": self.t,
            "probability": self.probability,
            "gradients_std": [float(g) for g in self.gradients_std],
            "gradients_raw": [float(g) for g in self.gradients_raw],
            "top5": [{"index": k, "name": INDICATOR_NAMES[k - 1], "gradient": g} for k, g in self.top],
        }


def recommend(gradients, k: int = TOP_K) -> list[tuple[int, float]]:
    """The ``k`` largest strictly positive gradients as (1-based index, value),
    ties broken by lower index."""
    if isinstance(gradients, GradientReport):
        gradients = gradients.gradients_std
    g = np.asarray(gradients, dtype=float)
    ranked = sorted(((-float(v), i) for i, v in enumerate(g) if v > 0))
    return [(i + 1, -nv) for nv, i in ranked[:k]]


def win_gradient(model: PredictorModel, graph: BoxerGraph, boxer_id: str, opponent_id: str, when, k: int = TOP_K) -> GradientReport:
    """Gradient of the boxer's antisymmetrized win probability with respect to
    their 18 standardized profile inputs, with the top-k recommendation."""
    if not model.uses_indicators:
        raise AdvisorError(
            "model was trained in embeddings_only mode: it ignores indicator inputs, "
            "so the win-probability gradient is identically zero"
        )
    inputs = pair_inputs(graph, model, boxer_id, opponent_id, when)
    p, blocks = win_probability_grad(model, *inputs)
    g_std = blocks["prof_b"]
    t, _ = _resolve_time(graph, when)
    return GradientReport(
        boxer=boxer_id, opponent=opponent_id, t=t, probability=p,
        gradients_std=g_std, gradients_raw=g_std / model.stds, top=recommend(g_std, k),
    )


# -- advantage probabilities --------------------------------------------------------

def silverman_bandwidth(samples: Sequence[float]) -> float:
    """0.9 * min(sd, IQR/1.34) * n**(-1/5), floored at 1e-9."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise AdvisorError("bandwidth needs at least two samples")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    h = 0.9 * min(sd, (q75 - q25) / 1.34) * x.size ** (-0.2)
    if h < BANDWIDTH_FLOOR:
        log.warning("degenerate sample spread; bandwidth floored at %g", BANDWIDTH_FLOOR)
        h = BANDWIDTH_FLOOR
    return h


def prob_greater(x: Sequence[float], y: Sequence[float], h_x: float | None = None, h_y: float | None = None) -> float:
    """P(X > Y) for independent Gaussian KDEs of ``x`` and ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h_x = silverman_bandwidth(x) if h_x is None else h_x
    h_y = silverman_bandwidth(y) if h_y is None else h_y
    scale = math.sqrt(h_x ** 2 + h_y ** 2)
    return float(np.mean(ndtr((x[:, None] - y[None, :]) / scale)))


def prob_paired_greater(u: Sequence[float], v: Sequence[float]) -> float:
    """P(U > V) under the product-kernel KDE of paired samples (u_i, v_i)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise AdvisorError("paired samples must have equal length")
    scale = math.sqrt(silverman_bandwidth(u) ** 2 + silverman_bandwidth(v) ** 2)
    return float(np.mean(ndtr((u - v) / scale)))


@dataclass
class AdvantageQuery:
    """Samples for one boxer: arrays shaped (n, 18).

    ``boxer`` holds the boxer's per-match indicators, ``level`` the division
    pool, and ``paired_boxer``/``paired_opponent`` the two sides of each of the
    boxer's historical matches.
    """

    boxer: np.ndarray
    level: np.ndarray
    paired_boxer: np.ndarray
    paired_opponent: np.ndarray

    def __post_init__(self):
        self.boxer = np.asarray(self.boxer, dtype=float).reshape(-1, N_INDICATORS)
        self.level = np.asarray(self.level, dtype=float).reshape(-1, N_INDICATORS)
        self.paired_boxer = np.asarray(self.paired_boxer, dtype=float).reshape(-1, N_INDICATORS)
        self.paired_opponent = np.asarray(self.paired_opponent, dtype=float).reshape(-1, N_INDICATORS)
        if self.paired_boxer.shape != self.paired_opponent.shape:
            raise AdvisorError("paired pools must have equal size")


def advantage_probability(query: AdvantageQuery, k: int) -> float:
    """max(P(boxer > division pool), P(boxer > own opponents)) on indicator
    ``k`` (1-based). The paired term is skipped with fewer than two matches."""
    if not 1 <= k <= N_INDICATORS:
        raise AdvisorError(f"indicator index {k} out of range")
    j = k - 1
    if len(query.boxer) < 2 or len(query.level) < 2:
        raise AdvisorError("advantage needs at least two boxer samples and two pool samples")
    p = prob_greater(query.boxer[:, j], query.level[:, j])
    if len(query.paired_boxer) >= 2:
        p = max(p, prob_paired_greater(query.paired_boxer[:, j], query.paired_opponent[:, j]))
    return float(min(1.0, max(0.0, p)))


def advantage_labels(probabilities: Sequence[float]) -> list[int]:
    out = []
    for p in probabilities:
        if not 0.0 <= p <= 1.0:
            raise AdvisorError(f"probability {p} outside [0, 1]")
        out.append(1 if p > ADVANTAGE_THRESHOLD else 0)
    return out


def advantage_query(graph: BoxerGraph, boxer_id: str, before=None) -> AdvantageQuery:
    """Build the sample pools for ``boxer_id`` from the graph's footage edges."""
    graph.require(boxer_id)
    boxer, level, pb, po = [], [], [], []
    for e in graph.edges:
        if not e.footage or (before is not None and e.date >= before):
            continue
        level.extend([e.ind_a, e.ind_b])
        if boxer_id in (e.a, e.b):
            mine, theirs = (e.ind_a, e.ind_b) if e.a == boxer_id else (e.ind_b, e.ind_a)
            boxer.append(mine)
            pb.append(mine)
            po.append(theirs)
    return AdvantageQuery(
        np.array(boxer), np.array(level), np.array(pb), np.array(po)
    )


def advantage_report(graph: BoxerGraph, boxer_id: str, before=None) -> list[dict]:
    query = advantage_query(graph, boxer_id, before)
    probs = [advantage_probability(query, k) for k in range(1, N_INDICATORS + 1)]
    labels = advantage_labels(probs)
    return [
        {"index": k, "name": INDICATOR_NAMES[k - 1], "p": p, "label": lab}
        for k, (p, lab) in enumerate(zip(probs, labels), start=1)
    ]


def binary_f1(predicted: Sequence[int], reference: Sequence[int]) -> float | None:
    """F1 on label 1; ``None`` when neither side has any positive label."""
    if len(predicted) != len(reference):
        raise AdvisorError("label vectors differ in length")
    tp = sum(1 for p, r in zip(predicted, reference) if p == 1 and r == 1)
    fp = sum(1 for p, r in zip(predicted, reference) if p == 1 and r != 1)
    fn = sum(1 for p, r in zip(predicted, reference) if p != 1 and r == 1)
    if tp + fp == 0 and tp + fn == 0:
        return None
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)
