"""Report-producing operations shared by the CLI and the HTTP service.

Each function takes already-loaded domain objects and returns a plain dict
that serializes to JSON without further conversion.
"""
from __future__ import annotations

import datetime as dt
import json
from typing import Sequence

import numpy as np

from . import advisor, predictor, ratings, synth
from .diff import Architecture, ArchitectureError, NonFiniteGradientError, grad_check
from .events import EventLogError, MatchRecord, log_stats
from .graph import BoxerGraph, GraphError, temporal_split
from .indicators import INDICATOR_NAMES, IndicatorError, indicator_report

# exceptions that signal bad input data rather than a bad invocation
DATA_ERRORS = (
    EventLogError, IndicatorError, GraphError, predictor.TrainingError, predictor.CheckpointError,
    advisor.AdvisorError, ratings.RatingError, synth.InfeasibleStyleError, ArchitectureError,
    NonFiniteGradientError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError, ValueError,
)


def parse_date(value) -> dt.date:
    if isinstance(value, dt.date):
        return value
    try:
        return dt.date.fromisoformat(str(value))
    except ValueError:
        raise ValueError(f"invalid date {value!r}; expected YYYY-MM-DD") from None


def ingest(records: Sequence[MatchRecord]) -> dict:
    return {"stats": log_stats(list(records))}


def indicators(records: Sequence[MatchRecord], boxer: str | None = None) -> dict:
    profiles = indicator_report(records)
    if boxer is not None:
        if boxer not in profiles:
            raise ValueError(f"boxer {boxer!r} does not appear in the log")
        profiles = {boxer: profiles[boxer]}
    return {"names": list(INDICATOR_NAMES), "profiles": profiles}


def split_edges(graph: BoxerGraph, cutoff) -> tuple[list, list]:
    if cutoff is None:
        return list(graph.edges), list(graph.edges)
    return temporal_split(graph, parse_date(cutoff))


def evaluation(model: predictor.PredictorModel, graph: BoxerGraph, edges) -> dict:
    report = predictor.evaluate(model, graph, edges)
    out = report.to_dict()
    out["mode"] = model.mode
    return out


def baseline(system: str, graph: BoxerGraph, cutoff=None, params: dict | None = None) -> dict:
    start = parse_date(cutoff) if cutoff is not None else None
    rep = ratings.walk_forward(system, graph.edges, evaluate_from=start, params=params)
    as_of = graph.edges[-1].date if graph.edges else graph.epoch
    out = rep.to_dict()
    out["ratings"] = ratings.ratings_dump(rep.state, system, as_of)
    return out


def predict(model, graph: BoxerGraph, boxer: str, opponent: str, date) -> dict:
    when = parse_date(date)
    p, ind = predictor.predict(graph, model, boxer, opponent, when)
    p_rev, _ = predictor.predict(graph, model, opponent, boxer, when)
    return {
        "boxer": boxer,
        "opponent": opponent,
        "date": when.isoformat(),
        "t": graph.time_of(when),
        "probability": p,
        "probability_reverse": p_rev,
        "indicators_boxer": [float(v) for v in ind[:18]],
        "indicators_opponent": [float(v) for v in ind[18:]],
    }


def recommend(model, graph: BoxerGraph, boxer: str, opponent: str, date, k: int = advisor.TOP_K) -> dict:
    rep = advisor.win_gradient(model, graph, boxer, opponent, parse_date(date), k)
    return rep.to_dict()


def advantage(graph: BoxerGraph, boxer: str, before=None) -> dict:
    cut = parse_date(before) if before is not None else None
    items = advisor.advantage_report(graph, boxer, cut)
    return {"boxer": boxer, "before": cut.isoformat() if cut else None, "indicators": items}


def simulate(config: synth.WorldConfig) -> tuple[dict, bytes, bytes]:
    matches, truth = synth.generate_world(config)
    events, sidecar = synth.world_files(matches, truth)
    return {"world": synth.config_dict(config), "stats": log_stats(matches)}, events, sidecar


def gradcheck(seeds: Sequence[int], hidden=(64, 32), D: int = 8) -> dict:
    arch = Architecture(input_width=2 * (18 + D), hidden=tuple(hidden))
    runs = [grad_check(arch, seed=s) for s in seeds]
    worst = max(r["max_rel_error"] for r in runs)
    return {
        "runs": [{k: v for k, v in r.items()} for r in runs],
        "max_rel_error": worst,
        "architecture": arch.to_dict(),
    }


def jsonable(obj):
    """Recursively convert numpy scalars and arrays."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (dt.date,)):
        return obj.isoformat()
    return obj
