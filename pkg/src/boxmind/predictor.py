"""Match-outcome predictor fusing indicator profiles with time-polynomial
boxer embeddings.

Input row for boxer ``b`` against opponent ``o`` at time ``t``::

    [ z(profile_b) | E_b(t) | z(profile_o) | E_o(t) ]

where ``z`` standardizes with training-edge statistics (a boxer without prior
footage gets the zero vector) and ``E_b(t) = sum_c E_b[c] * t**c``. The trunk
output feeds a 2-logit outcome head (class 0 = first-listed boxer wins) and
a 36-output indicator head forecasting both boxers' standardized match
indicators. Reported win probabilities average both input orderings, so
``predict(a, b) + predict(b, a) == 1``.
"""
from __future__ import annotations

import datetime as dt
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .diff import (
    AdamState,
    Architecture,
    ParamSet,
    adam_step,
    backward,
    forward,
    init_params,
    masked_mse,
    softmax,
    softmax_cross_entropy,
)
from .graph import BoxerGraph, BoxerNode, GraphError, MatchEdge
from .indicators import N_INDICATORS

log = logging.getLogger(__name__)

MODES = ("unified", "indicators_only", "embeddings_only")
STD_FLOOR = 1e-6
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


class CheckpointError(ValueError):
    pass


def normalize_mode(mode: str) -> str:
    m = mode.replace("-", "_")
    if m not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    return m


@dataclass
class TrainConfig:
    lr: float = 0.02
    epochs: int = 800
    weight_decay: float = 1e-5
    alpha: float = 0.02
    beta: float = 1.0
    seed: int = 0
    full_batch: bool = True

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not self.full_batch:
            raise ValueError("only full-batch training is supported")


def embed(node: BoxerNode | np.ndarray, t: float) -> np.ndarray:
    """E(t) = sum_c coeffs[c] * t**c by Horner's scheme."""
    coeffs = node.coeffs if isinstance(node, BoxerNode) else np.asarray(node, dtype=float)
    out = coeffs[-1].copy()
    for c in range(coeffs.shape[0] - 2, -1, -1):
        out = out * t + coeffs[c]
    return out


def _embed_rows(coeffs: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Row-wise Horner for coeffs shaped (n, C, D) and times shaped (n,)."""
    out = coeffs[:, -1, :].copy()
    for c in range(coeffs.shape[1] - 2, -1, -1):
        out = out * t[:, None] + coeffs[:, c, :]
    return out


@dataclass
class PredictorModel:
    arch: Architecture
    params: ParamSet
    boxer_ids: list[str]
    means: np.ndarray
    stds: np.ndarray
    D: int
    C: int
    mode: str = "unified"
    seed: int = 0
    epoch: int = 0
    config: TrainConfig = field(default_factory=TrainConfig)
    adam: AdamState | None = None
    history: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.mode = normalize_mode(self.mode)
        self._index = {b: i for i, b in enumerate(self.boxer_ids)}
        if self.arch.input_width != 2 * (N_INDICATORS + self.D):
            raise ValueError("architecture input width must be 2*(18+D)")

    @property
    def embeddings(self) -> np.ndarray:
        return self.params["embeddings"]

    @property
    def net(self) -> ParamSet:
        return ParamSet({k: v for k, v in self.params.items() if k != "embeddings"})

    @property
    def uses_indicators(self) -> bool:
        return self.mode != "embeddings_only"

    @property
    def uses_embeddings(self) -> bool:
        return self.mode != "indicators_only"

    def index_of(self, boxer_id: str) -> int:
        try:
            return self._index[boxer_id]
        except KeyError:
            raise GraphError(f"unknown boxer {boxer_id!r}") from None

    def standardize(self, raw: np.ndarray) -> np.ndarray:
        return (np.asarray(raw, dtype=float) - self.means) / self.stds

    def destandardize(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.stds + self.means

    def embedding_at(self, boxer_id: str, t: float) -> np.ndarray:
        return embed(self.embeddings[self.index_of(boxer_id)], t)

    def block_masks(self) -> tuple[float, float]:
        return (1.0 if self.uses_indicators else 0.0, 1.0 if self.uses_embeddings else 0.0)

    def assemble(self, prof_1, emb_1, prof_2, emb_2) -> np.ndarray:
        """Input rows with the mode's excluded block zeroed."""
        mi, me = self.block_masks()
        return np.concatenate([
            np.asarray(prof_1) * mi, np.asarray(emb_1) * me,
            np.asarray(prof_2) * mi, np.asarray(emb_2) * me,
        ], axis=-1)

    def with_graph_coeffs(self, graph: BoxerGraph) -> BoxerGraph:
        """Copy of ``graph`` carrying this model's trained embeddings."""
        out = BoxerGraph(self.D, self.C, graph.epoch, graph.span_days, edges=list(graph.edges))
        for bid, node in graph.nodes.items():
            coeffs = self.embeddings[self.index_of(bid)].copy() if bid in self._index else node.coeffs.copy()
            out.nodes[bid] = BoxerNode(bid, coeffs)
        return out


def standardization_stats(edges: Sequence[MatchEdge]) -> tuple[np.ndarray, np.ndarray]:
    rows = [v for e in edges if e.footage for v in (e.ind_a, e.ind_b)]
    if not rows:
        return np.zeros(N_INDICATORS), np.ones(N_INDICATORS)
    arr = np.vstack(rows)
    return arr.mean(axis=0), np.maximum(arr.std(axis=0), STD_FLOOR)


def _profile_input(graph: BoxerGraph, model: PredictorModel, boxer_id: str, before: dt.date) -> np.ndarray:
    prof = graph.profile_at(boxer_id, before)
    if prof.missing:
        return np.zeros(N_INDICATORS)
    return model.standardize(prof.values)


@dataclass
class _Design:
    idx_1: np.ndarray
    idx_2: np.ndarray
    t: np.ndarray
    prof_1: np.ndarray
    prof_2: np.ndarray
    labels: np.ndarray
    targets: np.ndarray
    mask: np.ndarray


def _design(graph: BoxerGraph, model: PredictorModel, edges: Sequence[MatchEdge]) -> _Design:
    """Both orderings of every edge as training rows."""
    idx_1, idx_2, ts, p1, p2, labels, targets, mask = [], [], [], [], [], [], [], []
    cache: dict[tuple[str, dt.date], np.ndarray] = {}

    def prof(bid, date):
        key = (bid, date)
        if key not in cache:
            cache[key] = _profile_input(graph, model, bid, date)
        return cache[key]

    for e in edges:
        za = model.standardize(e.ind_a) if e.footage else np.zeros(N_INDICATORS)
        zb = model.standardize(e.ind_b) if e.footage else np.zeros(N_INDICATORS)
        for first, second, z1, z2, won in ((e.a, e.b, za, zb, e.winner == "a"), (e.b, e.a, zb, za, e.winner == "b")):
            idx_1.append(model.index_of(first))
            idx_2.append(model.index_of(second))
            ts.append(e.t)
            p1.append(prof(first, e.date))
            p2.append(prof(second, e.date))
            labels.append(0 if won else 1)
            targets.append(np.concatenate([z1, z2]))
            mask.append(e.footage)
    return _Design(
        np.array(idx_1, dtype=int), np.array(idx_2, dtype=int), np.array(ts, dtype=float),
        np.array(p1).reshape(-1, N_INDICATORS), np.array(p2).reshape(-1, N_INDICATORS),
        np.array(labels, dtype=int), np.array(targets).reshape(-1, 2 * N_INDICATORS),
        np.array(mask, dtype=bool),
    )


def initial_model(
    graph: BoxerGraph,
    train_edges: Sequence[MatchEdge],
    config: TrainConfig,
    mode: str = "unified",
    hidden: Sequence[int] = (64, 32),
) -> PredictorModel:
    arch = Architecture(
        input_width=2 * (N_INDICATORS + graph.D),
        hidden=tuple(hidden),
        heads=(("outcome", 2), ("indicator", 2 * N_INDICATORS)),
    )
    rng = np.random.default_rng(config.seed)
    net = init_params(arch, rng)
    boxer_ids = list(graph.nodes)
    emb = np.stack([graph.nodes[b].coeffs for b in boxer_ids]).astype(float)
    means, stds = standardization_stats(train_edges)
    return PredictorModel(
        arch=arch, params=net.merged({"embeddings": emb}), boxer_ids=boxer_ids,
        means=means, stds=stds, D=graph.D, C=graph.C, mode=mode, seed=config.seed, config=config,
    )


def _loss_and_grads(model: PredictorModel, design: _Design, alpha: float, beta: float):
    emb = model.embeddings
    mi, me = model.block_masks()
    e1 = _embed_rows(emb[design.idx_1], design.t)
    e2 = _embed_rows(emb[design.idx_2], design.t)
    X = model.assemble(design.prof_1, e1, design.prof_2, e2)
    out, tape = forward(model.params, X, model.arch)
    out_sl = model.arch.head_slice("outcome")
    ind_sl = model.arch.head_slice("indicator")
    ce, g_logits = softmax_cross_entropy(out[:, out_sl], design.labels)
    mse, g_ind = masked_mse(out[:, ind_sl], design.targets, design.mask)
    total = alpha * mse + beta * ce
    g_out = np.zeros_like(out)
    g_out[:, out_sl] = beta * g_logits
    g_out[:, ind_sl] = alpha * g_ind
    grads = backward(tape, g_out)

    D = model.D
    gx = grads.input
    g_e1 = gx[:, N_INDICATORS:N_INDICATORS + D] * me
    g_e2 = gx[:, 2 * N_INDICATORS + D:] * me
    g_emb = np.zeros_like(emb)
    power = np.ones_like(design.t)
    for c in range(model.C):
        np.add.at(g_emb[:, c, :], design.idx_1, g_e1 * power[:, None])
        np.add.at(g_emb[:, c, :], design.idx_2, g_e2 * power[:, None])
        power = power * design.t
    g = dict(grads.params)
    g["embeddings"] = g_emb
    return total, ce, mse, g


def train(
    graph: BoxerGraph,
    train_edges: Sequence[MatchEdge],
    config: TrainConfig | None = None,
    mode: str = "unified",
    hidden: Sequence[int] = (64, 32),
) -> tuple[PredictorModel, list[float]]:
    """Full-batch Adam on ``alpha * MSE(indicators) + beta * CE(outcome)``.

    Every edge contributes both orderings. The MSE term only covers edges
    with footage. Embedding coefficients train jointly with the network.
    Returns the model and the per-epoch total loss (before each update).
    """
    config = config or TrainConfig()
    if not train_edges:
        raise TrainingError("training split is empty")
    model = initial_model(graph, train_edges, config, mode, hidden)
    design = _design(graph, model, train_edges)
    state = AdamState.for_params(model.params, lr=config.lr, weight_decay=config.weight_decay)
    curve, ce_curve, mse_curve = [], [], []
    params = model.params
    for epoch in range(config.epochs):
        model.params = params
        total, ce, mse, grads = _loss_and_grads(model, design, config.alpha, config.beta)
        if not np.isfinite(total):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        curve.append(total)
        ce_curve.append(ce)
        mse_curve.append(mse)
        params, state = adam_step(params, grads, state)
    model.params = params
    model.adam = state
    model.epoch = config.epochs
    model.history = {"loss": curve, "ce": ce_curve, "mse": mse_curve}
    return model, curve


# -- inference -----------------------------------------------------------------

def _resolve_time(graph: BoxerGraph, when) -> tuple[float, dt.date]:
    if isinstance(when, dt.date):
        return graph.time_of(when), when
    t = float(when)
    return t, graph.date_of(t)


def pair_inputs(graph: BoxerGraph, model: PredictorModel, boxer_id: str, opponent_id: str, when):
    """(profile_b, E_b(t), profile_o, E_o(t)) with profiles standardized."""
    graph.require(boxer_id)
    graph.require(opponent_id)
    t, date = _resolve_time(graph, when)
    return (
        _profile_input(graph, model, boxer_id, date),
        model.embedding_at(boxer_id, t),
        _profile_input(graph, model, opponent_id, date),
        model.embedding_at(opponent_id, t),
    )


def _pair_rows(model, prof_b, emb_b, prof_o, emb_o) -> np.ndarray:
    return np.vstack([
        model.assemble(prof_b, emb_b, prof_o, emb_o),
        model.assemble(prof_o, emb_o, prof_b, emb_b),
    ])


def win_probability(model: PredictorModel, prof_b, emb_b, prof_o, emb_o) -> tuple[float, np.ndarray]:
    """Antisymmetrized win probability for ``b`` and the 36 forecast raw
    indicators (b's 18 first)."""
    out, _ = forward(model.params, _pair_rows(model, prof_b, emb_b, prof_o, emb_o), model.arch)
    sl = model.arch.head_slice("outcome")
    p_bo = softmax(out[0, sl])[0]
    p_ob = softmax(out[1, sl])[0]
    prob = 0.5 * (p_bo + (1.0 - p_ob))
    ind = model.arch.head_slice("indicator")
    z_first = out[0, ind]
    z_second = out[1, ind]
    b_z = 0.5 * (z_first[:N_INDICATORS] + z_second[N_INDICATORS:])
    o_z = 0.5 * (z_first[N_INDICATORS:] + z_second[:N_INDICATORS])
    indicators = np.concatenate([model.destandardize(b_z), model.destandardize(o_z)])
    return float(prob), indicators


def win_probability_grad(model: PredictorModel, prof_b, emb_b, prof_o, emb_o):
    """Win probability and its gradient w.r.t. every block of the pair input.

    Returns ``(p, {"prof_b", "emb_b", "prof_o", "emb_o"})``.
    """
    X = _pair_rows(model, prof_b, emb_b, prof_o, emb_o)
    out, tape = forward(model.params, X, model.arch)
    sl = model.arch.head_slice("outcome")
    p_bo = softmax(out[0, sl])
    p_ob = softmax(out[1, sl])
    prob = 0.5 * (p_bo[0] + (1.0 - p_ob[0]))
    n = sl.stop - sl.start
    onehot = (np.arange(n) == 0).astype(float)
    g_out = np.zeros_like(out)
    g_out[0, sl] = 0.5 * p_bo[0] * (onehot - p_bo)
    g_out[1, sl] = -0.5 * p_ob[0] * (onehot - p_ob)
    gx = backward(tape, g_out).input
    mi, me = model.block_masks()
    F, D = N_INDICATORS, model.D
    blocks = {
        "prof_b": (gx[0, :F] + gx[1, F + D:2 * F + D]) * mi,
        "emb_b": (gx[0, F:F + D] + gx[1, 2 * F + D:]) * me,
        "prof_o": (gx[0, F + D:2 * F + D] + gx[1, :F]) * mi,
        "emb_o": (gx[0, 2 * F + D:] + gx[1, F:F + D]) * me,
    }
    return float(prob), blocks


def predict(graph: BoxerGraph, model: PredictorModel, boxer_id: str, opponent_id: str, when) -> tuple[float, np.ndarray]:
    """Win probability of ``boxer_id`` and forecast indicators of both sides.

    ``when`` is a date or a normalized graph time; profiles use footage
    strictly before that date.
    """
    return win_probability(model, *pair_inputs(graph, model, boxer_id, opponent_id, when))


# -- evaluation ------------------------------------------------------------------

def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson_r needs two equal-length 1-D sequences")
    if x.size < 2:
        raise ValueError("pearson_r needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.sum(dx * dx))
    syy = float(np.sum(dy * dy))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("undefined correlation: zero variance input")
    r = float(np.sum(dx * dy)) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


@dataclass
class EvalReport:
    accuracy: float
    n: int
    probabilities: list[float]
    match_ids: list[str]
    ties: list[str]
    confusion: dict[str, int]
    pearson: list[float | None]

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(model: PredictorModel, graph: BoxerGraph, edges: Sequence[MatchEdge]) -> EvalReport:
    """Accuracy of side-a win probabilities; exactly 0.5 counts as wrong."""
    if not edges:
        raise ValueError("evaluate needs at least one edge")
    probs, ids, ties = [], [], []
    confusion = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    correct = 0
    pred_ind: list[np.ndarray] = []
    obs_ind: list[np.ndarray] = []
    for e in edges:
        p, ind = predict(graph, model, e.a, e.b, e.date)
        probs.append(p)
        ids.append(e.match_id)
        if e.footage:
            pred_ind.extend([ind[:N_INDICATORS], ind[N_INDICATORS:]])
            obs_ind.extend([e.ind_a, e.ind_b])
        a_won = e.winner == "a"
        if p == 0.5:
            ties.append(e.match_id)
            log.info("tie probability on %s counted as incorrect", e.match_id)
            confusion["fn" if a_won else "fp"] += 1
            continue
        call_a = p > 0.5
        correct += call_a == a_won
        key = ("tp" if a_won else "fp") if call_a else ("fn" if a_won else "tn")
        confusion[key] += 1
    pearson: list[float | None] = [None] * N_INDICATORS
    if len(obs_ind) >= 2:
        P = np.vstack(pred_ind)
        O = np.vstack(obs_ind)
        for k in range(N_INDICATORS):
            try:
                pearson[k] = pearson_r(P[:, k], O[:, k])
            except ValueError:
                pearson[k] = None
    return EvalReport(
        accuracy=correct / len(edges), n=len(edges), probabilities=probs, match_ids=ids,
        ties=ties, confusion=confusion, pearson=pearson,
    )


# -- checkpoints -------------------------------------------------------------------

def checkpoint_dict(model: PredictorModel) -> dict:
    return {
        "format_version": CHECKPOINT_VERSION,
        "tool_version": __version__,
        "arch": model.arch.to_dict(),
        "params": model.params.to_dict(),
        "adam": model.adam.to_dict() if model.adam is not None else None,
        "seed": model.seed,
        "epoch": model.epoch,
        "config": asdict(model.config),
        "D": model.D,
        "C": model.C,
        "mode": model.mode,
        "boxers": list(model.boxer_ids),
        "standardization": {"means": [float(v) for v in model.means], "stds": [float(v) for v in model.stds]},
    }


def checkpoint_bytes(model: PredictorModel) -> bytes:
    return (json.dumps(checkpoint_dict(model), separators=(",", ":")) + "\n").encode("utf-8")


def save_checkpoint(model: PredictorModel, path) -> None:
    Path(path).write_bytes(checkpoint_bytes(model))


def model_from_dict(doc: dict) -> PredictorModel:
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format_version {doc.get('format_version')!r}")
    try:
        arch = Architecture.from_dict(doc["arch"])
        params = ParamSet.from_dict(doc["params"])
        std = doc["standardization"]
        expected = dict(arch.param_shapes())
        expected["embeddings"] = (len(doc["boxers"]), int(doc["C"]), int(doc["D"]))
        for k, shape in expected.items():
            if k not in params or params[k].shape != tuple(shape):
                raise CheckpointError(f"checkpoint parameter {k!r} missing or mis-shaped")
        return PredictorModel(
            arch=arch, params=params, boxer_ids=list(doc["boxers"]),
            means=np.asarray(std["means"], dtype=float), stds=np.asarray(std["stds"], dtype=float),
            D=int(doc["D"]), C=int(doc["C"]), mode=doc["mode"], seed=int(doc["seed"]),
            epoch=int(doc["epoch"]), config=TrainConfig(**doc["config"]),
            adam=AdamState.from_dict(doc["adam"]) if doc.get("adam") else None,
        )
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"corrupted checkpoint: {exc}") from None


def load_checkpoint(path) -> PredictorModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupted checkpoint: {exc.msg}") from None
    return model_from_dict(doc)
