"""HTTP service exposing the analysis core.

``create_app`` optionally loads a graph and a checkpoint at startup; model
endpoints answer 503 until both are present. Data problems map to 422.
"""
from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from . import __version__, ops, synth
from .ops import DATA_ERRORS
from .events import parse_event_log
from .graph import BoxerGraph, load_graph
from .predictor import PredictorModel, load_checkpoint
from .schemas import (
    AdvantageResponse,
    ErrorResponse,
    Health,
    IndicatorsRequest,
    IndicatorsResponse,
    IngestResponse,
    LogRequest,
    PairRequest,
    PredictResponse,
    RecommendRequest,
    RecommendResponse,
    SimulateRequest,
    SimulateResponse,
)


class _State:
    def __init__(self, graph: BoxerGraph | None, model: PredictorModel | None):
        self.graph = graph
        self.model = model

    def require_graph(self) -> BoxerGraph:
        if self.graph is None:
            raise HTTPException(status_code=503, detail="no graph loaded")
        return self.graph

    def require_model(self) -> tuple[PredictorModel, BoxerGraph]:
        if self.model is None:
            raise HTTPException(status_code=503, detail="no checkpoint loaded")
        return self.model, self.require_graph()


def create_app(
    graph_path=None,
    checkpoint_path=None,
    graph: BoxerGraph | None = None,
    model: PredictorModel | None = None,
) -> FastAPI:
    if graph is None and graph_path:
        graph = load_graph(graph_path)
    if model is None and checkpoint_path:
        model = load_checkpoint(checkpoint_path)
    state = _State(graph, model)
    app = FastAPI(title="boxmind", version=__version__)
    app.state.boxmind = state
    errors = {422: {"model": ErrorResponse}}

    async def _data_error(request: Request, exc: Exception):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    for exc_type in DATA_ERRORS:
        app.add_exception_handler(exc_type, _data_error)

    @app.get("/health", response_model=Health)
    def health():
        return Health(
            status="ok", version=__version__, graph_loaded=state.graph is not None,
            model_loaded=state.model is not None, mode=state.model.mode if state.model else None,
        )

    @app.post("/ingest", response_model=IngestResponse, responses=errors)
    def ingest(req: LogRequest):
        return ops.ingest(parse_event_log(req.log))

    @app.post("/indicators", response_model=IndicatorsResponse, responses=errors)
    def indicators(req: IndicatorsRequest):
        return ops.indicators(parse_event_log(req.log), req.boxer)

    @app.post("/predict", response_model=PredictResponse, responses=errors)
    def predict(req: PairRequest):
        m, g = state.require_model()
        return ops.jsonable(ops.predict(m, g, req.boxer, req.opponent, req.date))

    @app.post("/recommend", response_model=RecommendResponse, responses=errors)
    def recommend(req: RecommendRequest):
        m, g = state.require_model()
        return ops.jsonable(ops.recommend(m, g, req.boxer, req.opponent, req.date, req.k))

    @app.get("/advantage/{boxer}", response_model=AdvantageResponse, responses=errors)
    def advantage(boxer: str, before: str | None = None):
        return ops.jsonable(ops.advantage(state.require_graph(), boxer, before))

    @app.post("/simulate", response_model=SimulateResponse, responses=errors)
    def simulate(req: SimulateRequest):
        overrides = {"seed": req.seed}
        if req.boxers is not None:
            overrides["n_boxers"] = req.boxers
        if req.matches is not None:
            overrides["n_matches"] = req.matches
        world = synth.preset(req.preset, **overrides) if req.preset else synth.WorldConfig(**overrides)
        body, events, sidecar = ops.simulate(world)
        return {**ops.jsonable(body), "events": events.decode("utf-8"), "truth": json.loads(sidecar)}

    return app
