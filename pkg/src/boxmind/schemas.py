"""Request and response models for the HTTP service."""
from __future__ import annotations

import datetime as dt
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Health(_Model):
    status: str
    version: str
    graph_loaded: bool
    model_loaded: bool
    mode: Optional[str] = None


class LogRequest(_Model):
    log: str = Field(description="event log in JSON-lines form")


class LogStats(_Model):
    matches: int
    matches_with_footage: int
    boxers: int
    rounds: int
    events: int
    first_date: Optional[str]
    last_date: Optional[str]


class IngestResponse(_Model):
    stats: LogStats


class IndicatorsRequest(LogRequest):
    boxer: Optional[str] = None


class Profile(_Model):
    indicators: list[float] = Field(min_length=18, max_length=18)
    punch_count: int
    footage_minutes: float
    sparse: bool


class IndicatorsResponse(_Model):
    names: list[str]
    profiles: dict[str, Profile]


class PairRequest(_Model):
    boxer: str
    opponent: str
    date: dt.date


class PredictResponse(_Model):
    boxer: str
    opponent: str
    date: str
    t: float
    probability: float = Field(ge=0.0, le=1.0)
    probability_reverse: float = Field(ge=0.0, le=1.0)
    indicators_boxer: list[float]
    indicators_opponent: list[float]


class RecommendRequest(PairRequest):
    k: int = Field(default=5, ge=1, le=18)


class Recommendation(_Model):
    index: int = Field(ge=1, le=18)
    name: str
    gradient: float = Field(gt=0.0)


class RecommendResponse(_Model):
    boxer: str
    opponent: str
    t: float
    probability: float
    gradients_std: list[float]
    gradients_raw: list[float]
    top5: list[Recommendation]


class AdvantageItem(_Model):
    index: int
    name: str
    p: float = Field(ge=0.0, le=1.0)
    label: int


class AdvantageResponse(_Model):
    boxer: str
    before: Optional[str]
    indicators: list[AdvantageItem]


class SimulateRequest(_Model):
    seed: int
    boxers: Optional[int] = Field(default=None, ge=2)
    matches: Optional[int] = Field(default=None, ge=1)
    preset: Optional[str] = None


class SimulateResponse(_Model):
    world: dict
    stats: LogStats
    events: str
    truth: dict


class ErrorResponse(_Model):
    detail: str
