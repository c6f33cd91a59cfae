import json

import numpy as np
import pytest

from boxmind import synth
from boxmind.indicators import IndicatorVector, aggregate_indicators, classify_rhythm, invariant_violations
from boxmind.synth import (
    InfeasibleStyleError,
    WorldConfig,
    canonical_payoff,
    generate_event_stream,
    generate_world,
    random_style_params,
)

PROPORTIONS = (0, 3, 6, 9, 11, 13, 14, 15, 16, 17)
RATES = (1, 2, 4, 5, 7, 8, 10, 12)


def test_random_styles_are_realizable_vectors():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = random_style_params(rng).vector()
        assert invariant_violations(v.values) == []


def test_event_stream_deterministic():
    style = random_style_params(np.random.default_rng(3)).vector()
    assert generate_event_stream(style, seed=11) == generate_event_stream(style, seed=11)
    assert generate_event_stream(style, seed=11) != generate_event_stream(style, seed=12)


def test_event_stream_round_trip():
    rng = np.random.default_rng(8)
    for i in range(10):
        p = random_style_params(rng)
        style = p.vector()
        duration = 60.0 * 500 / p.rate
        rnd = generate_event_stream(style, duration=duration, seed=i, n_punches=500)
        got = aggregate_indicators([rnd], "A")
        assert got.punch_count == 500
        for k in PROPORTIONS:
            assert abs(got.values[k] - style.values[k]) <= 0.02
        for k in RATES:
            assert abs(got.values[k] - style.values[k]) <= 0.05 * style.values[k] + 1e-9


def test_zero_close_share_gives_no_close_or_mid():
    p = random_style_params(np.random.default_rng(1))
    vals = p.vector().values.copy()
    vals[0] = 0.0
    vals[2] += vals[1]
    vals[1] = 0.0
    rnd = generate_event_stream(IndicatorVector(vals), duration=300.0, seed=2, n_punches=120)
    assert all(e.dist == "long" for e in rnd.events if e.boxer_id == "A")


def test_infeasible_style_raises():
    p = random_style_params(np.random.default_rng(1))
    vals = p.vector().values.copy()
    vals[1] *= 50.0
    vals[4] *= 50.0
    vals[7] *= 50.0
    with pytest.raises(InfeasibleStyleError):
        generate_event_stream(IndicatorVector(vals), duration=60.0, seed=0, n_punches=20)
    with pytest.raises(InfeasibleStyleError):
        generate_event_stream(p.vector(), duration=0.0)


def test_rhythm_shares_realized():
    p = random_style_params(np.random.default_rng(5))
    rnd = generate_event_stream(p.vector(), duration=600.0, seed=0, n_punches=200)
    labels = classify_rhythm(rnd, "A")
    assert labels.count("proactive") == round(p.proactive * 200)
    assert labels.count("counter") == round(p.counter * 200)


def test_world_deterministic_and_files():
    cfg = WorldConfig(n_boxers=5, n_matches=12, rounds_per_match=1, round_seconds=60, seed=4)
    m1, t1 = generate_world(cfg)
    m2, t2 = generate_world(cfg)
    assert synth.world_files(m1, t1) == synth.world_files(m2, t2)
    sidecar = json.loads(synth.world_files(m1, t1)[1])
    assert len(sidecar["payoff"]) == 18 and len(sidecar["boxers"]) == 5
    assert sorted(sidecar["boxers"][0]) == ["id", "strength_knots", "style"]


def test_world_dates_sorted_and_ids():
    matches, truth = generate_world(WorldConfig(n_boxers=12, n_matches=30, footage_fraction=0.0, seed=1))
    dates = [m.date for m in matches]
    assert dates == sorted(dates)
    assert set(truth.boxers) == {f"B{i:02d}" for i in range(1, 13)}
    assert not any(m.has_footage for m in matches)


def test_saturated_strength_decides_every_match():
    cfg = WorldConfig(n_boxers=2, n_matches=300, payoff=[0.0] * 18, drift=0.0, temperature=1e-3,
                      footage_fraction=0.0, seed=3)
    matches, truth = generate_world(cfg)
    s = {b: bt.strength(0.0) for b, bt in truth.boxers.items()}
    # gap / temperature far beyond 10 logits
    assert abs(s["B1"] - s["B2"]) / cfg.temperature > 10
    strong = max(s, key=s.get)
    assert all(m.winner_id == strong for m in matches)


def test_style_payoff_shifts_outcomes():
    payoff = [0.0] * 18
    payoff[0] = 40.0
    cfg = WorldConfig(n_boxers=30, n_matches=1000, payoff=payoff, strength_sd=0.0, drift=0.0,
                      footage_fraction=0.0, seed=6)
    matches, truth = generate_world(cfg)
    wins = sum(
        1 for m in matches
        if truth.boxers[m.winner_id].style[1] > truth.boxers[m.loser_id].style[1]
    )
    assert wins > 500 + 3 * np.sqrt(1000 * 0.25)


def test_canonical_payoff_properties():
    rng = np.random.default_rng(0)
    sd = rng.uniform(0.1, 2.0, 18)
    w = rng.normal(size=18)
    c = canonical_payoff(w, sd)
    np.testing.assert_allclose(canonical_payoff(c, sd), c, atol=1e-12)
    # realizable styles differ only along directions the payoff still sees
    pa = random_style_params(rng).vector().values
    pb = random_style_params(rng).vector().values
    base = w @ (pa - pb)
    removed = (w - c) @ (pa - pb)
    assert abs(removed) < 1e-9 * max(1.0, abs(base))


def test_config_validation_and_presets():
    with pytest.raises(ValueError):
        WorldConfig(n_boxers=1)
    with pytest.raises(ValueError):
        WorldConfig(payoff=[1.0])
    with pytest.raises(ValueError, match="unknown world preset"):
        synth.preset("nope")
    cfg = synth.preset("linear", seed=9, n_matches=10)
    assert cfg.n_boxers == 40 and cfg.n_matches == 10 and cfg.payoff_standardized


def test_antisymmetric_truth():
    _, truth = generate_world(synth.preset("ablation", n_matches=5, footage_fraction=0.0, seed=2))
    ids = list(truth.boxers)[:6]
    for a in ids:
        for b in ids:
            if a != b:
                assert truth.win_probability(a, b, 0.3) + truth.win_probability(b, a, 0.3) == pytest.approx(1.0)
