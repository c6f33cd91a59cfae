import json
from pathlib import Path

import pytest

from boxmind import __version__, synth
from boxmind.cli import DEFAULTS, main


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("BOXMIND_CONFIG", raising=False)
    return tmp_path


def report(path="reports"):
    return lambda name: json.loads((Path(path) / f"{name}.json").read_text())


@pytest.fixture
def small_world(workdir):
    assert main(["simulate", "--seed", "7", "--boxers", "10", "--matches", "50", "--out-dir", "w"]) == 0
    assert main(["graph", "build", "w/events.jsonl", "--out", "g.json", "--D", "4", "--seed", "1"]) == 0
    return workdir


def test_simulate_twice_identical(workdir):
    for out in ("a", "b"):
        assert main(["simulate", "--seed", "7", "--boxers", "10", "--matches", "50", "--out-dir", out]) == 0
    for name in ("events.jsonl", "truth.json"):
        assert (workdir / "a" / name).read_bytes() == (workdir / "b" / name).read_bytes()
    rep = report()("simulate")
    assert rep["tool"] == "boxmind" and rep["version"] == __version__ and rep["seed"] == 7
    assert rep["result"]["stats"]["matches"] == 50


def test_pipeline_and_reports(small_world, capsys):
    assert main(["ingest", "w/events.jsonl"]) == 0
    assert main(["indicators", "w/events.jsonl", "--boxer", "B01"]) == 0
    assert main(["train", "--graph", "g.json", "--out", "ck.json", "--seed", "0", "--epochs", "40",
                 "--hidden", "8", "--cutoff", "2023-01-01"]) == 0
    assert main(["eval", "--graph", "g.json", "--checkpoint", "ck.json", "--cutoff", "2023-01-01"]) == 0
    for system in ("elo", "glicko", "whr"):
        assert main(["baseline", system, "--graph", "g.json", "--cutoff", "2023-01-01"]) == 0
    assert main(["predict", "B01", "B02", "--date", "2023-06-01", "--graph", "g.json", "--checkpoint", "ck.json"]) == 0
    assert main(["recommend", "B01", "B02", "--date", "2023-06-01", "--graph", "g.json", "--checkpoint", "ck.json"]) == 0
    assert main(["advantage", "B01", "--graph", "g.json"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 10 and "accuracy" in out[3]
    r = report()
    assert r("ingest")["result"]["stats"]["matches"] == 50
    assert list(r("indicators")["result"]["profiles"]) == ["B01"]
    assert r("train")["config"]["hidden"] == [8]
    assert {r(f"baseline-{s}")["result"]["system"] for s in ("elo", "glicko", "whr")} == {"elo", "glicko", "whr"}
    p = r("predict")["result"]
    assert p["probability"] + p["probability_reverse"] == pytest.approx(1.0, abs=1e-12)
    assert len(r("recommend")["result"]["top5"]) <= 5
    assert len(r("advantage")["result"]["indicators"]) == 18


def test_train_is_bit_reproducible(small_world):
    args = ["train", "--graph", "g.json", "--seed", "3", "--epochs", "30", "--hidden", "8"]
    assert main(args + ["--out", "a.json"]) == 0
    assert main(args + ["--out", "b.json"]) == 0
    assert Path("a.json").read_bytes() == Path("b.json").read_bytes()


def test_inputs_not_mutated(small_world):
    before = {p: Path(p).read_bytes() for p in ("w/events.jsonl", "g.json")}
    main(["train", "--graph", "g.json", "--out", "ck.json", "--seed", "0", "--epochs", "5", "--hidden", "4"])
    main(["graph", "build", "w/events.jsonl", "--out", "g2.json"])
    assert before == {p: Path(p).read_bytes() for p in before}


def test_recommend_embeddings_only_exits_2(small_world, capsys):
    main(["train", "--graph", "g.json", "--out", "e.json", "--seed", "0", "--epochs", "5",
          "--mode", "embeddings-only", "--hidden", "4"])
    code = main(["recommend", "B01", "B02", "--date", "2023-06-01", "--graph", "g.json", "--checkpoint", "e.json"])
    assert code == 2
    assert "embeddings_only" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["train", "--bogus"], [], ["graph"], ["simulate"],
                                  ["train", "--graph", "g.json", "--out", "x.json"]])
def test_usage_errors_exit_1(workdir, argv, capsys):
    code = None
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1
    assert capsys.readouterr().err


@pytest.mark.parametrize("argv", [["ingest", "missing.jsonl"], ["advantage", "B01", "--graph", "nope.json"]])
def test_data_errors_exit_2(workdir, argv):
    assert main(argv) == 2


def test_bad_log_exits_2(workdir, capsys):
    Path("bad.jsonl").write_text('{"type":"match","match_id":"m","date":"2023-01-01","boxer_a":"A","boxer_b":"A","winner":"a"}\n')
    assert main(["ingest", "bad.jsonl"]) == 2
    assert "line 1" in capsys.readouterr().err


def test_config_precedence(small_world):
    Path("cfg.json").write_text(json.dumps({"epochs": 3, "hidden": [4], "seed": 5, "lr": 0.5}))
    assert main(["--config", "cfg.json", "train", "--graph", "g.json", "--out", "ck.json", "--lr", "0.01"]) == 0
    cfg = report()("train")["config"]
    assert cfg["epochs"] == 3 and cfg["seed"] == 5 and cfg["hidden"] == [4]
    assert cfg["lr"] == 0.01
    assert cfg["weight_decay"] == DEFAULTS["weight_decay"]


def test_config_from_environment(small_world, monkeypatch):
    Path("env.json").write_text(json.dumps({"reports_dir": "elsewhere", "gradcheck_seeds": 1, "hidden": [3], "D": 2}))
    monkeypatch.setenv("BOXMIND_CONFIG", "env.json")
    assert main(["gradcheck"]) == 0
    rep = report("elsewhere")("gradcheck")
    assert rep["result"]["max_rel_error"] < 1e-5 and len(rep["result"]["runs"]) == 1


def test_nested_config_rejected(small_world):
    Path("nested.json").write_text(json.dumps({"train": {"epochs": 3}}))
    assert main(["--config", "nested.json", "ingest", "w/events.jsonl"]) == 2


def test_global_options_after_command(small_world):
    assert main(["ingest", "w/events.jsonl", "--report", "out/ing.json"]) == 0
    assert json.loads(Path("out/ing.json").read_text())["command"] == "ingest"


def test_ablation_direction_on_strength_world(workdir):
    """Indicators alone trail embeddings alone when outcomes follow latent strength."""
    acc = {"indicators_only": [], "embeddings_only": []}
    for seed in range(4):
        cfg = synth.WorldConfig(n_boxers=30, n_matches=400, rounds_per_match=1, round_seconds=60, archetypes=2,
                                archetype_spread=0.005, payoff_scale=0.0, strength_sd=1.5, drift=0.0, seed=seed)
        events, _ = synth.world_files(*synth.generate_world(cfg))
        Path("e.jsonl").write_bytes(events)
        assert main(["graph", "build", "e.jsonl", "--out", "s.json"]) == 0
        dates = sorted(e["date"] for e in json.loads(Path("s.json").read_text())["edges"])
        cut = dates[int(0.7 * len(dates))]
        for mode in acc:
            assert main(["train", "--graph", "s.json", "--out", "m.json", "--mode", mode.replace("_", "-"),
                         "--seed", "0", "--cutoff", cut, "--epochs", "400", "--hidden", "32,16"]) == 0
            assert main(["eval", "--graph", "s.json", "--checkpoint", "m.json", "--cutoff", cut]) == 0
            acc[mode].append(report()("eval")["result"]["accuracy"])
    mean = {k: sum(v) / len(v) for k, v in acc.items()}
    assert mean["indicators_only"] < mean["embeddings_only"]
