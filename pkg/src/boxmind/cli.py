"""Command-line entry point.

Settings resolve in three layers: built-in defaults, then a flat JSON config
file (``--config`` or ``$BOXMIND_CONFIG``), then command-line flags. Every
command writes a JSON report that embeds the tool version, the seed and the
resolved settings, and prints a one-line summary.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, ops, synth
from .events import parse_event_log
from .graph import build_graph, load_graph, save_graph
from .ops import DATA_ERRORS
from .predictor import TrainConfig, load_checkpoint, normalize_mode, save_checkpoint, train

log = logging.getLogger("boxmind")

CONFIG_ENV = "BOXMIND_CONFIG"

DEFAULTS: dict = {
    "reports_dir": "reports",
    "D": 8,
    "C": 2,
    "hidden": [64, 32],
    "lr": 0.02,
    "epochs": 800,
    "weight_decay": 1e-5,
    "alpha": 0.02,
    "beta": 1.0,
    "mode": "unified",
    "k": 5,
    "elo_K": 32.0,
    "elo_initial": 1500.0,
    "whr_w2": 0.0004,
    "whr_prior_var": 1.0,
    "gradcheck_seeds": 20,
    "preset": None,
    "host": "127.0.0.1",
    "port": 8000,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _hidden(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated widths, got {text!r}") from None


def _global_options(p: argparse.ArgumentParser, default) -> None:
    p.add_argument("--config", default=default, help=f"flat JSON config (default: ${CONFIG_ENV})")
    p.add_argument("--report", default=default, help="report path (default: <reports_dir>/<command>.json)")
    p.add_argument("--reports-dir", dest="reports_dir", default=default)
    p.add_argument("-v", "--verbose", action="store_true", default=default)


class _SubActions(argparse._SubParsersAction):
    """Lets the global options also follow the subcommand."""

    def add_parser(self, name, **kwargs):
        common = argparse.ArgumentParser(add_help=False)
        _global_options(common, argparse.SUPPRESS)
        kwargs.setdefault("parents", [common])
        return super().add_parser(name, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="boxmind", description="Boxing tactics analytics: indicators, outcome models, ratings and advice.")
    p.register("action", "parsers", _SubActions)
    p.add_argument("--version", action="version", version=f"boxmind {__version__}")
    _global_options(p, None)
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    s = sub.add_parser("ingest", help="parse and validate an event log")
    s.add_argument("events", nargs="?")

    s = sub.add_parser("indicators", help="per-boxer indicator profiles")
    s.add_argument("events", nargs="?")
    s.add_argument("--boxer")

    s = sub.add_parser("graph", help="graph operations")
    s.register("action", "parsers", _SubActions)
    gsub = s.add_subparsers(dest="graph_command", parser_class=_Parser, metavar="ACTION")
    g = gsub.add_parser("build", help="build a boxer graph from an event log")
    g.add_argument("events", nargs="?")
    g.add_argument("--out", dest="graph")
    g.add_argument("--D", type=int)
    g.add_argument("--C", type=int)
    g.add_argument("--seed", type=int)

    s = sub.add_parser("train", help="train the outcome predictor")
    s.add_argument("--graph")
    s.add_argument("--out", dest="checkpoint")
    s.add_argument("--mode", choices=["unified", "indicators-only", "embeddings-only", "indicators_only", "embeddings_only"])
    s.add_argument("--seed", type=int)
    s.add_argument("--cutoff", help="train on edges dated before this day")
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--weight-decay", dest="weight_decay", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--hidden", type=_hidden)

    s = sub.add_parser("eval", help="accuracy and indicator correlations")
    s.add_argument("--graph")
    s.add_argument("--checkpoint")
    s.add_argument("--cutoff", help="evaluate edges dated on or after this day")

    s = sub.add_parser("baseline", help="walk-forward rating baseline")
    s.add_argument("system", choices=["elo", "glicko", "whr"])
    s.add_argument("--graph")
    s.add_argument("--cutoff", help="score days on or after this day")

    for name in ("predict", "recommend"):
        s = sub.add_parser(name, help=f"{name} for boxer A against B")
        s.add_argument("boxer")
        s.add_argument("opponent")
        s.add_argument("--date", required=True)
        s.add_argument("--graph")
        s.add_argument("--checkpoint")
        if name == "recommend":
            s.add_argument("--k", type=int)

    s = sub.add_parser("advantage", help="KDE advantage labels for a boxer")
    s.add_argument("boxer")
    s.add_argument("--graph")
    s.add_argument("--before")

    s = sub.add_parser("simulate", help="generate a synthetic world")
    s.add_argument("--seed", type=int)
    s.add_argument("--boxers", type=int)
    s.add_argument("--matches", type=int)
    s.add_argument("--preset", choices=sorted(synth.PRESETS))
    s.add_argument("--out-dir", dest="out_dir")

    s = sub.add_parser("gradcheck", help="reverse mode vs finite differences")
    s.add_argument("--seeds", dest="gradcheck_seeds", type=int)
    s.add_argument("--seed", type=int, help="first seed (default 0)")

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host")
    s.add_argument("--port", type=int)
    s.add_argument("--graph")
    s.add_argument("--checkpoint")
    return p


def load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or any(isinstance(v, dict) for v in doc.values()):
        raise ValueError(f"config {path} must be a flat JSON object")
    return doc


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(load_config(args.config))
    skip = {"config", "command", "graph_command", "verbose", "report"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            cfg[key] = value
    return cfg


def _need(cfg: dict, key: str, what: str):
    if cfg.get(key) is None:
        raise UsageError(f"missing {what} (flag or config key {key!r})")
    return cfg[key]


def _existing(cfg: dict, key: str, what: str) -> Path:
    path = Path(_need(cfg, key, what))
    if not path.exists():
        raise FileNotFoundError(f"{what} not found: {path}")
    return path


def _records(cfg):
    return parse_event_log(_existing(cfg, "events", "event log").read_bytes())


def _write_report(path: Path, report: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(ops.jsonable(report), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _pct(x) -> str:
    return "n/a" if x is None else f"{100 * x:.1f}%"


def run_command(command: str, cfg: dict) -> tuple[dict, str]:
    """Execute one command; return (report body, summary line)."""
    if command == "ingest":
        body = ops.ingest(_records(cfg))
        st = body["stats"]
        return body, f"ingested {st['matches']} matches, {st['boxers']} boxers, {st['events']} events"

    if command == "indicators":
        body = ops.indicators(_records(cfg), cfg.get("boxer"))
        return body, f"profiles for {len(body['profiles'])} boxers"

    if command == "graph build":
        seed = cfg.get("seed", 0)
        g = build_graph(_records(cfg), D=int(cfg["D"]), C=int(cfg["C"]), seed=int(seed))
        out = Path(_need(cfg, "graph", "graph output path (--out)"))
        out.parent.mkdir(parents=True, exist_ok=True)
        save_graph(g, out)
        footage = sum(1 for e in g.edges if e.footage)
        body = {"graph": str(out), "nodes": len(g.nodes), "edges": len(g.edges), "footage_edges": footage}
        return body, f"graph with {len(g.nodes)} nodes and {len(g.edges)} edges -> {out}"

    if command == "train":
        seed = _need(cfg, "seed", "seed")
        g = load_graph(_existing(cfg, "graph", "graph"))
        train_edges, _ = ops.split_edges(g, cfg.get("cutoff"))
        tc = TrainConfig(
            lr=float(cfg["lr"]), epochs=int(cfg["epochs"]), weight_decay=float(cfg["weight_decay"]),
            alpha=float(cfg["alpha"]), beta=float(cfg["beta"]), seed=int(seed),
        )
        mode = normalize_mode(cfg["mode"])
        model, curve = train(g, train_edges, tc, mode=mode, hidden=cfg["hidden"])
        out = Path(_need(cfg, "checkpoint", "checkpoint output path (--out)"))
        out.parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(model, out)
        body = {"checkpoint": str(out), "mode": mode, "train_edges": len(train_edges),
                "final_loss": curve[-1], "loss_curve": curve}
        return body, f"trained {mode} on {len(train_edges)} edges, final loss {curve[-1]:.4f} -> {out}"

    if command == "eval":
        g = load_graph(_existing(cfg, "graph", "graph"))
        model = load_checkpoint(_existing(cfg, "checkpoint", "checkpoint"))
        cut = cfg.get("cutoff")
        edges = ops.split_edges(g, cut)[1]
        if not edges:
            raise ValueError("no edges to evaluate on or after the cutoff")
        body = ops.evaluation(model, g, edges)
        return body, f"{model.mode} accuracy {_pct(body['accuracy'])} on {body['n']} edges"

    if command == "baseline":
        g = load_graph(_existing(cfg, "graph", "graph"))
        system = cfg["system"]
        params = {
            "elo": {"K": float(cfg["elo_K"]), "initial": float(cfg["elo_initial"])},
            "glicko": {},
            "whr": {"w2": float(cfg["whr_w2"]), "prior_var": float(cfg["whr_prior_var"])},
        }[system]
        body = ops.baseline(system, g, cfg.get("cutoff"), params)
        return body, f"{system} walk-forward accuracy {_pct(body['accuracy'])} on {body['n']} edges"

    if command in ("predict", "recommend"):
        g = load_graph(_existing(cfg, "graph", "graph"))
        model = load_checkpoint(_existing(cfg, "checkpoint", "checkpoint"))
        if command == "predict":
            body = ops.predict(model, g, cfg["boxer"], cfg["opponent"], cfg["date"])
            return body, f"P({cfg['boxer']} beats {cfg['opponent']} on {body['date']}) = {body['probability']:.4f}"
        body = ops.recommend(model, g, cfg["boxer"], cfg["opponent"], cfg["date"], int(cfg["k"]))
        idx = ",".join(str(t["index"]) for t in body["top5"]) or "none"
        return body, f"recommended indicators for {cfg['boxer']} vs {cfg['opponent']}: {idx}"

    if command == "advantage":
        g = load_graph(_existing(cfg, "graph", "graph"))
        body = ops.advantage(g, cfg["boxer"], cfg.get("before"))
        adv = [str(i["index"]) for i in body["indicators"] if i["label"]]
        return body, f"{cfg['boxer']} holds an advantage on {len(adv)} indicators: {','.join(adv) or 'none'}"

    if command == "simulate":
        seed = _need(cfg, "seed", "seed")
        overrides = {"seed": int(seed)}
        if cfg.get("boxers") is not None:
            overrides["n_boxers"] = int(cfg["boxers"])
        if cfg.get("matches") is not None:
            overrides["n_matches"] = int(cfg["matches"])
        world = synth.preset(cfg["preset"], **overrides) if cfg.get("preset") else synth.WorldConfig(**overrides)
        body, events, sidecar = ops.simulate(world)
        out_dir = Path(cfg.get("out_dir") or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "events.jsonl").write_bytes(events)
        (out_dir / "truth.json").write_bytes(sidecar)
        body["files"] = {"events": str(out_dir / "events.jsonl"), "truth": str(out_dir / "truth.json")}
        st = body["stats"]
        return body, f"simulated {st['matches']} matches among {st['boxers']} boxers -> {out_dir}"

    if command == "gradcheck":
        first = int(cfg.get("seed") or 0)
        n = int(cfg["gradcheck_seeds"])
        body = ops.gradcheck(range(first, first + n), hidden=cfg["hidden"], D=int(cfg["D"]))
        return body, f"gradcheck over {n} seeds: max relative error {body['max_rel_error']:.2e}"

    raise UsageError(f"unknown command {command!r}")


def _serve(cfg: dict) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(graph_path=cfg.get("graph"), checkpoint_path=cfg.get("checkpoint"))
    uvicorn.run(app, host=cfg["host"], port=int(cfg["port"]))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("boxmind: error: a command is required", file=sys.stderr)
        return 1
    command = args.command
    if command == "graph":
        if args.graph_command is None:
            print("boxmind graph: error: an action is required (build)", file=sys.stderr)
            return 1
        command = "graph build"
    try:
        cfg = resolve(args)
        if command == "serve":
            return _serve(cfg)
        body, summary = run_command(command, cfg)
    except UsageError as exc:
        print(f"boxmind: error: {exc}", file=sys.stderr)
        return 1
    except DATA_ERRORS as exc:
        print(f"boxmind: error: {exc}", file=sys.stderr)
        return 2
    report = {
        "tool": "boxmind",
        "version": __version__,
        "command": command,
        "seed": cfg.get("seed"),
        "config": cfg,
        "result": body,
    }
    stem = command.replace(" ", "-") + (f"-{cfg['system']}" if command == "baseline" else "")
    path = Path(args.report) if args.report else Path(cfg["reports_dir"]) / f"{stem}.json"
    _write_report(path, report)
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
