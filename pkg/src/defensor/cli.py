"""Command-line entry point.

Exit codes: 0 ok, 1 usage or config error, 2 runtime monitor violation
(or a forecaster failure mid-run), 3 verification failure.

    defensor run config.json [--out DIR] [--replicas R]
    defensor verify --game quadratic --kappa 2 --grid 512
    defensor ingest outcomes.csv --out reality.json
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from defensor.agents import is_constant_kind, make_expert, make_reality
from defensor.engine import EngineConfig, Trace, atomic_write, compare, run
from defensor.errors import (
    ConfigError,
    DefensorError,
    KappaTooLarge,
    MonitorViolation,
    NonConstantAdvice,
)
from defensor.forecaster import ForecasterConfig
from defensor.games import check_one_step_inequality, game_from_dict, load_game
from defensor.games.base import Game

log = logging.getLogger("defensor")

EXIT_OK, EXIT_CONFIG, EXIT_MONITOR, EXIT_VERIFY = 0, 1, 2, 3
SCHEMA = 1
CONFIG_KEYS = {"schema", "game", "learner", "kappa", "experts", "reality", "rounds",
               "forecaster", "monitor", "output"}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for monitor violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def resolve_game(spec, base_dir=".") -> Game:
    """``spec`` is a built-in name, a path to a game JSON file, or a dict."""
    if isinstance(spec, dict):
        return game_from_dict(spec)
    if not isinstance(spec, str):
        raise ConfigError(f"bad game spec {spec!r}")
    if spec in ("quadratic", "log"):
        return game_from_dict({"kind": spec})
    path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
    try:
        return load_game(path)
    except OSError as exc:
        raise ConfigError(f"cannot read game file {spec!r}: {exc.strerror}") from None


class RunConfig:
    """Parsed and validated run configuration."""

    def __init__(self, doc: dict, base_dir: str = "."):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if doc.get("schema") != SCHEMA:
            raise ConfigError(f"unsupported schema {doc.get('schema')!r}, expected {SCHEMA}")
        self.doc = doc
        self.game = resolve_game(doc.get("game", "quadratic"), base_dir)
        self.learner = doc.get("learner", "defensive")
        if self.learner not in ("defensive", "aa"):
            raise ConfigError(f"learner must be 'defensive' or 'aa', got {self.learner!r}")
        kappa = doc.get("kappa")
        self.kappa = self.game.eta if kappa is None else _number(kappa, "kappa")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if self.kappa > self.game.eta * (1 + 1e-12):
            raise KappaTooLarge(self.kappa, self.game.eta)
        experts = doc.get("experts")
        if not isinstance(experts, list) or not experts:
            raise ConfigError("'experts' must be a nonempty list of expert specs")
        self.experts = experts
        for spec in experts:
            make_expert(spec)
        if self.learner == "aa" and not all(is_constant_kind(s) for s in experts):
            raise NonConstantAdvice()
        self.reality = doc.get("reality")
        make_reality(self.reality)
        rounds = doc.get("rounds")
        if not isinstance(rounds, int) or isinstance(rounds, bool) or rounds < 1:
            raise ConfigError("'rounds' must be a positive integer")
        self.rounds = rounds
        self.forecaster = dict(doc.get("forecaster", {}))
        self.monitor = dict(doc.get("monitor", {}))
        out = dict(doc.get("output", {}))
        self.out_dir = out.get("dir", ".")
        if not os.path.isabs(self.out_dir):
            self.out_dir = os.path.join(base_dir, self.out_dir)
        self.name = out.get("name", "trace")
        self.formats = out.get("formats", ["csv", "jsonl"])
        if not set(self.formats) <= {"csv", "jsonl"}:
            raise ConfigError("output formats must be 'csv' and/or 'jsonl'")
        self.engine_config()

    def engine_config(self, **overrides) -> EngineConfig:
        fc = {**self.forecaster, **{k: v for k, v in overrides.items() if v is not None}}
        unknown = set(fc) - {"bisect_tol", "t_tol", "max_iter", "use_root_solvers"}
        if unknown:
            raise ConfigError(f"unknown forecaster keys: {sorted(unknown)}")
        mon = self.monitor
        unknown = set(mon) - {"continue_on_violation", "bound_tol", "sm_tol"}
        if unknown:
            raise ConfigError(f"unknown monitor keys: {sorted(unknown)}")
        return EngineConfig(forecaster=ForecasterConfig(**fc), **mon)

    def replica_reality(self, r: int) -> dict:
        spec = copy.deepcopy(self.reality)
        if r and "seed" in spec:
            spec["seed"] = int(spec["seed"]) + r
        return spec


def _number(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name!r} must be a number")
    return float(v)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return RunConfig(doc, os.path.dirname(os.path.abspath(path)))


def _write_trace(trace: Trace, stem: str, formats):
    if "csv" in formats:
        trace.to_csv(stem + ".csv")
    if "jsonl" in formats:
        trace.to_jsonl(stem + ".jsonl")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    ecfg = cfg.engine_config(bisect_tol=args.bisect_tol, t_tol=args.t_tol,
                             max_iter=args.max_iter)
    out_dir = args.out or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    R = args.replicas
    if R < 1:
        raise ConfigError("--replicas must be at least 1")

    def one(r):
        stem = os.path.join(out_dir, cfg.name if R == 1 else f"{cfg.name}-r{r}")
        try:
            trace = run(cfg.game, cfg.learner, cfg.kappa, cfg.experts, cfg.replica_reality(r),
                        cfg.rounds, ecfg, meta={"replica": r})
        except MonitorViolation as exc:
            if exc.trace is not None:
                _write_trace(exc.trace, stem, cfg.formats)
            return r, None, str(exc)
        except DefensorError as exc:
            return r, None, str(exc)
        _write_trace(trace, stem, cfg.formats)
        return r, trace, None

    if R == 1:
        results = [one(0)]
    else:
        with ThreadPoolExecutor(max_workers=min(R, os.cpu_count() or 1)) as pool:
            results = list(pool.map(one, range(R)))

    rows, failed = [], []
    for r, trace, err in results:
        if err is not None:
            failed.append(r)
            print(f"replica {r}: {err}", file=sys.stderr)
        else:
            rows.extend({"replica": r, **row} for row in compare([trace]))
    atomic_write(os.path.join(out_dir, f"{cfg.name}-summary.json"),
                 json.dumps({"config": cfg.doc, "rows": rows, "failed": failed}, indent=2) + "\n")
    for row in rows:
        print(f"replica {row['replica']}: {row['learner']} on {row['game']} K={row['K']} "
              f"rounds={row['rounds']} max regret {row['max_regret']:.6g} "
              f"bound {row['bound']:.6g} ({row['max_slack_usage']:.1%} used)")
    return EXIT_MONITOR if failed else EXIT_OK


def cmd_verify(args) -> int:
    game = resolve_game(args.game)
    kappa = game.eta if args.kappa is None else args.kappa
    rep = check_one_step_inequality(game, kappa, grid_size=args.grid)
    print(f"game {game.name} kappa={kappa:g} grid={args.grid}x{args.grid}")
    print(f"holds: {'yes' if rep.holds else 'no'}")
    print(f"worst_slack: {rep.worst_slack:.6g}")
    print(f"worst_point: p={rep.worst_point[0]:.6g} g={rep.worst_point[1]:.6g}")
    return EXIT_OK if rep.holds else EXIT_VERIFY


def parse_outcomes(lines) -> list[int]:
    """0/1 values one per line; a non-numeric first line is taken as a header."""
    outcomes = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if text in ("0", "1"):
            outcomes.append(int(text))
            continue
        if lineno == 1 and not _looks_numeric(text):
            continue
        raise ConfigError(f"line {lineno}: expected 0 or 1, got {text!r}")
    if not outcomes:
        raise ConfigError("no outcomes")
    return outcomes


def _looks_numeric(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def cmd_ingest(args) -> int:
    try:
        with open(args.csv) as fh:
            outcomes = parse_outcomes(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.csv}: {exc.strerror}") from None
    spec = json.dumps({"kind": "fixed_sequence", "outcomes": outcomes}) + "\n"
    if args.out:
        atomic_write(args.out, spec)
        print(f"wrote {len(outcomes)} outcomes to {args.out}")
    else:
        sys.stdout.write(spec)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="defensor", description="Defensive forecasting experiments.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--replicas", type=int, default=1,
                   help="independent runs; replica r adds r to the reality seed")
    p.add_argument("--bisect-tol", type=float)
    p.add_argument("--t-tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="grid-check the one-step supermartingale inequality")
    p.add_argument("--game", required=True, help="quadratic, log, or a game JSON file")
    p.add_argument("--kappa", type=float, help="defaults to the game's eta")
    p.add_argument("--grid", type=int, default=512)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ingest", help="turn a CSV of 0/1 outcomes into a reality spec")
    p.add_argument("csv")
    p.add_argument("--out", help="spec path (stdout if omitted)")
    p.set_defaults(func=cmd_ingest)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("DEFENSOR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DefensorError, ValueError) as exc:
        print(f"defensor: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"defensor: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
