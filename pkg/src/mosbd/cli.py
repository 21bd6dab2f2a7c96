"""Command-line entry point: ``mosbd {run,benchmark,select,compare}``.

Environment overrides: ``MOSBD_OUT_DIR`` (default output directory) and
``MOSBD_LOG_LEVEL`` (logging level name).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import statistics
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .artifacts import (
    TRACE_FILE,
    begin_artifact,
    compare_summaries,
    fail_artifact,
    finish_artifact,
    load_summary,
    read_archive_csv,
)
from .config import ConfigError, RunSpec, parse_config
from .decision import mmd_select_objectives
from .engine import run
from .evaluators import EvaluatorCrashed

log = logging.getLogger("mosbd")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _default_out(name: str) -> Path:
    return Path(os.environ.get("MOSBD_OUT_DIR", "runs")) / name


def _override(spec: RunSpec, algo: str | None, seed: int | None) -> RunSpec:
    cfg = spec.config
    if algo is not None:
        cfg = replace(cfg, algo=algo)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return RunSpec(cfg, spec.problem)


def execute(spec: RunSpec, out_dir: Path, trace: bool = False) -> dict:
    """Run one configuration and write its artifact directory."""
    out = begin_artifact(out_dir, spec)
    try:
        with spec.make_evaluator() as evaluator:
            if trace:
                with open(out / TRACE_FILE, "w") as fh:
                    result = run(spec.config, evaluator, trace=fh)
            else:
                result = run(spec.config, evaluator)
    except BaseException as exc:
        fail_artifact(out, f"{type(exc).__name__}: {exc}")
        raise
    return finish_artifact(out, spec, result)


def cmd_run(args) -> int:
    spec = _override(parse_config(args.config), args.algo, args.seed)
    out = Path(args.out) if args.out else _default_out(f"{spec.config.algo}_seed{spec.config.seed}")
    summary = execute(spec, out, trace=args.trace)
    print(json.dumps({k: summary[k] for k in ("stop_reason", "C_FW", "T_RL", "I_stop", "archive_size", "xi")}))
    return EXIT_OK


def cmd_benchmark(args) -> int:
    base = _override(parse_config(args.config), args.algo, None)
    out = Path(args.out) if args.out else _default_out(f"benchmark_{base.config.algo}")
    per_seed = []
    for seed in args.seeds:
        spec = _override(base, None, seed)
        summary = execute(spec, out / f"seed_{seed}", trace=args.trace)
        per_seed.append({"seed": seed, **{k: summary[k] for k in ("xi", "C_FW", "T_RL", "stop_reason", "wall_time")}})
    xis = [r["xi"] for r in per_seed if r["xi"] is not None]
    report = {"algo": base.config.algo, "runs": per_seed}
    if xis:
        report["xi"] = {"median": statistics.median(xis), "min": min(xis), "max": max(xis)}
    (out / "benchmark.json").write_text(json.dumps(report, indent=2) + "\n")
    print(json.dumps(report.get("xi", {})))
    return EXIT_OK


def cmd_select(args) -> int:
    X, F = read_archive_csv(args.archive)
    rep = mmd_select_objectives(F)
    doc = rep.to_dict()
    doc["x"] = X[rep.chosen_index].tolist()
    doc["phi"] = F[rep.chosen_index].tolist()
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    result = compare_summaries(load_summary(args.std), load_summary(args.sbd))
    print(json.dumps(result, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mosbd", description="Surrogate-assisted multi-objective optimization.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--log-level", default=os.environ.get("MOSBD_LOG_LEVEL", "WARNING"))
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one algorithm/config/seed")
    r.add_argument("--config", required=True)
    r.add_argument("--algo", choices=["sbd", "std"])
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--trace", action="store_true", help="write per-iteration trace.jsonl")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("benchmark", help="sweep seeds and aggregate the error index")
    b.add_argument("--config", required=True)
    b.add_argument("--algo", choices=["sbd", "std"])
    b.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    b.add_argument("--out")
    b.add_argument("--trace", action="store_true")
    b.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("select", help="best-compromise member of a stored archive")
    s.add_argument("--archive", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_select)

    c = sub.add_parser("compare", help="evaluation-count time saving of SbD over StD")
    c.add_argument("std", help="StD run directory or summary.json")
    c.add_argument("sbd", help="SbD run directory or summary.json")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"mosbd: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError, EvaluatorCrashed) as exc:
        print(f"mosbd: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
