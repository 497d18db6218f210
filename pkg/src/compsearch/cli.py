"""Command-line entry point: ``compsearch <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .config import ConfigError, LoopConfig, config_from_mapping, load_config
from .generators import API_KEY_ENV
from .store import RunDir

log = logging.getLogger("compsearch")

EPILOG = f"""\
environment:
  {API_KEY_ENV}  credential for the chat-completion endpoint used by
                      source = "llm" (the variable name can be changed with the
                      llm_api_key_env config key). It is read at request time
                      and never written to the run directory.

exit status: 0 success, 1 domain error, 2 usage error
"""


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def _config(args) -> LoopConfig:
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _parse_value(value.strip())
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config is None:
        manifest = RunDir(args.run_dir).read_manifest()
        if manifest:
            # resume with the configuration the run was started with
            return config_from_mapping({**manifest["config"], **overrides})
    return load_config(args.config, **overrides)


def _pipeline(args):
    from .loop import Pipeline

    pipeline = Pipeline(_config(args), args.run_dir, jobs=args.jobs)
    pipeline.start()
    return pipeline


# -- subcommands ------------------------------------------------------------------


def cmd_generate(args) -> int:
    p = _pipeline(args)
    count = p.config.batch_size if args.count is None else args.count
    start = (0 if args.iteration == 1 else p.config.batch_size) if args.start is None else args.start
    candidates = p.generate(args.iteration, count, start)
    print(f"{len(candidates)} candidates in {p.run.path('candidates')}")
    return 0


def cmd_validate(args) -> int:
    if args.file:
        from .validator import validate

        config = _config(args)
        report = validate(Path(args.file).read_text(encoding="utf-8"), args.kind or config.kind)
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
        return 0 if report.passed else 1
    p = _pipeline(args)
    records = p.validate_candidates(p.run.load("candidates").records)
    passed = sum(r["validator_report"]["passed"] for r in records)
    dupes = sum(r["duplicate"] for r in records)
    print(f"{passed}/{len(records)} candidates pass validation ({dupes} duplicates)")
    return 0


def cmd_baselines(args) -> int:
    p = _pipeline(args)
    records = p.ensure_baselines()
    for bid, program in p.baseline_programs().items():
        print(f"{bid}  {program.name}")
    print(f"{len(records)} baseline evaluation records")
    return 0


def cmd_evaluate(args) -> int:
    p = _pipeline(args)
    p.ensure_baselines()
    todo = p.evaluable(p.hypothesis_records())
    records = p.evaluate(todo)
    print(f"{len(records)} evaluation records for {len(todo)} hypotheses")
    return 0


def cmd_reward(args) -> int:
    p = _pipeline(args)
    evaluated = {r.hypothesis_id for r in p.eval_records()} - set(p.baseline_programs())
    summaries = p.reward(sorted(evaluated))
    for s in summaries:
        print(f"{s.hypothesis_id}  b_wr={s.b_wr:.4f}  bsota_wr={s.bsota_wr:.4f}  reward={s.reward:.4f}")
    return 0


def cmd_train_ranker(args) -> int:
    p = _pipeline(args)
    state = p.train_ranker()
    p.run.complete_stage("train-ranker")
    print(f"ranker {state.ranker_id} -> {p.run.root / f'ranker_{state.ranker_id}.json'}")
    return 0


def cmd_rank(args) -> int:
    from .ranker import rank_by_score

    p = _pipeline(args)
    state = p.load_ranker(args.ranker)
    records = p.evaluable(p.hypothesis_records(args.iteration))
    scores = p.score(state, records)
    order = rank_by_score([(s["hypothesis_id"], s["score"]) for s in scores])
    by_id = {s["hypothesis_id"]: s["score"] for s in scores}
    for hid in order[: args.top or len(order)]:
        print(f"{hid}  {by_id[hid]:.6f}")
    return 0


def cmd_loop(args) -> int:
    p = _pipeline(args)
    out = p.loop()
    it1 = out["iteration1"]
    print(f"iteration 1: {len(it1.hypotheses)} candidates, {len(it1.evaluated_ids)} evaluated, "
          f"{len(it1.rewards)} rewards, {it1.duplicates} duplicates")
    if "iteration2" in out:
        it2 = out["iteration2"]
        print(f"iteration 2: {len(it2.hypotheses)} candidates, {len(it2.evaluated_ids)} evaluated")
    if "efficiency" in out:
        print("AUC " + "  ".join(f"{k}={c.auc:.4f}" for k, c in sorted(out["efficiency"].items())))
    if "report" in out:
        sys.stdout.write(out["report"].render())
    return 0


def cmd_efficiency(args) -> int:
    p = _pipeline(args)
    curves = p.efficiency(p.load_ranker(args.ranker))
    p.run.complete_stage("efficiency")
    for name in sorted(curves):
        print(f"{name:8s} auc={curves[name].auc:.4f}  -> efficiency_{name}.csv")
    return 0


def cmd_select_diverse(args) -> int:
    p = _pipeline(args)
    selection = p.select_diverse(args.k, args.alpha)
    p.run.complete_stage("select-diverse")
    for sid in selection.selected:
        print(f"{sid}  n_score={selection.n_score[sid]:.4f}")
    return 0


def cmd_report(args) -> int:
    from .report import build_report, write_report

    table = build_report(args.run_dir)
    write_report(args.run_dir, table)
    sys.stdout.write(table.render())
    return 0


# -- parser -----------------------------------------------------------------------------


def _common(suppress: bool) -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; the subcommand copy
    # must not overwrite values given before it, hence SUPPRESS defaults there
    def default(value):
        return argparse.SUPPRESS if suppress else value

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--run-dir", default=default("run"), help="run directory holding the stores (default: ./run)")
    common.add_argument("--config", default=default(None),
                        help="TOML config file; defaults to the config recorded in the run directory")
    common.add_argument("--seed", type=int, default=default(None), help="master seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=default(1), help="parallel evaluation workers (default 1)")
    common.add_argument("--set", action="append", default=default(None), metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true", default=default(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compsearch", description=__doc__, epilog=EPILOG,
                                     formatter_class=argparse.RawDescriptionHelpFormatter,
                                     parents=[_common(suppress=False)])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="<subcommand>")

    def add(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text, parents=[_common(suppress=True)], epilog=EPILOG,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("generate", cmd_generate, "generate raw candidates into candidates.jsonl")
    sp.add_argument("--iteration", type=int, choices=(1, 2), default=1)
    sp.add_argument("--count", type=int)
    sp.add_argument("--start", type=int)
    sp = add("validate", cmd_validate, "validate generated candidates, or a single program file")
    sp.add_argument("file", nargs="?", help="validate this file only and print the report")
    sp.add_argument("--kind", choices=("activation", "preprocessor", "regularizer"))
    add("evaluate", cmd_evaluate, "evaluate valid hypotheses on every task and run")
    add("baselines", cmd_baselines, "evaluate the configured baseline set")
    add("reward", cmd_reward, "compute win-rate rewards for evaluated hypotheses")
    add("train-ranker", cmd_train_ranker, "fit the pairwise ranker on rewarded hypotheses")
    sp = add("rank", cmd_rank, "score hypotheses with a trained ranker")
    sp.add_argument("--ranker", help="ranker id or file (default: the only ranker in the run directory)")
    sp.add_argument("--iteration", type=int, choices=(1, 2))
    sp.add_argument("--top", type=int, help="print only the best N")
    add("loop", cmd_loop, "run the whole pipeline: iteration 1, ranker, iteration 2, analysis, report")
    sp = add("efficiency", cmd_efficiency, "write efficiency curves for ranker, oracle and random orderings")
    sp.add_argument("--ranker")
    sp = add("select-diverse", cmd_select_diverse, "greedy reward/diversity selection")
    sp.add_argument("--k", type=int)
    sp.add_argument("--alpha", type=float)
    add("report", cmd_report, "summary table, CSV and scatter data")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        return args.fn(args)
    except Exception as exc:  # every failure past argument parsing is a domain error
        log.debug("command failed", exc_info=True)
        print(f"compsearch {args.command}: {exc}", file=sys.stderr)
        return 1
