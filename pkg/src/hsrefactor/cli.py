"""Command-line entry point: analyze, select, refactor, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from pathlib import Path

from hsrefactor.config import AppConfig, ConfigError, defaults_table, load_config
from hsrefactor.corpus import (
    IoError,
    MetricsStore,
    Phase,
    build_search_filter,
    evaluate_candidate,
    load_snapshot,
    write_files,
)
from hsrefactor.errors import HsRefactorError, NoSources
from hsrefactor.llm import Gateway, HttpBackend, ReplayBackend, Transcript
from hsrefactor.metrics import classify_size, feature_count
from hsrefactor.pipeline import build_facts, compute_run_id, report_metadata, run_pipeline
from hsrefactor.reporting import SnapshotMismatch, build_comparison, render_report
from hsrefactor.toolchain import (
    CommandRunner,
    ReplayRunner,
    SubprocessRunner,
    ToolError,
    run_hlint,
    run_profile,
)

log = logging.getLogger("hsrefactor")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_VERDICT = 3
EXIT_ABORTED = 4

DEFAULT_CONFIG = "hsrefactor.toml"


class InputError(HsRefactorError):
    pass


def _runner(args) -> CommandRunner | None:
    if getattr(args, "tool_replay", None):
        return ReplayRunner.from_file(args.tool_replay)
    if getattr(args, "with_tools", False):
        return SubprocessRunner()
    return None


def _emit(data: dict, as_json: bool, text: str) -> None:
    print(json.dumps(data, indent=2, sort_keys=True) if as_json else text)


# analyze


def cmd_analyze(args, config: AppConfig) -> int:
    snapshot = load_snapshot(args.path)
    facts = build_facts(snapshot.files)
    features = feature_count(snapshot.modules())
    data = {
        "snapshot_id": snapshot.id,
        "loc": snapshot.loc,
        "size_class": classify_size(snapshot.loc).value,
        "cc": {"per_function": facts.cc_map(), "total": facts.cc_total},
        "features": features.to_dict(),
        "unparsed": dict(sorted(facts.unparsed.items())),
    }
    runner = _runner(args)
    if runner is not None:
        tools = config.pipeline.tools
        with tempfile.TemporaryDirectory(prefix="hsrefactor-") as tmp:
            write_files(Path(tmp), snapshot.files)
            try:
                data["hlint_hints"] = run_hlint(Path(tmp), runner, tools).hint_count
            except ToolError as exc:
                data["hlint_error"] = str(exc)
            try:
                data["profile"] = run_profile(Path(tmp), runner, tools).to_dict()
            except ToolError as exc:
                data["profile_error"] = str(exc)
    lines = [
        f"snapshot {snapshot.id}: {snapshot.loc} LOC ({data['size_class']})",
        f"cyclomatic complexity: {facts.cc_total}",
        *(f"  {name}: {cc}" for name, cc in facts.cc_map().items()),
        f"functional features: F={features.F} (higher-order {features.higher_order_functions}, "
        f"type classes {features.type_classes}, monadic {features.monadic_compositions})",
    ]
    lines += [f"skipped {path}: {reason}" for path, reason in data["unparsed"].items()]
    if "hlint_hints" in data:
        lines.append(f"hlint: {data['hlint_hints']} hints")
    if "profile" in data:
        p = data["profile"]
        lines.append(f"profile: {p['total_time_secs']} secs ({p['ticks']} ticks), {p['total_alloc_bytes']:,} bytes")
    _emit(data, args.json, "\n".join(lines))
    return EXIT_OK


# select


def cmd_select(args, config: AppConfig) -> int:
    snapshot = load_snapshot(args.path)
    verdict = evaluate_candidate(snapshot, config.selection, _runner(args), config.pipeline.tools)
    search = build_search_filter(config.selection)
    data = {"snapshot_id": snapshot.id, "search_filter": search, **verdict.to_dict()}
    text = "\n".join([f"{'selected' if verdict.accepted else 'rejected'}: {snapshot.id}",
                      *(f"  {r}" for r in verdict.reasons), f"search filter: {search}"])
    _emit(data, args.json, text)
    return EXIT_OK if verdict.accepted else EXIT_VERDICT


# refactor


def cmd_refactor(args, config: AppConfig) -> int:
    pipeline_cfg = config.pipeline
    overrides = {}
    if args.artifacts:
        overrides["artifact_dir"] = Path(args.artifacts)
    if args.store:
        overrides["store_dir"] = Path(args.store)
    if overrides:
        import dataclasses

        pipeline_cfg = dataclasses.replace(pipeline_cfg, **overrides)
    snapshot = load_snapshot(args.path)
    run_id = compute_run_id(snapshot, pipeline_cfg)
    transcript = None
    if args.replay:
        backend = ReplayBackend.from_file(args.replay)
    else:
        if not config.llm.model:
            raise InputError("no model configured; set [llm] model or use --replay")
        backend = HttpBackend(config.llm.base_url, config.llm.model, config.llm.timeout)
        transcript = Transcript(run_id)
    gateway = Gateway(backend, transcript, config.llm.max_re_asks, pipeline_cfg.context_budget)
    runner = _runner(args) or SubprocessRunner()
    result = run_pipeline(snapshot, pipeline_cfg, gateway, runner, dry_run=args.dry_run)
    if transcript is not None and not args.dry_run:
        transcript.dump(Path(pipeline_cfg.artifact_dir) / run_id / "transcript.jsonl")
    meta = report_metadata(result)
    if args.dry_run and result.plan is not None:
        meta["plan"] = result.plan.model_dump(mode="json")
    if args.json:
        print(render_report(result.table, meta, "json"), end="")
    else:
        print(render_report(result.table, meta, "text"), end="")
    if result.succeeded:
        return EXIT_OK
    log.error("run %s aborted at %s: %s", run_id, result.outcome.stage.value if result.outcome.stage else "?",
              result.outcome.reason)
    return EXIT_ABORTED


# report


def cmd_report(args, config: AppConfig) -> int:
    store = MetricsStore(Path(args.store) if args.store else config.pipeline.store_dir)
    pre = store.load(args.run_id, Phase.PRE)
    post = store.load(args.run_id, Phase.POST)
    if pre is None or post is None:
        missing = ", ".join(p.value for p, r in ((Phase.PRE, pre), (Phase.POST, post)) if r is None)
        print(f"run {args.run_id} is incomplete: no {missing} metrics", file=sys.stderr)
        return EXIT_VERDICT
    try:
        table = build_comparison(pre, post)
    except SnapshotMismatch as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VERDICT
    fmt = "json" if args.json else args.format
    print(render_report(table, {"run_id": args.run_id}, fmt), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsrefactor",
        description="Measure and refactor Haskell codebases.",
        epilog="configuration defaults:\n" + defaults_table()
        + "\n\nThe model credential is read from the LLM_API_KEY environment variable only.\n"
        "exit codes: 0 ok, 1 internal error, 2 bad input, 3 rejected or incomplete, 4 run aborted",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help=f"TOML configuration file (default: ./{DEFAULT_CONFIG} if present)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def tool_flags(p):
        p.add_argument("--with-tools", action="store_true", help="run hlint and the profiler")
        p.add_argument("--tool-replay", metavar="FILE", help="answer tool invocations from a recorded file")

    p = sub.add_parser("analyze", help="complexity, features and size of a codebase")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")
    tool_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("select", help="check a codebase against the selection criteria")
    p.add_argument("path")
    p.add_argument("--json", action="store_true")
    tool_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("refactor", help="run the refactoring pipeline")
    p.add_argument("path")
    p.add_argument("--replay", metavar="TRANSCRIPT", help="answer model calls from a transcript; no network")
    p.add_argument("--tool-replay", metavar="FILE", help="answer tool invocations from a recorded file")
    p.add_argument("--dry-run", action="store_true", help="stop after planning and write nothing")
    p.add_argument("--artifacts", metavar="DIR", help="artifact directory")
    p.add_argument("--store", metavar="DIR", help="metrics store directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_refactor, with_tools=True)

    p = sub.add_parser("report", help="render the comparison table of a finished run")
    p.add_argument("run_id")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--json", action="store_true", help="same as --format json")
    p.add_argument("--store", metavar="DIR", help="metrics store directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        path = args.config or (DEFAULT_CONFIG if Path(DEFAULT_CONFIG).is_file() else None)
        config = load_config(path)
        return args.func(args, config)
    except (ConfigError, NoSources, IoError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HsRefactorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
