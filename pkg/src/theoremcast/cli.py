"""Single entry point: generate / evaluate / report / bench / rag commands
over one JSON config file with TEA_* environment overrides."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import codegen, corpus, evaluator, pipeline, report, retrieval
from .config import AppConfig, load_config, price_table_tuples
from .gateway import Gateway, HttpChatProvider, MockProvider, UsageLedger, load_ledger_file
from .planner import Planner
from .prompts import PromptLibrary

log = logging.getLogger("theoremcast")


def build_gateway(cfg: AppConfig, mock: bool, ledger_path: str | Path | None = None) -> Gateway:
    model_ids = {cfg.models.default, cfg.models.stage("planner"),
                 cfg.models.stage("coder"), cfg.models.stage("judge"), "mock"}
    providers: dict[str, object] = {}
    if mock:
        fixture_dir = cfg.paths.mock_fixtures or cfg.gateway.mock_dir
        for model_id in model_ids:
            providers[model_id] = MockProvider(fixture_dir)
    else:
        for model_id in model_ids:
            spec = cfg.gateway.providers.get(model_id)
            if spec is None:
                if model_id == "mock":
                    providers[model_id] = MockProvider(cfg.paths.mock_fixtures)
                continue
            api_key = os.environ.get(spec.get("env_key", ""), "")
            providers[model_id] = HttpChatProvider(
                base_url=spec["base_url"],
                api_key=api_key,
                model=spec.get("model", model_id),
            )
    return Gateway(
        providers,
        ledger=UsageLedger(price_table=price_table_tuples(cfg)),
        max_retries=cfg.gateway.max_retries,
        backoff_base_s=cfg.gateway.backoff_base_s,
        rate_per_s=cfg.gateway.rate_per_s,
        burst=cfg.gateway.burst,
        ledger_path=ledger_path,
    )


def build_embedder(cfg: AppConfig, mock: bool):
    if mock or cfg.retrieval.embedder == "hashing":
        return retrieval.HashingEmbedder(dim=cfg.retrieval.embedder_dim)
    return retrieval.HttpEmbedder(
        base_url=cfg.retrieval.embedder_base_url,
        api_key=os.environ.get(cfg.retrieval.embedder_env_key, ""),
        model=cfg.retrieval.embedder_model,
    )


def build_retriever(cfg: AppConfig, mock: bool, load_index: bool = True) -> retrieval.Retriever:
    index = None
    index_dir = Path(cfg.paths.index)
    if load_index and (index_dir / "meta.json").exists():
        index = retrieval.VectorIndex.load(index_dir)
    return retrieval.Retriever(
        embedder=build_embedder(cfg, mock),
        index=index,
        chunk_size=cfg.retrieval.chunk_size,
        chunk_overlap=cfg.retrieval.chunk_overlap,
    )


def build_context(
    cfg: AppConfig, mock: bool, run_dir: Path, rag: bool, model_override: str | None = None
) -> pipeline.PipelineContext:
    gateway = build_gateway(cfg, mock, ledger_path=run_dir / "ledger.jsonl")
    prompts = PromptLibrary(cfg.paths.prompts)
    planner_model = model_override or cfg.models.stage("planner")
    coder_model = model_override or cfg.models.stage("coder")
    planner = Planner(
        gateway, planner_model, prompts,
        max_scenes=cfg.planner.max_scenes,
        target_scenes=cfg.planner.target_scenes,
        temperature=cfg.planner.temperature,
    )
    generator = codegen.CodeGenerator(
        gateway, coder_model, prompts,
        temperature=cfg.planner.temperature,
        stderr_limit=cfg.pipeline.stderr_limit,
    )
    scenes_dir = run_dir / "scenes"
    if mock:
        executor = pipeline.StubExecutor(scenes_dir, clip_seconds=cfg.pipeline.stub_clip_seconds)
        media_tool = pipeline.Cv2MediaTool()
        tts = pipeline.SilentTts()
    else:
        executor = pipeline.SubprocessExecutor(
            scenes_dir, cfg.pipeline.python_bin, cfg.pipeline.timeout_s
        )
        media_tool = pipeline.pick_media_tool(cfg.pipeline.media_tool, cfg.pipeline.ffmpeg_path)
        tts = pipeline.SilentTts()
    retriever = build_retriever(cfg, mock) if rag else None
    allowlist = tuple(cfg.retrieval.plugin_catalog)
    if cfg.paths.plugin_probe and Path(cfg.paths.plugin_probe).exists():
        allowlist = retrieval.load_plugin_probe(cfg.paths.plugin_probe)
    return pipeline.PipelineContext(
        planner=planner,
        generator=generator,
        executor=executor,
        media_tool=media_tool,
        tts=tts,
        retriever=retriever,
        retrieval_cfg=retrieval.RetrievalConfig(
            k=cfg.retrieval.k,
            threshold=cfg.retrieval.threshold,
            plugin_allowlist=allowlist,
        ),
        rag=rag,
        fix_retrieval=cfg.pipeline.fix_retrieval,
        max_fixes=cfg.pipeline.max_fixes,
        parallelism=cfg.pipeline.parallelism,
        min_duration_warn_s=cfg.pipeline.min_duration_warn_s,
        query_model_id=model_override or cfg.models.default,
        prompts=prompts,
        gateway=gateway,
    )


def cmd_generate(args, cfg: AppConfig) -> int:
    entries = corpus.load_corpus(cfg.paths.corpus)
    if args.all:
        selected = entries
    else:
        try:
            selected = [corpus.find_entry(entries, args.theorem_id)]
        except KeyError:
            print(f"theorem id {args.theorem_id!r} not in corpus", file=sys.stderr)
            return 1
    if args.max_fixes is not None:
        cfg.pipeline.max_fixes = args.max_fixes
    rag = args.rag == "on" if args.rag else cfg.rag
    failures = 0
    for theorem in selected:
        run_id = args.run_id or time.strftime("%Y%m%dT%H%M%S", time.gmtime())
        run_dir = Path(cfg.paths.runs) / theorem.id / run_id
        run_dir.mkdir(parents=True, exist_ok=True)
        ctx = build_context(cfg, args.mock, run_dir, rag, model_override=args.model)
        record, artifact = pipeline.run_theorem(theorem, ctx, cfg.paths.runs, run_id=run_id)
        status = "ok" if record.success else "FAILED"
        duration = f"{artifact.total_duration_s:.1f}s" if artifact else "-"
        print(f"{theorem.id}: {status} scenes={len(record.scene_results)} duration={duration} -> {run_dir}")
        failures += 0 if record.success else 1
    return 0 if failures == 0 else 1


def cmd_evaluate(args, cfg: AppConfig) -> int:
    run_dir = Path(args.run_dir)
    record_path = run_dir / "run_record.json"
    if not record_path.exists():
        print(f"no run_record.json under {run_dir}", file=sys.stderr)
        return 1
    record = json.loads(record_path.read_text(encoding="utf-8"))
    theorem = None
    corpus_path = Path(cfg.paths.corpus)
    if corpus_path.exists():
        try:
            theorem = corpus.find_entry(corpus.load_corpus(corpus_path), record["theorem_id"])
        except KeyError:
            theorem = None
    if theorem is None:
        theorem = corpus.TheoremEntry(
            id=record["theorem_id"],
            name=record.get("theorem_name") or record["theorem_id"],
            description=record.get("theorem_description") or record["theorem_id"],
            difficulty=record.get("difficulty") or "Easy",
            subject=record.get("subject") or "Mathematics",
            subfield="",
        )
    gateway = build_gateway(cfg, args.mock)
    judge_model = args.judge_model or cfg.models.stage("judge")
    judge = evaluator.Judge(gateway, judge_model, PromptLibrary(cfg.paths.prompts))
    result = evaluator.evaluate_run(
        run_dir,
        theorem,
        judge,
        fps=cfg.evaluator.fps,
        diff_threshold=cfg.evaluator.diff_threshold,
        max_keyframes=cfg.evaluator.max_keyframes,
        chunk_seconds=cfg.evaluator.chunk_seconds,
    )
    for score in result.scores:
        print(f"{score.dimension.value:<20}{score.value:.3f}")
    print(f"{'overall':<20}{result.overall:.3f}")
    return 0


def _sibling_model_id(artifact_path: Path) -> str:
    record_path = artifact_path.parent / "run_record.json"
    if record_path.exists():
        return json.loads(record_path.read_text(encoding="utf-8")).get("model_id", "unknown")
    return "unknown"


def cmd_report(args, cfg: AppConfig) -> int:
    if args.kind in ("success", "cumulative"):
        entries = report.load_run_entries(args.paths)
        if args.kind == "success":
            table = report.success_table(entries)
        else:
            budgets = [int(b) for b in args.budgets.split(",")]
            table = report.cumulative_table(entries, budgets)
    elif args.kind == "scores":
        scores_by_model: dict[str, list[dict[str, float]]] = {}
        for path in args.paths:
            for eval_path in sorted(Path(path).rglob("evaluation.json")):
                model = _sibling_model_id(eval_path)
                data = json.loads(eval_path.read_text(encoding="utf-8"))
                scores_by_model.setdefault(model, []).append(
                    {dim: data["scores"][dim]["value"] for dim in report.DIMENSION_COLUMNS}
                )
        table = report.score_table(scores_by_model)
    else:  # cost
        ledgers_by_model: dict[str, list[UsageLedger]] = {}
        price_table = price_table_tuples(cfg)
        for path in args.paths:
            path = Path(path)
            ledger_files = [path] if path.is_file() else sorted(path.rglob("ledger.jsonl"))
            for lf in ledger_files:
                model = _sibling_model_id(lf)
                ledgers_by_model.setdefault(model, []).append(load_ledger_file(lf, price_table))
        table = report.cost_table(ledgers_by_model)
    print(table.to_csv() if args.csv else table.to_text())
    return 0


def cmd_bench_validate(args, cfg: AppConfig) -> int:
    entries = corpus.load_corpus(args.path)
    stats = corpus.corpus_stats(entries)
    print(corpus.format_stats(stats))
    return 0


def cmd_rag_ingest(args, cfg: AppConfig) -> int:
    retriever = build_retriever(cfg, args.mock, load_index=False)
    stats = retriever.ingest_docs(args.roots)
    retriever.index.save(cfg.paths.index)
    kinds = ", ".join(f"{k}:{v}" for k, v in sorted(stats.chunks_by_kind.items()))
    print(f"ingested {stats.sources} sources, {stats.total_chunks} chunks ({kinds}) -> {cfg.paths.index}")
    return 0


def cmd_rag_query(args, cfg: AppConfig) -> int:
    retriever = build_retriever(cfg, args.mock)
    if len(retriever.index) == 0:
        print("index is empty; run `rag ingest` first", file=sys.stderr)
        return 1
    rcfg = retrieval.RetrievalConfig(
        k=args.k if args.k is not None else cfg.retrieval.k,
        threshold=args.threshold if args.threshold is not None else cfg.retrieval.threshold,
        plugin_allowlist=tuple(cfg.retrieval.plugin_catalog),
    )
    for chunk, score in retriever.retrieve(args.text, rcfg):
        first_line = chunk.text.strip().splitlines()[0][:80]
        print(f"{score:.3f}  [{chunk.chunk_id}] {chunk.source_path}: {first_line}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="theoremcast",
        description="Generate, evaluate, and report on narrated theorem-explainer videos.",
    )
    parser.add_argument("--config", default=None, help="path to JSON config file")
    parser.add_argument("--mock", action="store_true", help="force all ports offline")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="produce videos for one or all theorems")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("theorem_id", nargs="?", default=None)
    group.add_argument("--all", action="store_true")
    p.add_argument("--model", default=None)
    p.add_argument("--max-fixes", type=int, default=None, metavar="N")
    p.add_argument("--rag", choices=["on", "off"], default=None)
    p.add_argument("--run-id", default=None, help="fixed run directory name (default: timestamp)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score a completed run directory")
    p.add_argument("run_dir")
    p.add_argument("--judge-model", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="result tables from run outputs")
    p.add_argument("kind", choices=["success", "cumulative", "scores", "cost"])
    p.add_argument("paths", nargs="+")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--budgets", default="0,1,2,3,4,5")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("bench", help="benchmark corpus utilities")
    bench_sub = p.add_subparsers(dest="bench_command", required=True)
    v = bench_sub.add_parser("validate", help="validate a corpus file and print stats")
    v.add_argument("path")
    v.set_defaults(func=cmd_bench_validate)

    p = sub.add_parser("rag", help="documentation index utilities")
    rag_sub = p.add_subparsers(dest="rag_command", required=True)
    ing = rag_sub.add_parser("ingest")
    ing.add_argument("roots", nargs="+")
    ing.set_defaults(func=cmd_rag_ingest)
    q = rag_sub.add_parser("query")
    q.add_argument("text")
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--threshold", type=float, default=None)
    q.set_defaults(func=cmd_rag_query)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args, cfg)
    except (
        corpus.MissingFile,
        corpus.MalformedRecord,
        corpus.EmptyCorpus,
        retrieval.EmptyCorpus,
        retrieval.IndexEmpty,
        report.EmptyLedger,
        report.EmptyReports,
        report.MissingTraces,
        evaluator.UnreadableVideo,
        evaluator.JudgeParseError,
        pipeline.MediaToolFailure,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
