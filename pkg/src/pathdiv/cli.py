"""Command-line orchestration of the pipeline: summarize, filter, embed,
curate, eval, compare-metrics.

Exit codes: 0 success, 1 partial data failure, 2 usage/configuration error.
Every command writes a run manifest; the summarize and embed stages resume
from their outputs, so reruns over complete data make no backend calls.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import logging
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor

from . import curation, evaluation, llm, synthetic
from .config import AppConfig
from .core import (
    CorpusError,
    load_corpus,
    load_jsonl,
    load_summaries,
    save_jsonl,
    summary_index,
)
from .distances import concat_summary_text
from .embeddings import (
    EmbedFailed,
    EmbeddingCache,
    HttpEmbeddingBackend,
    MockEmbeddingBackend,
    embed_batch,
)
from .evaluation import (
    CorrectSolution,
    SolvedProblem,
    build_passk_report,
    load_samples,
    output_diversity_report,
    score_histogram,
    write_histogram_csv,
)
from .llm import HttpChatBackend, ScriptedChatBackend, SummarizationFailed

log = logging.getLogger("pathdiv")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

DEFAULT_K_LIST = "1,2,4,8,16"
EMBED_CHUNK = 128


class UsageError(Exception):
    """Bad flags, missing files, or unusable configuration (exit 2)."""


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _file_hash(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    path: str,
    command: str,
    config: AppConfig,
    inputs: dict[str, str],
    counts: dict,
    started: str,
) -> None:
    """Atomic manifest write: fingerprinted config, input hashes, stage counts."""
    data = {
        "command": command,
        "config_fingerprint": config.fingerprint(),
        "inputs": {
            name: (_file_hash(p) if p and os.path.exists(p) else None)
            for name, p in inputs.items()
        },
        "started_at": started,
        "finished_at": _utcnow(),
        "counts": counts,
    }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _require_file(path: str | None, what: str) -> str:
    if not path or not os.path.exists(path):
        raise UsageError(f"{what} not found: {path!r}")
    return path


def _load_config(path: str | None) -> AppConfig:
    if path is None:
        return AppConfig({})
    _require_file(path, "config file")
    try:
        return AppConfig.load(path)
    except (ValueError, OSError) as exc:
        raise UsageError(f"cannot load config: {exc}") from exc


def chat_backend_from_config(cfg: AppConfig):
    scripted = cfg.get("api.scripted_chat")
    if scripted:
        _require_file(scripted, "scripted chat fixture")
        return ScriptedChatBackend.from_jsonl(scripted)
    base = cfg.get("api.base_url")
    if not base:
        raise UsageError(
            "no chat backend configured: set api.base_url (or RPD_API_BASE) "
            "or api.scripted_chat"
        )
    return HttpChatBackend(
        base,
        cfg.get("api.model_id", "default-chat"),
        api_key=cfg.get("api.key"),
        max_in_flight=int(cfg.get("api.max_in_flight", 4)),
        retry_limit=int(cfg.get("api.retry_limit", 3)),
    )


def embedding_backend_from_config(cfg: AppConfig):
    dim = cfg.get("embedding.mock_dimension")
    if dim:
        return MockEmbeddingBackend(int(dim), model_id=cfg.get("embedding.model_id", "mock"))
    base = cfg.get("api.base_url")
    model = cfg.get("embedding.model_id")
    if not base or not model:
        raise UsageError(
            "no embedding backend configured: set embedding.mock_dimension for "
            "offline runs, or api.base_url plus embedding.model_id"
        )
    return HttpEmbeddingBackend(
        base,
        model,
        api_key=cfg.get("api.key"),
        max_in_flight=int(cfg.get("api.max_in_flight", 4)),
        retry_limit=int(cfg.get("api.retry_limit", 3)),
    )


def _embedding_model_id(cfg: AppConfig) -> str:
    return cfg.get("embedding.model_id", "mock")


def _load_corpus_checked(path: str | None):
    _require_file(path, "corpus file")
    try:
        return load_corpus(path)
    except CorpusError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Commands


def cmd_summarize(args) -> int:
    started = _utcnow()
    cfg = _load_config(args.config)
    corpus = _load_corpus_checked(args.corpus)
    os.makedirs(args.out, exist_ok=True)
    out_file = os.path.join(args.out, "summaries.jsonl")
    existing = summary_index(load_summaries(out_file)) if os.path.exists(out_file) else {}

    pending = [
        (p, s)
        for p in corpus
        for s in p.solutions
        if (p.problem_id, s.solution_id) not in existing
    ]
    failures: list[SummarizationFailed] = []
    summarized = 0
    if pending:
        backend = chat_backend_from_config(cfg)
        workers = int(cfg.get("runtime.max_parallel", os.cpu_count() or 1))

        def work(item):
            p, s = item
            try:
                return llm.summarize_solution(p.question, s, backend, p.problem_id)
            except SummarizationFailed as exc:
                return exc

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            results = list(pool.map(work, pending))
        with open(out_file, "a", encoding="utf-8") as fh:
            for res in results:
                if isinstance(res, SummarizationFailed):
                    log.error("%s", res)
                    failures.append(res)
                else:
                    fh.write(json.dumps(res.to_record(), ensure_ascii=False))
                    fh.write("\n")
                    summarized += 1
    elif not os.path.exists(out_file):
        open(out_file, "w").close()

    write_manifest(
        os.path.join(args.out, "manifest.json"),
        "summarize",
        cfg,
        {"corpus": args.corpus},
        {
            "problems": len(corpus),
            "solutions": sum(p.k for p in corpus),
            "already_present": len(existing),
            "summarized": summarized,
            "failed": len(failures),
        },
        started,
    )
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_filter(args) -> int:
    started = _utcnow()
    cfg = _load_config(args.config)
    corpus = _load_corpus_checked(args.corpus)
    ccfg = cfg.curation_config()
    os.makedirs(args.out, exist_ok=True)

    kept_len, dropped_len = curation.length_filter(corpus, ccfg.max_avg_tokens)
    warnings: list[str] = []
    if kept_len:
        backend = chat_backend_from_config(cfg)

        def judge(tail: str) -> bool:
            return llm.judge_completeness(tail, backend)

        kept, dropped_cmp = curation.completeness_filter(
            kept_len,
            judge,
            ccfg.completeness_tail_tokens,
            ccfg.min_valid_solutions,
            warnings=warnings,
        )
    else:
        kept, dropped_cmp = [], []

    save_jsonl(kept, os.path.join(args.out, "corpus.jsonl"))
    report = {
        "ingested": len(corpus),
        "kept": len(kept),
        "dropped_by_length": len(dropped_len),
        "dropped_by_completeness": len(dropped_cmp),
        "judge_warnings": warnings,
    }
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(
        os.path.join(args.out, "manifest.json"),
        "filter",
        cfg,
        {"corpus": args.corpus},
        report | {"judge_warnings": len(warnings)},
        started,
    )
    return EXIT_OK


def cmd_embed(args) -> int:
    started = _utcnow()
    cfg = _load_config(args.config)
    ccfg = cfg.curation_config()
    method = ccfg.distance_method

    texts: list[str] = []
    seen: set[str] = set()

    def add(text: str) -> None:
        if text not in seen:
            seen.add(text)
            texts.append(text)

    if method in ("rpd", "summary_embedding"):
        _require_file(args.summaries, "summaries file")
        summaries = load_summaries(args.summaries)
        for summary in summaries:
            if method == "rpd":
                for step in summary.steps:
                    add(step.description)
            else:
                add(concat_summary_text(summary))
    else:
        corpus = _load_corpus_checked(args.corpus)
        for p in corpus:
            for s in p.solutions:
                add(s.text)

    cache_path = args.out_cache or cfg.get("cache.path")
    if not cache_path:
        raise UsageError("no cache path: pass --out-cache or set cache.path")
    cache = EmbeddingCache(cache_path)
    backend = embedding_backend_from_config(cfg)
    before = len(cache)
    try:
        for i in range(0, len(texts), EMBED_CHUNK):
            embed_batch(texts[i : i + EMBED_CHUNK], backend, cache)
    except EmbedFailed as exc:
        log.error("%s", exc)
        return EXIT_PARTIAL
    finally:
        write_manifest(
            cache_path + ".manifest.json",
            "embed",
            cfg,
            {"summaries": args.summaries, "corpus": args.corpus},
            {"texts": len(texts), "added": len(cache) - before, "cache_size": len(cache)},
            started,
        )
    return EXIT_OK


def cmd_curate(args) -> int:
    started = _utcnow()
    cfg = _load_config(args.config)
    ccfg = cfg.curation_config()
    corpus = _load_corpus_checked(args.corpus)
    _require_file(args.summaries, "summaries file")
    _require_file(args.cache, "embedding cache")
    summaries = summary_index(load_summaries(args.summaries))
    cache = EmbeddingCache(args.cache)
    reader = cache.reader(_embedding_model_id(cfg))
    os.makedirs(args.out, exist_ok=True)

    try:
        curated, report = curation.curate_detailed(corpus, ccfg, summaries, reader)
        training = curation.emit_training_set(curated, corpus)
    except curation.CurationError as exc:
        log.error("%s", exc)
        return EXIT_PARTIAL

    save_jsonl(curated.records, os.path.join(args.out, "curated.jsonl"))
    save_jsonl(training, os.path.join(args.out, "training.jsonl"))
    report_obj = report.to_record() | {"config_fingerprint": curated.config_fingerprint}
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report_obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.dump_pair_scores:
        save_jsonl(report.pair_scores, args.dump_pair_scores)
    write_manifest(
        os.path.join(args.out, "manifest.json"),
        "curate",
        cfg,
        {"corpus": args.corpus, "summaries": args.summaries, "cache": args.cache},
        {
            "ingested": report.ingested,
            "dropped_by_length": report.dropped_by_length,
            "dropped_by_completeness": report.dropped_by_completeness,
            "ranked": report.ranked,
            "selected": report.selected,
            "training_records": len(training),
        },
        started,
    )
    return EXIT_OK


def _parse_k_list(raw: str) -> list[int]:
    try:
        ks = [int(v) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --k-list {raw!r}") from exc
    if not ks:
        raise UsageError("empty --k-list")
    return ks


def cmd_eval(args) -> int:
    started = _utcnow()
    cfg = _load_config(args.config)
    os.makedirs(args.out, exist_ok=True)

    if args.mode == "passk":
        _require_file(args.samples, "samples file")
        try:
            rows = load_samples(args.samples)
            report = build_passk_report(rows, _parse_k_list(args.k_list))
        except (CorpusError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        with open(os.path.join(args.out, "passk.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_record(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        ks = sorted(report.estimates)
        header = "".join(f"{'pass@' + str(k):>12}" for k in ks)
        values = "".join(f"{report.estimates[k]:>12.4f}" for k in ks)
        with open(os.path.join(args.out, "passk.txt"), "w", encoding="utf-8") as fh:
            fh.write(header + "\n" + values + "\n")
        counts = {"problems": len(report.counts), "n": report.n}

    elif args.mode == "diversity":
        _require_file(args.samples, "samples file")
        _require_file(args.summaries, "summaries file")
        _require_file(args.cache, "embedding cache")
        summaries = summary_index(load_summaries(args.summaries))
        cache = EmbeddingCache(args.cache)
        model_id = _embedding_model_id(cfg)
        by_problem: dict[str, list[dict]] = {}
        for rec in load_jsonl(args.samples):
            by_problem.setdefault(rec["problem_id"], []).append(rec)
        solved = []
        for pid, recs in by_problem.items():
            correct = []
            for rec in recs:
                if not rec["is_correct"]:
                    continue
                sid = str(rec["sample_index"])
                summary = summaries.get((pid, sid))
                if summary is None:
                    log.error("missing summary for (%r, %r)", pid, sid)
                    return EXIT_PARTIAL
                try:
                    vecs = tuple(cache.vector_for(model_id, s.description) for s in summary.steps)
                except KeyError as exc:
                    log.error("missing embedding for (%r, %r): %s", pid, sid, exc)
                    return EXIT_PARTIAL
                correct.append(CorrectSolution(rec["text"], vecs))
            solved.append(SolvedProblem(pid, tuple(correct)))
        reports = output_diversity_report(solved, n=args.n)
        with open(os.path.join(args.out, "diversity.json"), "w", encoding="utf-8") as fh:
            json.dump([r.to_record() for r in reports], fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(args.out, "diversity.txt"), "w", encoding="utf-8") as fh:
            fh.write(f"{'group':<20}{'problems':>10}{'mean_rpd':>12}{'div_self_bleu':>15}\n")
            for r in reports:
                fh.write(
                    f"{r.group:<20}{r.problem_count:>10}{r.mean_rpd:>12.4f}"
                    f"{r.div_self_bleu:>15.2f}\n"
                )
        counts = {"problems": len(solved), "groups": len(reports)}

    else:  # histogram
        _require_file(args.scores, "scores file")
        values = []
        for rec in load_jsonl(args.scores):
            values.append(float(rec["score"] if isinstance(rec, dict) else rec))
        rows = score_histogram(values, args.bins)
        write_histogram_csv(rows, os.path.join(args.out, "histogram.csv"))
        counts = {"scores": len(values), "bins": args.bins}

    write_manifest(
        os.path.join(args.out, "manifest.json"),
        f"eval-{args.mode}",
        cfg,
        {"samples": getattr(args, "samples", None), "scores": getattr(args, "scores", None)},
        counts,
        started,
    )
    return EXIT_OK


def cmd_compare_metrics(args) -> int:
    started = _utcnow()
    cfg = _load_config(args.config)
    method_names = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in method_names if m not in evaluation.METHOD_NAMES]
    if unknown:
        raise UsageError(f"unknown methods: {unknown}; choose from {evaluation.METHOD_NAMES}")

    backend = None
    if args.judge == "llm" or "llm_selection" in method_names:
        # fail before any data work when the backend cannot be built
        backend = chat_backend_from_config(cfg)

    if args.judge == "planted":
        if not args.labels:
            raise UsageError("--judge planted requires --labels")
        _require_file(args.labels, "labels file")
        labels = synthetic.load_labels(load_jsonl(args.labels))
        judge = evaluation.planted_cluster_judge(labels)
    else:
        judge = evaluation.llm_pair_judge(backend)

    corpus = _load_corpus_checked(args.corpus)
    _require_file(args.summaries, "summaries file")
    _require_file(args.cache, "embedding cache")
    summaries = summary_index(load_summaries(args.summaries))
    cache = EmbeddingCache(args.cache)
    payloads = synthetic.payloads_from_parts(corpus, summaries, cache, _embedding_model_id(cfg))

    seed = args.seed if args.seed is not None else cfg.curation_config().rng_seed
    rng = random.Random(seed)
    try:
        selectors = evaluation.build_selectors(method_names, rng=rng, backend=backend)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    outcomes = evaluation.compare_metrics(payloads, selectors, judge)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "comparison.json"), "w", encoding="utf-8") as fh:
        json.dump([o.to_record() for o in outcomes], fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(args.out, "comparison.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"{'method':<20}{'successes':>10}{'trials':>8}{'rate':>10}\n")
        for o in outcomes:
            fh.write(
                f"{o.method:<20}{o.success_count:>10}{o.trial_count:>8}{o.success_rate:>10.3f}\n"
            )
    write_manifest(
        os.path.join(args.out, "manifest.json"),
        "compare-metrics",
        cfg,
        {"corpus": args.corpus, "summaries": args.summaries, "cache": args.cache,
         "labels": args.labels},
        {"problems": len(payloads), "methods": len(outcomes), "seed": seed},
        started,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathdiv",
        description="Diversity-aware curation of one-problem-many-solutions training sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="decompose solutions into step summaries")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("filter", help="length and completeness filtering")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("embed", help="populate the embedding cache")
    p.add_argument("--summaries", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--out-cache", dest="out_cache", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("curate", help="rank problems and select diverse solutions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--dump-pair-scores", dest="dump_pair_scores", default=None)
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("eval", help="pass@k, diversity report, score histogram")
    p.add_argument("mode", choices=["passk", "diversity", "histogram"])
    p.add_argument("--samples", default=None)
    p.add_argument("--summaries", default=None)
    p.add_argument("--cache", default=None)
    p.add_argument("--scores", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--k-list", dest="k_list", default=DEFAULT_K_LIST)
    p.add_argument("--n", type=int, default=evaluation.DEFAULT_ATTEMPTS)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare-metrics", help="success-rate comparison of pair selectors")
    p.add_argument("--corpus", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--methods", default=",".join(evaluation.METHOD_NAMES))
    p.add_argument("--judge", choices=["llm", "planted"], default="planted")
    p.add_argument("--labels", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_compare_metrics)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
