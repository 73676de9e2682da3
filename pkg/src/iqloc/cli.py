"""Command-line entry point.

Subcommands: index, search, localize, keywords, dataset build|split|classify,
pairs, eval, backend check. Exit codes: 0 success, 1 usage error, 2 data
error, 3 backend/transport error.

Every file-writing run also emits a RunManifest (<out>.manifest.json) with a
config snapshot, SHA-256 digests of the inputs consumed, the seed, the tool
version, and per-stage timings, so any output can be reproduced bit-for-bit
from its manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import requests

from . import __version__
from .config import ENV_BACKEND_URL, ConfigError, RunConfig
from .corpus import BugReport, CorpusError, load_corpus, load_reports
from .dataset import (
    DiffParseError,
    SplitSpec,
    build_pairs,
    classify_report,
    parse_unified_diff,
    split_random,
    split_timewise,
)
from .embeddings import (
    EmbeddingBackend,
    HashedEmbedding,
    RemoteEmbedding,
    TfidfCooccurrenceEmbedding,
)
from .index import ANALYZER_MODES, Bm25Params, Index, IndexFormatError, analyze, build_index
from .keywords import KeywordRequest, extract_keywords
from .metrics import EvalRecord, evaluate
from .pipeline import LocalizationResult, corpus_lookup, localize
from .relevance import BackendError, BackendTransportError, LexicalScorer, RemoteScorer
from .report import render_metric_figures, write_metrics_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage errors, not argparse's 2
        raise UsageError(f"{self.prog}: {message}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest_payload(
    config: dict, inputs: list[Path], seed: int, timings_ms: dict[str, float]
) -> dict:
    return {
        "tool_version": __version__,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in sorted(set(inputs)) if p.exists()},
        "timings_ms": timings_ms,
    }


def _write_manifest(
    out_path: Path,
    config: dict,
    inputs: list[Path],
    seed: int,
    timings_ms: dict[str, float],
) -> None:
    manifest = _manifest_payload(config, inputs, seed, timings_ms)
    Path(str(out_path) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _emit_manifest_stderr(config: dict, inputs: list[Path], seed: int = 0) -> None:
    # Commands that print their result to stdout still emit a manifest, on
    # stderr, so every run records what it consumed.
    manifest = _manifest_payload(config, inputs, seed, timings_ms={})
    print(f"manifest: {json.dumps(manifest, sort_keys=True)}", file=sys.stderr)


def _dump_jsonl(path: Path, objects: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for obj in objects:
            handle.write(json.dumps(obj, sort_keys=True) + "\n")


def _default_threads() -> int:
    return os.cpu_count() or 1


def _make_embedder(name: str, config: RunConfig, corpus_texts: list[str]) -> EmbeddingBackend:
    if name == "hashed":
        return HashedEmbedding(dimension=16)
    if name == "tfidf":
        return TfidfCooccurrenceEmbedding().fit(corpus_texts)
    if name == "remote":
        return RemoteEmbedding(config.effective_backend_url(), config.backend_timeout_s)
    raise DataError(f"unknown embedding backend {name!r}")


def _make_scorer(name: str, config: RunConfig):
    if name == "lexical":
        return LexicalScorer()
    if name == "remote":
        return RemoteScorer(config.effective_backend_url(), config.backend_timeout_s)
    raise DataError(f"unknown scorer backend {name!r}")


# -- subcommand implementations --------------------------------------------


def _cmd_index(args) -> int:
    out = Path(args.out)
    if out.exists() and not args.no_cache:
        try:
            Index.load(out)
            print(f"index cache hit: {out}", file=sys.stderr)
            return EXIT_OK
        except IndexFormatError:
            pass  # stale/corrupt cache, rebuild
    started = time.perf_counter()
    docs, load_report = load_corpus(args.root, args.manifest, threads=args.threads)
    for warning in load_report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for error in load_report.errors:
        print(f"error: {error}", file=sys.stderr)
    index = build_index(docs, Bm25Params(k1=args.k1, b=args.b), analyzer=args.analyzer)
    index.save(out)
    elapsed = (time.perf_counter() - started) * 1000.0
    _write_manifest(
        out,
        config={"k1": args.k1, "b": args.b, "analyzer": args.analyzer},
        inputs=[Path(args.manifest)],
        seed=0,
        timings_ms={"build": elapsed},
    )
    print(f"indexed {index.n_docs} documents -> {out}", file=sys.stderr)
    return EXIT_OK


def _cmd_search(args) -> int:
    index = Index.load(args.index)
    terms = [t.term for t in analyze(args.query, index.analyzer)]
    ranked = index.search(terms, args.project, args.version, args.k, query_id=args.query)
    print(json.dumps(ranked.to_json(), sort_keys=True))
    _emit_manifest_stderr({"k": args.k}, [Path(args.index)])
    return EXIT_OK


def _cmd_localize(args) -> int:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    index = Index.load(args.index)
    root = args.root or config.corpus_root
    manifest = args.manifest or config.corpus_manifest
    docs, load_report = load_corpus(root, manifest, threads=args.threads)
    for warning in load_report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    corpus = corpus_lookup(docs)
    reports = load_reports(args.reports)
    scorer = _make_scorer(config.scorer_backend, config)
    embedder = _make_embedder(
        config.embedding_backend, config, [d.content for d in docs]
    )
    pipeline_config = config.pipeline()

    results: list[LocalizationResult] = []
    timings: dict[str, float] = {}
    for report in reports:
        result = localize(
            report,
            index,
            corpus,
            pipeline_config,
            scorer,
            embedder,
            baseline=args.baseline,
            threads=args.threads,
        )
        results.append(result)
        for stage, ms in result.timings_ms.items():
            timings[stage] = timings.get(stage, 0.0) + ms
        if args.explain and result.query is not None:
            print(
                json.dumps(
                    {"report_id": report.id, "query": result.query.to_json()},
                    sort_keys=True,
                ),
                file=sys.stderr,
            )

    out = Path(args.out)
    _dump_jsonl(out, [r.to_json() for r in results])
    inputs = [Path(args.reports), Path(args.index), Path(manifest)]
    if args.config:
        inputs.append(Path(args.config))
    _write_manifest(out, config.to_json(), inputs, config.seed, timings)
    print(f"localized {len(results)} reports -> {out}", file=sys.stderr)
    return EXIT_OK


def _cmd_keywords(args) -> int:
    if args.text is not None:
        doc = args.text
    else:
        doc = Path(args.file).read_text(encoding="utf-8")
    config = RunConfig()
    embedder = _make_embedder(args.backend, config, [doc])
    selected = extract_keywords(KeywordRequest(doc=doc, n=args.n, lam=args.mmr_lambda), embedder)
    for kw in selected.keywords:
        print(json.dumps(kw.to_json(), sort_keys=True))
    inputs = [Path(args.file)] if args.file else []
    _emit_manifest_stderr({"n": args.n, "lambda": args.mmr_lambda, "backend": args.backend}, inputs)
    return EXIT_OK


def _load_diffs(diff_dir: Path, reports: list[BugReport]) -> dict[str, list]:
    diffs = {}
    for report in reports:
        diff_path = diff_dir / f"{report.id}.diff"
        if diff_path.exists():
            diffs[report.id] = parse_unified_diff(diff_path.read_text(encoding="utf-8"))
    return diffs


def _cmd_dataset_build(args) -> int:
    reports = load_reports(args.reports)
    docs, _ = load_corpus(args.root, args.manifest, threads=args.threads)
    diffs = _load_diffs(Path(args.diffs), reports)
    pairs, warnings = build_pairs(
        reports, diffs, docs, negatives_per_positive=args.negatives, seed=args.seed
    )
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    out = Path(args.out)
    _dump_jsonl(out, [p.to_json() for p in pairs])
    inputs = [Path(args.reports), Path(args.manifest)]
    inputs += [Path(args.diffs) / f"{r.id}.diff" for r in reports if r.id in diffs]
    _write_manifest(
        out,
        config={"negatives_per_positive": args.negatives},
        inputs=inputs,
        seed=args.seed,
        timings_ms={},
    )
    positives = sum(1 for p in pairs if p.label == 1)
    print(
        f"built {len(pairs)} pairs ({positives} positive / {len(pairs) - positives} negative)"
        f" -> {out}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_dataset_split(args) -> int:
    reports = load_reports(args.reports)
    spec = SplitSpec(mode=args.mode, seed=args.seed)
    if args.mode == "random":
        train, val, test = split_random(reports, spec)
        warnings: list[str] = []
    else:
        train, val, test, warnings = split_timewise(reports, spec)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    out = Path(args.out)
    out.write_text(
        json.dumps(
            {
                "mode": args.mode,
                "seed": args.seed,
                "train": [r.id for r in train],
                "validation": [r.id for r in val],
                "test": [r.id for r in test],
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    _write_manifest(
        out,
        config={"mode": args.mode},
        inputs=[Path(args.reports)],
        seed=args.seed,
        timings_ms={},
    )
    print(f"split {len(reports)} reports {len(train)}/{len(val)}/{len(test)} -> {out}")
    return EXIT_OK


def _cmd_dataset_classify(args) -> int:
    reports = load_reports(args.reports)
    rows = [{"id": r.id, "class": classify_report(r)} for r in reports]
    if args.out:
        _dump_jsonl(Path(args.out), rows)
        _write_manifest(
            Path(args.out), config={}, inputs=[Path(args.reports)], seed=0, timings_ms={}
        )
    else:
        for row in rows:
            print(json.dumps(row, sort_keys=True))
        _emit_manifest_stderr({}, [Path(args.reports)])
    return EXIT_OK


def _cmd_eval(args) -> int:
    reports = {r.id: r for r in load_reports(args.truth)}
    records: list[EvalRecord] = []
    classes: dict[str, str] = {}
    for line in Path(args.results).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        report = reports.get(raw["report_id"])
        if report is None or not report.fixed_files:
            continue
        records.append(
            EvalRecord(
                query_id=raw["report_id"],
                ranked_paths=tuple(h["path"] for h in raw["final"]["hits"]),
                ground_truth=frozenset(report.fixed_files),
            )
        )
        classes[raw["report_id"]] = report.report_class or classify_report(report)
    if not records:
        raise DataError("no evaluable results (reports missing or without ground truth)")

    ks = tuple(int(k) for k in args.k.split(","))
    overall = evaluate(records, ks)
    per_class = {}
    for cls in sorted(set(classes.values())):
        subset = [r for r in records if classes[r.query_id] == cls]
        if subset:
            per_class[cls] = evaluate(subset, ks)

    out = Path(args.out)
    payload = {
        "overall": overall.to_json(),
        "per_class": {cls: rep.to_json() for cls, rep in per_class.items()},
        "num_queries": len(records),
    }
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    k_max = max(ks)
    rows = [
        {
            "query_id": r.query_id,
            "class": classes[r.query_id],
            "ap": overall.per_query_ap[r.query_id],
            "rr": overall.per_query_rr[r.query_id],
            f"p_at_{k_max}": sum(
                1 for p in r.ranked_paths[:k_max] if p in r.ground_truth
            )
            / k_max,
        }
        for r in records
    ]
    csv_path = Path(args.csv) if args.csv else out.with_suffix(".csv")
    write_metrics_csv(csv_path, rows)
    figures_dir = Path(args.figures) if args.figures else out.parent / "figures"
    figures = render_metric_figures(figures_dir, overall, per_class)
    _write_manifest(
        out,
        config={"k": list(ks)},
        inputs=[Path(args.results), Path(args.truth)],
        seed=0,
        timings_ms={},
    )
    print(
        f"evaluated {len(records)} queries -> {out}, {csv_path}, "
        + ", ".join(str(f) for f in figures),
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_backend_check(args) -> int:
    url = os.environ.get(ENV_BACKEND_URL, args.url).rstrip("/")
    session = requests.Session()
    embedder = RemoteEmbedding(url, timeout_s=args.timeout, session=session)
    scorer = RemoteScorer(url, timeout_s=args.timeout, session=session)

    texts = ["flow execution snapshot", "persistence context", "flow execution snapshot"]
    vectors = embedder.embed_batch(texts)
    if len({v.shape[0] for v in vectors}) != 1:
        raise BackendTransportError("/embed returned inconsistent dimensions")
    if not (vectors[0] == vectors[2]).all():
        raise BackendTransportError("/embed is not deterministic for duplicate texts")

    pairs = [
        ("snapshot creation fails", "void createSnapshot() { }"),
        ("unrelated report", "int add(int a, int b) { return a + b; }"),
    ]
    scores = scorer.score_pairs(pairs)
    rescored = scorer.score_pairs(pairs)
    if scores != rescored:
        raise BackendTransportError("/score is not deterministic")

    print(
        json.dumps(
            {
                "url": url,
                "embed_dimension": int(vectors[0].shape[0]),
                "score_range_ok": True,
                "deterministic": True,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


# -- argument wiring --------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="iqloc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"iqloc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build the BM25 index from a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", default=".")
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.add_argument("--analyzer", choices=ANALYZER_MODES, default="code")
    p.add_argument("--no-cache", action="store_true", help="force a rebuild")
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("search", help="run one query against a built index")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--project", required=True)
    p.add_argument("--version", required=True)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("localize", help="run the full localization pipeline")
    p.add_argument("--config")
    p.add_argument("--reports", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--root", help="corpus root (overrides config)")
    p.add_argument("--manifest", help="corpus manifest (overrides config)")
    p.add_argument("--baseline", action="store_true", help="retrieval only, skip reranking")
    p.add_argument("--explain", action="store_true", help="print provenance-tagged queries")
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=_cmd_localize)

    p = sub.add_parser("keywords", help="extract MMR keywords from text")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text")
    group.add_argument("--file")
    p.add_argument("--n", type=int, default=15)
    p.add_argument("--lambda", dest="mmr_lambda", type=float, default=0.5)
    p.add_argument("--backend", choices=("hashed", "tfidf", "remote"), default="hashed")
    p.set_defaults(func=_cmd_keywords)

    p = sub.add_parser("dataset", help="dataset construction utilities")
    dsub = p.add_subparsers(dest="dataset_command", required=True)

    b = dsub.add_parser("build", help="build relevance pairs from reports + diffs")
    b.add_argument("--reports", required=True)
    b.add_argument("--diffs", required=True)
    b.add_argument("--manifest", required=True)
    b.add_argument("--root", default=".")
    b.add_argument("--out", required=True)
    b.add_argument("--negatives", type=int, default=4)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--threads", type=int, default=_default_threads())
    b.set_defaults(func=_cmd_dataset_build)

    s = dsub.add_parser("split", help="split reports into train/validation/test")
    s.add_argument("--reports", required=True)
    s.add_argument("--mode", choices=("random", "timewise"), default="random")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_dataset_split)

    c = dsub.add_parser("classify", help="classify reports as ST/PE/NL")
    c.add_argument("--reports", required=True)
    c.add_argument("--out")
    c.set_defaults(func=_cmd_dataset_classify)

    p = sub.add_parser("pairs", help="alias of `dataset build`")
    p.add_argument("--reports", required=True)
    p.add_argument("--diffs", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", default=".")
    p.add_argument("--out", required=True)
    p.add_argument("--negatives", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.set_defaults(func=_cmd_dataset_build)

    p = sub.add_parser("eval", help="compute retrieval metrics from results")
    p.add_argument("--results", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--k", default="1,5,10")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="per-query CSV path (default: <out>.csv)")
    p.add_argument("--figures", help="figures directory (default: <out dir>/figures)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("backend", help="model-service utilities")
    bsub = p.add_subparsers(dest="backend_command", required=True)
    chk = bsub.add_parser("check", help="verify /embed and /score conformance")
    chk.add_argument("--url", default="http://localhost:8901")
    chk.add_argument("--timeout", type=float, default=10.0)
    chk.set_defaults(func=_cmd_backend_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except (BackendError,) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except requests.RequestException as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DataError, CorpusError, ConfigError, DiffParseError, IndexFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())
