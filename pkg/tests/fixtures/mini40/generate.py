"""One-off generator for the 40-document localization fixture.

Mechanics the fixture relies on:

  * The report mentions a handful of framework noise terms over and over;
    the raw baseline query keeps every occurrence, so the five decoy
    documents (which carry those noise terms) outscore the buggy document.
  * Query reformulation deduplicates terms and caps the query at the top
    MMR keywords, collapsing the noise repetition to (at most) one query
    occurrence per noise term while the distinctive snapshot vocabulary,
    which repeats in the report and lives in the buggy method, survives
    selection. The buggy document then wins the rerank.

Keyword survival under the 16-dimensional hashed embedding depends on the
exact term strings, so candidate variants are tried until the ranks verify
against the brute-force BM25 oracle with a score margin; the winning
variant is frozen to disk verbatim.

Run from the repository root:  python tests/fixtures/mini40/generate.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

HERE = Path(__file__).parent
ROOT = HERE.parent.parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import oracles  # noqa: E402

from iqloc.corpus import BugReport, SourceDocument, extract_methods, parse_timestamp  # noqa: E402
from iqloc.embeddings import HashedEmbedding  # noqa: E402
from iqloc.index import analyze, build_index  # noqa: E402
from iqloc.pipeline import (  # noqa: E402
    PipelineConfig,
    corpus_lookup,
    localize,
    report_query_terms,
)
from iqloc.relevance import LexicalScorer  # noqa: E402

PROJECT, VERSION = "sfw", "2.0"

DISTINCTIVE_POOL = [
    "snapshot", "serializing", "compression", "continuation", "deserializer",
    "restoration", "checkpoint", "rehydrate", "marshalling", "hibernation",
    "resumable", "freezing", "unfreezing", "compaction", "archival", "thawing",
]

NOISE_POOL = [
    "persistence", "context", "provider", "registry", "listener", "adapter",
    "handler", "manager", "factory", "resolver", "converter", "binder",
    "validator", "interceptor", "scheduler", "dispatcher",
]

FILLER_TOPICS = [
    "parsing tokens grammar syntax tree walker",
    "network socket channel buffer packet framing",
    "cache eviction entry weigher expiry loader",
    "metrics gauge counter histogram quantile sink",
    "security principal credential realm digest nonce",
    "logging appender layout rollover archive policy",
    "migration schema column constraint revision ledger",
    "cluster membership gossip quorum ballot epoch",
    "storage segment sstable tombstone bloom levels",
    "codec varint zigzag checksum trailer preamble",
    "threading mutex latch barrier semaphore fairness",
    "calendar holiday timezone recurrence span anchor",
    "geometry polygon vertex tessellation winding area",
    "imaging raster palette dithering gamma alpha",
    "audio waveform envelope resampler tremolo gain",
    "inventory warehouse shelf picker tote conveyor",
    "billing invoice proration surcharge remittance arrears",
    "search facet synonym stemming shingle boosting",
    "workflow approval escalation deadline reminder chain",
    "telemetry beacon ingest backlog watermark lag",
    "chess opening gambit endgame zugzwang tempo",
    "weather humidity pressure frontal gust dewpoint",
    "recipe ingredient whisk simmer marinade garnish",
    "garden trellis compost mulch perennial pruning",
    "astronomy parallax magnitude occultation transit albedo",
    "sailing rigging halyard winch mainsail telltale",
    "pottery kiln glaze bisque stoneware slipcast",
    "cycling cadence derailleur crankset headwind drafting",
    "typography kerning ligature baseline descender serif",
    "origami crease valley mountain tessellated fold",
    "apiary brood nectar forager waggle propolis",
    "orchard rootstock scion grafting dormancy thinning",
    "museum exhibit curator provenance acquisition loan",
    "railway signal ballast sleeper junction siding",
]


def java_class(name: str, package: str, methods: list[tuple[str, list[str]]]) -> str:
    lines = [f"package {package};", "", f"public class {name} {{"]
    for method_name, body_lines in methods:
        lines.append(f"    void {method_name}() {{")
        lines.extend(f"        {b}" for b in body_lines)
        lines.append("    }")
        lines.append("")
    if lines[-1] == "":
        lines.pop()
    lines.append("}")
    return "\n".join(lines) + "\n"


def comment_lines(words: list[str], per_line: int = 6) -> list[str]:
    return [
        "// " + " ".join(words[i : i + per_line])
        for i in range(0, len(words), per_line)
    ]


def build_variant(variant: int) -> tuple[dict[str, str], dict]:
    distinctive = (DISTINCTIVE_POOL[variant:] + DISTINCTIVE_POOL[:variant])[:8]
    noise = (NOISE_POOL[variant % len(NOISE_POOL):] + NOISE_POOL[: variant % len(NOISE_POOL)])[:5]
    files: dict[str, str] = {}

    padding = " ".join(
        f"scratch{i} quiescent{i} bespoke{i}" for i in range(10)
    ).split()
    files["core/SnapshotCodec.java"] = java_class(
        "SnapshotCodec",
        "sfw.core",
        [
            ("encodeState", comment_lines(distinctive * 2) + ["emit(state);"]),
            ("bookkeeping", comment_lines(padding)),
        ],
    )

    for d in range(5):
        files[f"support/Decoy{d}.java"] = java_class(
            f"Decoy{d}",
            "sfw.support",
            [(f"wire{d}", comment_lines(noise * 4))],
        )

    for i, topic in enumerate(FILLER_TOPICS):
        files[f"misc/Filler{i:02d}.java"] = java_class(
            f"Filler{i:02d}",
            "sfw.misc",
            [(f"work{i}", comment_lines(topic.split() * 3))],
        )
    assert len(files) == 40

    d, x = distinctive, noise
    title = f"{d[0]} {d[1]} loses {d[3]} state under {d[2]}"
    # Distinctive terms three times each; every noise term seven times.
    description = (
        f"{d[4]} aborts {d[5]} at the first {d[6]}; {d[7]} never finishes. "
        f"Saved {d[0]} unusable since {d[1]} gained {d[2]} support; {d[3]} offsets move; "
        f"{d[4]} rejects {d[5]} past that {d[6]}; no {d[7]} afterwards. "
        f"Suspected the {x[0]} {x[1]} {x[2]} first, then the {x[3]} {x[4]}. "
        f"Checked the {x[0]} twice, reset the {x[1]}, swapped the {x[2]}, "
        f"bounced the {x[3]}, reloaded the {x[4]}. "
        f"Still broken with a fresh {x[0]}, default {x[1]}, stock {x[2]}, "
        f"bundled {x[3]}, empty {x[4]}. "
        f"Even a noop {x[0]} with the demo {x[1]} and sample {x[2]} plus the "
        f"fallback {x[3]} and minimal {x[4]} reproduces it. "
        f"Last try: fresh install, clean {x[0]}, vanilla {x[1]}, bare {x[2]}, "
        f"plain {x[3]}, tiny {x[4]}. "
        f"{d[0]} {d[1]} {d[2]} {d[3]} {d[4]} {d[5]} {d[6]} {d[7]} all implicated."
    )
    report = {
        "id": "SFW-1416",
        "project": PROJECT,
        "version": VERSION,
        "title": title,
        "description": description,
        "created_at": "2021-06-15T09:30:00Z",
        "fixed_files": ["core/SnapshotCodec.java"],
    }
    return files, report


def docs_from(files: dict[str, str]) -> list[SourceDocument]:
    docs = []
    for path in sorted(files):
        methods, failed = extract_methods(files[path])
        docs.append(
            SourceDocument(
                path=path,
                project=PROJECT,
                version=VERSION,
                content=files[path],
                methods=tuple(methods),
                parse_failed=failed,
            )
        )
    return docs


def check_variant(files: dict[str, str], report_raw: dict, verbose: bool) -> bool:
    docs = docs_from(files)
    report = BugReport(
        id=report_raw["id"],
        project=report_raw["project"],
        version=report_raw["version"],
        title=report_raw["title"],
        description=report_raw["description"],
        created_at=parse_timestamp(report_raw["created_at"]),
        fixed_files=tuple(report_raw["fixed_files"]),
    )
    index = build_index(docs)
    config = PipelineConfig()
    lookup = corpus_lookup(docs)
    result = localize(report, index, lookup, config, LexicalScorer(), HashedEmbedding(16))
    baseline = localize(
        report, index, lookup, config, LexicalScorer(), HashedEmbedding(16), baseline=True
    )
    buggy = report.fixed_files[0]
    base_rank = next(h.rank for h in baseline.final.hits if h.path == buggy)
    final_rank = next(h.rank for h in result.final.hits if h.path == buggy)

    tokens = [[t.term for t in analyze(d.content)] for d in docs]
    paths = [d.path for d in docs]

    def oracle_ranking(query: list[str]) -> list[tuple[float, str]]:
        scores = [(oracles.bm25_score(tokens, i, query), p) for i, p in enumerate(paths)]
        return sorted((s for s in scores if s[0] > 0), key=lambda x: (-x[0], x[1]))

    base_ranking = oracle_ranking(report_query_terms(report, "code"))
    oracle_base = [p for _s, p in base_ranking]
    final_ranking = oracle_ranking(result.query.term_strings)
    oracle_final = [p for _s, p in final_ranking]
    kept_distinctive = sum(
        1 for t in result.query.term_strings if t in files["core/SnapshotCodec.java"]
    )
    # Margins guard the frozen fixture against tiny numeric drift: the
    # rank-3 doc must clearly beat the buggy doc at baseline, and the buggy
    # doc must clearly beat the runner-up after reformulation.
    base_scores = {p: s for s, p in base_ranking}
    base_margin = base_ranking[2][0] / base_scores[buggy]
    final_margin = (
        final_ranking[0][0] / final_ranking[1][0] if len(final_ranking) > 1 else 99.0
    )
    if verbose:
        print(
            f"  base rank {base_rank} (oracle {oracle_base.index(buggy) + 1}, "
            f"margin {base_margin:.2f})  "
            f"final rank {final_rank} (oracle {oracle_final.index(buggy) + 1}, "
            f"margin {final_margin:.2f})  distinctive kept {kept_distinctive}/8"
        )
    assert base_rank == oracle_base.index(buggy) + 1
    assert final_rank == oracle_final.index(buggy) + 1
    return (
        base_rank > 3
        and base_margin >= 1.15
        and final_rank == 1
        and final_margin >= 1.4
        and kept_distinctive >= 3
    )


def main() -> None:
    for variant in range(len(DISTINCTIVE_POOL)):
        files, report = build_variant(variant)
        print(f"variant {variant}:")
        if check_variant(files, report, verbose=True):
            for rel, content in files.items():
                path = HERE / rel
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(content, encoding="utf-8")
            (HERE / "corpus.json").write_text(
                json.dumps(
                    [{"project": PROJECT, "version": VERSION, "files": sorted(files)}],
                    indent=2,
                )
                + "\n",
                encoding="utf-8",
            )
            (HERE / "reports.jsonl").write_text(json.dumps(report) + "\n", encoding="utf-8")
            print(f"frozen variant {variant}")
            return
    raise SystemExit("no variant satisfied the rank constraints")


if __name__ == "__main__":
    main()
