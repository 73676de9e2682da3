"""Training/evaluation data construction.

Covers diff-based buggy-method labeling, positive/negative pair generation
at a 4:1 ratio with negatives drawn strictly from other subject systems,
seeded random and per-system time-wise 70:10:20 splits, and regex-based
report classification (ST / PE / NL). The classification regexes live in a
versioned data file so they stay auditable and swappable.

Split rounding: train = floor(0.7n), validation = floor(0.1n), test takes
the remainder.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import BugReport, MethodSpan, SourceDocument

CLASS_ST = "ST"
CLASS_PE = "PE"
CLASS_NL = "NL"


class DiffParseError(ValueError):
    """Raised for malformed unified diffs, naming the offending line."""


@dataclass(frozen=True)
class DiffHunk:
    path: str
    old_start: int
    old_len: int
    new_start: int
    new_len: int
    removed: tuple[str, ...] = ()
    added: tuple[str, ...] = ()

    def old_range(self) -> range:
        return range(self.old_start, self.old_start + self.old_len)


@dataclass(frozen=True)
class RelevancePair:
    report_id: str
    report_project: str
    path: str
    method_name: str
    start_line: int
    end_line: int
    label: int
    project: str
    report_text: str = ""
    method_text: str = ""

    def to_json(self) -> dict:
        return {
            "report_id": self.report_id,
            "report_project": self.report_project,
            "path": self.path,
            "method_name": self.method_name,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "label": self.label,
            "project": self.project,
            "report_text": self.report_text,
            "method_text": self.method_text,
        }


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    mode: str = "random"
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {self.ratios}")
        if self.mode not in ("random", "timewise"):
            raise ValueError(f"unknown split mode {self.mode!r}")


_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def parse_unified_diff(text: str) -> list[DiffHunk]:
    """Parse a unified diff into per-hunk records grouped by file path."""
    hunks: list[DiffHunk] = []
    path: str | None = None
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- "):
            i += 1
            continue
        if line.startswith("+++ "):
            target = line[4:].split("\t")[0].strip()
            if target.startswith(("a/", "b/")):
                target = target[2:]
            path = target
            i += 1
            continue
        if line.startswith("@@"):
            m = _HUNK_RE.match(line)
            if m is None:
                raise DiffParseError(f"line {i + 1}: malformed hunk header {line!r}")
            if path is None:
                raise DiffParseError(f"line {i + 1}: hunk before any +++ file header")
            old_start, old_len = int(m.group(1)), int(m.group(2) or "1")
            new_start, new_len = int(m.group(3)), int(m.group(4) or "1")
            removed: list[str] = []
            added: list[str] = []
            need_old, need_new = old_len, new_len
            i += 1
            while need_old > 0 or need_new > 0:
                if i >= len(lines):
                    raise DiffParseError(f"line {i + 1}: hunk body ended early")
                body = lines[i]
                marker = body[:1]
                if marker == "-":
                    removed.append(body[1:])
                    need_old -= 1
                elif marker == "+":
                    added.append(body[1:])
                    need_new -= 1
                elif marker in (" ", ""):
                    need_old -= 1
                    need_new -= 1
                elif marker == "\\":
                    pass  # "\ No newline at end of file"
                else:
                    raise DiffParseError(f"line {i + 1}: unexpected hunk line {body!r}")
                i += 1
            hunks.append(
                DiffHunk(
                    path=path,
                    old_start=old_start,
                    old_len=old_len,
                    new_start=new_start,
                    new_len=new_len,
                    removed=tuple(removed),
                    added=tuple(added),
                )
            )
            continue
        i += 1
    return hunks


def buggy_methods(doc: SourceDocument, hunks: list[DiffHunk]) -> list[MethodSpan]:
    """Methods of doc whose line span intersects any hunk's old range."""
    out: list[MethodSpan] = []
    for method in doc.methods:
        for hunk in hunks:
            if hunk.path != doc.path or hunk.old_len == 0:
                continue
            hunk_end = hunk.old_start + hunk.old_len - 1
            if method.start_line <= hunk_end and hunk.old_start <= method.end_line:
                out.append(method)
                break
    return out


def _derive_rng(seed: int, *parts: str) -> random.Random:
    material = f"{seed}|" + "|".join(parts)
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def build_pairs(
    reports: list[BugReport],
    diffs_by_report: dict[str, list[DiffHunk]],
    docs: list[SourceDocument],
    negatives_per_positive: int = 4,
    seed: int = 0,
) -> tuple[list[RelevancePair], list[str]]:
    """Positive pairs from diff-touched methods, negatives cross-system.

    One positive per (report, buggy method); negatives_per_positive seeded
    uniform draws per positive from methods of other subject systems, without
    replacement within a report. Deterministic for a fixed seed regardless of
    processing order.
    """
    projects = {d.project for d in docs}
    if len(projects) < 2:
        raise ValueError(
            "negative sampling needs >= 2 subject systems in the corpus, "
            f"got {sorted(projects)}"
        )
    docs_by_key = {d.key: d for d in docs}
    methods_by_project: dict[str, list[tuple[SourceDocument, MethodSpan]]] = {}
    for doc in sorted(docs, key=lambda d: d.key):
        for method in doc.methods:
            methods_by_project.setdefault(doc.project, []).append((doc, method))

    pairs: list[RelevancePair] = []
    warnings: list[str] = []
    for report in sorted(reports, key=lambda r: (r.project, r.id)):
        hunks = diffs_by_report.get(report.id, [])
        positives: list[tuple[SourceDocument, MethodSpan]] = []
        for path in sorted({h.path for h in hunks}):
            doc = docs_by_key.get((report.project, report.version, path))
            if doc is None:
                continue
            for method in buggy_methods(doc, [h for h in hunks if h.path == path]):
                positives.append((doc, method))
        if not positives:
            warnings.append(f"{report.id}: no resolvable buggy methods, skipped")
            continue

        pool = [
            dm
            for project in sorted(methods_by_project)
            if project != report.project
            for dm in methods_by_project[project]
        ]
        wanted = negatives_per_positive * len(positives)
        rng = _derive_rng(seed, report.project, report.id)
        if len(pool) < wanted:
            warnings.append(
                f"{report.id}: negative pool has {len(pool)} methods, wanted {wanted}"
            )
            negatives = pool
        else:
            negatives = rng.sample(pool, wanted)

        for doc, method in positives:
            pairs.append(
                RelevancePair(
                    report_id=report.id,
                    report_project=report.project,
                    path=doc.path,
                    method_name=method.name,
                    start_line=method.start_line,
                    end_line=method.end_line,
                    label=1,
                    project=doc.project,
                    report_text=report.text,
                    method_text=method.body,
                )
            )
        for doc, method in negatives:
            pairs.append(
                RelevancePair(
                    report_id=report.id,
                    report_project=report.project,
                    path=doc.path,
                    method_name=method.name,
                    start_line=method.start_line,
                    end_line=method.end_line,
                    label=0,
                    project=doc.project,
                    report_text=report.text,
                    method_text=method.body,
                )
            )
    return pairs, warnings


class ReportClassifier:
    """ST/PE/NL classification from the shipped (or a custom) pattern file."""

    def __init__(self, patterns_path: str | Path | None = None):
        if patterns_path is None:
            raw = (
                resources.files("iqloc").joinpath("data/patterns.json").read_text("utf-8")
            )
        else:
            raw = Path(patterns_path).read_text(encoding="utf-8")
        spec = json.loads(raw)
        self.version = spec["version"]
        self._st = [re.compile(p) for p in spec["st"]]
        self._pe = [re.compile(p) for p in spec["pe"]]

    def classify(self, report: BugReport) -> str:
        text = f"{report.title}\n{report.description}"
        if any(p.search(text) for p in self._st):
            return CLASS_ST
        if any(p.search(text) for p in self._pe):
            return CLASS_PE
        return CLASS_NL


_DEFAULT_CLASSIFIER: ReportClassifier | None = None


def classify_report(report: BugReport) -> str:
    """Classify with the shipped pattern file (ST beats PE beats NL)."""
    global _DEFAULT_CLASSIFIER
    if _DEFAULT_CLASSIFIER is None:
        _DEFAULT_CLASSIFIER = ReportClassifier()
    return _DEFAULT_CLASSIFIER.classify(report)


def _cut(items: list, ratios: tuple[float, float, float]) -> tuple[list, list, list]:
    n = len(items)
    n_train = int(ratios[0] * n)
    n_val = int(ratios[1] * n)
    return items[:n_train], items[n_train : n_train + n_val], items[n_train + n_val :]


def split_random(
    reports: list[BugReport], spec: SplitSpec
) -> tuple[list[BugReport], list[BugReport], list[BugReport]]:
    """Seeded global shuffle, then the 70/10/20 cut."""
    shuffled = list(reports)
    _derive_rng(spec.seed, "random-split").shuffle(shuffled)
    return _cut(shuffled, spec.ratios)


def split_timewise(
    reports: list[BugReport], spec: SplitSpec
) -> tuple[list[BugReport], list[BugReport], list[BugReport], list[str]]:
    """Per-system chronological cut, merged across systems.

    Systems with fewer than 10 reports contribute wholly to train, with a
    warning; everything else is split 70/10/20 oldest-first.
    """
    by_project: dict[str, list[BugReport]] = {}
    for report in reports:
        by_project.setdefault(report.project, []).append(report)
    train: list[BugReport] = []
    val: list[BugReport] = []
    test: list[BugReport] = []
    warnings: list[str] = []
    for project in sorted(by_project):
        ordered = sorted(by_project[project], key=lambda r: (r.created_at, r.id))
        if len(ordered) < 10:
            warnings.append(
                f"{project}: only {len(ordered)} reports, all assigned to train"
            )
            train.extend(ordered)
            continue
        tr, va, te = _cut(ordered, spec.ratios)
        train.extend(tr)
        val.extend(va)
        test.extend(te)
    return train, val, test, warnings
