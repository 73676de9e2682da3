from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from iqloc.corpus import BugReport, SourceDocument, extract_methods, load_corpus, load_reports
from iqloc.dataset import (
    DiffParseError,
    SplitSpec,
    build_pairs,
    buggy_methods,
    classify_report,
    parse_unified_diff,
    split_random,
    split_timewise,
)


def report(rid="R-1", project="alpha", title="t", description="d", when=None) -> BugReport:
    return BugReport(
        id=rid,
        project=project,
        version="1.0",
        title=title,
        description=description,
        created_at=when or datetime(2021, 1, 1, tzinfo=timezone.utc),
    )


class TestParseUnifiedDiff:
    def test_single_hunk_header_transcription(self):
        diff = "--- a/x.java\n+++ b/x.java\n@@ -10,3 +10,4 @@\n a\n-b\n+b2\n+b3\n c\n"
        hunks = parse_unified_diff(diff)
        assert len(hunks) == 1
        h = hunks[0]
        assert (h.path, h.old_start, h.old_len, h.new_start, h.new_len) == ("x.java", 10, 3, 10, 4)
        assert h.removed == ("b",) and h.added == ("b2", "b3")

    def test_empty_diff(self):
        assert parse_unified_diff("") == []

    def test_two_file_fixture_groups_by_path(self, fixtures_dir):
        text = (fixtures_dir / "pairsproj" / "two_files.diff").read_text()
        hunks = parse_unified_diff(text)
        assert [h.path for h in hunks] == ["alpha/Flow.java", "alpha/Snapshot.java"]
        assert hunks[0].old_range() == range(10, 13)
        assert hunks[1].old_range() == range(9, 11)

    def test_malformed_hunk_header_names_line(self):
        diff = "--- a/x.java\n+++ b/x.java\n@@ bogus @@\n"
        with pytest.raises(DiffParseError, match="line 3"):
            parse_unified_diff(diff)

    def test_default_length_is_one(self):
        hunks = parse_unified_diff("--- a/x\n+++ b/x\n@@ -7 +9 @@\n-z\n+z2\n")
        assert hunks[0].old_range() == range(7, 8)
        assert (hunks[0].new_start, hunks[0].new_len) == (9, 1)

    def test_roundtrip_of_hunk_fields(self, fixtures_dir):
        text = (fixtures_dir / "pairsproj" / "diffs" / "R-1.diff").read_text()
        hunks = parse_unified_diff(text)
        rendered = []
        for h in hunks:
            rendered.append(f"--- a/{h.path}")
            rendered.append(f"+++ b/{h.path}")
            rendered.append(f"@@ -{h.old_start},{h.old_len} +{h.new_start},{h.new_len} @@")
            rendered.extend(f"-{line}" for line in h.removed)
            rendered.extend(f"+{line}" for line in h.added)
        assert parse_unified_diff("\n".join(rendered) + "\n") == hunks


def make_doc(content: str, path="x.java") -> SourceDocument:
    methods, failed = extract_methods(content)
    return SourceDocument(
        path=path,
        project="alpha",
        version="1.0",
        content=content,
        methods=tuple(methods),
        parse_failed=failed,
    )


class TestBuggyMethods:
    CONTENT = "\n".join(
        [
            "package p;",  # 1
            "class A {",  # 2
            "    void g() {",  # 3
            "        a();",  # 4
            "        b();",  # 5
            "        c();",  # 6
            "    }",  # 7
            "",  # 8
            "    void h() {",  # 9
            "        d();",  # 10
            "        e();",  # 11
            "        f();",  # 12
            "        g();",  # 13
            "    }",  # 14
            "}",  # 15
        ]
    )

    def hunk(self, start: int, length: int):
        from iqloc.dataset import DiffHunk

        return DiffHunk(path="x.java", old_start=start, old_len=length, new_start=start, new_len=length)

    def test_hunk_inside_method(self):
        doc = make_doc(self.CONTENT)
        assert [m.name for m in buggy_methods(doc, [self.hunk(4, 2)])] == ["g"]

    def test_hunk_on_package_line(self):
        doc = make_doc(self.CONTENT)
        assert buggy_methods(doc, [self.hunk(1, 1)]) == []

    def test_hunk_spanning_two_methods(self):
        doc = make_doc(self.CONTENT)
        # old range (6, 5) covers lines 6..10: tail of g and head of h.
        assert [m.name for m in buggy_methods(doc, [self.hunk(6, 5)])] == ["g", "h"]

    def test_zero_length_hunk_matches_nothing(self):
        doc = make_doc(self.CONTENT)
        assert buggy_methods(doc, [self.hunk(5, 0)]) == []

    def test_method_listed_once_across_hunks(self):
        doc = make_doc(self.CONTENT)
        methods = buggy_methods(doc, [self.hunk(4, 1), self.hunk(5, 1)])
        assert [m.name for m in methods] == ["g"]


@pytest.fixture
def pairs_fixture(fixtures_dir):
    root = fixtures_dir / "pairsproj"
    docs, load_report = load_corpus(root, root / "corpus.json")
    assert load_report.ok
    reports = load_reports(root / "reports.jsonl")
    diffs = {
        rid: parse_unified_diff((root / "diffs" / f"{rid}.diff").read_text())
        for rid in ("R-1", "R-2", "R-3")
    }
    return reports, diffs, docs


class TestBuildPairs:
    def test_hand_counted_manifest(self, pairs_fixture):
        reports, diffs, docs = pairs_fixture
        pairs, warnings = build_pairs(reports, diffs, docs, seed=0)
        # R-1 touches m1+m2 (2 positives, 8 negatives), R-2 touches
        # serialize (1 positive, 4 negatives), R-3 touches only the package
        # statement and is skipped.
        assert sum(1 for p in pairs if p.label == 1) == 3
        assert sum(1 for p in pairs if p.label == 0) == 12
        assert len(pairs) == 15
        assert any("R-3" in w for w in warnings)

    def test_exactly_four_negatives_per_positive(self, pairs_fixture):
        reports, diffs, docs = pairs_fixture
        pairs, _ = build_pairs(reports, diffs, docs, seed=7)
        by_report: dict[str, list] = {}
        for p in pairs:
            by_report.setdefault(p.report_id, []).append(p)
        for rid, group in by_report.items():
            positives = [p for p in group if p.label == 1]
            negatives = [p for p in group if p.label == 0]
            assert len(negatives) == 4 * len(positives), rid

    def test_negatives_cross_subject_systems(self, pairs_fixture):
        reports, diffs, docs = pairs_fixture
        pairs, _ = build_pairs(reports, diffs, docs, seed=7)
        for p in pairs:
            if p.label == 0:
                assert p.project != p.report_project
            else:
                assert p.project == p.report_project

    def test_negatives_unique_within_report(self, pairs_fixture):
        reports, diffs, docs = pairs_fixture
        pairs, _ = build_pairs(reports, diffs, docs, seed=7)
        for rid in {p.report_id for p in pairs}:
            negatives = [
                (p.path, p.start_line) for p in pairs if p.report_id == rid and p.label == 0
            ]
            assert len(set(negatives)) == len(negatives)

    def test_same_seed_same_pairs(self, pairs_fixture):
        reports, diffs, docs = pairs_fixture
        one, _ = build_pairs(reports, diffs, docs, seed=42)
        two, _ = build_pairs(reports, diffs, docs, seed=42)
        assert one == two

    def test_processing_order_does_not_matter(self, pairs_fixture):
        reports, diffs, docs = pairs_fixture
        one, _ = build_pairs(reports, diffs, docs, seed=42)
        two, _ = build_pairs(list(reversed(reports)), diffs, list(reversed(docs)), seed=42)
        assert one == two

    def test_single_system_corpus_rejected(self, pairs_fixture):
        reports, diffs, docs = pairs_fixture
        alpha_only = [d for d in docs if d.project == "alpha"]
        with pytest.raises(ValueError):
            build_pairs(reports, diffs, alpha_only, seed=0)

    def test_pair_texts_resolve(self, pairs_fixture):
        reports, diffs, docs = pairs_fixture
        pairs, _ = build_pairs(reports, diffs, docs, seed=0)
        for p in pairs:
            assert p.report_text and p.method_text


class TestClassifyReport:
    def test_stack_trace(self):
        r = report(description="boom\nat com.foo.Bar.baz(Bar.java:42)\n")
        assert classify_report(r) == "ST"

    def test_program_elements(self):
        r = report(description="PersistenceContext breaks when FlowExecution serializes")
        assert classify_report(r) == "PE"

    def test_natural_language(self):
        r = report(description="The app crashes when I click save.")
        assert classify_report(r) == "NL"

    def test_precedence_st_over_pe(self):
        r = report(
            description=(
                "FlowExecution dies:\n"
                "java.lang.NullPointerException\n"
                "at org.sfw.FlowExecution.snapshot(FlowExecution.java:77)"
            )
        )
        assert classify_report(r) == "ST"

    def test_partition_is_total_and_single_valued(self):
        reports = [
            report(rid=f"R-{i}", description=d)
            for i, d in enumerate(
                ["plain words only", "callFoo() breaks", "at a.b.C.d(C.java:1)"]
            )
        ]
        classes = [classify_report(r) for r in reports]
        assert all(c in {"ST", "PE", "NL"} for c in classes)

    # A hand-labeled validation sample; the regexes must clear all of it.
    LABELED = [
        ("Server crashed overnight\nat io.netty.channel.Channel.write(Channel.java:211)", "ST"),
        ("Exception in thread main java.lang.IllegalStateException: boom\nat a.b.C.run(C.java:5)", "ST"),
        ("Caused by: org.hibernate.LazyInitializationException\nat x.y.Z.get(Z.java:9)", "ST"),
        ("trace tail only:\n... 17 more", "ST"),
        ("java.io.IOException\nat org.apache.Camel.route(Camel.java:40)", "ST"),
        ("NullPointerException mentioned casually without any trace lines", "PE"),
        ("getSnapshot() returns null on retry", "PE"),
        ("The FlowExecutionRepository is stale after redeploy", "PE"),
        ("config.load( fails when the file is readonly", "PE"),
        ("org.springframework.webflow.Execution leaks memory", "PE"),
        ("Calling toString() twice duplicates output", "PE"),
        ("setMaxSnapshots ignores zero", "PE"),
        ("The persistenceContext provider keeps stale entries", "PE"),
        ("method invoke() of the proxy throws", "PE"),
        ("ClassCastException name dropped mid-sentence in camelCase style", "PE"),
        ("Widget#render paints twice per frame", "PE"),
        ("saving a file twice corrupts it", "NL"),
        ("the app hangs after login", "NL"),
        ("icons look blurry on small screens", "NL"),
        ("crash when clicking save repeatedly", "NL"),
        ("very slow startup on cold boot", "NL"),
        ("unable to open settings page", "NL"),
        ("the editor loses my cursor position", "NL"),
        ("printing cuts off the last line", "NL"),
        ("dark mode flickers white on load", "NL"),
        ("search returns nothing for plurals", "NL"),
        ("undo sometimes skips a step", "NL"),
        ("tooltips stay open forever", "NL"),
        ("scrolling stutters on long lists", "NL"),
        ("export dialog forgets the folder", "NL"),
        ("notifications arrive twice", "NL"),
        ("window restores to the wrong monitor", "NL"),
    ]

    def test_hand_labeled_sample(self):
        assert len(self.LABELED) >= 30
        for i, (text, expected) in enumerate(self.LABELED):
            r = report(rid=f"S-{i}", description=text)
            assert classify_report(r) == expected, f"sample {i}: {text!r}"


def make_reports(project: str, count: int, start_day: int = 0) -> list[BugReport]:
    base = datetime(2021, 1, 1, tzinfo=timezone.utc)
    return [
        report(
            rid=f"{project}-{i}",
            project=project,
            when=base + timedelta(days=start_day + i),
        )
        for i in range(count)
    ]


class TestSplits:
    def test_random_sizes_for_ten(self):
        train, val, test = split_random(make_reports("p", 10), SplitSpec(seed=1))
        assert (len(train), len(val), len(test)) == (7, 1, 2)

    def test_random_is_partition(self):
        reports = make_reports("p", 23)
        train, val, test = split_random(reports, SplitSpec(seed=5))
        ids = [r.id for r in train + val + test]
        assert sorted(ids) == sorted(r.id for r in reports)
        assert len(set(ids)) == len(ids)

    def test_random_deterministic(self):
        reports = make_reports("p", 23)
        assert split_random(reports, SplitSpec(seed=5)) == split_random(
            reports, SplitSpec(seed=5)
        )

    def test_timewise_orders_within_system(self):
        reports = make_reports("p1", 20) + make_reports("p2", 15, start_day=100)
        spec = SplitSpec(mode="timewise")
        train, val, test, warnings = split_timewise(reports, spec)
        assert not warnings
        for project in ("p1", "p2"):
            train_dates = [r.created_at for r in train if r.project == project]
            test_dates = [r.created_at for r in test if r.project == project]
            assert max(train_dates) <= min(test_dates)

    def test_timewise_is_partition(self):
        reports = make_reports("p1", 12) + make_reports("p2", 11)
        train, val, test, _ = split_timewise(reports, SplitSpec(mode="timewise"))
        ids = sorted(r.id for r in train + val + test)
        assert ids == sorted(r.id for r in reports)

    def test_timewise_small_system_goes_to_train(self):
        reports = make_reports("tiny", 4) + make_reports("big", 20)
        train, _val, test, warnings = split_timewise(reports, SplitSpec(mode="timewise"))
        assert any("tiny" in w for w in warnings)
        assert all(r.project != "tiny" for r in test)
        assert sum(1 for r in train if r.project == "tiny") == 4

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            SplitSpec(ratios=(0.5, 0.2, 0.2))
        with pytest.raises(ValueError):
            SplitSpec(mode="sideways")
