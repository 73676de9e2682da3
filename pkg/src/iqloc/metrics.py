"""Retrieval and classification metrics, plus the paired statistics used to
compare two rankers.

Conventions pinned here:
  * AP@K divides by the full ground-truth size |D| even when K < |D|, so a
    truncated list is penalized (some tools divide by min(|D|, K); this one
    deliberately does not).
  * Reciprocal rank is 0 when no relevant document is retrieved.
  * Wilcoxon signed-rank drops zero differences, average-ranks ties, uses the
    exact distribution (subset-sum DP) up to n=25 and a continuity-corrected
    normal approximation beyond.
  * Cliff's delta magnitude labels: negligible < 0.147 <= small < 0.33 <=
    medium < 0.474 <= large <= 0.71 < very large. The very-large boundary is
    exclusive at 0.71 so that delta = 0.71 still reads "large".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class EvalRecord:
    """One query's ranked paths plus its ground-truth buggy set."""

    query_id: str
    ranked_paths: tuple[str, ...]
    ground_truth: frozenset[str]

    def __post_init__(self) -> None:
        if len(set(self.ranked_paths)) != len(self.ranked_paths):
            raise ValueError(f"{self.query_id}: ranked paths must be unique")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class ClassifierMetrics:
    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    f1: float


@dataclass
class MetricReport:
    map: float
    mrr: float
    hit_at: dict[int, float]
    precision_at: dict[int, float]
    per_query_ap: dict[str, float] = field(default_factory=dict)
    per_query_rr: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "map": self.map,
            "mrr": self.mrr,
            "hit_at": {str(k): v for k, v in self.hit_at.items()},
            "precision_at": {str(k): v for k, v in self.precision_at.items()},
            "per_query_ap": self.per_query_ap,
            "per_query_rr": self.per_query_rr,
        }


def average_precision(record: EvalRecord, k: int) -> float:
    """AP@K = (1/|D|) * sum over i<=K of P_i * B_i."""
    if not record.ground_truth:
        raise ValueError(f"{record.query_id}: ground truth must be non-empty")
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    hits = 0
    total = 0.0
    for i, path in enumerate(record.ranked_paths[:k], start=1):
        if path in record.ground_truth:
            hits += 1
            total += hits / i
    return total / len(record.ground_truth)


def mean_average_precision(records: list[EvalRecord], k: int) -> float:
    if not records:
        raise ValueError("no records to evaluate")
    return sum(average_precision(r, k) for r in records) / len(records)


def reciprocal_rank(record: EvalRecord) -> float:
    for i, path in enumerate(record.ranked_paths, start=1):
        if path in record.ground_truth:
            return 1.0 / i
    return 0.0


def mean_reciprocal_rank(records: list[EvalRecord]) -> float:
    if not records:
        raise ValueError("no records to evaluate")
    return sum(reciprocal_rank(r) for r in records) / len(records)


def hit_at_k(records: list[EvalRecord], k: int) -> float:
    if not records:
        raise ValueError("no records to evaluate")
    hits = sum(
        1 for r in records if any(p in r.ground_truth for p in r.ranked_paths[:k])
    )
    return hits / len(records)


def precision_at_k_single(record: EvalRecord, k: int) -> float:
    """P@K for one query; the list is conceptually padded with non-relevant."""
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    relevant = sum(1 for p in record.ranked_paths[:k] if p in record.ground_truth)
    return relevant / k


def precision_at_k(records: list[EvalRecord], k: int) -> float:
    if not records:
        raise ValueError("no records to evaluate")
    return sum(precision_at_k_single(r, k) for r in records) / len(records)


def evaluate(records: list[EvalRecord], ks: tuple[int, ...] = (1, 5, 10)) -> MetricReport:
    """Full metric report at K = max(ks) for AP, HIT/P@K per requested K."""
    k_ap = max(ks)
    return MetricReport(
        map=mean_average_precision(records, k_ap),
        mrr=mean_reciprocal_rank(records),
        hit_at={k: hit_at_k(records, k) for k in ks},
        precision_at={k: precision_at_k(records, k) for k in ks},
        per_query_ap={r.query_id: average_precision(r, k_ap) for r in records},
        per_query_rr={r.query_id: reciprocal_rank(r) for r in records},
    )


def confusion_metrics(
    scores: list[float], labels: list[int], threshold: float
) -> ClassifierMetrics:
    """Confusion counts and derived metrics at predict-positive iff
    score >= threshold. Undefined ratios (zero denominators) come back 0.0."""
    if len(scores) != len(labels):
        raise ValueError(f"{len(scores)} scores vs {len(labels)} labels")
    tp = tn = fp = fn = 0
    for score, label in zip(scores, labels):
        predicted = score >= threshold
        if predicted and label == 1:
            tp += 1
        elif predicted and label == 0:
            fp += 1
        elif not predicted and label == 1:
            fn += 1
        else:
            tn += 1
    counts = ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)
    accuracy = (tp + tn) / counts.total if counts.total else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassifierMetrics(
        counts=counts, accuracy=accuracy, precision=precision, recall=recall, f1=f1
    )


# -- Wilcoxon signed-rank -------------------------------------------------

_EXACT_LIMIT = 25


def _signed_ranks(differences: list[float]) -> list[tuple[float, int]]:
    """(average rank, sign) for each nonzero difference, ties averaged."""
    indexed = sorted(range(len(differences)), key=lambda i: abs(differences[i]))
    ranks = [0.0] * len(differences)
    i = 0
    while i < len(indexed):
        j = i
        while (
            j + 1 < len(indexed)
            and abs(differences[indexed[j + 1]]) == abs(differences[indexed[i]])
        ):
            j += 1
        avg = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[indexed[t]] = avg
        i = j + 1
    return [(ranks[i], 1 if differences[i] > 0 else -1) for i in range(len(differences))]


def _exact_cdf_counts(ranks2: list[int]) -> list[int]:
    """ways[s] = number of sign assignments whose positive-rank sum is s
    (ranks doubled so averaged ranks stay integral)."""
    total = sum(ranks2)
    ways = [0] * (total + 1)
    ways[0] = 1
    for r in ranks2:
        for s in range(total - r, -1, -1):
            if ways[s]:
                ways[s + r] += ways[s]
    return ways


def _normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def wilcoxon_signed_rank(
    baseline: list[float], treatment: list[float], alternative: str = "less"
) -> tuple[float, float]:
    """Paired signed-rank test on d = baseline - treatment.

    "less" asks whether baseline values sit below treatment values (the
    statistic, the positive-rank sum W+, is then small). Returns (W+, p).
    """
    if alternative not in ("less", "greater", "two-sided"):
        raise ValueError(f"unknown alternative {alternative!r}")
    if len(baseline) != len(treatment):
        raise ValueError(f"{len(baseline)} baseline vs {len(treatment)} treatment values")
    differences = [b - t for b, t in zip(baseline, treatment) if b != t]
    if not differences:
        raise ValueError("all differences are zero; the test is undefined")
    n = len(differences)
    if n < 5:
        raise ValueError(f"need >= 5 nonzero differences, got {n}")

    signed = _signed_ranks(differences)
    w_plus = sum(rank for rank, sign in signed if sign > 0)

    if n <= _EXACT_LIMIT:
        ranks2 = [round(2 * rank) for rank, _sign in signed]
        ways = _exact_cdf_counts(ranks2)
        w2 = round(2 * w_plus)
        denom = float(2**n)
        p_less = sum(ways[: w2 + 1]) / denom
        p_greater = sum(ways[w2:]) / denom
    else:
        mean = n * (n + 1) / 4.0
        tie_groups: dict[float, int] = {}
        for rank, _sign in signed:
            tie_groups[rank] = tie_groups.get(rank, 0) + 1
        tie_term = sum(t**3 - t for t in tie_groups.values()) / 48.0
        sd = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_term)
        p_less = _normal_cdf((w_plus - mean + 0.5) / sd)
        p_greater = 1.0 - _normal_cdf((w_plus - mean - 0.5) / sd)

    if alternative == "less":
        p = p_less
    elif alternative == "greater":
        p = p_greater
    else:
        p = min(1.0, 2.0 * min(p_less, p_greater))
    return float(w_plus), float(p)


# -- Cliff's delta --------------------------------------------------------

_DELTA_LABELS = ((0.147, "negligible"), (0.33, "small"), (0.474, "medium"))


def cliffs_delta(x: list[float], y: list[float]) -> tuple[float, str]:
    """delta = (#(x_i > y_j) - #(x_i < y_j)) / (|x| * |y|), with a label."""
    if not x or not y:
        raise ValueError("both samples must be non-empty")
    greater = sum(1 for a in x for b in y if a > b)
    lesser = sum(1 for a in x for b in y if a < b)
    delta = (greater - lesser) / (len(x) * len(y))
    magnitude = abs(delta)
    for bound, label in _DELTA_LABELS:
        if magnitude < bound:
            return delta, label
    return delta, ("large" if magnitude <= 0.71 else "very large")
