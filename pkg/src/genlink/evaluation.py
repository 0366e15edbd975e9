"""Accuracy reports: per language, micro/macro averages, and bucketed breakdowns."""

from __future__ import annotations

import bisect
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .alias import AliasTable
from .corpus import MentionInstance
from .errors import MissingGold

# bins by how often the gold entity was linked in training
ENTITY_FREQUENCY_EDGES = (0, 1, 10, 100, 1_000, 10_000)
# bins by how often the mention string occurred in training
MENTION_FREQUENCY_EDGES = (0, 1, 10, 100, 1_000, 10_000, 100_000, 1_000_000)
# bins by number of alias-table candidates; [0, 1) holds the table misses
CANDIDATE_COUNT_EDGES = (0, 1, 2, 5, 10, 100, 1_000)


@dataclass
class EvalReport:
    """Exact-match accuracy folded over a stream of predictions.

    Partial reports from separate shards combine with :meth:`merge`.
    """

    counts: dict = field(default_factory=dict)  # lang -> [correct, total]

    def add(self, lang: str, correct: bool):
        row = self.counts.setdefault(lang, [0, 0])
        row[0] += int(bool(correct))
        row[1] += 1

    def merge(self, other: "EvalReport") -> "EvalReport":
        out = EvalReport({lang: list(row) for lang, row in self.counts.items()})
        for lang, (c, t) in other.counts.items():
            row = out.counts.setdefault(lang, [0, 0])
            row[0] += c
            row[1] += t
        return out

    @property
    def per_language(self) -> dict[str, tuple[int, int, float]]:
        return {lang: (c, t, c / t) for lang, (c, t) in sorted(self.counts.items())}

    @property
    def total(self) -> int:
        return sum(t for _, t in self.counts.values())

    @property
    def micro_avg(self) -> float:
        total = self.total
        return sum(c for c, _ in self.counts.values()) / total if total else 0.0

    @property
    def macro_avg(self) -> float:
        if not self.counts:
            return 0.0
        return sum(c / t for c, t in self.counts.values()) / len(self.counts)

    def to_json(self) -> dict:
        return {
            "per_language": {
                lang: {"correct": c, "total": t, "accuracy": acc} for lang, (c, t, acc) in self.per_language.items()
            },
            "micro_avg": self.micro_avg,
            "macro_avg": self.macro_avg,
            "total": self.total,
        }

    def to_text(self) -> str:
        rows = [(lang, str(c), str(t), f"{100 * acc:.1f}") for lang, (c, t, acc) in self.per_language.items()]
        rows.append(("micro-avg", "", str(self.total), f"{100 * self.micro_avg:.1f}"))
        rows.append(("macro-avg", "", "", f"{100 * self.macro_avg:.1f}"))
        return _table(("lang", "correct", "total", "acc"), rows)


def accuracy(preds: Iterable[tuple[MentionInstance, Optional[str]]]) -> EvalReport:
    report = EvalReport()
    for i, (inst, pred) in enumerate(preds):
        if inst.gold is None:
            raise MissingGold(i)
        report.add(inst.lang, pred == inst.gold)
    return report


@dataclass(frozen=True)
class BucketSpec:
    """Half-open bins ``[edges[i], edges[i+1])``; the last bin is open-ended."""

    edges: tuple

    def __post_init__(self):
        edges = tuple(int(e) for e in self.edges)
        if not edges or edges[0] != 0:
            raise ValueError("bucket edges must start at 0")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("bucket edges must be strictly ascending")
        object.__setattr__(self, "edges", edges)

    def index(self, value: int) -> int:
        if value < 0:
            raise ValueError(f"bucket key must be non-negative, got {value}")
        return bisect.bisect_right(self.edges, value) - 1

    def label(self, i: int) -> str:
        lo = self.edges[i]
        hi = self.edges[i + 1] if i + 1 < len(self.edges) else None
        return f"[{_short(lo)}, {_short(hi) if hi is not None else '+'})"

    def labels(self) -> list[str]:
        return [self.label(i) for i in range(len(self.edges))]


def _short(n: int) -> str:
    for div, suffix in ((1_000_000, "M"), (1_000, "k")):
        if n >= div and n % div == 0:
            return f"{n // div}{suffix}"
    return str(n)


def entity_frequency(train_counts: Mapping[str, int]) -> Callable[[MentionInstance], int]:
    return lambda inst: int(train_counts.get(inst.gold, 0))


def mention_frequency(train_counts: Mapping[str, int]) -> Callable[[MentionInstance], int]:
    return lambda inst: int(train_counts.get(inst.mention, 0))


def candidate_count(table: AliasTable) -> Callable[[MentionInstance], int]:
    return lambda inst: table.candidate_count(inst.mention)


def training_frequencies(instances: Iterable[MentionInstance]) -> tuple[Counter, Counter]:
    """``(entity -> link count, mention string -> count)`` over training data."""
    entities: Counter = Counter()
    mentions: Counter = Counter()
    for inst in instances:
        mentions[inst.mention] += 1
        if inst.gold is not None:
            entities[inst.gold] += 1
    return entities, mentions


@dataclass(frozen=True)
class Bucket:
    label: str
    support: int
    correct: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.support if self.support else 0.0


def bucket_report(
    preds: Iterable[tuple[MentionInstance, Optional[str]]],
    key: Callable[[MentionInstance], int],
    bins: BucketSpec,
) -> list[Bucket]:
    support = [0] * len(bins.edges)
    correct = [0] * len(bins.edges)
    for inst, pred in preds:
        i = bins.index(key(inst))
        support[i] += 1
        correct[i] += int(pred is not None and pred == inst.gold)
    return [Bucket(bins.label(i), support[i], correct[i]) for i in range(len(bins.edges))]


def buckets_to_text(buckets: Sequence[Bucket]) -> str:
    rows = [(b.label, str(b.support), f"{100 * b.accuracy:.1f}") for b in buckets]
    return _table(("bin", "support", "acc"), rows)


def buckets_to_json(buckets: Sequence[Bucket]) -> list[dict]:
    return [{"bin": b.label, "support": b.support, "correct": b.correct, "accuracy": b.accuracy} for b in buckets]


def _table(header, rows) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    lines = []
    for r in [header, *rows]:
        cells = [str(r[0]).ljust(widths[0])] + [str(c).rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def report_json(report: EvalReport, buckets: Optional[Sequence[Bucket]] = None) -> str:
    obj = report.to_json()
    if buckets is not None:
        obj["buckets"] = buckets_to_json(buckets)
    return json.dumps(obj, indent=2, sort_keys=True)
