"""WER summaries and per-entity-class error attribution."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .aligner import Alignment, OpKind
from .nlp_format import ReferenceDocument

ZERO = Fraction(0)


@dataclass(frozen=True)
class WerSummary:
    """Edit counts and their WER.

    Counts are Fractions so that entity buckets can hold fractional
    attribution; document-level summaries are always integral.
    """

    substitutions: Fraction = ZERO
    deletions: Fraction = ZERO
    insertions: Fraction = ZERO
    correct: Fraction = ZERO
    ref_count: Fraction = ZERO

    def __post_init__(self) -> None:
        for name in ("substitutions", "deletions", "insertions", "correct", "ref_count"):
            value = Fraction(getattr(self, name))
            if value < 0:
                raise ValueError(f"{name} is negative")
            object.__setattr__(self, name, value)

    @property
    def errors(self) -> Fraction:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> Fraction | None:
        if self.ref_count == 0:
            return None
        return self.errors / self.ref_count

    def __add__(self, other: "WerSummary") -> "WerSummary":
        return WerSummary(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.correct + other.correct,
            self.ref_count + other.ref_count,
        )


def summarize(a: Alignment) -> WerSummary:
    """Tally an alignment. The denominator is the chosen path's length."""
    s = a.count(OpKind.SUBSTITUTION)
    d = a.count(OpKind.DELETION)
    return WerSummary(s, d, a.count(OpKind.INSERTION), a.count(OpKind.CORRECT), a.best_path_ref_len)


def merge_summaries(summaries: Iterable[WerSummary]) -> WerSummary:
    """Micro-average: fieldwise sums, WER recomputed from the totals."""
    total = WerSummary()
    for s in summaries:
        total = total + s
    return total


def mean_wer(summaries: Iterable[WerSummary]) -> Fraction | None:
    """Unweighted mean of WERs, skipping summaries with no reference tokens."""
    rates = [s.wer for s in summaries if s.ref_count > 0]
    if not rates:
        return None
    return sum(rates, ZERO) / len(rates)


@dataclass(frozen=True)
class EntityBreakdown:
    per_class: Mapping[str, WerSummary] = field(default_factory=dict)
    unlabeled: WerSummary = field(default_factory=WerSummary)
    insertions: Fraction = ZERO  # document-level; never attributed to a class

    @property
    def mean_entity_wer(self) -> Fraction | None:
        return mean_wer(self.per_class.values())


def entity_breakdown(a: Alignment, doc: ReferenceDocument) -> EntityBreakdown:
    """Attribute each reference-side op to the entity classes of the tokens it covers.

    An op on an arc whose alternative spans ``k`` original tokens puts weight
    ``1/k`` on each of them, so class totals add back up to the document
    totals exactly.
    """
    buckets: dict[str | None, dict[str, Fraction]] = {}
    n = len(doc.tokens)
    for op in a.ops:
        if op.kind == OpKind.INSERTION:
            continue
        prov = op.arc_provenance
        if prov is None or prov.ref_token_start + prov.ref_token_len > n:
            raise ValueError(f"op {op} has provenance outside the document ({n} tokens)")
        weight = Fraction(1, prov.ref_token_len)
        field_name = {
            OpKind.CORRECT: "correct",
            OpKind.SUBSTITUTION: "substitutions",
            OpKind.DELETION: "deletions",
        }[op.kind]
        for i in prov.token_indices:
            ent = doc.tokens[i].entity
            bucket = buckets.setdefault(ent.class_label if ent else None, {})
            bucket[field_name] = bucket.get(field_name, ZERO) + weight
            bucket["ref_count"] = bucket.get("ref_count", ZERO) + weight
    unlabeled = WerSummary(**buckets.pop(None, {}))
    per_class = {label: WerSummary(**counts) for label, counts in sorted(buckets.items())}
    return EntityBreakdown(per_class, unlabeled, Fraction(a.count(OpKind.INSERTION)))


def merge_breakdowns(breakdowns: Iterable[EntityBreakdown]) -> EntityBreakdown:
    per_class: dict[str, WerSummary] = {}
    unlabeled = WerSummary()
    insertions = ZERO
    for b in breakdowns:
        for label, summary in b.per_class.items():
            per_class[label] = per_class.get(label, WerSummary()) + summary
        unlabeled = unlabeled + b.unlabeled
        insertions += b.insertions
    return EntityBreakdown(dict(sorted(per_class.items())), unlabeled, insertions)
