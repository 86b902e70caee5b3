"""Corpus aggregation and rendering (JSON, CSV, side-by-side)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .aligner import Alignment, OpKind
from .nlp_format import ManifestRow, ReferenceDocument
from .scoring import EntityBreakdown, WerSummary, mean_wer, merge_breakdowns, merge_summaries

CSV_COLUMNS = ("group", "ref_count", "sub", "del", "ins", "wer_pct")


@dataclass(frozen=True)
class FileResult:
    file_id: str
    summary: WerSummary
    entities: EntityBreakdown
    metadata: ManifestRow

    def __post_init__(self) -> None:
        if self.metadata.file_id != self.file_id:
            raise ValueError(f"result {self.file_id!r} paired with manifest row {self.metadata.file_id!r}")


@dataclass(frozen=True)
class GroupSummary:
    key: str | int
    summary: WerSummary
    files: int
    duration_s: float


@dataclass(frozen=True)
class StratifiedReport:
    overall: WerSummary
    by_sector: tuple[GroupSummary, ...]
    by_sample_rate: tuple[GroupSummary, ...]
    by_entity: EntityBreakdown
    per_file: tuple[FileResult, ...]
    mean_sector_wer: Fraction | None
    mean_sample_rate_wer: Fraction | None
    excluded_files: tuple[str, ...] = ()
    incomplete: bool = False
    failures: tuple[tuple[str, str], ...] = ()

    def sector(self, name: str) -> GroupSummary:
        return next(g for g in self.by_sector if g.key == name)

    def sample_rate(self, rate: int) -> GroupSummary:
        return next(g for g in self.by_sample_rate if g.key == rate)


def _group(results: Sequence[FileResult], key) -> tuple[GroupSummary, ...]:
    members: dict = {}
    for r in results:
        members.setdefault(key(r.metadata), []).append(r)
    groups = [
        GroupSummary(
            k,
            merge_summaries(r.summary for r in rs),
            len(rs),
            sum(r.metadata.duration_s for r in rs),
        )
        for k, rs in members.items()
    ]
    # Longest total audio first; key breaks ties.
    groups.sort(key=lambda g: (-g.duration_s, str(g.key)))
    return tuple(groups)


def aggregate(
    results: Iterable[FileResult],
    exclude: Iterable[str] = (),
    failures: Sequence[tuple[str, str]] = (),
) -> StratifiedReport:
    """Stratify per-file results by sector, sample rate and entity class.

    Files whose id is in ``exclude`` are dropped before any grouping and the
    excluded ids are recorded on the report.
    """
    results = list(results)
    seen: set[str] = set()
    for r in results:
        if r.file_id in seen:
            raise ValueError(f"duplicate file_id {r.file_id!r}")
        seen.add(r.file_id)
    excluded = tuple(sorted(set(exclude)))
    kept = [r for r in results if r.file_id not in excluded]
    by_sector = _group(kept, lambda m: m.sector)
    by_rate = _group(kept, lambda m: m.sample_rate_hz)
    return StratifiedReport(
        overall=merge_summaries(r.summary for r in kept),
        by_sector=by_sector,
        by_sample_rate=by_rate,
        by_entity=merge_breakdowns(r.entities for r in kept),
        per_file=tuple(kept),
        mean_sector_wer=mean_wer(g.summary for g in by_sector),
        mean_sample_rate_wer=mean_wer(g.summary for g in by_rate),
        excluded_files=excluded,
        incomplete=bool(failures),
        failures=tuple(failures),
    )


@dataclass(frozen=True)
class EntityHistogram:
    counts: Mapping[str, int] = field(default_factory=dict)

    def ordered(self) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))


def entity_distribution(docs: Iterable[ReferenceDocument]) -> EntityHistogram:
    """Count entity mentions (distinct file/span pairs) per class."""
    mentions: set[tuple[str, str, int]] = set()
    for doc in docs:
        for tok in doc.tokens:
            if tok.entity:
                mentions.add((tok.entity.class_label, doc.file_id, tok.entity.span_id))
    counts: dict[str, int] = {}
    for label, _, _ in mentions:
        counts[label] = counts.get(label, 0) + 1
    return EntityHistogram(dict(sorted(counts.items())))


def format_pct(rate: Fraction | None) -> str | None:
    """Percent with one decimal, rounded half-even on the exact ratio."""
    if rate is None:
        return None
    tenths = round(Fraction(rate) * 1000)
    return f"{tenths // 10}.{tenths % 10}"


def _rational(value: Fraction | None):
    if value is None:
        return None
    return {"num": value.numerator, "den": value.denominator}


def _count(value: Fraction):
    return value.numerator if value.denominator == 1 else _rational(value)


def _summary_json(s: WerSummary) -> dict:
    return {
        "correct": _count(s.correct),
        "substitutions": _count(s.substitutions),
        "deletions": _count(s.deletions),
        "insertions": _count(s.insertions),
        "ref_count": _count(s.ref_count),
        "wer": _rational(s.wer),
        "wer_pct": format_pct(s.wer),
    }


def _entities_json(b: EntityBreakdown) -> dict:
    return {
        "per_class": {label: _summary_json(s) for label, s in b.per_class.items()},
        "unlabeled": _summary_json(b.unlabeled),
        "insertions": _count(b.insertions),
        "mean_entity_wer": _rational(b.mean_entity_wer),
        "mean_entity_wer_pct": format_pct(b.mean_entity_wer),
    }


def _groups_json(groups: Sequence[GroupSummary]) -> list[dict]:
    return [
        {"group": g.key, "files": g.files, "duration_s": g.duration_s, "summary": _summary_json(g.summary)}
        for g in groups
    ]


def report_dict(report: StratifiedReport) -> dict:
    return {
        "overall": _summary_json(report.overall),
        "by_sector": _groups_json(report.by_sector),
        "by_sample_rate": _groups_json(report.by_sample_rate),
        "by_entity": _entities_json(report.by_entity),
        "per_file": [
            {
                "file_id": r.file_id,
                "summary": _summary_json(r.summary),
                "entities": _entities_json(r.entities),
                "metadata": r.metadata.as_dict(),
            }
            for r in report.per_file
        ],
        "group_means": {
            "mean_sector_wer": _rational(report.mean_sector_wer),
            "mean_sector_wer_pct": format_pct(report.mean_sector_wer),
            "mean_sample_rate_wer": _rational(report.mean_sample_rate_wer),
            "mean_sample_rate_wer_pct": format_pct(report.mean_sample_rate_wer),
        },
        "excluded_files": list(report.excluded_files),
        "incomplete": report.incomplete,
        "failures": [{"file_id": fid, "error": msg} for fid, msg in report.failures],
    }


def render_json(report: StratifiedReport) -> bytes:
    text = json.dumps(report_dict(report), sort_keys=True, indent=2, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def _display(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{float(value):.2f}"


def _csv_table(rows: Iterable[tuple[str, WerSummary]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for name, s in rows:
        writer.writerow(
            [
                name,
                _display(s.ref_count),
                _display(s.substitutions),
                _display(s.deletions),
                _display(s.insertions),
                format_pct(s.wer) or "",
            ]
        )
    return buf.getvalue()


def render_csv_tables(report: StratifiedReport) -> dict[str, str]:
    """One CSV table per stratification, keyed by table name."""
    entity_rows = list(report.by_entity.per_class.items())
    entity_rows.append(("<unlabeled>", report.by_entity.unlabeled))
    return {
        "overall": _csv_table([("overall", report.overall)] if report.per_file else []),
        "by_sector": _csv_table((str(g.key), g.summary) for g in report.by_sector),
        "by_sample_rate": _csv_table((str(g.key), g.summary) for g in report.by_sample_rate),
        "by_entity": _csv_table(entity_rows if report.per_file else []),
    }


def render_csv(report: StratifiedReport) -> bytes:
    """All tables in one file, each introduced by a ``# name`` line."""
    sections = [f"# {name}\n{table}" for name, table in render_csv_tables(report).items()]
    return "\n".join(sections).encode("utf-8")


def render_histogram_csv(hist: EntityHistogram) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("class", "count"))
    writer.writerows(hist.ordered())
    return buf.getvalue()


_OP_CODES = {OpKind.CORRECT: "C", OpKind.SUBSTITUTION: "S", OpKind.DELETION: "D", OpKind.INSERTION: "I"}


def _op_class(op, doc: ReferenceDocument | None) -> str:
    if doc is None or op.arc_provenance is None:
        return ""
    labels = []
    for i in op.arc_provenance.token_indices:
        ent = doc.tokens[i].entity
        if ent and ent.class_label not in labels:
            labels.append(ent.class_label)
    return "/".join(labels)


def render_side_by_side(a: Alignment, doc: ReferenceDocument | None = None) -> str:
    """One op per line: reference token, hypothesis token, op code, entity class."""
    rows = []
    for op in a.ops:
        ref = op.ref_label if op.kind != OpKind.INSERTION else "<ins>"
        hyp = op.hyp_label if op.kind != OpKind.DELETION else "<del>"
        rows.append((ref, hyp, _OP_CODES[op.kind], _op_class(op, doc)))
    if not rows:
        return ""
    ref_w = max(len(r[0]) for r in rows)
    hyp_w = max(len(r[1]) for r in rows)
    lines = [f"{ref:<{ref_w}}  {hyp:<{hyp_w}}  {code}  {cls}".rstrip() for ref, hyp, code, cls in rows]
    return "\n".join(lines) + "\n"
