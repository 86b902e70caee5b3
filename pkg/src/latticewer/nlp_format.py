"""Readers and writers for reference (.nlp), hypothesis, sidecar and manifest files."""

from __future__ import annotations

import csv
import enum
import io
import json
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

NLP_HEADER = "token|speaker|ts|endTs|punct|case|tags|wer_tags"
MANIFEST_HEADER = (
    "file_id",
    "ref_path",
    "hyp_path",
    "sector",
    "sample_rate_hz",
    "duration_s",
    "quarter",
    "num_speakers",
)
CASING_CODES = frozenset({"LC", "UC", "CA"})

_STRIP_CHARS = '.,?!;:"()[]'
_TIMESTAMP_RE = re.compile(r"\d+(?:\.\d+)?\Z")
_SPAN_ID_RE = re.compile(r"(?:0|[1-9][0-9]*)\Z")
_WHITESPACE_RE = re.compile(r"\s")


class ParseError(ValueError):
    """Malformed input file. Carries the 1-based line number when one applies."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self) -> str:
        where = self.source or "<input>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        return f"{where}: {self.message}"

    def with_source(self, source: str) -> "ParseError":
        return ParseError(self.message, self.line, source)


def comparison_form(text: str) -> str:
    """Fold a surface token for comparison.

    Lowercase, NFC, and strip sentence punctuation from both ends. Internal
    apostrophes and hyphens survive, so ``"I'm"`` becomes ``"i'm"``. May
    return the empty string for pure punctuation.
    """
    return unicodedata.normalize("NFC", text.lower()).strip(_STRIP_CHARS)


def fold_words(text: str) -> list[str]:
    """Whitespace-split ``text`` and fold every piece, dropping empties."""
    folded = (comparison_form(word) for word in text.split())
    return [word for word in folded if word]


def _decode(data: bytes | str, source: str | None) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"invalid UTF-8 at byte {exc.start}", source=source) from None


class SequenceSource(enum.Enum):
    PLAIN_TEXT = "PlainText"
    CTM = "Ctm"
    NLP_DERIVED = "NlpDerived"


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    source: SequenceSource = SequenceSource.PLAIN_TEXT

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for tok in self.tokens:
            if not tok or _WHITESPACE_RE.search(tok):
                raise ValueError(f"invalid comparison token {tok!r}")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __getitem__(self, index):
        return self.tokens[index]

    def __str__(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class EntitySpanRef:
    class_label: str
    span_id: int

    def __str__(self) -> str:
        return f"{self.class_label}:{self.span_id}"


@dataclass(frozen=True)
class NlpToken:
    """One reference line.

    Timestamps are kept as the text that appeared in the file so that
    serialization reproduces the input byte for byte; use ``start_s`` and
    ``end_s`` for numeric values.
    """

    text: str
    speaker: str = ""
    ts: str = ""
    end_ts: str = ""
    punct: str = ""
    casing: str = "LC"
    entity: EntitySpanRef | None = None
    norm_id: str | None = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text is empty")
        if "|" in self.text or _WHITESPACE_RE.search(self.text):
            raise ValueError(f"token text {self.text!r} contains '|' or whitespace")
        if self.casing not in CASING_CODES:
            raise ValueError(f"invalid casing code {self.casing!r}")
        if self.casing == "UC" and any(ch.islower() for ch in self.text):
            raise ValueError(f"casing UC but {self.text!r} has lowercase letters")
        for raw in (self.ts, self.end_ts):
            if raw and not _TIMESTAMP_RE.match(raw):
                raise ValueError(f"non-numeric timestamp {raw!r}")
        start, end = self.start_s, self.end_s
        if start is not None and end is not None and start > end:
            raise ValueError(f"start {start} after end {end}")
        if self.norm_id == "":
            object.__setattr__(self, "norm_id", None)

    @property
    def start_s(self) -> float | None:
        return float(self.ts) if self.ts else None

    @property
    def end_s(self) -> float | None:
        return float(self.end_ts) if self.end_ts else None

    def to_line(self) -> str:
        return "|".join(
            [
                self.text,
                self.speaker,
                self.ts,
                self.end_ts,
                self.punct,
                self.casing,
                str(self.entity) if self.entity else "",
                self.norm_id or "",
            ]
        )


@dataclass(frozen=True)
class ReferenceDocument:
    file_id: str
    tokens: tuple[NlpToken, ...]
    norms: Mapping[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def norm_ids(self) -> list[str]:
        """Distinct norm ids referenced by tokens, in first-use order."""
        return list(dict.fromkeys(t.norm_id for t in self.tokens if t.norm_id))


def _check_spans(tokens: Sequence[NlpToken], line_offset: int = 2) -> None:
    # A span id may not reappear once a different token has intervened.
    closed: set[int] = set()
    current: EntitySpanRef | None = None
    for i, tok in enumerate(tokens):
        ent = tok.entity
        if current is not None and (ent is None or ent.span_id != current.span_id):
            closed.add(current.span_id)
            current = None
        if ent is None:
            continue
        if current is None:
            if ent.span_id in closed:
                raise ParseError(
                    f"entity span {ent.span_id} is not contiguous", line=i + line_offset
                )
            current = ent
        elif ent.class_label != current.class_label:
            raise ParseError(
                f"entity span {ent.span_id} mixes classes "
                f"{current.class_label} and {ent.class_label}",
                line=i + line_offset,
            )


def _parse_entity(raw: str, lineno: int) -> EntitySpanRef | None:
    if not raw:
        return None
    label, sep, span = raw.rpartition(":")
    if not sep or not label:
        raise ParseError(f"malformed entity tag {raw!r}, expected CLASS:span_id", line=lineno)
    if not _SPAN_ID_RE.match(span):
        raise ParseError(f"malformed entity span id {span!r}", line=lineno)
    return EntitySpanRef(label, int(span))


def parse_nlp(data: bytes | str, file_id: str = "", source: str | None = None) -> ReferenceDocument:
    """Parse a pipe-separated reference file.

    Raises ParseError naming the offending line for a bad header, a wrong
    field count, an unknown casing code, a non-numeric timestamp or a broken
    entity span.
    """
    text = _decode(data, source)
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != NLP_HEADER:
        raise ParseError(f"expected header {NLP_HEADER!r}", line=1, source=source)
    tokens = []
    try:
        for lineno, line in enumerate(lines[1:], start=2):
            fields = line.split("|")
            if len(fields) != 8:
                raise ParseError(f"expected 8 fields, found {len(fields)}", line=lineno)
            word, speaker, ts, end_ts, punct, casing, tags, wer_tags = fields
            entity = _parse_entity(tags, lineno)
            try:
                tokens.append(
                    NlpToken(word, speaker, ts, end_ts, punct, casing, entity, wer_tags or None)
                )
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
        _check_spans(tokens)
    except ParseError as exc:
        raise exc.with_source(source) if source else exc
    return ReferenceDocument(file_id, tuple(tokens), {})


def serialize_nlp(doc: ReferenceDocument) -> bytes:
    lines = [NLP_HEADER] + [tok.to_line() for tok in doc.tokens]
    return ("\n".join(lines) + "\n").encode("utf-8")


def attach_norm_sidecar(
    doc: ReferenceDocument, data: bytes | str, source: str | None = None
) -> ReferenceDocument:
    """Return a copy of ``doc`` with normalization candidates from a JSON sidecar.

    Candidate strings are folded to comparison form and split on whitespace.
    Duplicate candidates collapse to one. Sidecar keys that no token uses are
    kept; tokens whose norm id is missing from the sidecar are an error.
    """
    text = _decode(data, source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, source=source) from None
    if not isinstance(raw, dict):
        raise ParseError("sidecar must be a JSON object", source=source)
    norms: dict[str, tuple[tuple[str, ...], ...]] = {}
    for key, candidates in raw.items():
        if not isinstance(candidates, list) or not all(isinstance(c, str) for c in candidates):
            raise ParseError(f"norm {key!r}: value must be an array of strings", source=source)
        seqs: dict[tuple[str, ...], None] = {}
        for cand in candidates:
            words = tuple(fold_words(cand))
            if not words:
                raise ParseError(f"norm {key!r}: empty candidate", source=source)
            seqs[words] = None
        norms[key] = tuple(seqs)
    for i, tok in enumerate(doc.tokens):
        if tok.norm_id and tok.norm_id not in norms:
            raise ParseError(
                f"token {tok.text!r} references norm id {tok.norm_id!r} absent from sidecar",
                line=i + 2,
                source=source,
            )
    return ReferenceDocument(doc.file_id, doc.tokens, norms)


def parse_hypothesis_text(data: bytes | str, source: str | None = None) -> TokenSequence:
    return TokenSequence(tuple(fold_words(_decode(data, source))), SequenceSource.PLAIN_TEXT)


def parse_ctm(data: bytes | str, source: str | None = None) -> TokenSequence:
    """Read CTM lines, ordered by start time (stable on ties).

    Blank lines and ``;;`` comment lines are skipped; the confidence column,
    if any, is ignored.
    """
    text = _decode(data, source)
    timed: list[tuple[float, str]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields or fields[0].startswith(";;"):
            continue
        if len(fields) < 5:
            raise ParseError(f"expected at least 5 fields, found {len(fields)}", lineno, source)
        try:
            start = float(fields[2])
            float(fields[3])
        except ValueError:
            raise ParseError(
                f"non-numeric start/duration {fields[2]!r} {fields[3]!r}", lineno, source
            ) from None
        timed.extend((start, word) for word in fold_words(fields[4]))
    timed.sort(key=lambda pair: pair[0])
    return TokenSequence(tuple(word for _, word in timed), SequenceSource.CTM)


def reference_token_sequence(doc: ReferenceDocument) -> TokenSequence:
    """Comparison form of the verbatim tokens; tokens that fold to nothing are dropped."""
    folded = (comparison_form(tok.text) for tok in doc.tokens)
    return TokenSequence(tuple(w for w in folded if w), SequenceSource.NLP_DERIVED)


@dataclass(frozen=True)
class ManifestRow:
    file_id: str
    ref_path: str
    hyp_path: str
    sector: str
    sample_rate_hz: int
    duration_s: float
    quarter: str
    num_speakers: int

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in MANIFEST_HEADER}


@dataclass(frozen=True)
class CorpusManifest:
    rows: tuple[ManifestRow, ...]

    def __iter__(self) -> Iterator[ManifestRow]:
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)


def _positive(value: str, kind, name: str, lineno: int, source: str | None):
    try:
        number = kind(value)
    except ValueError:
        raise ParseError(f"{name} {value!r} is not a valid number", lineno, source) from None
    if not number > 0:
        raise ParseError(f"{name} must be positive, got {value!r}", lineno, source)
    return number


def parse_manifest(data: bytes | str, source: str | None = None) -> CorpusManifest:
    text = _decode(data, source)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != MANIFEST_HEADER:
        raise ParseError(f"expected header {','.join(MANIFEST_HEADER)!r}", 1, source)
    rows = []
    seen: set[str] = set()
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != len(MANIFEST_HEADER):
            raise ParseError(f"expected 8 columns, found {len(row)}", lineno, source)
        file_id, ref_path, hyp_path, sector, rate, duration, quarter, speakers = row
        if not file_id:
            raise ParseError("empty file_id", lineno, source)
        if file_id in seen:
            raise ParseError(f"duplicate file_id {file_id!r}", lineno, source)
        seen.add(file_id)
        rows.append(
            ManifestRow(
                file_id,
                ref_path,
                hyp_path,
                sector,
                _positive(rate, int, "sample_rate_hz", lineno, source),
                _positive(duration, float, "duration_s", lineno, source),
                quarter,
                _positive(speakers, int, "num_speakers", lineno, source),
            )
        )
    return CorpusManifest(tuple(rows))


def serialize_manifest(manifest: CorpusManifest) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for row in manifest:
        writer.writerow([row.as_dict()[name] for name in MANIFEST_HEADER])
    return buf.getvalue().encode("utf-8")
