"""Load, build, align and score one reference/hypothesis pair."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .aligner import Alignment, align
from .lattice import build_lattice
from .nlp_format import (
    ParseError,
    ReferenceDocument,
    TokenSequence,
    attach_norm_sidecar,
    parse_ctm,
    parse_hypothesis_text,
    parse_nlp,
)
from .scoring import EntityBreakdown, WerSummary, entity_breakdown, summarize
from .transforms import EMPTY_RULES, TransformRuleSet

NORM_SUFFIX = ".norm.json"


@dataclass(frozen=True)
class Scored:
    doc: ReferenceDocument
    alignment: Alignment
    summary: WerSummary
    entities: EntityBreakdown


def load_reference(path: str | Path, norm_path: str | Path | None = None, file_id: str | None = None) -> ReferenceDocument:
    """Read an .nlp file and, if given, its normalization sidecar.

    A reference that uses norm ids without a sidecar is rejected, since its
    lattice could not be built.
    """
    path = Path(path)
    doc = parse_nlp(path.read_bytes(), file_id=file_id or path.name.removesuffix(".nlp"), source=str(path))
    if norm_path is not None:
        doc = attach_norm_sidecar(doc, Path(norm_path).read_bytes(), source=str(norm_path))
    elif doc.norm_ids():
        raise ParseError(
            f"reference uses norm ids ({', '.join(doc.norm_ids()[:3])}, ...) but no sidecar was given",
            source=str(path),
        )
    return doc


def sidecar_in(norm_dir: str | Path | None, file_id: str) -> Path | None:
    """``<norm_dir>/<file_id>.norm.json`` if it exists."""
    if norm_dir is None:
        return None
    candidate = Path(norm_dir) / f"{file_id}{NORM_SUFFIX}"
    return candidate if candidate.exists() else None


def hyp_format_for(path: str | Path, override: str | None = None) -> str:
    if override:
        return override
    return "ctm" if Path(path).suffix.lower() == ".ctm" else "txt"


def load_hypothesis(path: str | Path, fmt: str | None = None) -> TokenSequence:
    path = Path(path)
    data = path.read_bytes()
    if hyp_format_for(path, fmt) == "ctm":
        return parse_ctm(data, source=str(path))
    return parse_hypothesis_text(data, source=str(path))


def score(doc: ReferenceDocument, hyp: TokenSequence, rules: TransformRuleSet = EMPTY_RULES) -> Scored:
    alignment = align(build_lattice(doc, rules), hyp.tokens)
    return Scored(doc, alignment, summarize(alignment), entity_breakdown(alignment, doc))
