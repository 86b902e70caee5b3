"""Lattice-based word error rate scoring for ASR transcripts.

References may accept synonym and text-normalization alternatives without
penalty; errors can be attributed to entity classes and rolled up by
sector and sampling rate.
"""

from .aligner import Alignment, EditOp, OpKind, align, levenshtein_align
from .lattice import AltKind, Lattice, ProvenanceTag, build_lattice, enumerate_paths, lattice_stats
from .nlp_format import (
    CorpusManifest,
    EntitySpanRef,
    ManifestRow,
    NlpToken,
    ParseError,
    ReferenceDocument,
    TokenSequence,
    attach_norm_sidecar,
    parse_ctm,
    parse_hypothesis_text,
    parse_manifest,
    parse_nlp,
    reference_token_sequence,
    serialize_nlp,
)
from .report import (
    FileResult,
    StratifiedReport,
    aggregate,
    entity_distribution,
    render_csv,
    render_json,
    render_side_by_side,
)
from .scoring import EntityBreakdown, WerSummary, entity_breakdown, merge_summaries, summarize
from .transforms import TransformRule, TransformRuleSet, matches_at, parse_synonyms, transform_coverage_stats

__version__ = "0.1.0"
