"""Synonym transform rules: loading, matching against token sequences, coverage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .nlp_format import ParseError, ReferenceDocument, _decode, comparison_form, fold_words


@dataclass(frozen=True)
class TransformRule:
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lhs", tuple(self.lhs))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        if not self.lhs or not self.rhs:
            raise ValueError("transform rule has an empty side")
        if self.lhs == self.rhs:
            raise ValueError(f"transform rule maps {' '.join(self.lhs)!r} to itself")
        if any(not tok or any(ch.isspace() for ch in tok) for tok in self.lhs + self.rhs):
            raise ValueError("transform rule tokens must be non-empty and whitespace-free")

    def side(self, name: str) -> tuple[str, ...]:
        return self.lhs if name == "lhs" else self.rhs

    def other(self, name: str) -> tuple[str, ...]:
        return self.rhs if name == "lhs" else self.lhs

    def key(self) -> frozenset:
        return frozenset((self.lhs, self.rhs))


@dataclass(frozen=True)
class Match:
    rule: TransformRule
    side: str  # which side of the rule was found in the text: "lhs" or "rhs"
    length: int

    @property
    def replacement(self) -> tuple[str, ...]:
        return self.rule.other(self.side)


@dataclass(frozen=True)
class TransformRuleSet:
    rules: tuple[TransformRule, ...] = ()
    index: dict[str, tuple[TransformRule, ...]] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        # Rules are symmetric, so "a|b" and "b|a" are one rule; keep the first.
        unique: dict[frozenset, TransformRule] = {}
        for rule in self.rules:
            unique.setdefault(rule.key(), rule)
        rules = tuple(unique.values())
        index: dict[str, list[TransformRule]] = {}
        for rule in rules:
            for first in dict.fromkeys((rule.lhs[0], rule.rhs[0])):
                index.setdefault(first, []).append(rule)
        object.__setattr__(self, "rules", rules)
        object.__setattr__(self, "index", {k: tuple(v) for k, v in index.items()})

    def __len__(self) -> int:
        return len(self.rules)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransformRuleSet):
            return NotImplemented
        return {r.key() for r in self.rules} == {r.key() for r in other.rules}

    def __hash__(self) -> int:
        return hash(frozenset(r.key() for r in self.rules))

    def lookup(self, token: str) -> tuple[TransformRule, ...]:
        return self.index.get(token, ())

    def with_rule(self, rule: TransformRule) -> "TransformRuleSet":
        return TransformRuleSet(self.rules + (rule,))


EMPTY_RULES = TransformRuleSet()


def parse_synonyms(data: bytes | str, source: str | None = None) -> TransformRuleSet:
    """Parse ``lhs|rhs`` lines. ``#`` comments and blank lines are skipped."""
    text = _decode(data, source)
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.count("|") != 1:
            raise ParseError("expected exactly one '|' separating lhs and rhs", lineno, source)
        left, right = stripped.split("|")
        lhs, rhs = fold_words(left), fold_words(right)
        if not lhs or not rhs:
            raise ParseError("empty side in transform rule", lineno, source)
        try:
            rules.append(TransformRule(tuple(lhs), tuple(rhs)))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, source) from None
    return TransformRuleSet(tuple(rules))


def serialize_synonyms(rules: TransformRuleSet) -> bytes:
    lines = [f"{' '.join(r.lhs)}|{' '.join(r.rhs)}" for r in rules.rules]
    return "".join(line + "\n" for line in lines).encode("utf-8")


def matches_at(rules: TransformRuleSet, tokens: Sequence[str], i: int) -> list[Match]:
    """Every rule with either side equal to ``tokens[i:i+len(side)]``."""
    found = []
    for rule in rules.lookup(tokens[i]):
        for side in ("lhs", "rhs"):
            seq = rule.side(side)
            if tuple(tokens[i : i + len(seq)]) == seq:
                found.append(Match(rule, side, len(seq)))
    return found


def backbone(doc: ReferenceDocument) -> tuple[list[str], list[int]]:
    """Comparison-form labels of ``doc`` and the original token index of each.

    Tokens that fold to nothing (pure punctuation) have no label and are
    skipped, so ``positions`` maps label index to token index.
    """
    labels, positions = [], []
    for i, tok in enumerate(doc.tokens):
        word = comparison_form(tok.text)
        if word:
            labels.append(word)
            positions.append(i)
    return labels, positions


def synonym_spans(doc: ReferenceDocument, rules: TransformRuleSet) -> list[tuple[int, int, Match]]:
    """All synonym matches over the verbatim backbone as (first, last) token indices."""
    labels, positions = backbone(doc)
    spans = []
    for k in range(len(labels)):
        for match in matches_at(rules, labels, k):
            spans.append((positions[k], positions[k + match.length - 1], match))
    return spans


@dataclass(frozen=True)
class CoverageStats:
    tokens_total: int
    tokens_with_norm_candidates: int
    tokens_covered_by_synonym_match: int

    @property
    def fraction_norm(self) -> float:
        return self.tokens_with_norm_candidates / self.tokens_total if self.tokens_total else 0.0

    @property
    def fraction_syn(self) -> float:
        return (
            self.tokens_covered_by_synonym_match / self.tokens_total if self.tokens_total else 0.0
        )

    def as_dict(self) -> dict:
        return {
            "tokens_total": self.tokens_total,
            "tokens_with_norm_candidates": self.tokens_with_norm_candidates,
            "tokens_covered_by_synonym_match": self.tokens_covered_by_synonym_match,
            "fraction_norm": self.fraction_norm,
            "fraction_syn": self.fraction_syn,
        }


def transform_coverage_stats(
    docs: Iterable[ReferenceDocument], rules: TransformRuleSet = EMPTY_RULES
) -> CoverageStats:
    """Share of reference tokens touched by normalization or synonym alternatives.

    A token counts as normalization-covered when it carries a norm id (and,
    if candidates are loaded, that id has at least one). A token counts as
    synonym-covered when it lies inside any match span.
    """
    total = with_norm = covered = 0
    for doc in docs:
        total += len(doc.tokens)
        for tok in doc.tokens:
            if tok.norm_id and (not doc.norms or doc.norms.get(tok.norm_id)):
                with_norm += 1
        inside: set[int] = set()
        for first, last, _ in synonym_spans(doc, rules):
            inside.update(range(first, last + 1))
        covered += len(inside)
    return CoverageStats(total, with_norm, covered)
