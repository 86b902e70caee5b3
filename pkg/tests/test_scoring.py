from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from latticewer.aligner import align, levenshtein_align
from latticewer.lattice import build_lattice
from latticewer.nlp_format import attach_norm_sidecar, parse_nlp
from latticewer.scoring import (
    EntityBreakdown,
    WerSummary,
    entity_breakdown,
    mean_wer,
    merge_breakdowns,
    merge_summaries,
    summarize,
)
from latticewer.transforms import TransformRule, TransformRuleSet, parse_synonyms
from oracles import cases, nlp


def test_all_correct():
    s = summarize(levenshtein_align(["a", "b", "c"], ["a", "b", "c"]))
    assert s.wer == 0 and s.ref_count == 3 and s.correct == 3


def test_gonna_denominator_is_best_path():
    doc = parse_nlp(nlp("I'm|s||||CA||", "going|s||||LC||", "to|s||||LC||", "win|s|||.|LC||"))
    a = align(build_lattice(doc, parse_synonyms("going to|gonna")), ["i'm", "gonna", "win"])
    s = summarize(a)
    assert s.ref_count == 3 and s.wer == 0


def test_all_deleted():
    s = summarize(levenshtein_align(["a", "b"], []))
    assert (s.deletions, s.ref_count, s.wer) == (2, 2, 1)


def test_wer_above_one():
    s = summarize(levenshtein_align(["a"], ["x", "y", "z"]))
    assert s.wer == 3


def test_undefined_wer():
    assert summarize(levenshtein_align([], ["x"])).wer is None


def test_negative_count_rejected():
    with pytest.raises(ValueError):
        WerSummary(substitutions=-1)


def test_org_substitution():
    doc = parse_nlp(nlp("acme|s||||LC|ORG:0|"))
    b = entity_breakdown(align(build_lattice(doc), ["akme"]), doc)
    org = b.per_class["ORG"]
    assert (org.substitutions, org.ref_count, org.wer) == (1, 1, 1)
    assert b.mean_entity_wer == 1


def test_ordinal_correct():
    doc = parse_nlp(nlp("first|s||||LC|ORDINAL:0|"))
    b = entity_breakdown(align(build_lattice(doc), ["first"]), doc)
    assert b.per_class["ORDINAL"].wer == 0


def test_year_candidate_attributed_to_its_token():
    doc = attach_norm_sidecar(
        parse_nlp(nlp("in|s||||LC||", "2021|spk1|||,|LC|YEAR:7|n42")),
        '{"n42": ["twenty twenty one", "two thousand twenty one"]}',
    )
    a = align(build_lattice(doc), ["in", "twenty", "twenty", "one"])
    b = entity_breakdown(a, doc)
    year = b.per_class["YEAR"]
    # Every op on the chosen candidate lands on token 1, weight 1 each.
    assert year.wer == 0 and year.correct == year.ref_count == 3
    assert b.unlabeled.correct == 1


def test_multi_token_span_split_fractionally():
    doc = parse_nlp(nlp("going|s||||LC|ORG:0|", "to|s||||LC||"))
    a = align(build_lattice(doc, parse_synonyms("going to|gonna")), ["gonna"])
    b = entity_breakdown(a, doc)
    assert b.per_class["ORG"].correct == Fraction(1, 2)
    assert b.unlabeled.correct == Fraction(1, 2)


def test_insertions_not_attributed():
    doc = parse_nlp(nlp("acme|s||||LC|ORG:0|"))
    b = entity_breakdown(align(build_lattice(doc), ["the", "acme", "co"]), doc)
    assert b.insertions == 2 and b.per_class["ORG"].insertions == 0


def test_bad_provenance():
    doc = parse_nlp(nlp("a|s||||LC||", "b|s||||LC||"))
    a = levenshtein_align(["a", "b"], ["a"])
    with pytest.raises(ValueError):
        entity_breakdown(a, parse_nlp(nlp("a|s||||LC||")))
    assert entity_breakdown(a, doc).unlabeled.ref_count == 2


def test_merge_micro_average():
    a = WerSummary(substitutions=2, correct=8, ref_count=10)
    b = WerSummary(deletions=3, correct=27, ref_count=30)
    m = merge_summaries([a, b])
    assert m.wer == Fraction(5, 40) == Fraction(1, 8)


def test_merge_empty():
    m = merge_summaries([])
    assert m == WerSummary() and m.wer is None


summaries = st.builds(
    lambda s, d, i, c: WerSummary(s, d, i, c, s + d + c),
    *(st.integers(0, 50) for _ in range(4)),
)


@given(summaries, summaries, summaries)
def test_merge_associative_commutative(a, b, c):
    assert merge_summaries([merge_summaries([a, b]), c]) == merge_summaries([a, merge_summaries([b, c])])
    assert merge_summaries([a, b]) == merge_summaries([b, a])


def test_mean_skips_empty_classes():
    assert mean_wer([WerSummary(substitutions=1, ref_count=2), WerSummary()]) == Fraction(1, 2)
    assert mean_wer([]) is None


def test_mean_entity_unweighted():
    b = EntityBreakdown(
        {
            "DATE": WerSummary(substitutions=1, correct=9, ref_count=10),
            "ORG": WerSummary(substitutions=1, correct=1, ref_count=2),
        }
    )
    assert b.mean_entity_wer == (Fraction(1, 10) + Fraction(1, 2)) / 2


def _scored(case):
    doc = case.document()
    rules = TransformRuleSet(tuple(TransformRule(l, r) for l, r in case.rules))
    a = align(build_lattice(doc, rules), case.hyp)
    return doc, a, summarize(a), entity_breakdown(a, doc)


def test_conservation_random():
    for case in cases(seed=5, count=200):
        doc, a, s, b = _scored(case)
        parts = list(b.per_class.values()) + [b.unlabeled]
        assert sum((p.substitutions for p in parts), Fraction(0)) == s.substitutions
        assert sum((p.deletions for p in parts), Fraction(0)) == s.deletions
        assert sum((p.ref_count for p in parts), Fraction(0)) == s.ref_count
        assert b.insertions == s.insertions
        for p in parts:
            assert p.correct + p.substitutions + p.deletions == p.ref_count


def test_denominator_equals_token_count_without_alternatives():
    for case in cases(seed=9, count=100):
        case.rules, case.norms = [], {}
        doc, a, s, b = _scored(case)
        assert s.ref_count == len(doc.tokens)


def test_mean_entity_invariant_under_relabeling():
    for case in cases(seed=13, count=100):
        doc, a, s, b = _scored(case)
        mapping = {"ORG": "X1", "DATE": "X2", "PERSON": "X3"}
        case.entities = [(mapping[e[0]], e[1]) if e else None for e in case.entities]
        relabeled = entity_breakdown(a, case.document())
        assert relabeled.mean_entity_wer == b.mean_entity_wer


def test_merge_breakdowns_sums():
    parts = [_scored(c)[3] for c in cases(seed=21, count=20)]
    merged = merge_breakdowns(parts)
    for label, summary in merged.per_class.items():
        assert summary == merge_summaries(p.per_class[label] for p in parts if label in p.per_class)
    assert merged.insertions == sum(p.insertions for p in parts)
