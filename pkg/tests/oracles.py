"""Independent reference computations and random-case generators for tests.

Nothing here imports the alignment or lattice code: the oracles work on
plain lists and strings so they can check those modules from outside.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass

from latticewer.nlp_format import NLP_HEADER, attach_norm_sidecar, parse_nlp

ALPHABET = ("a", "b", "c", "d", "e")


def nlp(*lines: str) -> str:
    """An .nlp document from data lines."""
    return NLP_HEADER + "\n" + "".join(line + "\n" for line in lines)


def levenshtein(ref, hyp):
    """Textbook unit-cost edit distance over token lists."""
    ref, hyp = list(ref), list(hyp)
    m, n = len(ref), len(hyp)
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        d[i][0] = i
    for j in range(n + 1):
        d[0][j] = j
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            d[i][j] = min(
                d[i - 1][j] + 1,
                d[i][j - 1] + 1,
                d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]),
            )
    return d[m][n]


def brute_force_language(labels, norms, rules):
    """All reference realizations by applying non-overlapping rewrites.

    ``labels`` is the verbatim comparison sequence with ``""`` for tokens that
    fold to nothing. ``norms`` maps token index to candidate tuples. ``rules``
    is a list of (lhs, rhs) tuples, applied in either direction wherever one
    side occurs in the non-empty labels.
    """
    compact = [(i, w) for i, w in enumerate(labels) if w]
    words = [w for _, w in compact]
    rewrites = []  # (first_token, last_token, replacement)
    for lhs, rhs in rules:
        for src, dst in ((lhs, rhs), (rhs, lhs)):
            for k in range(len(words) - len(src) + 1):
                if tuple(words[k : k + len(src)]) == tuple(src):
                    rewrites.append((compact[k][0], compact[k + len(src) - 1][0], tuple(dst)))
    for i, cands in norms.items():
        for cand in cands:
            rewrites.append((i, i, tuple(cand)))
    language = set()
    for r in range(len(rewrites) + 1):
        for chosen in itertools.combinations(rewrites, r):
            spans = sorted((a, b) for a, b, _ in chosen)
            if any(spans[t][1] >= spans[t + 1][0] for t in range(len(spans) - 1)):
                continue
            starts = {a: (b, rep) for a, b, rep in chosen}
            out, i = [], 0
            while i < len(labels):
                if i in starts:
                    b, rep = starts[i]
                    out.extend(rep)
                    i = b + 1
                else:
                    if labels[i]:
                        out.append(labels[i])
                    i += 1
            language.add(tuple(out))
    return language


@dataclass
class Case:
    words: list
    entities: list  # per token: None or (class, span_id)
    norms: dict  # token index -> list of candidate tuples
    rules: list  # (lhs, rhs) tuples
    hyp: list

    def nlp_text(self) -> str:
        lines = [NLP_HEADER]
        for i, w in enumerate(self.words):
            ent = self.entities[i]
            tag = f"{ent[0]}:{ent[1]}" if ent else ""
            norm = f"n{i}" if i in self.norms else ""
            lines.append(f"{w}|spk1||||LC|{tag}|{norm}")
        return "\n".join(lines) + "\n"

    def sidecar(self) -> str:
        return json.dumps({f"n{i}": [" ".join(c) for c in cands] for i, cands in self.norms.items()})

    def rules_text(self) -> str:
        return "".join(f"{' '.join(l)}|{' '.join(r)}\n" for l, r in self.rules)

    def document(self):
        doc = parse_nlp(self.nlp_text(), file_id="case")
        return attach_norm_sidecar(doc, self.sidecar())


def random_word_seq(rng, lo, hi):
    return tuple(rng.choice(ALPHABET) for _ in range(rng.randint(lo, hi)))


def random_rule(rng):
    while True:
        lhs, rhs = random_word_seq(rng, 1, 2), random_word_seq(rng, 1, 2)
        if lhs != rhs:
            return lhs, rhs


def random_case(rng, max_tokens=10, max_rules=2, max_norm_spans=2, max_hyp=12, classes=("ORG", "DATE", "PERSON")):
    n = rng.randint(0, max_tokens)
    words = [rng.choice(ALPHABET) for _ in range(n)]
    entities = [None] * n
    span_id, i = 0, 0
    while i < n:
        if rng.random() < 0.4:
            length = rng.randint(1, 3)
            label = rng.choice(classes)
            for k in range(i, min(n, i + length)):
                entities[k] = (label, span_id)
            span_id += 1
            i += length
        else:
            i += 1
    norm_positions = rng.sample(range(n), min(n, rng.randint(0, max_norm_spans)))
    norms = {p: sorted({random_word_seq(rng, 1, 3) for _ in range(rng.randint(1, 2))}) for p in norm_positions}
    rules = []
    for _ in range(rng.randint(0, max_rules)):
        rule = random_rule(rng)
        if rule not in rules and rule[::-1] not in rules:
            rules.append(rule)
    if rng.random() < 0.5 and n:
        # Hypothesis perturbed from the reference so that matches are common.
        hyp = [w for w in words if rng.random() > 0.2]
        hyp = [rng.choice(ALPHABET) if rng.random() < 0.2 else w for w in hyp]
        if rng.random() < 0.3:
            hyp.insert(rng.randint(0, len(hyp)), rng.choice(ALPHABET))
        hyp = hyp[:max_hyp]
    else:
        hyp = list(random_word_seq(rng, 0, max_hyp))
    return Case(words, entities, norms, rules, hyp)


def cases(seed, count, **kwargs):
    rng = random.Random(seed)
    return [random_case(rng, **kwargs) for _ in range(count)]
