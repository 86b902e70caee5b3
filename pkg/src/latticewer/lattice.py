"""Reference lattice: every acceptable realization of a reference as a DAG."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .nlp_format import ReferenceDocument, SequenceSource, TokenSequence
from .transforms import EMPTY_RULES, TransformRuleSet, backbone, synonym_spans

EPSILON = None
MAX_PATH_COUNT = 2**63 - 1


class AltKind(enum.IntEnum):
    # Values double as alignment tie-break priority.
    VERBATIM = 0
    SYNONYM = 1
    NORMALIZATION = 2


@dataclass(frozen=True)
class ProvenanceTag:
    ref_token_start: int
    ref_token_len: int
    alt_kind: AltKind

    def __post_init__(self) -> None:
        if self.ref_token_len < 1 or self.ref_token_start < 0:
            raise ValueError(f"bad provenance span {self.ref_token_start}+{self.ref_token_len}")

    @property
    def token_indices(self) -> range:
        return range(self.ref_token_start, self.ref_token_start + self.ref_token_len)


@dataclass(frozen=True)
class Arc:
    src: int
    dst: int
    label: str | None
    provenance: ProvenanceTag


@dataclass(frozen=True)
class Lattice:
    num_states: int
    start: int
    final: int
    arcs: tuple[Arc, ...]
    topo_order: tuple[int, ...]
    num_ref_tokens: int = 0

    def incoming(self) -> list[list[int]]:
        """Arc ids entering each state, ascending."""
        table: list[list[int]] = [[] for _ in range(self.num_states)]
        for arc_id, arc in enumerate(self.arcs):
            table[arc.dst].append(arc_id)
        return table

    def outgoing(self) -> list[list[int]]:
        table: list[list[int]] = [[] for _ in range(self.num_states)]
        for arc_id, arc in enumerate(self.arcs):
            table[arc.src].append(arc_id)
        return table


class UnresolvedNormError(ValueError):
    pass


class PathLimitExceeded(ValueError):
    pass


class _Builder:
    def __init__(self, num_backbone_states: int):
        self.arcs: list[Arc] = []
        self.sort_keys: list[tuple] = [(i, 0) for i in range(num_backbone_states)]
        self.branches = 0

    def branch(self, src: int, dst: int, labels: Iterable[str], prov: ProvenanceTag) -> None:
        labels = list(labels)
        self.branches += 1
        prev = src
        for k, label in enumerate(labels):
            if k == len(labels) - 1:
                nxt = dst
            else:
                nxt = len(self.sort_keys)
                # Interior states sort after their branch origin and before any later backbone state.
                self.sort_keys.append((src, 1, self.branches, k))
            self.arcs.append(Arc(prev, nxt, label, prov))
            prev = nxt


def build_lattice(doc: ReferenceDocument, rules: TransformRuleSet = EMPTY_RULES) -> Lattice:
    """Lattice whose paths are the verbatim reference plus one-step alternatives.

    Backbone state ``i`` sits before original token ``i``. Each token with a
    norm id gets a parallel branch per candidate; each synonym match over the
    verbatim backbone gets a branch emitting the opposite side of the rule.
    Branches never nest. Tokens that fold to nothing become epsilon arcs.
    """
    n = len(doc.tokens)
    builder = _Builder(n + 1)
    labels, positions = backbone(doc)
    label_at = dict(zip(positions, labels))
    for i in range(n):
        builder.arcs.append(Arc(i, i + 1, label_at.get(i, EPSILON), ProvenanceTag(i, 1, AltKind.VERBATIM)))
    for first, last, match in synonym_spans(doc, rules):
        prov = ProvenanceTag(first, last - first + 1, AltKind.SYNONYM)
        builder.branch(first, last + 1, match.replacement, prov)
    for i, tok in enumerate(doc.tokens):
        if not tok.norm_id:
            continue
        if tok.norm_id not in doc.norms:
            raise UnresolvedNormError(f"token {i} ({tok.text!r}) has unresolved norm id {tok.norm_id!r}")
        for cand in doc.norms[tok.norm_id]:
            builder.branch(i, i + 1, cand, ProvenanceTag(i, 1, AltKind.NORMALIZATION))
    order = sorted(range(len(builder.sort_keys)), key=builder.sort_keys.__getitem__)
    return Lattice(
        num_states=len(builder.sort_keys),
        start=0,
        final=n,
        arcs=tuple(builder.arcs),
        topo_order=tuple(order),
        num_ref_tokens=n,
    )


def linear_lattice(tokens: Iterable[str]) -> Lattice:
    """A chain accepting exactly ``tokens``."""
    arcs = tuple(Arc(i, i + 1, tok, ProvenanceTag(i, 1, AltKind.VERBATIM)) for i, tok in enumerate(tokens))
    n = len(arcs)
    return Lattice(n + 1, 0, n, arcs, tuple(range(n + 1)), n)


def enumerate_paths(lat: Lattice, limit: int) -> list[TokenSequence]:
    """Distinct label sequences from start to final, sorted; epsilons skipped.

    Suffix sets are built in reverse topological order. Every suffix from a
    reachable state extends to a distinct full path, so any set larger than
    ``limit`` proves the total exceeds it.
    """
    if limit < 1:
        raise ValueError("limit must be positive")
    outgoing = lat.outgoing()
    suffixes: dict[int, set[tuple[str, ...]]] = {}
    for state in reversed(lat.topo_order):
        if state == lat.final:
            found = {()}
        else:
            found = set()
            for arc_id in outgoing[state]:
                arc = lat.arcs[arc_id]
                head = () if arc.label is EPSILON else (arc.label,)
                found.update(head + tail for tail in suffixes[arc.dst])
        if len(found) > limit:
            raise PathLimitExceeded(f"lattice has more than {limit} distinct paths")
        suffixes[state] = found
    return [TokenSequence(p, SequenceSource.NLP_DERIVED) for p in sorted(suffixes[lat.start])]


@dataclass(frozen=True)
class LatticeStats:
    states: int
    arcs: int
    path_count: int | None
    overflow: bool


def count_paths(lat: Lattice) -> int:
    """Exact number of start-to-final arc paths (not distinct label sequences)."""
    outgoing = lat.outgoing()
    count = [0] * lat.num_states
    for state in reversed(lat.topo_order):
        if state == lat.final:
            count[state] = 1
        else:
            count[state] = sum(count[lat.arcs[a].dst] for a in outgoing[state])
    return count[lat.start]


def lattice_stats(lat: Lattice) -> LatticeStats:
    paths = count_paths(lat)
    if paths > MAX_PATH_COUNT:
        return LatticeStats(lat.num_states, len(lat.arcs), None, True)
    return LatticeStats(lat.num_states, len(lat.arcs), paths, False)


def dump_lattice(lat: Lattice) -> str:
    """Tab-separated arc listing, final state id on the last line."""
    lines = []
    for arc in lat.arcs:
        prov = arc.provenance
        label = "<eps>" if arc.label is EPSILON else arc.label
        lines.append(
            f"{arc.src}\t{arc.dst}\t{label}\t{prov.ref_token_start}\t{prov.ref_token_len}\t{prov.alt_kind.name.lower()}"
        )
    lines.append(str(lat.final))
    return "\n".join(lines) + "\n"


def check_lattice(lat: Lattice) -> None:
    """Raise AssertionError if structural invariants are violated."""
    position = {state: k for k, state in enumerate(lat.topo_order)}
    assert sorted(lat.topo_order) == list(range(lat.num_states))
    for arc in lat.arcs:
        assert position[arc.src] < position[arc.dst], f"arc {arc} breaks topological order"
        assert arc.provenance.ref_token_start + arc.provenance.ref_token_len <= lat.num_ref_tokens
    assert all(arc.dst != lat.start for arc in lat.arcs)
    assert all(arc.src != lat.final for arc in lat.arcs)
    outgoing, incoming = lat.outgoing(), lat.incoming()
    forward = {lat.start}
    for state in lat.topo_order:
        if state in forward:
            forward.update(lat.arcs[a].dst for a in outgoing[state])
    backward = {lat.final}
    for state in reversed(lat.topo_order):
        if state in backward:
            backward.update(lat.arcs[a].src for a in incoming[state])
    assert forward == backward == set(range(lat.num_states)), "unreachable state"
