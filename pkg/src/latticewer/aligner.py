"""Minimum edit alignment of a hypothesis against a reference lattice."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import EPSILON, Lattice, ProvenanceTag, linear_lattice


class OpKind(enum.IntEnum):
    # Order is the tie-break preference.
    CORRECT = 0
    SUBSTITUTION = 1
    DELETION = 2
    INSERTION = 3

    @property
    def code(self) -> str:
        return self.name[0]


@dataclass(frozen=True)
class EditOp:
    kind: OpKind
    hyp_index: int | None = None
    arc_id: int | None = None
    arc_provenance: ProvenanceTag | None = None
    ref_label: str | None = None
    hyp_label: str | None = None


@dataclass(frozen=True)
class Alignment:
    ops: tuple[EditOp, ...]
    cost: int
    best_path_ref_len: int
    path: tuple[int, ...] = ()  # arc ids of the chosen path, epsilons included

    def count(self, kind: OpKind) -> int:
        return sum(1 for op in self.ops if op.kind == kind)


def _cost_dtype(lat: Lattice, n: int):
    # Costs never exceed (arcs on longest path) + n.
    return np.int16 if lat.num_states + n < np.iinfo(np.int16).max else np.int32


def align(lat: Lattice, hyp: Sequence[str]) -> Alignment:
    """Globally cheapest unit-cost alignment of ``hyp`` to any lattice path.

    Costs live in a (state x hyp prefix) table filled in topological order;
    the insertion recurrence within a row is solved with a running minimum.
    The traceback re-derives each step from the table, preferring
    Correct > Substitution > Deletion > Insertion and then verbatim over
    synonym over normalization arcs, then the lower arc id.
    """
    hyp = tuple(hyp)
    n = len(hyp)
    vocab: dict[str, int] = {}
    hyp_ids = np.array([vocab.setdefault(tok, len(vocab)) for tok in hyp], dtype=np.int64)
    arc_ids = np.array(
        [-1 if arc.label is EPSILON else vocab.get(arc.label, -2) for arc in lat.arcs], dtype=np.int64
    )
    dtype = _cost_dtype(lat, n)
    cost = np.empty((lat.num_states, n + 1), dtype=dtype)
    ramp = np.arange(n + 1, dtype=dtype)
    incoming = lat.incoming()
    for arc_list in incoming:
        arc_list.sort(key=lambda a: (lat.arcs[a].provenance.alt_kind, a))

    for state in lat.topo_order:
        if state == lat.start:
            cost[state] = ramp
            continue
        best = None
        for a in incoming[state]:
            prev = cost[lat.arcs[a].src]
            if arc_ids[a] == -1:
                cand = prev.copy()
            else:
                cand = prev + 1
                if n:
                    np.minimum(cand[1:], prev[:-1] + (hyp_ids != arc_ids[a]), out=cand[1:])
            best = cand if best is None else np.minimum(best, cand, out=best)
        # cost[j] = min_k<=j best[k] + (j - k)
        cost[state] = np.minimum.accumulate(best - ramp) + ramp

    return _traceback(lat, hyp, hyp_ids, arc_ids, cost, incoming)


def _traceback(lat, hyp, hyp_ids, arc_ids, cost, incoming) -> Alignment:
    ops: list[EditOp] = []
    path: list[int] = []
    state, j = lat.final, len(hyp)
    while state != lat.start or j > 0:
        here = int(cost[state, j])
        step = None
        if state != lat.start:
            arcs = incoming[state]
            if j > 0:
                for a in arcs:
                    if arc_ids[a] == hyp_ids[j - 1] and cost[lat.arcs[a].src, j - 1] == here:
                        step = (OpKind.CORRECT, a)
                        break
                if step is None:
                    for a in arcs:
                        if (
                            arc_ids[a] != -1
                            and arc_ids[a] != hyp_ids[j - 1]
                            and cost[lat.arcs[a].src, j - 1] + 1 == here
                        ):
                            step = (OpKind.SUBSTITUTION, a)
                            break
            if step is None:
                for a in arcs:
                    free = arc_ids[a] == -1
                    if cost[lat.arcs[a].src, j] + (0 if free else 1) == here:
                        step = (None if free else OpKind.DELETION, a)
                        break
        if step is None:
            assert j > 0 and cost[state, j - 1] + 1 == here, "inconsistent cost table"
            j -= 1
            ops.append(EditOp(OpKind.INSERTION, hyp_index=j, hyp_label=hyp[j]))
            continue
        kind, a = step
        arc = lat.arcs[a]
        path.append(a)
        state = arc.src
        if kind is None:
            continue
        if kind is OpKind.DELETION:
            ops.append(EditOp(kind, None, a, arc.provenance, arc.label, None))
        else:
            j -= 1
            ops.append(EditOp(kind, j, a, arc.provenance, arc.label, hyp[j]))
    ops.reverse()
    path.reverse()
    ref_len = sum(1 for a in path if lat.arcs[a].label is not EPSILON)
    return Alignment(tuple(ops), int(cost[lat.final, len(hyp)]), ref_len, tuple(path))


def levenshtein_align(ref: Sequence[str], hyp: Sequence[str]) -> Alignment:
    """Plain word-level alignment; same contract as ``align`` on a chain of ``ref``."""
    return align(linear_lattice(ref), hyp)
