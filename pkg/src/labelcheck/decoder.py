"""Force decoding of posteriors against the alignment graph.

The decode graph is the composition of the standard CTC topology (blank
self-loops, unit self-loops collapsing repeated frames, mandatory blank
between identical consecutive units) with the alignment graph. The
composition is built on the fly: a product state is ``(graph node, last
emitted unit or blank)``, where a graph node is either a chain state or the
filler together with the chain state it was entered from. Non-emitting arcs
(deletions, filler entry/exit) consume no frames; their costs are folded
into the next emission or into the final-state closure, which is exact
because all epsilon paths here run forward along the chain.

Costs live in the tropical semiring: negated log-posteriors plus structural
penalties add along a path and the decoder returns the minimum. Ties are
broken by fewer structural arcs, then lexicographically smaller hypothesis,
so decoding is deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import IO, Optional

import numpy as np

from .errors import BeamCollapse, DimensionMismatch, ExplosionGuard, NoPath
from .graph import EV_DEL, EV_INS, EV_MATCH, AlignmentGraph, _enumerate_alignments
from .units import BLANK_ID

# Marker for "nothing emitted yet / previous frame was blank".
BLANK_LAST = -1

# Backpointer kinds.
_K_BLANK = 0
_K_REPEAT = 1
_K_TOKEN = 2
_K_LOOP = 3

OP_MATCH = "match"
OP_DELETE = "delete"
OP_INSERT = "insert"


@dataclass(frozen=True)
class Edit:
    """One step of the reference-to-hypothesis edit script.

    ``ref_index`` is the reference position for matches and deletions and
    ``None`` for insertions. ``unit`` is the reference unit for matches and
    deletions and the inserted unit for insertions.
    """

    kind: str
    unit: int
    ref_index: Optional[int]


@dataclass(frozen=True)
class DecodeResult:
    """Best force-decoding path.

    ``hyp`` is the emitted unit sequence, ``ops`` the canonical edit script
    relating the reference to ``hyp`` (within a run of edits between two
    matches, deletions come first in reference order, then insertions in
    emission order). ``token_spans`` holds one half-open frame interval
    ``[begin, end)`` per emitted token. ``frame_labels`` is the per-frame
    unit (or blank) labeling of the winning path; its blank-removed,
    repeat-collapsed form equals ``hyp``. ``total_score`` is the path cost:
    negated log-posteriors plus structural penalties.
    """

    hyp: tuple[int, ...]
    ops: tuple[Edit, ...]
    token_spans: tuple[tuple[int, int], ...]
    total_score: float
    frame_labels: tuple[int, ...]

    @property
    def num_deletions(self) -> int:
        return sum(1 for e in self.ops if e.kind == OP_DELETE)

    @property
    def num_insertions(self) -> int:
        return sum(1 for e in self.ops if e.kind == OP_INSERT)

    def structural_cost(self, p1: float, p2: float) -> float:
        return self.num_deletions * p1 + self.num_insertions * p2


def _node_pos(node: int, n: int) -> int:
    return node if node <= n else node - n - 1


def _assemble_ops(ref: tuple[int, ...], events) -> tuple[Edit, ...]:
    """Canonicalize path events into the edit script described above."""
    matched = []
    deleted = set()
    inserted = []  # (gap index, unit) in emission order
    gap = 0
    for kind, arg in events:
        if kind == EV_MATCH:
            matched.append(arg)
            gap += 1
        elif kind == EV_DEL:
            deleted.add(arg)
        else:
            inserted.append((gap, arg))
    if sorted(matched) != matched or deleted | set(matched) != set(range(len(ref))):
        raise NoPath("inconsistent alignment events (internal error)")

    ops = []
    bounds = [0] + [m + 1 for m in matched]
    for k in range(len(matched) + 1):
        low = bounds[k]
        high = matched[k] if k < len(matched) else len(ref)
        for p in range(low, high):
            if p in deleted:
                ops.append(Edit(OP_DELETE, ref[p], p))
        for g, u in inserted:
            if g == k:
                ops.append(Edit(OP_INSERT, u, None))
        if k < len(matched):
            m = matched[k]
            ops.append(Edit(OP_MATCH, ref[m], m))
    return tuple(ops)


def force_decode(
    post,
    g: AlignmentGraph,
    beam: Optional[int] = None,
    trace: Optional[IO[str]] = None,
) -> DecodeResult:
    """Exact Viterbi force decoding (beam search when ``beam`` is given).

    Returns the minimum-cost path through the CTC-composed alignment graph
    that consumes every frame and ends in the final chain state. ``beam``
    caps the number of live product states kept per frame; exact search is
    the default since the graph is linear in the reference length. ``trace``
    receives a per-frame best-cost TSV table when given.
    """
    if post.num_units != g.num_units:
        raise DimensionMismatch(
            f"posteriors have {post.num_units} units, graph expects {g.num_units}"
        )
    if beam is not None:
        beam = int(beam)
        if beam < 1:
            raise ValueError("beam width must be >= 1")

    n = g.num_tokens
    num_frames = post.num_frames
    ref = g.ref
    p1, p2 = g.p1, g.p2
    values = post.values.astype(np.float64)

    init_key = (0, BLANK_LAST)
    # alpha: (node, last) -> (cost, structural arcs, hyp tuple)
    alpha = {init_key: (0.0, 0, ())}
    backptrs = []

    for t in range(num_frames):
        neg = -values[t]
        new_alpha = {}
        new_bp = {}

        def consider(key, val, bp_entry):
            old = new_alpha.get(key)
            if old is None or val < old:
                new_alpha[key] = val
                new_bp[key] = bp_entry

        items = sorted(alpha.items())

        # Blank and repeat transitions keep the graph node in place.
        for (node, last), (cost, arcs, hyp) in items:
            consider(
                (node, BLANK_LAST),
                (cost + neg[BLANK_ID], arcs, hyp),
                ((node, last), _K_BLANK),
            )
            if last != BLANK_LAST:
                consider(
                    (node, last),
                    (cost + neg[last], arcs, hyp),
                    ((node, last), _K_REPEAT),
                )

        # Epsilon closure, folded: cheapest way to reach each chain position
        # j >= source position with the frame-independent deletion/filler
        # arcs. ``exited`` pays the filler exit arc; ``gen`` adds deletions
        # left to right.
        exited = {}
        for (node, last), (cost, arcs, hyp) in items:
            pos = _node_pos(node, n)
            val = (cost, arcs + (1 if node > n else 0), hyp, (node, last))
            row = exited.get(last)
            if row is None:
                row = [None] * (n + 1)
                exited[last] = row
            if row[pos] is None or val < row[pos]:
                row[pos] = val

        gen = {}
        for last, row in sorted(exited.items()):
            out = [None] * (n + 1)
            prev = None
            for j in range(n + 1):
                cand = None
                if prev is not None:
                    cand = (prev[0] + p1, prev[1] + 1, prev[2], prev[3])
                if row[j] is not None and (cand is None or row[j] < cand):
                    cand = row[j]
                out[j] = prev = cand
            gen[last] = out

        gen_items = sorted(gen.items())

        # Token arcs: emit ref[j] from chain position j, landing at j + 1.
        # The source may not have last == ref[j] (mandatory blank between
        # identical consecutive units), hence best two distinct lasts.
        for j in range(n):
            u = ref[j]
            best1 = best2 = None
            last1 = None
            for last, out in gen_items:
                val = out[j]
                if val is None:
                    continue
                if best1 is None or val < best1:
                    if last1 != last:
                        best2, best1, last1 = best1, val, last
                    else:
                        best1 = val
                elif last != last1 and (best2 is None or val < best2):
                    best2 = val
            src = best1 if last1 != u else best2
            if src is None:
                continue
            cost, arcs, hyp, src_key = src
            consider(
                (j + 1, u),
                (cost + neg[u], arcs, hyp + (u,)),
                (src_key, _K_TOKEN),
            )

        # Filler self-loops: emit any non-blank unit at filler position j.
        # Staying inside the same filler visit skips the exit/entry arcs.
        for j in range(n + 1):
            fnode = n + 1 + j
            best1 = best2 = None
            last1 = None
            for last, out in gen_items:
                val = out[j]
                cand = None
                if val is not None:
                    cand = (val[0], val[1] + 1, val[2], val[3])
                stay = alpha.get((fnode, last))
                if stay is not None:
                    stay_val = (stay[0], stay[1], stay[2], (fnode, last))
                    if cand is None or stay_val < cand:
                        cand = stay_val
                if cand is None:
                    continue
                if best1 is None or cand < best1:
                    if last1 != last:
                        best2, best1, last1 = best1, cand, last
                    else:
                        best1 = cand
                elif last != last1 and (best2 is None or cand < best2):
                    best2 = cand
            if best1 is None:
                continue
            for u in range(1, g.num_units):
                src = best1 if last1 != u else best2
                if src is None:
                    continue
                cost, arcs, hyp, src_key = src
                consider(
                    (fnode, u),
                    (cost + p2 + neg[u], arcs + 1, hyp + (u,)),
                    (src_key, _K_LOOP),
                )

        if beam is not None and len(new_alpha) > beam:
            keep = sorted(new_alpha.items(), key=lambda kv: (kv[1], kv[0]))[:beam]
            new_alpha = dict(keep)
            new_bp = {key: new_bp[key] for key in new_alpha}

        if not new_alpha:
            if beam is not None:
                raise BeamCollapse("no live states after pruning")
            raise NoPath("no live states (internal error)")

        alpha = new_alpha
        backptrs.append(new_bp)

        if trace is not None:
            for (node, last), (cost, _, _) in sorted(alpha.items()):
                trace.write(f"{t}\t{node}\t{last}\t{cost:.6f}\n")

    # Close into the final chain state: exit the filler if needed, then
    # delete any remaining reference tokens.
    best_val = None
    best_key = None
    for (node, last), (cost, arcs, hyp) in sorted(alpha.items()):
        pos = _node_pos(node, n)
        val = (
            cost + (n - pos) * p1,
            arcs + (n - pos) + (1 if node > n else 0),
            hyp,
        )
        if best_val is None or val < best_val:
            best_val = val
            best_key = (node, last)
    if best_val is None:
        raise NoPath("empty decoding lattice (internal error)")

    return _reconstruct(g, best_key, best_val, backptrs, num_frames)


def _reconstruct(g, best_key, best_val, backptrs, num_frames):
    n = g.num_tokens
    chain = []
    key = best_key
    for t in range(num_frames - 1, -1, -1):
        prev_key, kind = backptrs[t][key]
        chain.append((key, kind, prev_key))
        key = prev_key
    chain.reverse()

    events = []
    emissions = []
    labels = []
    for key, kind, prev_key in chain:
        node, last = key
        if kind == _K_BLANK:
            labels.append(BLANK_ID)
            continue
        labels.append(last)
        if kind == _K_REPEAT:
            unit, begin, _ = emissions[-1]
            emissions[-1] = (unit, begin, len(labels))
            continue
        src_pos = _node_pos(prev_key[0], n)
        dst_pos = node - 1 if kind == _K_TOKEN else node - n - 1
        events.extend((EV_DEL, p) for p in range(src_pos, dst_pos))
        if kind == _K_TOKEN:
            events.append((EV_MATCH, dst_pos))
        else:
            events.append((EV_INS, last))
        emissions.append((last, len(labels) - 1, len(labels)))

    events.extend((EV_DEL, p) for p in range(_node_pos(best_key[0], n), n))

    hyp = tuple(unit for unit, _, _ in emissions)
    if hyp != best_val[2]:
        raise NoPath("hypothesis reconstruction mismatch (internal error)")
    return DecodeResult(
        hyp=hyp,
        ops=_assemble_ops(g.ref, events),
        token_spans=tuple((b, e) for _, b, e in emissions),
        total_score=best_val[0],
        frame_labels=tuple(labels),
    )


def collapse_frame_labels(labels) -> tuple[int, ...]:
    """Collapse repeats, then drop blanks: the CTC labeling function."""
    out = []
    prev = None
    for lab in labels:
        if lab != prev and lab != BLANK_ID:
            out.append(lab)
        prev = lab
    return tuple(out)


_BRUTE_MAX_FRAMES = 6
_BRUTE_MAX_UNITS = 4
_BRUTE_MAX_REF = 3


def brute_force_decode(post, g: AlignmentGraph, max_emitted: Optional[int] = None) -> DecodeResult:
    """Exhaustive decoding oracle: enumerate every frame labeling.

    Independent of :func:`force_decode`: label sequences and their
    structural costs come from walking the graph's arc list
    (:func:`labelcheck.graph.enumerate_label_paths` machinery) and every
    ``num_units ** num_frames`` frame labeling is scored directly. Guarded
    to tiny instances.
    """
    if post.num_units != g.num_units:
        raise DimensionMismatch(
            f"posteriors have {post.num_units} units, graph expects {g.num_units}"
        )
    if (
        post.num_frames > _BRUTE_MAX_FRAMES
        or g.num_units > _BRUTE_MAX_UNITS
        or g.num_tokens > _BRUTE_MAX_REF
    ):
        raise ExplosionGuard(
            "brute_force_decode is limited to "
            f"{_BRUTE_MAX_FRAMES} frames, {_BRUTE_MAX_UNITS} units, "
            f"{_BRUTE_MAX_REF} reference tokens"
        )
    num_frames = post.num_frames
    if max_emitted is None:
        max_emitted = num_frames
    sequences = _enumerate_alignments(g, max_emitted)
    values = post.values.astype(np.float64)

    best = None  # ((total, structural arcs, hyp), labeling, seq info)
    for labeling in itertools.product(range(g.num_units), repeat=num_frames):
        hyp = collapse_frame_labels(labeling)
        info = sequences.get(hyp)
        if info is None:
            continue
        acoustic = 0.0
        for t, lab in enumerate(labeling):
            acoustic -= values[t, lab]
        total = acoustic + info[0]
        cand = (total, info[1], hyp)
        if best is None or cand < best[0]:
            best = (cand, labeling, info)
    if best is None:
        raise NoPath("no labeling reaches the final state (internal error)")

    (total, _, hyp), labeling, info = best
    spans = []
    prev = None
    for t, lab in enumerate(labeling):
        if lab == BLANK_ID:
            prev = None
            continue
        if lab == prev:
            spans[-1] = (spans[-1][0], t + 1)
        else:
            spans.append((t, t + 1))
        prev = lab
    return DecodeResult(
        hyp=hyp,
        ops=_assemble_ops(g.ref, info[2]),
        token_spans=tuple(spans),
        total_score=total,
        frame_labels=tuple(labeling),
    )


def extract_timestamps(result: DecodeResult, frame_shift_ms: float) -> list[tuple[int, float, float]]:
    """Convert token frame spans to ``(unit, begin_ms, end_ms)`` triples."""
    return [
        (unit, begin * frame_shift_ms, end * frame_shift_ms)
        for unit, (begin, end) in zip(result.hyp, result.token_spans)
    ]


def dump_composition(g: AlignmentGraph, out: IO[str]) -> None:
    """Write the explicit CTC-composed product automaton for debugging.

    One arc per line: ``src_node src_last dst_node dst_last label cost``.
    Nodes are chain states 0..N then filler-entered-from-i states N+1+i;
    ``last`` is a unit id or -1 for blank. Acoustic costs are not included,
    only structural arc costs.
    """
    n = g.num_tokens
    lasts = [BLANK_LAST] + list(range(1, g.num_units))

    def emit(src, slast, dst, dlast, label, cost):
        out.write(f"{src} {slast} {dst} {dlast} {label} {cost:.6g}\n")

    for node in range(2 * n + 2):
        pos = _node_pos(node, n)
        for last in lasts:
            emit(node, last, node, BLANK_LAST, "<blk>", 0.0)
            if last != BLANK_LAST:
                emit(node, last, node, last, last, 0.0)
            if node <= n:
                if pos < n:
                    emit(node, last, node + 1, last, "<del>", g.p1)
                    u = g.ref[pos]
                    if last != u:
                        emit(node, last, node + 1, u, u, 0.0)
                emit(node, last, n + 1 + pos, last, "<is>", 0.0)
            else:
                emit(node, last, pos, last, "</is>", 0.0)
                for u in range(1, g.num_units):
                    if u != last:
                        emit(node, last, node, u, u, g.p2)
