"""Error-tolerant force-alignment graph over a reference token sequence.

For a reference of N tokens the graph has chain states 0..N plus one global
filler state (numbered last). Arcs:

  * N token arcs ``i -> i+1`` labeled with the reference unit, cost 0: the
    oracle transcription path.
  * N deletion arcs ``i -> i+1`` tagged ``<del>``, cost ``p1``: any token
    may be skipped.
  * N+1 entry arcs ``i -> filler`` tagged ``<is>`` and N+1 exit arcs
    ``filler -> i`` tagged ``</is>``, cost 0. A filler visit returns to the
    chain state it entered from, so the filler inserts units at one position
    without skipping or repeating reference tokens.
  * One self-loop on the filler per non-blank unit, cost ``p2`` each:
    inserted or substituted units. A substitution is a deletion plus an
    insertion at that position.

Start state is chain state 0, final state is chain state N.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Optional, Union

from .errors import BlankInReference, ExplosionGuard, UnknownUnit
from .units import BLANK_ID, UnitInventory


class Tag(Enum):
    """Non-emitting structural arc labels."""

    DEL = "<del>"
    IS = "<is>"
    IS_END = "</is>"


@dataclass(frozen=True)
class AlignConfig:
    """Structural penalties in negative-log cost space.

    ``p1`` is the per-token deletion penalty, ``p2`` the per-unit filler
    (insertion/substitution) penalty.
    """

    p1: float = 2.3
    p2: float = 4.6

    def __post_init__(self):
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not (v >= 0 and v == v and v != float("inf")):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True)
class Arc:
    src: int
    dst: int
    label: Union[int, Tag]
    cost: float


@dataclass(frozen=True)
class AlignmentGraph:
    """Immutable alignment graph; see the module docstring for the shape."""

    ref: tuple[int, ...]
    num_units: int
    p1: float
    p2: float
    arcs: tuple[Arc, ...]

    @property
    def num_tokens(self) -> int:
        return len(self.ref)

    @property
    def num_chain_states(self) -> int:
        return len(self.ref) + 1

    @property
    def filler_state(self) -> int:
        return len(self.ref) + 1

    @property
    def num_states(self) -> int:
        return len(self.ref) + 2

    @property
    def start_state(self) -> int:
        return 0

    @property
    def final_state(self) -> int:
        return len(self.ref)

    def dump_text(self, out: IO[str], inv: Optional[UnitInventory] = None) -> None:
        """Write one ``src dst label cost`` line per arc (filler state last)."""
        for arc in self.arcs:
            if isinstance(arc.label, Tag):
                label = arc.label.value
            elif inv is not None:
                label = inv.symbol_of(arc.label)
            else:
                label = str(arc.label)
            out.write(f"{arc.src} {arc.dst} {label} {arc.cost:.6g}\n")


def build_alignment_graph(
    ref: Iterable[int],
    inv: UnitInventory,
    cfg: Optional[AlignConfig] = None,
) -> AlignmentGraph:
    """Build the alignment graph for a reference unit-id sequence."""
    cfg = cfg or AlignConfig()
    ref = tuple(ref)
    num_units = len(inv)
    for uid in ref:
        if uid == BLANK_ID:
            raise BlankInReference("reference may not contain the blank unit")
        if not 0 <= uid < num_units:
            raise UnknownUnit(uid)

    n = len(ref)
    filler = n + 1
    arcs = []
    for i, uid in enumerate(ref):
        arcs.append(Arc(i, i + 1, uid, 0.0))
    for i in range(n):
        arcs.append(Arc(i, i + 1, Tag.DEL, cfg.p1))
    for i in range(n + 1):
        arcs.append(Arc(i, filler, Tag.IS, 0.0))
    for i in range(n + 1):
        arcs.append(Arc(filler, i, Tag.IS_END, 0.0))
    for uid in inv.non_blank_ids():
        arcs.append(Arc(filler, filler, uid, cfg.p2))

    return AlignmentGraph(
        ref=ref, num_units=num_units, p1=cfg.p1, p2=cfg.p2, arcs=tuple(arcs)
    )


# Alignment events recorded while walking the graph. Encoded as int pairs so
# best-path ties compare deterministically.
EV_MATCH = 0
EV_DEL = 1
EV_INS = 2

DEFAULT_ENUMERATION_CAP = 100_000


def _enumerate_alignments(
    g: AlignmentGraph, max_emitted: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> dict:
    """Walk ``g.arcs`` and collect every label sequence reachable with at most
    ``max_emitted`` filler emissions.

    Returns ``{sequence: (cost, structural_arcs, events)}`` where the value is
    minimal by ``(cost, structural_arcs, events)``. Events are a tuple of
    ``(EV_MATCH, ref_pos) | (EV_DEL, ref_pos) | (EV_INS, unit)`` in path order.

    This walks the explicit arc list (not the closed-form graph geometry the
    decoder uses) so it can act as an independent oracle. A filler visit must
    emit at least one unit and exits to the state it entered from.
    """
    out_arcs: dict[int, list[Arc]] = {}
    for arc in g.arcs:
        out_arcs.setdefault(arc.src, []).append(arc)

    filler = g.filler_state
    final = g.final_state
    # Node: (state, origin) with origin = entry chain state while in the
    # filler, else -1. Config: (node, emitted_in_filler_visit, fills_used,
    # emitted sequence so far).
    start = (g.start_state, -1, False, 0, ())
    best: dict[tuple, tuple] = {start: (0.0, 0, ())}
    # Heap ordered by value triple keeps expansion deterministic.
    heap = [((0.0, 0, ()), start)]
    results: dict[tuple, tuple] = {}

    while heap:
        value, config = heapq.heappop(heap)
        if best.get(config) != value:
            continue
        cost, n_struct, events = value
        state, origin, visited_emitted, fills, emitted = config
        if state == final and origin == -1:
            prev = results.get(emitted)
            if prev is None or value < prev:
                if prev is None and len(results) >= cap:
                    raise ExplosionGuard(
                        f"more than {cap} distinct label sequences"
                    )
                results[emitted] = value
        for arc in out_arcs.get(state if origin == -1 else filler, ()):
            if isinstance(arc.label, Tag):
                if arc.label is Tag.DEL:
                    nxt = (arc.dst, -1, False, fills, emitted)
                    nval = (cost + arc.cost, n_struct + 1, events + ((EV_DEL, arc.src),))
                elif arc.label is Tag.IS:
                    if origin != -1:
                        continue
                    nxt = (filler, state, False, fills, emitted)
                    nval = (cost + arc.cost, n_struct + 1, events)
                else:  # Tag.IS_END
                    # Exit only to the entry state, and only after emitting;
                    # an empty visit is a no-op and would cycle forever.
                    if origin == -1 or arc.dst != origin or not visited_emitted:
                        continue
                    nxt = (origin, -1, False, fills, emitted)
                    nval = (cost + arc.cost, n_struct + 1, events)
            elif arc.src == filler:
                if origin == -1 or fills >= max_emitted:
                    continue
                nxt = (filler, origin, True, fills + 1, emitted + (arc.label,))
                nval = (
                    cost + arc.cost,
                    n_struct + 1,
                    events + ((EV_INS, arc.label),),
                )
            else:  # token arc
                if origin != -1:
                    continue
                nxt = (arc.dst, -1, False, fills, emitted + (arc.label,))
                nval = (cost + arc.cost, n_struct, events + ((EV_MATCH, arc.src),))
            if len(best) > cap * 20:
                raise ExplosionGuard(f"more than {cap * 20} path configurations")
            old = best.get(nxt)
            if old is None or nval < old:
                best[nxt] = nval
                heapq.heappush(heap, (nval, nxt))

    return results


def enumerate_label_paths(
    g: AlignmentGraph, max_emitted: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> list[tuple[tuple[int, ...], float]]:
    """Every distinct start-to-final label sequence of ``g`` with at most
    ``max_emitted`` filler emissions, each with its minimal structural cost.

    Sorted shortlex by sequence. Raises :class:`ExplosionGuard` when the
    number of sequences (or explored configurations) exceeds ``cap``.
    """
    results = _enumerate_alignments(g, max_emitted, cap=cap)
    return sorted(
        ((seq, value[0]) for seq, value in results.items()),
        key=lambda item: (len(item[0]), item[0]),
    )
