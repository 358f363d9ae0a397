"""Confidence scoring and corpus partitioning.

A segment's confidence is ``1 - EditDistance(ref, hyp) / max(len(ref),
len(hyp))`` over validation tokens; segments are then partitioned into
strong labels (confidence in [0.95, 1.00]), weak labels ([0.60, 0.95)) and
everything else.
"""

from __future__ import annotations

import math
import random
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import InsufficientPool

if TYPE_CHECKING:  # pragma: no cover
    from .metadata import SegmentRecord

STRONG_MIN_CONFIDENCE = 0.95
WEAK_MIN_CONFIDENCE = 0.60

TRAINING_SUBSETS = ("S", "M", "L")


class PartitionLabel(Enum):
    STRONG_LABEL = "strong_label"
    WEAK_LABEL = "weak_label"
    OTHERS = "others"


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i]
        append = cur.append
        for j, y in enumerate(b, start=1):
            if x == y:
                append(prev[j - 1])  # diagonal is optimal on a match
            else:
                append(min(prev[j], cur[j - 1], prev[j - 1]) + 1)
        prev = cur
    return prev[len(b)]


def confidence(ref: Sequence, hyp: Sequence) -> float:
    """Label-quality confidence in [0, 1]; two empty sequences score 1.0."""
    longest = max(len(ref), len(hyp))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(ref, hyp) / longest


def classify(c: float) -> PartitionLabel:
    """Map a confidence value onto its partition label."""
    if not (isinstance(c, (int, float)) and not math.isnan(c) and 0.0 <= c <= 1.0):
        raise ValueError(f"confidence must be in [0, 1], got {c!r}")
    if c >= STRONG_MIN_CONFIDENCE:
        return PartitionLabel.STRONG_LABEL
    if c >= WEAK_MIN_CONFIDENCE:
        return PartitionLabel.WEAK_LABEL
    return PartitionLabel.OTHERS


def select_training_subset(
    segments: Iterable["SegmentRecord"],
    target_hours: float,
    which: str,
    seed: int,
) -> list[str]:
    """Sample segment ids for a training subset.

    ``S`` and ``M`` draw from segments with confidence exactly 1.0, shuffled
    deterministically by ``seed``, accumulating greedily until the total
    duration first reaches ``target_hours``. ``L`` ignores the target and
    returns every strong-label segment.
    """
    if which not in TRAINING_SUBSETS:
        raise ValueError(f"subset must be one of {TRAINING_SUBSETS}, got {which!r}")
    segments = list(segments)
    if which == "L":
        return [
            s.sid for s in segments
            if classify(s.confidence) is PartitionLabel.STRONG_LABEL
        ]

    pool = [s for s in segments if s.confidence == 1.0]
    target_seconds = target_hours * 3600.0
    if sum(s.duration for s in pool) < target_seconds:
        raise InsufficientPool(
            f"pool holds {sum(s.duration for s in pool) / 3600.0:.2f} h, "
            f"target is {target_hours:.2f} h"
        )
    rng = random.Random(seed)
    rng.shuffle(pool)
    selected = []
    accumulated = 0.0
    for seg in pool:
        if accumulated >= target_seconds:
            break
        selected.append(seg.sid)
        accumulated += seg.duration
    return selected
