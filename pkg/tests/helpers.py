"""Shared fixtures: independent oracles and posterior synthesizers."""

from __future__ import annotations

import numpy as np

from labelcheck import PosteriorMatrix, UnitInventory

_ED_MEMO: dict = {}


def naive_edit_distance(a, b) -> int:
    """Textbook recursive Levenshtein definition.

    Memoized on suffix pairs (values identical to the plain exponential
    recursion); keeps the exhaustive acceptance sweep tractable.
    """
    a = tuple(a)
    b = tuple(b)
    key = (a, b)
    hit = _ED_MEMO.get(key)
    if hit is not None:
        return hit
    if not a:
        result = len(b)
    elif not b:
        result = len(a)
    else:
        result = min(
            naive_edit_distance(a[1:], b) + 1,
            naive_edit_distance(a, b[1:]) + 1,
            naive_edit_distance(a[1:], b[1:]) + (a[0] != b[0]),
        )
    _ED_MEMO[key] = result
    return result


def alignment_cost(ref, hyp, p1: float, p2: float) -> float:
    """Minimal deletion/insertion cost aligning ref to hyp.

    Weighted edit distance with del = p1, ins = p2 and substitution
    represented as one deletion plus one insertion (cost p1 + p2). This is
    the brute-force DP the alignment graph's structural costs must equal.
    """
    rows = len(ref) + 1
    cols = len(hyp) + 1
    dp = [[0.0] * cols for _ in range(rows)]
    for i in range(1, rows):
        dp[i][0] = dp[i - 1][0] + p1
    for j in range(1, cols):
        dp[0][j] = dp[0][j - 1] + p2
    for i in range(1, rows):
        for j in range(1, cols):
            best = min(dp[i - 1][j] + p1, dp[i][j - 1] + p2)
            if ref[i - 1] == hyp[j - 1]:
                best = min(best, dp[i - 1][j - 1])
            dp[i][j] = best
    return dp[rows - 1][cols - 1]


def small_inventory(num_units: int) -> UnitInventory:
    """Blank plus ``num_units - 1`` single-letter units."""
    return UnitInventory(tuple(["<blk>"] + [chr(ord("a") + i) for i in range(num_units - 1)]))


def random_posteriors(rng, num_frames: int, num_units: int) -> PosteriorMatrix:
    """Random row-normalized log-posteriors."""
    logits = rng.normal(size=(num_frames, num_units))
    probs = np.exp(logits)
    probs /= probs.sum(axis=1, keepdims=True)
    return PosteriorMatrix(np.log(probs).astype(np.float32))


def synth_peaked_posteriors(
    truth,
    num_units: int,
    frames_per_token: int = 3,
    blank_frames: int = 1,
    peak: float = 0.99,
) -> PosteriorMatrix:
    """Posteriors peaked on a known truth sequence.

    Each token gets ``frames_per_token`` frames with probability ``peak`` on
    the token, followed by ``blank_frames`` frames peaked on the blank. The
    remaining mass spreads uniformly over the other units.
    """
    rows = []
    rest = (1.0 - peak) / (num_units - 1)
    for unit in truth:
        for _ in range(frames_per_token):
            row = np.full(num_units, rest)
            row[unit] = peak
            rows.append(row)
        for _ in range(blank_frames):
            row = np.full(num_units, rest)
            row[0] = peak
            rows.append(row)
    if not rows:
        rows = [np.full(num_units, rest) for _ in range(2)]
        for row in rows:
            row[0] = peak
    return PosteriorMatrix(np.log(np.array(rows)).astype(np.float32))


def corrupt_reference(rng, truth, k: int, num_units: int) -> list[int]:
    """Apply ``k`` real random edits (sub/del/ins) to a unit-id sequence.

    Substitutions always pick a different unit, so a single edit always has
    edit distance 1 from the truth.
    """
    ref = list(truth)
    for _ in range(k):
        ops = ["sub", "ins"] + (["del"] if ref else [])
        op = ops[int(rng.integers(0, len(ops)))]
        if op == "sub" and ref:
            pos = int(rng.integers(0, len(ref)))
            old = ref[pos]
            choices = [u for u in range(1, num_units) if u != old]
            ref[pos] = choices[int(rng.integers(0, len(choices)))]
        elif op == "del" and ref:
            pos = int(rng.integers(0, len(ref)))
            del ref[pos]
        else:
            pos = int(rng.integers(0, len(ref) + 1))
            ref.insert(pos, int(rng.integers(1, num_units)))
    return ref
