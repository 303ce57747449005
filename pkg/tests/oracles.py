"""Independent reference implementations used to freeze expected values.

These deliberately use different algorithm shapes than the package: the
edit-distance oracle is the memoized three-branch recursion, and the
AUROC oracle enumerates every cross-class pair.
"""

from __future__ import annotations

import random


def lev_brute(a: str, b: str) -> int:
    """Memoized recursive definition: lev(i, j) = min of the three branches."""
    memo: dict[tuple[int, int], int] = {}

    def rec(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        key = (i, j)
        hit = memo.get(key)
        if hit is not None:
            return hit
        d = min(
            rec(i - 1, j) + 1,
            rec(i, j - 1) + 1,
            rec(i - 1, j - 1) + (a[i - 1] != b[j - 1]),
        )
        memo[key] = d
        return d

    return rec(len(a), len(b))


def auroc_brute(scores: list[float], labels: list[int]) -> float:
    """All-pairs Mann-Whitney statistic: wins plus half the ties."""
    ai = [s for s, y in zip(scores, labels) if y == 1]
    human = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for sa in ai:
        for sh in human:
            if sa > sh:
                wins += 1.0
            elif sa == sh:
                wins += 0.5
    return wins / (len(ai) * len(human))


def random_text(rng: random.Random, n_words: int, distinct: bool = False) -> str:
    """Space-joined pseudo-words; ``distinct`` makes every word unique."""
    words = []
    for i in range(n_words):
        stem = "".join(rng.choice("abcdefghijklmnop") for _ in range(rng.randint(3, 8)))
        words.append(f"{stem}{i}" if distinct else stem)
    return " ".join(words)
