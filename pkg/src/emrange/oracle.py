"""Brute-force reference answers for every query type.

These run on plain in-memory data and define the intended semantics; they
never touch the block store.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Sequence, Set, Tuple


def brute_threesided(points: Iterable[Tuple], x1: int, x2: int, y: int) -> Set[Tuple]:
    """Points with x1 <= x <= x2 and y' <= y (payload fields ride along)."""
    return {p for p in points if x1 <= p[0] <= x2 and p[1] <= y}


def brute_threesided_sorted(points: Sequence[Tuple], x1: int, x2: int, y: int) -> Set[Tuple]:
    """Independent re-implementation: sort by x, slice, then filter on y."""
    ordered = sorted(points, key=lambda p: p[0])
    import bisect

    lo = bisect.bisect_left([p[0] for p in ordered], x1)
    hi = bisect.bisect_right([p[0] for p in ordered], x2)
    return {p for p in ordered[lo:hi] if p[1] <= y}


def brute_colored(sets: Sequence[Sequence[int]], a: int, b: int) -> Set[int]:
    """Union of the color sets with index in [a, b] (1-based)."""
    out: Set[int] = set()
    if a > b:
        return out
    for i in range(max(a, 1), min(b, len(sets)) + 1):
        out.update(sets[i - 1])
    return out


def brute_prefix(corpus: Dict[bytes, Sequence[int]], p: bytes) -> Set[int]:
    """Union of colors over all strings with prefix p."""
    out: Set[int] = set()
    for s, colors in corpus.items():
        if s.startswith(p):
            out.update(colors)
    return out


def brute_topk(corpus: Dict[bytes, Sequence[int]], p: bytes, k: int) -> List[int]:
    """The k largest matching colors, ascending (all of them if fewer)."""
    matched = sorted(brute_prefix(corpus, p))
    return matched[-k:] if k < len(matched) else matched
