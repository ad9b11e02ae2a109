"""Permutations of {0, ..., k-1} in one-line image notation.

A permutation is a plain tuple ``p`` with ``p[i]`` the image of ``i``.
Everything here is a pure function on tuples, so results are hashable and
safe to share across threads.
"""

from __future__ import annotations

import itertools
import math

Perm = tuple[int, ...]

# 8! = 40320 permutations; Gram matrices beyond this are impractical.
MAX_GROUP_SIZE = 8


def identity(k: int) -> Perm:
    """The identity permutation on k points."""
    return tuple(range(k))


def validate(sigma: Perm) -> None:
    """Raise ValueError unless ``sigma`` is a bijection on {0,...,k-1}."""
    k = len(sigma)
    if sorted(sigma) != list(range(k)):
        raise ValueError(f"not a permutation of 0..{k - 1}: {sigma}")


def compose(sigma: Perm, tau: Perm) -> Perm:
    """Composition sigma after tau: result(i) = sigma(tau(i))."""
    if len(sigma) != len(tau):
        raise ValueError(
            f"cannot compose permutations of sizes {len(sigma)} and {len(tau)}"
        )
    return tuple(sigma[tau[i]] for i in range(len(tau)))


def inverse(sigma: Perm) -> Perm:
    """The inverse permutation."""
    inv = [0] * len(sigma)
    for i, j in enumerate(sigma):
        inv[j] = i
    return tuple(inv)


def cycles(sigma: Perm) -> list[list[int]]:
    """Disjoint cycles of sigma, each starting at its smallest element."""
    seen = [False] * len(sigma)
    out = []
    for start in range(len(sigma)):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        j = sigma[start]
        while j != start:
            cyc.append(j)
            seen[j] = True
            j = sigma[j]
        out.append(cyc)
    return out


def cycle_type(sigma: Perm) -> tuple[int, ...]:
    """Cycle lengths of sigma, sorted descending. Parts sum to len(sigma)."""
    return tuple(sorted((len(c) for c in cycles(sigma)), reverse=True))


def num_cycles(sigma: Perm) -> int:
    """Number of disjoint cycles, fixed points included."""
    return len(cycles(sigma))


def enumerate_group(k: int) -> list[Perm]:
    """All k! permutations in lexicographic order of their image tuples.

    The identity comes first; the order is deterministic, which downstream
    code relies on for stable matrix indexing.
    """
    if k < 1:
        raise ValueError("group size must be at least 1")
    if k > MAX_GROUP_SIZE:
        raise ValueError(
            f"refusing to enumerate S_{k}: {k}! exceeds the "
            f"{MAX_GROUP_SIZE}! = {math.factorial(MAX_GROUP_SIZE)} element guard"
        )
    return list(itertools.permutations(range(k)))


def longest_cycle_census(t: int) -> dict[int, int]:
    """Count permutations of S_t by the length L of their longest cycle.

    Returns a map L -> N(t, L) with sum over L equal to t!.
    """
    census: dict[int, int] = {}
    for sigma in enumerate_group(t):
        longest = max(cycle_type(sigma))
        census[longest] = census.get(longest, 0) + 1
    return census
