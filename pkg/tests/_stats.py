"""Shared statistical helpers for the test suite."""

from __future__ import annotations

import numpy as np

# Per-cell z-tests need enough expected mass for the normal approximation,
# and testing thousands of cells at 4 sigma would make false alarms likely;
# low-expectation cells are pooled and only the heaviest cells are tested.
MIN_EXPECTED_COUNT = 25
MAX_TESTED_CELLS = 40


def max_frequency_z(
    counts: dict, probs: dict, total: int
) -> float:
    """Largest |z| between empirical frequencies and exact probabilities.

    The highest-probability cells (at most MAX_TESTED_CELLS with expected
    count >= MIN_EXPECTED_COUNT) are tested individually; everything else
    is pooled into one remainder cell so its mass is still covered.
    """
    ranked = sorted(probs, key=probs.get, reverse=True)
    tested = [
        key
        for key in ranked[:MAX_TESTED_CELLS]
        if probs[key] * total >= MIN_EXPECTED_COUNT
    ]
    rest_prob = 1.0 - sum(probs[key] for key in tested)
    rest_count = total - sum(counts.get(key, 0) for key in tested)

    worst = 0.0
    for key in tested:
        p = probs[key]
        z = (counts.get(key, 0) - total * p) / np.sqrt(total * p * (1.0 - p))
        worst = max(worst, abs(z))
    if MIN_EXPECTED_COUNT <= rest_prob * total <= total - MIN_EXPECTED_COUNT:
        z = (rest_count - total * rest_prob) / np.sqrt(
            total * rest_prob * (1.0 - rest_prob)
        )
        worst = max(worst, abs(z))
    return worst
