"""Brute-force possible-worlds oracle and Monte Carlo estimation.

This module is the independent evidence path for every probability the
engine computes.  It deliberately shares no arithmetic with the engine:
worlds are enumerated explicitly, each world's probability is a plain
linear-domain product taken in subset-construction order, and event
probabilities are plain sums over the world table.  Keep it that way;
the tests rely on the two paths being independent.
"""

from __future__ import annotations

import math
import random
from typing import Callable, Sequence

from .core import Fact, Instance
from .errors import WorldCapExceeded

WORLD_FACT_CAP = 20


def enumerate_worlds(
    facts: Sequence[tuple[Fact, float]],
) -> dict[Instance, float]:
    """All 2**n subsets of the facts with their independent-draw probabilities."""
    if len(facts) > WORLD_FACT_CAP:
        raise WorldCapExceeded(
            f"oracle enumerates at most {WORLD_FACT_CAP} facts, got {len(facts)}",
            required=len(facts),
            cap=WORLD_FACT_CAP,
        )
    seen = set()
    for f, p in facts:
        if f in seen:
            raise ValueError(f"duplicate fact {f}")
        seen.add(f)
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"probability out of range for {f}: {p}")
    worlds: dict[Instance, float] = {}
    n = len(facts)
    for mask in range(2**n):
        prob = 1.0
        chosen = []
        for i in range(n):
            f, p = facts[i]
            if mask >> i & 1:
                prob = prob * p
                chosen.append(f)
            else:
                prob = prob * (1.0 - p)
        key = Instance(chosen)
        worlds[key] = worlds.get(key, 0.0) + prob
    return worlds


def exact_event_prob(
    worlds: dict[Instance, float], predicate: Callable[[Instance], bool]
) -> float:
    """Total probability of the worlds satisfying the predicate."""
    return sum(p for d, p in worlds.items() if predicate(d))


def monte_carlo(
    sampler: Callable[[random.Random], Instance],
    predicate: Callable[[Instance], bool],
    n: int,
    seed: int,
) -> tuple[float, float]:
    """Empirical event frequency with a 3-sigma binomial half-width.

    Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    rng = random.Random(seed)
    hits = 0
    for _ in range(n):
        if predicate(sampler(rng)):
            hits += 1
    estimate = hits / n
    ci = 3.0 * math.sqrt(estimate * (1.0 - estimate) / n)
    return estimate, ci
