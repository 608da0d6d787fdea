"""Additive-error evaluation of first-order queries on tuple-independent spaces.

The query probability is approximated by conditioning on the event that
only the first n facts of the canonical listing occur.  The truncation
index n is chosen so that (a) every fact beyond it has probability at
most 1/2 and (b) ``exp(alpha) <= 1 + eps`` and ``exp(-alpha) >= 1 - eps``
for ``alpha = (3/2) * (mass beyond n)``.  The exponential tail bound then
sandwiches the conditioned value within an additive ``eps`` of the true
probability.  Conditioned on the truncation event, the space is an
ordinary finite tuple-independent space, so the conditional probability
is computed by brute-force world enumeration (exponential in n by
construction; capped, with an environment override).

Guarantees are additive only; no relative-error mode exists, because
even deciding whether the query probability is zero is undecidable for
representable infinite spaces.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

from .core import Instance
from .errors import WorldCapExceeded
from .fo import Formula, constants, eval_boolean, free_variables, relations_of, substitute
from .independence import TIPdb
from .numerics import CompensatedAccumulator
from .universe import Element, Universe

DEFAULT_WORLD_CAP = 25
WORLD_CAP_ENV = "PDB_WORLD_CAP"
TRUNCATION_SEARCH_CAP = 1_000_000


def world_cap() -> int:
    raw = os.environ.get(WORLD_CAP_ENV)
    return int(raw) if raw else DEFAULT_WORLD_CAP


@dataclass(frozen=True)
class TruncationCertificate:
    """Witness that conditioning on the first n facts is eps-safe."""

    n: int
    alpha_n: float
    tail_sum: float
    epsilon: float

    def __post_init__(self):
        if abs(self.alpha_n - 1.5 * self.tail_sum) > 1e-12 * max(1.0, self.alpha_n):
            raise ValueError("alpha must equal 3/2 times the tail mass")
        if math.exp(self.alpha_n) > 1.0 + self.epsilon + 1e-12:
            raise ValueError("certificate violates exp(alpha) <= 1 + eps")
        if math.exp(-self.alpha_n) < 1.0 - self.epsilon - 1e-12:
            raise ValueError("certificate violates exp(-alpha) >= 1 - eps")


def _check_epsilon(epsilon: float) -> None:
    if math.isnan(epsilon) or not (0.0 < epsilon < 0.5):
        raise ValueError(f"epsilon must lie in (0, 1/2), got {epsilon!r}")


def choose_truncation(t: TIPdb, epsilon: float) -> TruncationCertificate:
    """Smallest truncation point satisfying both exponential conditions.

    Head facts are always included; the tail is listed fact by fact
    until its unseen mass is small enough and the next fact's
    probability has dropped to at most 1/2.
    """
    _check_epsilon(epsilon)
    allowed = min(math.log1p(epsilon), -math.log1p(-epsilon))
    h = t.head_count()
    if t.tail is None:
        return TruncationCertificate(n=h, alpha_n=0.0, tail_sum=0.0, epsilon=epsilon)
    total = t.tail.total_mass()
    seen = CompensatedAccumulator()
    n = h
    for _, _, p in t.tail.indexed_facts():
        unseen = max(total - seen.value, 0.0)
        if p <= 0.5 and 1.5 * unseen <= allowed:
            return TruncationCertificate(
                n=n, alpha_n=1.5 * unseen, tail_sum=unseen, epsilon=epsilon
            )
        seen.add(p)
        n += 1
        if n - h > TRUNCATION_SEARCH_CAP:
            raise ValueError(
                f"no certifiable truncation within {TRUNCATION_SEARCH_CAP} tail facts"
            )
    raise AssertionError("unreachable: tail iterator is infinite")


def conditional_query_prob(
    t: TIPdb, f: Formula, n: int, universe: Universe, cap: int | None = None
) -> float:
    """Exact query probability conditioned on seeing only the first n facts.

    Enumerates all 2**n subsets of the first n facts of the canonical
    listing; conditioned on the truncation event these form a finite
    tuple-independent space with the original fact probabilities.
    """
    free = free_variables(f)
    if free:
        raise ValueError(f"sentence expected, found free variables {free}")
    limit = world_cap() if cap is None else cap
    if n > limit:
        raise WorldCapExceeded(
            f"enumerating 2**{n} worlds exceeds the cap 2**{limit}; "
            f"set {WORLD_CAP_ENV} to raise it",
            required=n,
            cap=limit,
        )
    facts = t.facts_up_to(n)
    visible = relations_of(f)
    memo: dict[frozenset, bool] = {}
    acc = CompensatedAccumulator()

    def descend(i: int, chosen: list, weight: float) -> None:
        if i == len(facts):
            d = Instance(chosen)
            key = d.restrict_to_relations(visible)
            sat = memo.get(key)
            if sat is None:
                sat = eval_boolean(d, f, universe)
                memo[key] = sat
            if sat:
                acc.add(weight)
            return
        fact, p = facts[i]
        if p < 1.0:
            descend(i + 1, chosen, weight * (1.0 - p))
        if p > 0.0:
            chosen.append(fact)
            descend(i + 1, chosen, weight * p)
            chosen.pop()

    descend(0, [], 1.0)
    return min(max(acc.value, 0.0), 1.0)


def approx_boolean(
    t: TIPdb, f: Formula, epsilon: float, universe: Universe, cap: int | None = None
) -> tuple[float, TruncationCertificate]:
    """Additively eps-accurate probability of a Boolean query.

    Returns the conditioned probability at a certified truncation point;
    the certificate guarantees ``P(Q) - eps <= p <= P(Q) + eps``.
    """
    cert = choose_truncation(t, epsilon)
    p = conditional_query_prob(t, f, cert.n, universe, cap=cap)
    return p, cert


def approx_nonboolean(
    t: TIPdb,
    f: Formula,
    epsilon: float,
    universe: Universe,
    cap: int | None = None,
) -> dict[tuple[Element, ...], float]:
    """Per-tuple marginals of an open query, each additively eps-accurate.

    The formula is grounded over every tuple of elements from the
    truncated facts and the formula's own constants.  Any tuple outside
    that candidate set can only be an answer in a world beyond the
    truncation, so its marginal is at most eps and it is not reported.
    """
    _check_epsilon(epsilon)
    free = free_variables(f)
    if not free:
        raise ValueError("open formula expected; use approx_boolean for sentences")
    cert = choose_truncation(t, epsilon)
    elements: set[Element] = set(constants(f))
    for fact, _ in t.facts_up_to(cert.n):
        elements.update(fact.args)
    candidates = sorted(elements, key=lambda e: (isinstance(e, str), e))
    out: dict[tuple[Element, ...], float] = {}
    for combo in itertools.product(candidates, repeat=len(free)):
        grounded = substitute(f, dict(zip(free, combo)))
        out[combo] = conditional_query_prob(t, grounded, cert.n, universe, cap=cap)
    return out
