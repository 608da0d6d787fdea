"""Tuple-independent and block-independent-disjoint probability spaces.

A fact-probability assignment is a finite *head* of explicit
(fact, probability) pairs plus an optional infinite *tail* generated by
a rule over the canonical fact enumeration.  A tuple-independent space
exists for such an assignment exactly when the probability sum is
finite, so construction certifies the tail's mass in closed form and
refuses anything it cannot certify.  The resulting measure assigns each
finite instance the product of its facts' probabilities times the
product of ``1 - p`` over all absent positive-probability facts; the
infinite part of that product is never evaluated, only enclosed.

Block-disjoint spaces partition facts into blocks: facts in one block
are mutually exclusive, facts across blocks independent.  Blocks are
derived structurally (key-attribute projection, explicit listing, or
singletons); each block keeps the remainder mass it places on "no fact
from this block".  Tail facts always form singleton blocks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Iterator, Sequence

from .core import Fact, Instance
from .errors import (
    BlockMassExceedsOne,
    DivergentAssignment,
    DuplicateFact,
    ValidationError,
)
from .numerics import (
    CompensatedAccumulator,
    LogProbability,
    ProbabilityInterval,
    log_product_one_minus,
)
from .universe import Element, FactEnumeration

ENCLOSURE_MASS_TARGET = 1e-12
ENCLOSURE_FACT_CAP = 200_000


# --- tail supplies -----------------------------------------------------


@dataclass(frozen=True)
class EnumerationSupply:
    """Facts in canonical enumeration order, optionally one relation only.

    The intrinsic index of a fact is its position in the (relation-)
    enumeration; indices at or below ``offset`` are not supplied.
    """

    enumeration: FactEnumeration
    relation: str | None = None
    offset: int = 0

    def __post_init__(self):
        if self.offset < 0:
            raise ValueError(f"offset must be >= 0, got {self.offset}")
        if self.relation is not None and self.relation not in self.enumeration.schema:
            raise ValueError(f"relation {self.relation!r} not in schema")

    @property
    def first_index(self) -> int:
        return self.offset + 1

    @property
    def multiplicity(self) -> int:
        return 1

    def facts_at(self, i: int) -> tuple[Fact, ...]:
        if self.relation is None:
            return (self.enumeration.fact_at(i),)
        return (self.enumeration.relation_fact_at(self.relation, i),)

    def intrinsic_index(self, f: Fact) -> int | None:
        try:
            if self.relation is None:
                i = self.enumeration.fact_index(f)
            else:
                if f.relation != self.relation:
                    return None
                i = self.enumeration.relation_fact_index(f)
        except (ValueError, KeyError):
            return None
        return i if i > self.offset else None

    def relations(self) -> frozenset[str]:
        if self.relation is not None:
            return frozenset({self.relation})
        return frozenset(self.enumeration.schema.names)


@dataclass(frozen=True)
class ProductSupply:
    """Facts ``R(..., e_i, ...)`` with one index attribute running over all
    of the universe's natural positions and finite value lists elsewhere.

    Group ``i`` holds one fact per combination of the fixed values, with
    the index attribute carrying the element for ``i``: the integer
    itself over naturals, the decimal numeral over a strings universe.
    """

    enumeration: FactEnumeration
    relation: str
    index_position: int  # 1-based
    fixed: tuple[tuple[int, tuple[Element, ...]], ...]  # (position, values)

    def __post_init__(self):
        schema = self.enumeration.schema
        universe = self.enumeration.universe
        arity = schema.arity_of(self.relation)
        positions = sorted(pos for pos, _ in self.fixed)
        expected = [p for p in range(1, arity + 1) if p != self.index_position]
        if not 1 <= self.index_position <= arity:
            raise ValueError(f"index position {self.index_position} outside arity {arity}")
        if positions != expected:
            raise ValueError(
                f"fixed positions {positions} must cover exactly the non-index positions {expected}"
            )
        for pos, values in self.fixed:
            if not values:
                raise ValueError(f"fixed position {pos} has no values")
            if len(set(values)) != len(values):
                raise ValueError(f"fixed position {pos} has duplicate values")
            for v in values:
                if not universe.contains(v):
                    raise ValueError(f"fixed value {v!r} not in the universe")
        if universe.kind == "strings":
            digits = set("0123456789")
            if not digits <= set(universe.alphabet):
                raise ValueError("decimal index attribute needs digits 0-9 in the alphabet")

    @property
    def first_index(self) -> int:
        return 1

    @property
    def multiplicity(self) -> int:
        m = 1
        for _, values in self.fixed:
            m *= len(values)
        return m

    def _index_element(self, i: int) -> Element:
        if self.enumeration.universe.kind == "naturals":
            return i
        return str(i)

    def _element_to_index(self, e: Element) -> int | None:
        if self.enumeration.universe.kind == "naturals":
            return e if isinstance(e, int) and not isinstance(e, bool) and e >= 1 else None
        if not isinstance(e, str) or not e.isdigit() or e[0] == "0":
            return None
        return int(e)

    def facts_at(self, i: int) -> tuple[Fact, ...]:
        arity = self.enumeration.schema.arity_of(self.relation)
        by_pos = dict(self.fixed)
        value_lists = [by_pos[p] for p in range(1, arity + 1) if p != self.index_position]
        idx_elem = self._index_element(i)
        out = []
        for combo in itertools.product(*value_lists):
            args: list[Element] = []
            it = iter(combo)
            for p in range(1, arity + 1):
                args.append(idx_elem if p == self.index_position else next(it))
            out.append(Fact(self.relation, tuple(args)))
        return tuple(out)

    def intrinsic_index(self, f: Fact) -> int | None:
        if f.relation != self.relation:
            return None
        arity = self.enumeration.schema.arity_of(self.relation)
        if len(f.args) != arity:
            return None
        by_pos = dict(self.fixed)
        i = self._element_to_index(f.args[self.index_position - 1])
        if i is None:
            return None
        for p in range(1, arity + 1):
            if p != self.index_position and f.args[p - 1] not in by_pos[p]:
                return None
        return i

    def relations(self) -> frozenset[str]:
        return frozenset({self.relation})


TailSupply = EnumerationSupply | ProductSupply


# --- tail assignments --------------------------------------------------


@dataclass(frozen=True)
class GeometricTail:
    """Tail rule ``p = c * q**i`` at intrinsic index ``i``, with exclusions.

    Excluded facts are removed from the supply and their rule mass is
    subtracted, so the total mass stays in closed form:
    ``m * c * q**first / (1 - q) - sum of excluded facts' rule values``.
    """

    supply: TailSupply
    c: float
    q: float
    exclude: frozenset[Fact] = frozenset()

    def __post_init__(self):
        if not self.c > 0.0:
            raise ValueError(f"geometric coefficient must be positive, got {self.c}")
        if not 0.0 < self.q < 1.0:
            raise DivergentAssignment(
                f"geometric ratio must lie in (0, 1) for a convergent tail, got {self.q}"
            )
        if self.c * self.q**self.supply.first_index > 1.0 + 1e-12:
            raise ValueError(
                f"rule value exceeds 1 at the first supplied index: "
                f"{self.c} * {self.q}**{self.supply.first_index}"
            )

    def rule_value(self, i: int) -> float:
        return self.c * self.q**i

    def generates(self, f: Fact) -> bool:
        if f in self.exclude:
            return False
        return self.supply.intrinsic_index(f) is not None

    def probability_of(self, f: Fact) -> float:
        if f in self.exclude:
            return 0.0
        i = self.supply.intrinsic_index(f)
        return 0.0 if i is None else self.rule_value(i)

    def total_mass(self) -> float:
        first = self.supply.first_index
        gross = self.supply.multiplicity * self.c * self.q**first / (1.0 - self.q)
        removed = math.fsum(
            self.rule_value(i)
            for f in self.exclude
            if (i := self.supply.intrinsic_index(f)) is not None
        )
        return gross - removed

    def indexed_facts(self) -> Iterator[tuple[int, Fact, float]]:
        """(intrinsic index, fact, probability) in canonical tail order."""
        i = self.supply.first_index
        while True:
            p = self.rule_value(i)
            for f in self.supply.facts_at(i):
                if f not in self.exclude:
                    yield i, f, p
            i += 1

    def facts_probs(self) -> Iterator[tuple[Fact, float]]:
        for _, f, p in self.indexed_facts():
            yield f, p

    def truncation_count(self, delta: float) -> int:
        """Smallest n with the mass beyond the n-th tail fact at most delta."""
        total = self.total_mass()
        if total <= delta:
            return 0
        acc = CompensatedAccumulator()
        n = 0
        for _, _, p in self.indexed_facts():
            acc.add(p)
            n += 1
            if total - acc.value <= delta:
                return n
            if n > ENCLOSURE_FACT_CAP:
                raise ValidationError(
                    f"tail truncation did not certify within {ENCLOSURE_FACT_CAP} facts"
                )
        raise AssertionError("unreachable: infinite iterator")


@dataclass(frozen=True)
class ConstantTail:
    """Every supplied fact gets the same probability; divergent unless zero."""

    supply: TailSupply
    value: float
    exclude: frozenset[Fact] = frozenset()

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"constant tail value must be a probability, got {self.value}")

    def generates(self, f: Fact) -> bool:
        if self.value == 0.0 or f in self.exclude:
            return False
        return self.supply.intrinsic_index(f) is not None


Tail = GeometricTail | ConstantTail


@dataclass(frozen=True)
class FactProbabilityAssignment:
    """Explicit head of (fact, probability) pairs plus an optional tail."""

    head: tuple[tuple[Fact, float], ...]
    tail: Tail | None = None

    def __post_init__(self):
        object.__setattr__(self, "head", tuple((f, float(p)) for f, p in self.head))
        seen: set[Fact] = set()
        for f, p in self.head:
            if math.isnan(p) or not (0.0 <= p <= 1.0):
                raise ValidationError(f"probability out of range for {f}: {p!r}")
            if f in seen:
                raise DuplicateFact(f"fact {f} assigned twice")
            seen.add(f)
        if self.tail is not None:
            for f, _ in self.head:
                if self.tail.generates(f):
                    raise DuplicateFact(
                        f"fact {f} appears in the head and is generated by the tail"
                    )

    @property
    def head_mass(self) -> float:
        return math.fsum(p for _, p in self.head)


# --- tuple-independent spaces ------------------------------------------


class TIPdb:
    """A tuple-independent measure over finite instances.

    Construct via :func:`ti_construct`; the constructor assumes a
    certified-convergent assignment with zero-probability facts dropped.
    """

    def __init__(self, assignment: FactProbabilityAssignment, total_mass: float):
        self.assignment = assignment
        self.head: tuple[tuple[Fact, float], ...] = assignment.head
        self.tail: GeometricTail | None = assignment.tail  # type: ignore[assignment]
        self.total_mass = total_mass
        self._head_probs = {f: p for f, p in self.head}
        self._tail_plans: dict[float, tuple[tuple[Fact, float], ...]] = {}

    def tail_sampling_plan(self, delta: float) -> tuple[tuple[Fact, float], ...]:
        """Truncated tail fact list for sampling, cached per tolerance."""
        if self.tail is None:
            return ()
        plan = self._tail_plans.get(delta)
        if plan is None:
            n = self.tail.truncation_count(delta)
            plan = tuple(itertools.islice(self.tail.facts_probs(), n))
            self._tail_plans[delta] = plan
        return plan

    @property
    def expected_size(self) -> float:
        return self.total_mass

    def probability_of(self, f: Fact) -> float:
        p = self._head_probs.get(f)
        if p is not None:
            return p
        if self.tail is not None:
            return self.tail.probability_of(f)
        return 0.0

    def head_count(self) -> int:
        return len(self.head)

    def facts_up_to(self, n: int) -> list[tuple[Fact, float]]:
        """The first n facts in canonical order (head first, then tail)."""
        out = list(self.head[:n])
        remaining = n - len(out)
        if remaining > 0:
            if self.tail is None:
                raise ValueError(f"only {len(self.head)} facts exist, asked for {n}")
            for f, p in self.tail.facts_probs():
                out.append((f, p))
                remaining -= 1
                if remaining == 0:
                    break
        return out

    def mass_beyond(self, n: int) -> float:
        """Probability mass of facts after the n-th in canonical order."""
        head_rest = math.fsum(p for _, p in self.head[n:]) if n < len(self.head) else 0.0
        if self.tail is None:
            return head_rest
        if n <= len(self.head):
            return head_rest + self.tail.total_mass()
        k = n - len(self.head)
        acc = CompensatedAccumulator()
        for idx, (_, p) in enumerate(self.tail.facts_probs()):
            if idx >= k:
                break
            acc.add(p)
        return self.tail.total_mass() - acc.value


def ti_construct(assignment: FactProbabilityAssignment) -> TIPdb:
    """Build a tuple-independent space, certifying that the mass is finite."""
    tail = assignment.tail
    if isinstance(tail, ConstantTail):
        if tail.value > 0.0:
            raise DivergentAssignment(
                f"constant positive probability {tail.value} over infinitely many facts diverges"
            )
        tail = None
    head = tuple((f, p) for f, p in assignment.head if p > 0.0)
    trimmed = FactProbabilityAssignment(head, tail)
    total = trimmed.head_mass + (tail.total_mass() if tail is not None else 0.0)
    return TIPdb(trimmed, total)


def _tail_one_minus_enclosure(
    tail: GeometricTail | None,
    skip: frozenset[Fact] = frozenset(),
    mass_target: float = ENCLOSURE_MASS_TARGET,
) -> ProbabilityInterval:
    """Enclose ``prod (1 - p)`` over all tail facts not in ``skip``.

    Facts are expanded explicitly until the unseen mass drops below the
    target and the next probability is at most 1/2 (so the exponential
    lower bound applies to the unseen remainder); skipped facts must all
    be passed before stopping so they never land in the remainder.
    """
    if tail is None:
        return ProbabilityInterval.point(1.0)
    total = tail.total_mass()
    skip_horizon = 0
    for f in skip:
        i = tail.supply.intrinsic_index(f)
        if i is not None and f not in tail.exclude and i > skip_horizon:
            skip_horizon = i
    log_factors = CompensatedAccumulator()
    seen_mass = CompensatedAccumulator()
    count = 0
    capped = False
    for i, f, p in tail.indexed_facts():
        unseen = total - seen_mass.value
        if i > skip_horizon and unseen <= mass_target and p <= 0.5:
            break
        if count >= ENCLOSURE_FACT_CAP:
            capped = True
            break
        seen_mass.add(p)
        if f not in skip:
            if p >= 1.0:
                return ProbabilityInterval.point(0.0)
            log_factors.add(math.log1p(-p))
        count += 1
    hi = LogProbability(min(log_factors.value, 0.0)).probability
    unseen = max(total - seen_mass.value, 0.0)
    if capped:
        return ProbabilityInterval(0.0, hi)
    lo = hi * math.exp(-1.5 * unseen)
    return ProbabilityInterval(min(lo, hi), hi)


def ti_instance_prob(t: TIPdb, d: Instance) -> ProbabilityInterval:
    """Probability of drawing exactly the instance ``d``.

    Exact (a point interval) when the tail is absent; with a tail the
    infinite absent-fact product is enclosed.
    """
    log_present = 0.0
    for f in d:
        p = t.probability_of(f)
        if p <= 0.0:
            return ProbabilityInterval.point(0.0)
        log_present += math.log(p) if p < 1.0 else 0.0
    absent_head = [p for f, p in t.head if f not in d]
    log_absent = log_product_one_minus(absent_head)
    if log_absent.value == -math.inf:
        return ProbabilityInterval.point(0.0)
    point = math.exp(log_present + log_absent.value)
    if t.tail is None:
        return ProbabilityInterval.point(min(point, 1.0))
    skip = frozenset(f for f in d if t.tail.generates(f))
    return _tail_one_minus_enclosure(t.tail, skip).scale(min(point, 1.0))


def ti_event_probs(t: TIPdb, fs: Sequence[Fact]) -> tuple[float, float]:
    """(probability all facts occur, probability at least one occurs)."""
    facts = list(fs)
    if len(set(facts)) != len(facts):
        raise DuplicateFact("event facts must be distinct")
    ps = [t.probability_of(f) for f in facts]
    if any(p == 0.0 for p in ps):
        conj = 0.0
    else:
        conj = math.exp(math.fsum(math.log(p) for p in ps))
    union = 1.0 - log_product_one_minus(ps).probability
    return conj, union


def _check_delta(delta: float) -> None:
    if math.isnan(delta) or not (0.0 < delta < 1.0):
        raise ValueError(f"total-variation tolerance must lie in (0, 1), got {delta!r}")


def ti_sample(t: TIPdb, rng, delta: float) -> Instance:
    """Draw an instance; within total-variation ``delta`` of the true law.

    Head facts are exact independent coin flips; the tail is truncated at
    the first point where the unseen mass is at most ``delta`` (a fact
    beyond the truncation occurs with probability at most that mass).
    """
    _check_delta(delta)
    chosen = [f for f, p in t.head if rng.random() < p]
    for f, p in t.tail_sampling_plan(delta):
        if rng.random() < p:
            chosen.append(f)
    return Instance(chosen)


# --- block-independent-disjoint spaces ----------------------------------


@dataclass(frozen=True)
class BlockPartition:
    """Structural partition of facts into blocks.

    Facts matching an explicit listing share the listed block; facts of
    a relation with a declared key share a block per key value (the
    first ``j`` attributes); every other fact is its own singleton
    block.
    """

    key_attributes: tuple[tuple[str, int], ...] = ()
    explicit: tuple[tuple[Fact, str], ...] = ()

    def __post_init__(self):
        names = [r for r, _ in self.key_attributes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate relation in key declarations")
        for r, j in self.key_attributes:
            if j < 0:
                raise ValueError(f"key width must be >= 0 for {r!r}, got {j}")
        listed = [f for f, _ in self.explicit]
        if len(set(listed)) != len(listed):
            raise ValueError("a fact is listed in two explicit blocks")

    @classmethod
    def singletons(cls) -> "BlockPartition":
        return cls()

    @classmethod
    def by_keys(cls, **widths: int) -> "BlockPartition":
        return cls(key_attributes=tuple(widths.items()))

    @classmethod
    def explicit_blocks(cls, assignments: dict[Fact, str]) -> "BlockPartition":
        return cls(explicit=tuple(assignments.items()))

    def key(self, f: Fact) -> Hashable:
        for listed, label in self.explicit:
            if listed == f:
                return ("explicit", label)
        for r, j in self.key_attributes:
            if f.relation == r:
                return ("key", r, f.args[:j])
        return ("fact", f)


def is_good(partition: BlockPartition, d: Instance) -> bool:
    """True iff the instance has at most one fact per block."""
    seen: set[Hashable] = set()
    for f in d:
        k = partition.key(f)
        if k in seen:
            return False
        seen.add(k)
    return True


class BIDPdb:
    """A block-independent-disjoint measure over finite instances."""

    def __init__(
        self,
        partition: BlockPartition,
        blocks: dict[Hashable, tuple[tuple[Fact, float], ...]],
        tail: GeometricTail | None,
        total_mass: float,
    ):
        self.partition = partition
        self.blocks = blocks
        self.tail = tail
        self.total_mass = total_mass
        self.remainders: dict[Hashable, float] = {
            k: max(0.0, 1.0 - math.fsum(p for _, p in facts))
            for k, facts in blocks.items()
        }
        self._head_probs = {f: p for facts in blocks.values() for f, p in facts}
        self._tail_plans: dict[float, tuple[tuple[Fact, float], ...]] = {}

    def tail_sampling_plan(self, delta: float) -> tuple[tuple[Fact, float], ...]:
        if self.tail is None:
            return ()
        plan = self._tail_plans.get(delta)
        if plan is None:
            n = self.tail.truncation_count(delta)
            plan = tuple(itertools.islice(self.tail.facts_probs(), n))
            self._tail_plans[delta] = plan
        return plan

    @property
    def expected_size(self) -> float:
        return self.total_mass

    def probability_of(self, f: Fact) -> float:
        p = self._head_probs.get(f)
        if p is not None:
            return p
        if self.tail is not None:
            return self.tail.probability_of(f)
        return 0.0

    def head_facts(self) -> list[tuple[Fact, float]]:
        return [(f, p) for facts in self.blocks.values() for f, p in facts]


def bid_construct(
    partition: BlockPartition, assignment: FactProbabilityAssignment
) -> BIDPdb:
    """Build a block-disjoint space; every block mass must stay at most one.

    Tail facts always form singleton blocks, so the declared partition
    must not claim any tail relation or tail-generated fact.
    """
    tail = assignment.tail
    if isinstance(tail, ConstantTail):
        if tail.value > 0.0:
            raise DivergentAssignment(
                f"constant positive probability {tail.value} over infinitely many facts diverges"
            )
        tail = None
    if tail is not None:
        tail_relations = tail.supply.relations()
        for r, _ in partition.key_attributes:
            if r in tail_relations:
                raise ValidationError(
                    f"key-attribute blocks over tail relation {r!r} would have infinite "
                    "support; only singleton tail blocks are supported"
                )
        for f, _ in partition.explicit:
            if tail.generates(f):
                raise ValidationError(
                    f"explicitly listed fact {f} is generated by the tail; only "
                    "singleton tail blocks are supported"
                )
    blocks: dict[Hashable, list[tuple[Fact, float]]] = {}
    for f, p in assignment.head:
        if p <= 0.0:
            continue
        blocks.setdefault(partition.key(f), []).append((f, p))
    for key, facts in blocks.items():
        mass = math.fsum(p for _, p in facts)
        if mass > 1.0 + 1e-12:
            raise BlockMassExceedsOne(
                f"block {key!r} has mass {mass}, exceeding 1"
            )
    head_mass = math.fsum(p for facts in blocks.values() for _, p in facts)
    total = head_mass + (tail.total_mass() if tail is not None else 0.0)
    frozen = {k: tuple(v) for k, v in blocks.items()}
    return BIDPdb(partition, frozen, tail, total)


def bid_instance_prob(b: BIDPdb, d: Instance) -> ProbabilityInterval:
    """Probability of the instance: zero if two facts share a block, else
    the product of the touched facts' probabilities and the untouched
    blocks' remainder masses."""
    if not is_good(b.partition, d):
        return ProbabilityInterval.point(0.0)
    log_point = 0.0
    touched: set[Hashable] = set()
    tail_skip: list[Fact] = []
    for f in d:
        p = b.probability_of(f)
        if p <= 0.0:
            return ProbabilityInterval.point(0.0)
        log_point += math.log(p) if p < 1.0 else 0.0
        if f in b._head_probs:
            touched.add(b.partition.key(f))
        else:
            tail_skip.append(f)
    for key, remainder in b.remainders.items():
        if key in touched:
            continue
        if remainder <= 0.0:
            return ProbabilityInterval.point(0.0)
        log_point += math.log(remainder) if remainder < 1.0 else 0.0
    point = min(math.exp(log_point), 1.0)
    if b.tail is None:
        return ProbabilityInterval.point(point)
    return _tail_one_minus_enclosure(b.tail, frozenset(tail_skip)).scale(point)


def bid_sample(b: BIDPdb, rng, delta: float) -> Instance:
    """Draw an instance: one categorical outcome per block, tail truncated.

    Every sampled instance is good by construction.
    """
    _check_delta(delta)
    chosen: list[Fact] = []
    for facts in b.blocks.values():
        x = rng.random()
        acc = 0.0
        for f, p in facts:
            acc += p
            if x < acc:
                chosen.append(f)
                break
    for f, p in b.tail_sampling_plan(delta):
        if rng.random() < p:
            chosen.append(f)
    return Instance(chosen)
