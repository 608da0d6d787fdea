import itertools
import math
import random

import pytest

from infpdb.completion import (
    bounded_tail_validate,
    check_closed,
    closure_extend,
    complete,
    completion_condition_check,
    completion_instance_prob,
    completion_sample,
)
from infpdb.core import Fact, FiniteDiscretePDB, Instance, Schema
from infpdb.errors import NotClosed, OverlappingFacts, UnitTailProbability
from infpdb.independence import (
    EnumerationSupply,
    FactProbabilityAssignment,
    GeometricTail,
)
from infpdb.universe import FactEnumeration, Universe

NAT = Universe.naturals()
R1 = Schema.of(R=1)


def fact(i):
    return Fact("R", (i,))


def closed_space(worlds):
    return FiniteDiscretePDB(R1, NAT, worlds)


def closure_of(instances):
    """Subset-and-union closure of a family of instances."""
    out = {Instance.empty()}
    frontier = set(instances)
    while frontier:
        d = frontier.pop()
        if d in out:
            continue
        out.add(d)
        for r in range(len(d)):
            for combo in itertools.combinations(d.facts, r):
                frontier.add(Instance(combo))
        for other in list(out):
            frontier.add(d.union(other))
    return out


def random_closed_pdb(rng, facts):
    seeds = [
        Instance(rng.sample(facts, rng.randint(0, len(facts))))
        for _ in range(rng.randint(1, 3))
    ]
    worlds = {}
    for d in closure_of(seeds):
        worlds[d] = rng.random() + 0.05
    total = sum(worlds.values())
    return closed_space({d: w / total for d, w in worlds.items()})


class TestClosureCheck:
    def test_missing_subset_reported(self):
        p = FiniteDiscretePDB(
            R1, NAT, {Instance.empty(): 0.5, Instance([fact(1), fact(2)]): 0.5}
        )
        with pytest.raises(NotClosed) as err:
            check_closed(p)
        assert err.value.missing in (Instance([fact(1)]), Instance([fact(2)]))

    def test_missing_union_reported(self):
        worlds = {
            Instance.empty(): 0.4,
            Instance([fact(1)]): 0.3,
            Instance([fact(2)]): 0.3,
        }
        with pytest.raises(NotClosed):
            check_closed(closed_space(worlds))


class TestClosureExtend:
    def test_uniform_redistribution(self):
        p0 = closed_space({Instance.empty(): 0.5, Instance([fact(1), fact(2)]): 0.5})
        p = closure_extend(p0, 0.5)
        assert p.probability(Instance.empty()) == pytest.approx(0.25, abs=1e-15)
        assert p.probability(Instance([fact(1), fact(2)])) == pytest.approx(0.25, abs=1e-15)
        assert p.probability(Instance([fact(1)])) == pytest.approx(0.25, abs=1e-15)
        assert p.probability(Instance([fact(2)])) == pytest.approx(0.25, abs=1e-15)
        assert math.fsum(p.worlds.values()) == pytest.approx(1.0, abs=1e-12)

    def test_closed_space_with_c_one_unchanged(self):
        p0 = closed_space({Instance.empty(): 0.5, Instance([fact(1)]): 0.5})
        assert closure_extend(p0, 1.0) == p0

    def test_closed_space_with_c_below_one_errors(self):
        p0 = closed_space({Instance.empty(): 0.5, Instance([fact(1)]): 0.5})
        with pytest.raises(ValueError):
            closure_extend(p0, 0.5)

    def test_c_out_of_range(self):
        p0 = closed_space({Instance.empty(): 1.0})
        with pytest.raises(ValueError):
            closure_extend(p0, 0.0)
        with pytest.raises(ValueError):
            closure_extend(p0, 1.5)

    def test_scaled_originals(self):
        p0 = closed_space({Instance.empty(): 0.3, Instance([fact(1), fact(2)]): 0.7})
        p = closure_extend(p0, 0.8)
        for d, prob in p0.worlds.items():
            assert p.probability(d) == pytest.approx(0.8 * prob, abs=1e-15)

    def test_explicit_redistribution(self):
        p0 = closed_space({Instance.empty(): 0.5, Instance([fact(1), fact(2)]): 0.5})
        weights = {Instance([fact(1)]): 0.75, Instance([fact(2)]): 0.25}
        p = closure_extend(p0, 0.5, redistribution=weights)
        assert p.probability(Instance([fact(1)])) == pytest.approx(0.375, abs=1e-15)
        assert p.probability(Instance([fact(2)])) == pytest.approx(0.125, abs=1e-15)


def simple_completion(tail_p=0.25):
    orig = closed_space({Instance.empty(): 0.5, Instance([fact(1)]): 0.5})
    tail = FactProbabilityAssignment(((fact(9), tail_p),))
    return orig, complete(orig, tail)


class TestComplete:
    def test_product_measure(self):
        _, c = simple_completion()
        iv = completion_instance_prob(c, Instance([fact(1), fact(9)]))
        assert iv.lo == pytest.approx(0.125, abs=1e-15)

    def test_original_instances_carry_empty_tail_factor(self):
        _, c = simple_completion()
        assert c.p_empty.lo == pytest.approx(0.75, abs=1e-15)
        iv = completion_instance_prob(c, Instance([fact(1)]))
        assert iv.lo == pytest.approx(0.5 * 0.75, abs=1e-15)

    def test_impossible_core_gives_zero(self):
        _, c = simple_completion()
        assert completion_instance_prob(c, Instance([fact(2)])).hi == 0.0

    def test_empty_tail_reproduces_original(self):
        orig = closed_space({Instance.empty(): 0.5, Instance([fact(1)]): 0.5})
        c = complete(orig, FactProbabilityAssignment(()))
        assert c.p_empty.lo == 1.0
        for d, p in orig.worlds.items():
            assert completion_instance_prob(c, d).lo == pytest.approx(p, abs=1e-15)

    def test_unit_tail_probability_rejected(self):
        orig = closed_space({Instance.empty(): 1.0})
        with pytest.raises(UnitTailProbability):
            complete(orig, FactProbabilityAssignment(((fact(5), 1.0),)))

    def test_overlapping_facts_rejected(self):
        orig = closed_space({Instance.empty(): 0.5, Instance([fact(1)]): 0.5})
        with pytest.raises(OverlappingFacts):
            complete(orig, FactProbabilityAssignment(((fact(1), 0.5),)))

    def test_overlapping_generator_rejected(self):
        orig = closed_space({Instance.empty(): 0.5, Instance([fact(1)]): 0.5})
        e = FactEnumeration(R1, NAT)
        tail = FactProbabilityAssignment((), GeometricTail(EnumerationSupply(e), c=1.0, q=0.5))
        with pytest.raises(OverlappingFacts):
            complete(orig, tail)

    def test_not_closed_rejected(self):
        p = FiniteDiscretePDB(
            R1, NAT, {Instance.empty(): 0.5, Instance([fact(1), fact(2)]): 0.5}
        )
        with pytest.raises(NotClosed):
            complete(p, FactProbabilityAssignment(()))


class TestConditionCheck:
    def test_full_space(self):
        orig, c = simple_completion()
        conditioned, original = completion_condition_check(c, orig.worlds)
        assert conditioned == pytest.approx(1.0, abs=1e-12)
        assert original == pytest.approx(1.0, abs=1e-12)

    def test_singleton_event(self):
        _, c = simple_completion()
        conditioned, original = completion_condition_check(c, [Instance.empty()])
        assert conditioned == pytest.approx(0.5, abs=1e-12)
        assert original == pytest.approx(0.5, abs=1e-12)

    def test_empty_event(self):
        _, c = simple_completion()
        assert completion_condition_check(c, []) == (0.0, 0.0)

    def test_completed_mass_of_original_space_two_ways(self):
        # sum of completed world probabilities over the original space vs the
        # cached empty-tail probability; equal up to the tail enclosure
        orig = closed_space({Instance.empty(): 0.5, Instance([fact(1)]): 0.5})
        e = FactEnumeration(R1, NAT)
        generator = GeometricTail(EnumerationSupply(e, offset=5), c=1.0, q=0.5)
        c = complete(orig, FactProbabilityAssignment(((fact(2), 0.25),), generator))
        assert c.p_empty.lo > 0.0
        summed_lo = math.fsum(completion_instance_prob(c, d).lo for d in orig.worlds)
        summed_hi = math.fsum(completion_instance_prob(c, d).hi for d in orig.worlds)
        assert summed_lo <= c.p_empty.hi + 1e-15
        assert summed_hi >= c.p_empty.lo - 1e-15

    def test_condition_holds_on_random_completions(self):
        rng = random.Random(59)
        facts = [fact(i) for i in range(1, 4)]
        for _ in range(25):
            orig = random_closed_pdb(rng, facts)
            fresh = tuple((fact(10 + i), rng.uniform(0.05, 0.9)) for i in range(3))
            c = complete(orig, FactProbabilityAssignment(fresh))
            worlds = list(orig.worlds)
            for _ in range(10):
                event = [d for d in worlds if rng.random() < 0.5]
                conditioned, original = completion_condition_check(c, event)
                assert abs(conditioned - original) <= 1e-10

    def test_chained_identity_after_closure_extend(self):
        # scale, spread, complete: conditioning the completed measure on the
        # pre-extension sample space recovers the pre-extension measure
        p0 = closed_space({Instance.empty(): 0.3, Instance([fact(1), fact(2)]): 0.7})
        extended = closure_extend(p0, 0.6)
        c = complete(extended, FactProbabilityAssignment(((fact(7), 0.4),)))
        mass_of_original_space = math.fsum(
            completion_instance_prob(c, d).midpoint for d in p0.worlds
        )
        for d, prob in p0.worlds.items():
            conditioned = (
                completion_instance_prob(c, d).midpoint / mass_of_original_space
            )
            assert abs(conditioned - prob) <= 1e-10


class TestBoundedTailValidate:
    def test_equal_rules(self):
        e = FactEnumeration(R1, NAT)
        tail = FactProbabilityAssignment(
            (), GeometricTail(EnumerationSupply(e), c=1.0, q=0.5)
        )
        assert bounded_tail_validate(tail, 1.0, 0.5)

    def test_tighter_bound_fails(self):
        e = FactEnumeration(R1, NAT)
        tail = FactProbabilityAssignment(
            (), GeometricTail(EnumerationSupply(e), c=1.0, q=0.5)
        )
        assert not bounded_tail_validate(tail, 1.0, 0.25)

    def test_empty_tail(self):
        assert bounded_tail_validate(FactProbabilityAssignment(()), 1.0, 0.25)

    def test_head_checked_positionally(self):
        good = FactProbabilityAssignment(((fact(1), 0.5), (fact(2), 0.25)))
        assert bounded_tail_validate(good, 1.0, 0.5)
        bad = FactProbabilityAssignment(((fact(1), 0.5), (fact(2), 0.3)))
        assert not bounded_tail_validate(bad, 1.0, 0.5)


class TestCompletionSample:
    def test_empty_tail_matches_original_distribution(self):
        orig = closed_space({Instance.empty(): 0.5, Instance([fact(1)]): 0.5})
        c = complete(orig, FactProbabilityAssignment(()))
        rng = random.Random(3)
        n = 50_000
        hits = sum(completion_sample(c, rng, 0.5) == Instance([fact(1)]) for _ in range(n))
        assert abs(hits / n - 0.5) <= 3 * math.sqrt(0.25 / n)

    def test_fresh_fact_frequency(self):
        _, c = simple_completion(tail_p=0.25)
        rng = random.Random(8)
        n = 100_000
        hits = sum(fact(9) in completion_sample(c, rng, 0.5) for _ in range(n))
        assert 0.2459 <= hits / n <= 0.2541

    def test_conditioning_on_no_fresh_facts_recovers_marginals(self):
        orig, c = simple_completion(tail_p=0.25)
        rng = random.Random(15)
        kept = []
        for _ in range(100_000):
            s = completion_sample(c, rng, 0.5)
            if fact(9) not in s:
                kept.append(s)
        freq = sum(d == Instance([fact(1)]) for d in kept) / len(kept)
        assert abs(freq - 0.5) <= 3 * math.sqrt(0.25 / len(kept))
