"""Probabilistic databases over countably infinite universes.

Tuple-independent and block-independent-disjoint measures built from
fact-probability assignments with convergent tails, open-world
completion of finite spaces, and first-order query evaluation with a
guaranteed additive error, all validated against a brute-force
possible-worlds oracle.
"""

from .core import (
    Fact,
    FiniteDiscretePDB,
    Instance,
    Schema,
    active_domain,
    expected_size,
    instance_size,
    marginal,
    positive_facts,
    size_tail,
)
from .universe import FactEnumeration, Universe
from .numerics import (
    LogProbability,
    ProbabilityInterval,
    euler_tail_lower_bound,
    log_product_one_minus,
    product_one_minus_enclosure,
    subset_expansion_check,
)
from .independence import (
    BIDPdb,
    BlockPartition,
    ConstantTail,
    EnumerationSupply,
    FactProbabilityAssignment,
    GeometricTail,
    ProductSupply,
    TIPdb,
    bid_construct,
    bid_instance_prob,
    bid_sample,
    is_good,
    ti_construct,
    ti_event_probs,
    ti_instance_prob,
    ti_sample,
)
from .completion import (
    Completion,
    bounded_tail_validate,
    closure_extend,
    complete,
    completion_condition_check,
    completion_instance_prob,
    completion_sample,
)
from .fo import (
    INFINITE_ANSWER,
    View,
    analyze,
    eval_boolean,
    eval_query,
    parse,
    print_formula,
    view_pushforward,
)
from .approx import (
    TruncationCertificate,
    approx_boolean,
    approx_nonboolean,
    choose_truncation,
    conditional_query_prob,
)
from .oracle import enumerate_worlds, exact_event_prob, monte_carlo
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
