"""Command-line front-end.

Subcommands::

    pdb validate SPEC
    pdb expected-size SPEC
    pdb prob --instance FILE SPEC
    pdb query --epsilon E --query FILE SPEC
    pdb sample --n N --delta D --seed S SPEC
    pdb complete BASE TAIL [--c C] -o OUT
    pdb oracle-compare SPEC --query FILE

Exit codes: 0 ok, 1 usage, 2 validation, 3 capability (enumeration caps).
The environment variable ``PDB_WORLD_CAP`` raises the world-enumeration
cap used by ``query``.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import approx, completion as completion_mod, fo, oracle
from .core import FiniteDiscretePDB, Instance, expected_size
from .errors import (
    PdbError,
    QuerySyntaxError,
    ValidationError,
    WorldCapExceeded,
)
from .independence import bid_sample, ti_event_probs, ti_sample
from .numerics import ProbabilityInterval
from .specio import (
    SpecDocument,
    instance_to_json,
    load_instance,
    load_spec,
    save_spec,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_CAPABILITY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _report_error(exc: Exception) -> int:
    print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
    if isinstance(exc, WorldCapExceeded):
        return EXIT_CAPABILITY
    return EXIT_VALIDATION


def _finite_expected_size(doc: SpecDocument) -> float:
    return expected_size(doc.finite())


def cmd_validate(args) -> int:
    doc = load_spec(args.spec)
    if doc.kind == "ti":
        t = doc.ti()
        print(
            f"TI, total mass {t.total_mass:.3f}, convergent, "
            f"expected size {t.expected_size:.3f}"
        )
    elif doc.kind == "bid":
        b = doc.bid()
        print(
            f"BID, total mass {b.total_mass:.3f}, convergent, "
            f"expected size {b.expected_size:.3f}"
        )
    elif doc.kind == "finite":
        p = doc.finite()
        print(
            f"finite, {len(p.worlds)} worlds, "
            f"expected size {expected_size(p):.3f}"
        )
    else:
        c = doc.completion()
        size = expected_size(c.original) + c.tail_pdb.total_mass
        print(
            f"completion, {len(c.original.worlds)} base worlds, "
            f"tail mass {c.tail_pdb.total_mass:.3f}, convergent, "
            f"expected size {size:.3f}"
        )
    return EXIT_OK


def cmd_expected_size(args) -> int:
    doc = load_spec(args.spec)
    if doc.kind == "ti":
        value = doc.ti().expected_size
    elif doc.kind == "bid":
        value = doc.bid().expected_size
    elif doc.kind == "finite":
        value = _finite_expected_size(doc)
    else:
        c = doc.completion()
        value = expected_size(c.original) + c.tail_pdb.total_mass
    print(repr(value))
    return EXIT_OK


def _print_interval(p: ProbabilityInterval) -> None:
    if p.is_point:
        print(f"probability = {p.lo!r}")
    else:
        print(f"probability in [{p.lo!r}, {p.hi!r}]")


def cmd_prob(args) -> int:
    doc = load_spec(args.spec)
    d = load_instance(args.instance, doc.schema, doc.universe)
    if doc.kind == "ti":
        from .independence import ti_instance_prob

        _print_interval(ti_instance_prob(doc.ti(), d))
    elif doc.kind == "bid":
        from .independence import bid_instance_prob

        _print_interval(bid_instance_prob(doc.bid(), d))
    elif doc.kind == "finite":
        print(f"probability = {doc.finite().probability(d)!r}")
    else:
        _print_interval(completion_mod.completion_instance_prob(doc.completion(), d))
    return EXIT_OK


def cmd_query(args) -> int:
    if not (0.0 < args.epsilon < 0.5):
        return _usage_error(f"--epsilon must lie in (0, 1/2), got {args.epsilon}")
    doc = load_spec(args.spec)
    if doc.kind != "ti":
        raise ValidationError(f"query evaluation needs a TI spec, got kind {doc.kind!r}")
    t = doc.ti()
    with open(args.query, "r", encoding="utf-8") as fh:
        text = fh.read()
    formula = fo.parse(text, doc.schema)
    free = fo.free_variables(formula)
    if not free:
        p, cert = approx.approx_boolean(t, formula, args.epsilon, doc.universe)
        print(f"probability = {p:.6f} (additive error <= {args.epsilon})")
        print(
            f"certificate: n={cert.n} alpha={cert.alpha_n!r} "
            f"tail_sum={cert.tail_sum!r} epsilon={cert.epsilon!r}"
        )
    else:
        table = approx.approx_nonboolean(t, formula, args.epsilon, doc.universe)
        for combo in sorted(table, key=lambda c: tuple((isinstance(e, str), e) for e in c)):
            key = "(" + ", ".join(repr(e) for e in combo) + ")"
            print(f"{key}\t{table[combo]:.6f}")
        print(
            f"note: each value carries additive error <= {args.epsilon}; any tuple "
            f"not listed has probability <= {args.epsilon}"
        )
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 0:
        return _usage_error(f"--n must be >= 0, got {args.n}")
    if not (0.0 < args.delta < 1.0):
        return _usage_error(f"--delta must lie in (0, 1), got {args.delta}")
    doc = load_spec(args.spec)
    rng = random.Random(args.seed)
    if doc.kind == "ti":
        t = doc.ti()
        draw = lambda: ti_sample(t, rng, args.delta)
    elif doc.kind == "bid":
        b = doc.bid()
        draw = lambda: bid_sample(b, rng, args.delta)
    elif doc.kind == "finite":
        p = doc.finite()
        worlds = p.instances()

        def draw() -> Instance:
            x = rng.random()
            acc = 0.0
            for d in worlds:
                acc += p.probability(d)
                if x < acc:
                    return d
            return worlds[-1]

    else:
        c = doc.completion()
        draw = lambda: completion_mod.completion_sample(c, rng, args.delta)
    for _ in range(args.n):
        print(json.dumps(instance_to_json(draw()), sort_keys=True))
    return EXIT_OK


def _base_to_finite(doc: SpecDocument) -> FiniteDiscretePDB:
    """A completion base: either an explicit worlds table or a head-only TI
    spec expanded into its (closed) finite world table."""
    if doc.kind == "finite":
        return doc.finite()
    if doc.kind == "ti":
        t = doc.ti()
        if t.tail is not None:
            raise ValidationError("completion base must be finite; TI base may not have a tail")
        facts = [f for f, _ in t.head]
        if len(facts) > oracle.WORLD_FACT_CAP:
            raise WorldCapExceeded(
                f"expanding {len(facts)} head facts exceeds the cap",
                required=len(facts),
                cap=oracle.WORLD_FACT_CAP,
            )
        from .independence import ti_instance_prob
        from itertools import combinations

        worlds = {}
        for r in range(len(facts) + 1):
            for combo in combinations(facts, r):
                d = Instance(combo)
                worlds[d] = ti_instance_prob(t, d).lo
        return FiniteDiscretePDB(doc.schema, doc.universe, worlds)
    raise ValidationError(f"completion base must be finite or ti, got {doc.kind!r}")


def cmd_complete(args) -> int:
    base_doc = load_spec(args.base)
    tail_doc = load_spec(args.tail)
    if tail_doc.kind != "ti":
        raise ValidationError(f"tail spec must have kind 'ti', got {tail_doc.kind!r}")
    if tail_doc.schema != base_doc.schema or tail_doc.universe != base_doc.universe:
        raise ValidationError("base and tail must share schema and universe")
    base = _base_to_finite(base_doc)
    if args.c is not None:
        base = completion_mod.closure_extend(base, args.c)
    assignment = tail_doc.assignment()
    comp = completion_mod.complete(base, assignment)
    out_doc = SpecDocument(
        kind="completion",
        schema=base_doc.schema,
        universe=base_doc.universe,
        head=assignment.head,
        tail=assignment.tail,
        worlds=tuple((d, comp.original.probability(d)) for d in comp.original.instances()),
    )
    save_spec(out_doc, args.output)
    print(f"wrote completion spec to {args.output}")
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    doc = load_spec(args.spec)
    if doc.kind != "ti":
        raise ValidationError(f"oracle comparison needs a TI spec, got kind {doc.kind!r}")
    t = doc.ti()
    if t.tail is not None:
        raise ValidationError("oracle comparison needs a head-only spec (no tail)")
    facts = list(t.head)
    worlds = oracle.enumerate_worlds(facts)
    inject = args.inject_error or 0.0
    diffs = []
    for i, (f, p) in enumerate(facts):
        engine_marginal, _ = ti_event_probs(t, [f])
        if i == 0:
            engine_marginal += inject
        oracle_marginal = oracle.exact_event_prob(worlds, lambda d: f in d)
        diffs.append(abs(engine_marginal - oracle_marginal))
        print(f"marginal {f}: engine={engine_marginal!r} oracle={oracle_marginal!r}")
    with open(args.query, "r", encoding="utf-8") as fh:
        formula = fo.parse(fh.read(), doc.schema)
    if fo.free_variables(formula):
        raise ValidationError("oracle comparison takes a Boolean query")
    engine_q = approx.conditional_query_prob(
        t, formula, len(facts), doc.universe, cap=oracle.WORLD_FACT_CAP
    )
    oracle_q = oracle.exact_event_prob(
        worlds, lambda d: fo.eval_boolean(d, formula, doc.universe)
    )
    diffs.append(abs(engine_q - oracle_q))
    print(f"query: engine={engine_q!r} oracle={oracle_q!r}")
    worst = max(diffs) if diffs else 0.0
    print(f"max abs difference = {worst!r}")
    if worst > 1e-9:
        print("MISMATCH: engine and oracle disagree beyond 1e-9", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a spec and report its mass")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("expected-size", help="expected number of facts per instance")
    p.add_argument("spec")
    p.set_defaults(func=cmd_expected_size)

    p = sub.add_parser("prob", help="probability of one instance")
    p.add_argument("spec")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("query", help="additive-error query probability")
    p.add_argument("spec")
    p.add_argument("--query", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("sample", help="draw instances")
    p.add_argument("spec")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("complete", help="open-world completion of a base spec")
    p.add_argument("base")
    p.add_argument("tail")
    p.add_argument("--c", type=float, default=None, help="closure-extension constant in (0, 1]")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("oracle-compare", help="engine vs brute-force oracle")
    p.add_argument("spec")
    p.add_argument("--query", required=True)
    p.add_argument("--inject-error", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_oracle_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QuerySyntaxError as exc:
        print(f"QuerySyntaxError: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except WorldCapExceeded as exc:
        print(f"WorldCapExceeded: {exc} (required n = {exc.required})", file=sys.stderr)
        return EXIT_CAPABILITY
    except (ValidationError, PdbError, OSError, ValueError) as exc:
        return _report_error(exc)


if __name__ == "__main__":
    raise SystemExit(main())
