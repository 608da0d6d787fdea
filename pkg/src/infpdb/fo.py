"""First-order queries: concrete syntax, analysis and evaluation.

Grammar (precedence ``!`` > ``&`` > ``|`` > ``->``; quantifiers extend
right as far as possible)::

    formula  := 'exists' VAR '.' formula
              | 'forall' VAR '.' formula
              | implication
    atom     := REL '(' term (',' term)* ')'
              | term '=' term
    term     := VAR | INT | 'single-quoted string'
    VAR      := [a-z][A-Za-z0-9_]*

Evaluation is over a *finite* instance drawn from an *infinite* universe,
so a quantifier must notionally range over infinitely many elements.  It
suffices to range over the active domain of the instance and the formula
plus a pool of pairwise-distinct generic elements, one per level of
quantifier nesting: a generic element satisfies no relation atom (it is
outside every stored tuple) and is equal only to itself, and formulas of
quantifier rank r cannot tell two such pools apart once the pool has r
elements.  Generic elements are real universe elements, taken
deterministically as the first enumeration indices outside the active
domains.

Open formulas are evaluated by enumerating candidate tuples over the
combined active domain: any answer outside that set would have to hold
for a generic element, in which case it holds for infinitely many and
the answer relation is infinite.  This is reported with the
:data:`INFINITE_ANSWER` sentinel rather than an exception so that batch
callers can handle it per instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

from .core import Fact, FiniteDiscretePDB, Instance, Schema, active_domain
from .errors import InfiniteAnswerError, QuerySyntaxError
from .universe import Element, Universe


# --- abstract syntax ---------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    value: Element

    def __str__(self) -> str:
        return repr(self.value) if isinstance(self.value, str) else str(self.value)


Term = Var | Const


@dataclass(frozen=True)
class Atom:
    relation: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Atom | Eq | Not | And | Or | Implies | Exists | Forall


class _InfiniteAnswer:
    """Singleton marker: the answer relation is infinite on this instance."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITE_ANSWER"


INFINITE_ANSWER = _InfiniteAnswer()


# --- parsing -----------------------------------------------------------

_KEYWORDS = {"exists", "forall"}


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> tuple[str, str, int]:
        """(kind, value, position) of the next token without consuming it."""
        self._skip_ws()
        start = self.pos
        if start >= len(self.text):
            return ("eof", "", start)
        ch = self.text[start]
        if ch.isalpha() or ch == "_":
            end = start
            while end < len(self.text) and (self.text[end].isalnum() or self.text[end] == "_"):
                end += 1
            return ("ident", self.text[start:end], start)
        if ch.isdigit():
            end = start
            while end < len(self.text) and self.text[end].isdigit():
                end += 1
            return ("int", self.text[start:end], start)
        if ch == "'":
            end = self.text.find("'", start + 1)
            if end == -1:
                raise QuerySyntaxError("unterminated string constant", start)
            return ("string", self.text[start + 1 : end], start)
        if self.text.startswith("->", start):
            return ("op", "->", start)
        if ch in "()!&|=,.":
            return ("op", ch, start)
        raise QuerySyntaxError(f"unexpected character {ch!r}", start)

    def next(self) -> tuple[str, str, int]:
        kind, value, start = self.peek()
        if kind == "eof":
            self.pos = start
        elif kind == "string":
            self.pos = start + len(value) + 2
        elif kind == "op":
            self.pos = start + len(value)
        else:
            self.pos = start + len(value)
        return kind, value, start

    def expect(self, kind: str, value: str | None = None) -> tuple[str, str, int]:
        k, v, pos = self.next()
        if k != kind or (value is not None and v != value):
            want = value if value is not None else kind
            raise QuerySyntaxError(f"expected {want!r}, found {v or k!r}", pos)
        return k, v, pos


_VAR_FIRST = "abcdefghijklmnopqrstuvwxyz"


def _is_variable_name(s: str) -> bool:
    return bool(s) and s[0] in _VAR_FIRST


class _Parser:
    def __init__(self, text: str, schema: Schema):
        self.toks = _Tokenizer(text)
        self.schema = schema

    def parse(self) -> Formula:
        f = self._formula()
        kind, value, pos = self.toks.peek()
        if kind != "eof":
            raise QuerySyntaxError(f"unexpected trailing input {value!r}", pos)
        return f

    def _formula(self) -> Formula:
        kind, value, _ = self.toks.peek()
        if kind == "ident" and value in _KEYWORDS:
            self.toks.next()
            _, var, vpos = self.toks.expect("ident")
            if not _is_variable_name(var):
                raise QuerySyntaxError(f"quantified variable must be lowercase, got {var!r}", vpos)
            self.toks.expect("op", ".")
            body = self._formula()
            return Exists(var, body) if value == "exists" else Forall(var, body)
        return self._implication()

    def _implication(self) -> Formula:
        left = self._disjunction()
        kind, value, _ = self.toks.peek()
        if kind == "op" and value == "->":
            self.toks.next()
            # right-associative; also lets a quantifier follow the arrow
            right = self._formula()
            return Implies(left, right)
        return left

    def _disjunction(self) -> Formula:
        left = self._conjunction()
        while True:
            kind, value, _ = self.toks.peek()
            if kind == "op" and value == "|":
                self.toks.next()
                left = Or(left, self._conjunction())
            else:
                return left

    def _conjunction(self) -> Formula:
        left = self._negation()
        while True:
            kind, value, _ = self.toks.peek()
            if kind == "op" and value == "&":
                self.toks.next()
                left = And(left, self._negation())
            else:
                return left

    def _negation(self) -> Formula:
        kind, value, _ = self.toks.peek()
        if kind == "op" and value == "!":
            self.toks.next()
            return Not(self._negation())
        if kind == "ident" and value in _KEYWORDS:
            return self._formula()
        return self._primary()

    def _primary(self) -> Formula:
        kind, value, pos = self.toks.peek()
        if kind == "op" and value == "(":
            self.toks.next()
            f = self._formula()
            self.toks.expect("op", ")")
            return f
        if kind == "ident":
            # relation atom iff followed by '('
            save = self.toks.pos
            self.toks.next()
            k2, v2, _ = self.toks.peek()
            if k2 == "op" and v2 == "(":
                return self._atom(value, pos)
            self.toks.pos = save
        return self._equality()

    def _atom(self, relation: str, pos: int) -> Formula:
        if relation not in self.schema:
            raise QuerySyntaxError(f"unknown relation {relation!r}", pos)
        self.toks.expect("op", "(")
        terms = [self._term()]
        while True:
            kind, value, p = self.toks.next()
            if kind == "op" and value == ",":
                terms.append(self._term())
            elif kind == "op" and value == ")":
                break
            else:
                raise QuerySyntaxError(f"expected ',' or ')' in argument list, found {value or kind!r}", p)
        arity = self.schema.arity_of(relation)
        if len(terms) != arity:
            raise QuerySyntaxError(
                f"relation {relation!r} takes {arity} arguments, got {len(terms)}", pos
            )
        return Atom(relation, tuple(terms))

    def _equality(self) -> Formula:
        left = self._term()
        self.toks.expect("op", "=")
        right = self._term()
        return Eq(left, right)

    def _term(self) -> Term:
        kind, value, pos = self.toks.next()
        if kind == "int":
            return Const(int(value))
        if kind == "string":
            return Const(value)
        if kind == "ident":
            if value in _KEYWORDS:
                raise QuerySyntaxError(f"{value!r} is a reserved word", pos)
            if not _is_variable_name(value):
                raise QuerySyntaxError(f"variables must start lowercase, got {value!r}", pos)
            return Var(value)
        raise QuerySyntaxError(f"expected a term, found {value or kind!r}", pos)


def parse(text: str, schema: Schema) -> Formula:
    """Parse query text against a schema; raises :class:`QuerySyntaxError`."""
    return _Parser(text, schema).parse()


# --- printing ----------------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3, Not: 4}


def print_formula(f: Formula) -> str:
    """Concrete syntax for a formula; ``parse(print_formula(f))`` is ``f``."""
    return _print(f, 0)


def _print(f: Formula, parent: int) -> str:
    if isinstance(f, Atom):
        return f"{f.relation}({', '.join(str(t) for t in f.terms)})"
    if isinstance(f, Eq):
        s = f"{f.left} = {f.right}"
        return s
    if isinstance(f, Not):
        return "!" + _print(f.body, _PREC[Not])
    if isinstance(f, (Exists, Forall)):
        word = "exists" if isinstance(f, Exists) else "forall"
        s = f"{word} {f.var}. {_print(f.body, 0)}"
        return f"({s})" if parent > 0 else s
    op, cls = {And: ("&", And), Or: ("|", Or), Implies: ("->", Implies)}[type(f)]
    prec = _PREC[cls]
    if isinstance(f, Implies):
        # right-associative
        s = f"{_print(f.left, prec + 1)} {op} {_print(f.right, prec)}"
    else:
        s = f"{_print(f.left, prec)} {op} {_print(f.right, prec + 1)}"
    return f"({s})" if prec < parent else s


# --- analysis ----------------------------------------------------------


def quantifier_rank(f: Formula) -> int:
    """Maximum nesting depth of quantifiers."""
    if isinstance(f, (Atom, Eq)):
        return 0
    if isinstance(f, Not):
        return quantifier_rank(f.body)
    if isinstance(f, (And, Or, Implies)):
        return max(quantifier_rank(f.left), quantifier_rank(f.right))
    return 1 + quantifier_rank(f.body)


def constants(f: Formula) -> set[Element]:
    """The active domain of the formula: all constants occurring in it."""
    out: set[Element] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Atom):
            out.update(t.value for t in g.terms if isinstance(t, Const))
        elif isinstance(g, Eq):
            out.update(t.value for t in (g.left, g.right) if isinstance(t, Const))
        elif isinstance(g, Not):
            walk(g.body)
        elif isinstance(g, (And, Or, Implies)):
            walk(g.left)
            walk(g.right)
        else:
            walk(g.body)

    walk(f)
    return out


def free_variables(f: Formula) -> list[str]:
    """Free variables in order of first occurrence."""
    seen: list[str] = []

    def walk(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, Atom):
            for t in g.terms:
                if isinstance(t, Var) and t.name not in bound and t.name not in seen:
                    seen.append(t.name)
        elif isinstance(g, Eq):
            for t in (g.left, g.right):
                if isinstance(t, Var) and t.name not in bound and t.name not in seen:
                    seen.append(t.name)
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, (And, Or, Implies)):
            walk(g.left, bound)
            walk(g.right, bound)
        else:
            walk(g.body, bound | {g.var})

    walk(f, frozenset())
    return seen


def analyze(f: Formula) -> tuple[int, set[Element], list[str]]:
    """(quantifier rank, constants, ordered free variables)."""
    return quantifier_rank(f), constants(f), free_variables(f)


def relations_of(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset({f.relation})
    if isinstance(f, Eq):
        return frozenset()
    if isinstance(f, Not):
        return relations_of(f.body)
    if isinstance(f, (And, Or, Implies)):
        return relations_of(f.left) | relations_of(f.right)
    return relations_of(f.body)


def substitute(f: Formula, assignment: Mapping[str, Element]) -> Formula:
    """Replace free variables by constants."""

    def sub_term(t: Term, bound: frozenset[str]) -> Term:
        if isinstance(t, Var) and t.name in assignment and t.name not in bound:
            return Const(assignment[t.name])
        return t

    def walk(g: Formula, bound: frozenset[str]) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.relation, tuple(sub_term(t, bound) for t in g.terms))
        if isinstance(g, Eq):
            return Eq(sub_term(g.left, bound), sub_term(g.right, bound))
        if isinstance(g, Not):
            return Not(walk(g.body, bound))
        if isinstance(g, And):
            return And(walk(g.left, bound), walk(g.right, bound))
        if isinstance(g, Or):
            return Or(walk(g.left, bound), walk(g.right, bound))
        if isinstance(g, Implies):
            return Implies(walk(g.left, bound), walk(g.right, bound))
        if isinstance(g, Exists):
            return Exists(g.var, walk(g.body, bound | {g.var}))
        return Forall(g.var, walk(g.body, bound | {g.var}))

    return walk(f, frozenset())


# --- evaluation --------------------------------------------------------


def _quantifier_domain(
    d: Instance, f: Formula, u: Universe, pool_size: int | None
) -> list[Element]:
    adom = active_domain(d) | constants(f)
    r = quantifier_rank(f) if pool_size is None else pool_size
    generics = u.fresh_elements(adom, r)
    ordered = sorted(adom, key=lambda e: (isinstance(e, str), e))
    return ordered + generics


def eval_boolean(
    d: Instance, f: Formula, u: Universe, pool_size: int | None = None
) -> bool:
    """Truth of a sentence on a finite instance over an infinite universe.

    ``pool_size`` overrides the number of generic elements (default: the
    quantifier rank); enlarging it must not change the result.
    """
    free = free_variables(f)
    if free:
        raise ValueError(f"sentence expected, found free variables {free}")
    domain = _quantifier_domain(d, f, u, pool_size)
    return _eval(f, d, {}, domain)


def _eval(f: Formula, d: Instance, env: dict[str, Element], domain: list[Element]) -> bool:
    if isinstance(f, Atom):
        args = tuple(env[t.name] if isinstance(t, Var) else t.value for t in f.terms)
        return args in d.tuples_of(f.relation)
    if isinstance(f, Eq):
        lv = env[f.left.name] if isinstance(f.left, Var) else f.left.value
        rv = env[f.right.name] if isinstance(f.right, Var) else f.right.value
        return lv == rv
    if isinstance(f, Not):
        return not _eval(f.body, d, env, domain)
    if isinstance(f, And):
        return _eval(f.left, d, env, domain) and _eval(f.right, d, env, domain)
    if isinstance(f, Or):
        return _eval(f.left, d, env, domain) or _eval(f.right, d, env, domain)
    if isinstance(f, Implies):
        return (not _eval(f.left, d, env, domain)) or _eval(f.right, d, env, domain)
    if isinstance(f, Exists):
        for e in domain:
            env[f.var] = e
            if _eval(f.body, d, env, domain):
                del env[f.var]
                return True
        env.pop(f.var, None)
        return False
    # Forall
    for e in domain:
        env[f.var] = e
        if not _eval(f.body, d, env, domain):
            del env[f.var]
            return False
    env.pop(f.var, None)
    return True


def eval_query(
    d: Instance, f: Formula, u: Universe
) -> frozenset[tuple] | _InfiniteAnswer:
    """Answer tuples of an open formula, or :data:`INFINITE_ANSWER`.

    Candidate tuples range over the combined active domain of instance
    and formula; valuations that involve a generic element are probed as
    well, and if any of them satisfies the formula the true answer
    relation is infinite.
    """
    free = free_variables(f)
    k = len(free)
    if k < 1:
        raise ValueError("open formula expected; use eval_boolean for sentences")
    candidates = sorted(active_domain(d) | constants(f), key=lambda e: (isinstance(e, str), e))
    generics = u.fresh_elements(set(candidates), k)
    answers: set[tuple] = set()
    for combo in itertools.product(candidates + generics, repeat=k):
        assignment = dict(zip(free, combo))
        if eval_boolean(d, substitute(f, assignment), u):
            if any(e in generics for e in combo):
                return INFINITE_ANSWER
            answers.add(combo)
    return frozenset(answers)


# --- views -------------------------------------------------------------


@dataclass(frozen=True)
class View:
    """One defining formula per target relation; arities must match."""

    target_schema: Schema
    formulas: tuple[tuple[str, Formula], ...]

    def __post_init__(self):
        defined = {name for name, _ in self.formulas}
        if defined != set(self.target_schema.names):
            raise ValueError(
                f"view must define exactly the target relations; got {sorted(defined)}"
            )
        for name, formula in self.formulas:
            arity = self.target_schema.arity_of(name)
            k = len(free_variables(formula))
            if k != arity:
                raise ValueError(
                    f"view formula for {name!r} has {k} free variables, target arity is {arity}"
                )

    def formula_for(self, relation: str) -> Formula:
        for name, formula in self.formulas:
            if name == relation:
                return formula
        raise KeyError(relation)


def apply_view(d: Instance, v: View, u: Universe) -> Instance:
    """Image of one instance under the view; raises on infinite answers."""
    out: list[Fact] = []
    for name, formula in v.formulas:
        if v.target_schema.arity_of(name) == 0:
            if eval_boolean(d, formula, u):
                out.append(Fact(name, ()))
            continue
        answers = eval_query(d, formula, u)
        if answers is INFINITE_ANSWER:
            raise InfiniteAnswerError(
                f"view formula for {name!r} has an infinite answer on {d}"
            )
        out.extend(Fact(name, args) for args in answers)  # type: ignore[union-attr]
    return Instance(out)


def view_pushforward(p: FiniteDiscretePDB, v: View) -> FiniteDiscretePDB:
    """Image space of a finite PDB under an FO-view, accumulating collisions."""
    image: dict[Instance, float] = {}
    for d, prob in p.worlds.items():
        d_image = apply_view(d, v, p.universe)
        image[d_image] = image.get(d_image, 0.0) + prob
    return FiniteDiscretePDB(v.target_schema, p.universe, image)
