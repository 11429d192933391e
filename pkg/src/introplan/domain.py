"""Relational states and STRIPS-style action schemas with formula preconditions.

States are immutable (constants, facts) pairs.  Schemas are fully
parameterized templates; grounding enumerates the full Cartesian product of
state constants over the parameters, filtered by precondition, in a
deterministic canonical order (schema declaration order, then lexicographic
arguments).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import (
    DomainValidationError,
    MalformedActionError,
    MalformedFormulaError,
    PreconditionViolationError,
)
from .fol import (
    ActionAtom,
    And,
    Const,
    Exists,
    Forall,
    Formula,
    Lit,
    Literal,
    Not,
    Or,
    PredicateDecl,
    TrueConst,
    Var,
    evaluate,
    free_variables,
    sorted_constants,
    substitute,
)
from .rewards import DecisionList


class RelState:
    """A set of constants plus the set of ground literals true in the state."""

    __slots__ = ("constants", "facts", "_hash")

    def __init__(self, constants: Iterable[Const], facts: Iterable[Literal]):
        constants = frozenset(constants)
        facts = frozenset(facts)
        for lit in facts:
            if not lit.ground:
                raise MalformedFormulaError(f"state fact {lit!r} is not ground")
            for t in lit.terms:
                if t not in constants:
                    raise MalformedFormulaError(
                        f"state fact {lit!r} uses unknown constant {t}"
                    )
        self.constants = constants
        self.facts = facts
        self._hash = hash((constants, facts))

    @classmethod
    def _unchecked(cls, constants: frozenset, facts: frozenset) -> "RelState":
        """Internal fast path for successor states derived from a valid state."""
        self = object.__new__(cls)
        self.constants = constants
        self.facts = facts
        self._hash = hash((constants, facts))
        return self

    def __eq__(self, other: object) -> bool:
        return (
            type(other) is RelState
            and self._hash == other._hash
            and self.constants == other.constants
            and self.facts == other.facts
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        facts = ", ".join(sorted(repr(f) for f in self.facts))
        return f"RelState({{{facts}}})"


@dataclass(frozen=True)
class ActionSchema:
    """A parameterized action template with formula precondition and add/del lists."""

    name: str
    params: tuple[Var, ...]
    precondition: Formula
    add: frozenset[Literal]
    delete: frozenset[Literal]

    def __post_init__(self) -> None:
        params = set(self.params)
        if len(params) != len(self.params):
            raise DomainValidationError(f"schema {self.name} repeats a parameter")
        extra = free_variables(self.precondition) - params
        if extra:
            raise DomainValidationError(
                f"schema {self.name} precondition uses non-parameters {sorted(map(str, extra))}"
            )
        for lit in itertools.chain(self.add, self.delete):
            for t in lit.terms:
                if not isinstance(t, Var) or t not in params:
                    raise DomainValidationError(
                        f"schema {self.name} effect {lit!r} must use parameters only"
                    )


class GroundAction:
    """A schema applied to constants; equality is (schema name, args)."""

    __slots__ = ("schema", "args", "_hash")

    def __init__(self, schema: ActionSchema, args: Iterable[Const]):
        args = tuple(args)
        if len(args) != len(schema.params):
            raise MalformedActionError(
                f"{schema.name} expects {len(schema.params)} argument(s), got {len(args)}"
            )
        self.schema = schema
        self.args = args
        self._hash = hash((schema.name, args))

    @property
    def name(self) -> str:
        return self.schema.name

    def __eq__(self, other: object) -> bool:
        return (
            type(other) is GroundAction
            and self._hash == other._hash
            and self.schema.name == other.schema.name
            and self.args == other.args
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"{self.schema.name}({', '.join(a.name for a in self.args)})"


def _formula_literals(f: Formula) -> Iterator[Literal]:
    if isinstance(f, Lit):
        yield f.literal
    elif isinstance(f, (And, Or)):
        for c in f.children:
            yield from (_formula_literals(c))
    elif isinstance(f, Not):
        yield from _formula_literals(f.child)
    elif isinstance(f, (Exists, Forall)):
        yield from _formula_literals(f.child)


def _formula_action_atoms(f: Formula) -> Iterator[ActionAtom]:
    if isinstance(f, ActionAtom):
        yield f
    elif isinstance(f, (And, Or)):
        for c in f.children:
            yield from _formula_action_atoms(c)
    elif isinstance(f, Not):
        yield from _formula_action_atoms(f.child)
    elif isinstance(f, (Exists, Forall)):
        yield from _formula_action_atoms(f.child)


@dataclass(frozen=True)
class DomainDef:
    """Predicate declarations, action schemas, and the reward/termination models."""

    name: str
    predicates: tuple[PredicateDecl, ...]
    schemas: tuple[ActionSchema, ...]
    reward: DecisionList
    termination: DecisionList

    def __post_init__(self) -> None:
        table: dict[str, PredicateDecl] = {}
        for p in self.predicates:
            if p.name in table:
                raise DomainValidationError(f"predicate {p.name} declared twice")
            table[p.name] = p
        names = {s.name for s in self.schemas}
        if len(names) != len(self.schemas):
            raise DomainValidationError("schema names must be unique")

        def check_literal(lit: Literal, where: str) -> None:
            decl = table.get(lit.pred.name)
            if decl is None:
                raise DomainValidationError(f"{where}: undeclared predicate {lit.pred.name}")
            if decl.arity != len(lit.terms):
                raise DomainValidationError(
                    f"{where}: {lit.pred.name} has arity {decl.arity}, used with {len(lit.terms)}"
                )

        def check_formula(f: Formula, where: str) -> None:
            for lit in _formula_literals(f):
                check_literal(lit, where)
            for atom in _formula_action_atoms(f):
                schema = next((s for s in self.schemas if s.name == atom.schema), None)
                if schema is None:
                    raise DomainValidationError(f"{where}: unknown action {atom.schema}")
                if len(atom.terms) != len(schema.params):
                    raise DomainValidationError(
                        f"{where}: action atom {atom.schema} has wrong argument count"
                    )

        for s in self.schemas:
            check_formula(s.precondition, f"schema {s.name}")
            for lit in itertools.chain(s.add, s.delete):
                check_literal(lit, f"schema {s.name}")
            _check_effects_disjoint(s)
        for label, dl in (("reward", self.reward), ("termination", self.termination)):
            for guard, _ in dl.clauses:
                check_formula(guard, label)

    def predicate(self, name: str) -> PredicateDecl:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)

    def schema(self, name: str) -> ActionSchema:
        for s in self.schemas:
            if s.name == name:
                return s
        raise KeyError(name)


def _check_effects_disjoint(schema: ActionSchema) -> None:
    """Reject schemas whose add and delete lists overlap under the all-distinct
    parameter binding.

    Repeated-argument bindings are exempt: standard domains rely on their
    preconditions to rule out aliased groundings (e.g. stacking a block on
    itself), and delete-before-add keeps ``apply`` well-defined regardless.
    """
    binding = {p: Const(f"_chk{i}") for i, p in enumerate(schema.params)}
    add = {ground_literal(l, binding) for l in schema.add}
    dele = {ground_literal(l, binding) for l in schema.delete}
    if add & dele:
        raise DomainValidationError(
            f"schema {schema.name}: add and delete lists overlap after grounding"
        )


def ground_literal(lit: Literal, binding: dict[Var, Const]) -> Literal:
    """Ground a schema literal with a parameter binding."""
    return Literal(lit.pred, tuple(binding[t] if isinstance(t, Var) else t for t in lit.terms))


def is_applicable(s: RelState, a: GroundAction) -> bool:
    """True iff the schema precondition holds in ``s`` under the argument binding."""
    if len(a.args) != len(a.schema.params):
        raise MalformedActionError(f"{a!r}: argument count mismatch")
    for c in a.args:
        if c not in s.constants:
            raise MalformedActionError(f"{a!r}: unknown constant {c}")
    binding = dict(zip(a.schema.params, a.args))
    return evaluate(substitute(a.schema.precondition, binding), s)


def apply(s: RelState, a: GroundAction) -> RelState:
    """The successor state of taking ``a`` in ``s``; inputs are unmodified."""
    if not is_applicable(s, a):
        raise PreconditionViolationError(f"{a!r} is not applicable")
    binding = dict(zip(a.schema.params, a.args))
    add = frozenset(ground_literal(l, binding) for l in a.schema.add)
    dele = frozenset(ground_literal(l, binding) for l in a.schema.delete)
    return RelState._unchecked(s.constants, (s.facts - dele) | add)


def _flatten_precondition(
    f: Formula,
) -> tuple[list[Literal], list[Literal]] | None:
    """Split a conjunction of (possibly negated) literals into (pos, neg) lists.

    Returns None when the precondition is not of that shape, in which case
    grounded applicability falls back to full formula evaluation.
    """
    pos: list[Literal] = []
    neg: list[Literal] = []
    conjuncts = f.children if isinstance(f, And) else (f,)
    for c in conjuncts:
        if isinstance(c, Lit):
            pos.append(c.literal)
        elif isinstance(c, Not) and isinstance(c.child, Lit):
            neg.append(c.child.literal)
        elif isinstance(c, TrueConst):
            continue
        else:
            return None
    return pos, neg


class _GroundEntry:
    __slots__ = ("action", "pos", "neg", "fallback", "add", "delete")

    def __init__(self, action, pos, neg, fallback, add, delete):
        self.action = action
        self.pos = pos
        self.neg = neg
        self.fallback = fallback
        self.add = add
        self.delete = delete


class GroundedDomain:
    """All ground actions of a domain for one fixed constant set.

    Preconditions that are flat literal conjunctions are precompiled into
    positive/negative fact sets so applicability is a pair of set operations.
    """

    def __init__(self, domain: DomainDef, constants: Iterable[Const]):
        self.domain = domain
        self.constants = frozenset(constants)
        order = sorted_constants(self.constants)
        self.entries: list[_GroundEntry] = []
        for schema in domain.schemas:
            flat = _flatten_precondition(schema.precondition)
            for args in itertools.product(order, repeat=len(schema.params)):
                binding = dict(zip(schema.params, args))
                action = GroundAction(schema, args)
                add = frozenset(ground_literal(l, binding) for l in schema.add)
                dele = frozenset(ground_literal(l, binding) for l in schema.delete)
                if flat is not None:
                    pos = frozenset(ground_literal(l, binding) for l in flat[0])
                    neg = frozenset(ground_literal(l, binding) for l in flat[1])
                    entry = _GroundEntry(action, pos, neg, None, add, dele)
                else:
                    grounded_pre = substitute(schema.precondition, binding)
                    entry = _GroundEntry(action, None, None, grounded_pre, add, dele)
                self.entries.append(entry)

    def applicable_entries(self, s: RelState) -> list[_GroundEntry]:
        facts = s.facts
        out = []
        for e in self.entries:
            if e.pos is not None:
                if e.pos <= facts and not (e.neg & facts):
                    out.append(e)
            elif evaluate(e.fallback, s):
                out.append(e)
        return out

    def applicable(self, s: RelState) -> list[GroundAction]:
        return [e.action for e in self.applicable_entries(s)]


_GROUNDING_CACHE: dict[tuple[int, frozenset], tuple[DomainDef, GroundedDomain]] = {}


def grounding(domain: DomainDef, constants: frozenset) -> GroundedDomain:
    """Grounding for (domain, constants), cached per constant set."""
    key = (id(domain), constants)
    hit = _GROUNDING_CACHE.get(key)
    if hit is not None:
        return hit[1]
    g = GroundedDomain(domain, constants)
    _GROUNDING_CACHE[key] = (domain, g)  # keep the domain alive so its id stays valid
    return g


def applicable_actions(s: RelState, d: DomainDef) -> list[GroundAction]:
    """All ground actions whose precondition holds in ``s``, canonically ordered."""
    return grounding(d, s.constants).applicable(s)
