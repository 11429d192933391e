"""State mutation: minimal constraint sets that satisfy (or falsify) a formula.

A mutation is a set of ground literals to make true, a set to make false,
and optionally an action the final transition must take.  The distinguished
value IMMUTABLY_VALID marks a formula that is true in the current state and
that no action can falsify; the empty result set marks an unsatisfiable
formula.  Mutability is predicate-level: a literal can become true iff its
predicate appears in some schema's add list, and false iff in some delete
list.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

from .domain import ActionSchema, DomainDef, GroundAction, RelState
from .errors import MalformedFormulaError, MutationLimitError
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
    TrueConst,
    Var,
    free_variables,
    sorted_constants,
    substitute,
)

if TYPE_CHECKING:
    from .domain import GroundAction


DEFAULT_MUTATION_LIMIT = 10_000


class _ImmutablyValid:
    """Singleton for formulas that are true now and cannot be falsified."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "IMMUTABLY_VALID"


class _Contradiction:
    """Singleton for unsatisfiable combinations; never escapes this module's results."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "CONTRADICTION"


IMMUTABLY_VALID = _ImmutablyValid()
CONTRADICTION = _Contradiction()


class Mutation:
    """Literals to make true / make false, plus an optional required final action."""

    __slots__ = ("make_true", "make_false", "required_action", "_hash")

    def __init__(
        self,
        make_true: Iterable[Literal] = (),
        make_false: Iterable[Literal] = (),
        required_action: GroundAction | None = None,
    ):
        make_true = frozenset(make_true)
        make_false = frozenset(make_false)
        if make_true & make_false:
            raise MalformedFormulaError("mutation asserts a literal both true and false")
        self.make_true = make_true
        self.make_false = make_false
        self.required_action = required_action
        self._hash = hash((make_true, make_false, required_action))

    def __eq__(self, other: object) -> bool:
        return (
            type(other) is Mutation
            and self._hash == other._hash
            and self.make_true == other.make_true
            and self.make_false == other.make_false
            and self.required_action == other.required_action
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Mutation({format_mutation(self)})"


MutationResult = "Mutation | _ImmutablyValid"


def format_mutation(m) -> str:
    """Render one mutation as ``+Lit ... -Lit ... @Action``, sorted."""
    if m is IMMUTABLY_VALID:
        return "IMMUTABLY_VALID"
    parts = [f"+{lit!r}" for lit in sorted(m.make_true, key=repr)]
    parts += [f"-{lit!r}" for lit in sorted(m.make_false, key=repr)]
    if m.required_action is not None:
        parts.append(f"@{m.required_action!r}")
    return " ".join(parts) if parts else "(empty)"


def dump_mutations(ms: Iterable) -> str:
    """Debug dump: one mutation per line, in canonical order."""
    return "\n".join(format_mutation(m) for m in sorted(ms, key=_sort_key))


def _sort_key(m):
    if m is IMMUTABLY_VALID:
        return (0, (), (), "")
    return (
        1,
        tuple(sorted(repr(l) for l in m.make_true)),
        tuple(sorted(repr(l) for l in m.make_false)),
        repr(m.required_action) if m.required_action is not None else "",
    )


@dataclass(frozen=True)
class MutabilityIndex:
    """Per-predicate mutability derived from a domain's add and delete lists."""

    addable: frozenset[str]
    deletable: frozenset[str]
    schemas: Mapping[str, ActionSchema] = field(default_factory=dict)

    @classmethod
    def from_domain(cls, domain: DomainDef) -> "MutabilityIndex":
        addable = frozenset(l.pred.name for s in domain.schemas for l in s.add)
        deletable = frozenset(l.pred.name for s in domain.schemas for l in s.delete)
        return cls(addable, deletable, {s.name: s for s in domain.schemas})

    def can_become_true(self, pred_name: str) -> bool:
        return pred_name in self.addable

    def can_become_false(self, pred_name: str) -> bool:
        return pred_name in self.deletable


def satisfy_all(ms: Iterable):
    """Flatten a set of mutations into one that satisfies all of them.

    IMMUTABLY_VALID members are skipped (all-valid input stays valid).  Two
    distinct required actions, or a literal required both true and false,
    yield the CONTRADICTION sentinel, which callers drop.
    """
    make_true: set[Literal] = set()
    make_false: set[Literal] = set()
    action: GroundAction | None = None
    all_valid = True
    for m in ms:
        if m is IMMUTABLY_VALID:
            continue
        all_valid = False
        make_true |= m.make_true
        make_false |= m.make_false
        if m.required_action is not None:
            if action is not None and action != m.required_action:
                return CONTRADICTION
            action = m.required_action
    if all_valid:
        return IMMUTABLY_VALID
    if make_true & make_false:
        return CONTRADICTION
    return Mutation(make_true, make_false, action)


def satisfy_each(sets: Sequence[Sequence], limit: int = DEFAULT_MUTATION_LIMIT) -> list:
    """Every way of satisfying one mutation from each input set (Cartesian product).

    Contradictory combinations are dropped; the result is deduplicated.  An
    empty input set makes the whole conjunction unsatisfiable.
    """
    out: dict = {}
    count = 1
    for s in sets:
        count *= len(s)
        if count > limit:
            raise MutationLimitError(f"mutation product exceeds cap ({limit})")
        if count == 0:
            return []
    for choice in itertools.product(*sets):
        m = satisfy_all(choice)
        if m is CONTRADICTION:
            continue
        out[m] = None
        if len(out) > limit:
            raise MutationLimitError(f"mutation set exceeds cap ({limit})")
    return list(out)


def satisfy_any(sets: Sequence[Sequence], limit: int = DEFAULT_MUTATION_LIMIT) -> list:
    """Union of the input sets; IMMUTABLY_VALID absorbs everything else."""
    out: dict = {}
    for s in sets:
        for m in s:
            if m is IMMUTABLY_VALID:
                return [IMMUTABLY_VALID]
            out[m] = None
            if len(out) > limit:
                raise MutationLimitError(f"mutation set exceeds cap ({limit})")
    return list(out)


def mutate_true(
    s: RelState,
    f: Formula,
    idx: MutabilityIndex,
    limit: int = DEFAULT_MUTATION_LIMIT,
) -> tuple:
    """All minimal mutations of ``s`` that satisfy ``f``, canonically ordered.

    The empty tuple means the formula is unsatisfiable from ``s``; the tuple
    (IMMUTABLY_VALID,) means it is already true and cannot be falsified.
    """
    if free_variables(f):
        raise MalformedFormulaError(f"mutate_true needs a closed formula, got free {sorted(map(str, free_variables(f)))}")
    return tuple(sorted(_mutate(s, f, idx, limit, True), key=_sort_key))


def mutate_false(
    s: RelState,
    f: Formula,
    idx: MutabilityIndex,
    limit: int = DEFAULT_MUTATION_LIMIT,
) -> tuple:
    """Dual of :func:`mutate_true`: mutations that falsify ``f``."""
    if free_variables(f):
        raise MalformedFormulaError(f"mutate_false needs a closed formula, got free {sorted(map(str, free_variables(f)))}")
    return tuple(sorted(_mutate(s, f, idx, limit, False), key=_sort_key))


def _mutate(s: RelState, f: Formula, idx: MutabilityIndex, limit: int, target: bool) -> list:
    if isinstance(f, Lit):
        lit = f.literal
        if not lit.ground:
            raise MalformedFormulaError(f"unbound variable in {lit!r}")
        if target:
            if idx.can_become_true(lit.pred.name):
                return [Mutation(make_true=(lit,))]
            if lit in s.facts:
                return [IMMUTABLY_VALID]
            return []
        if idx.can_become_false(lit.pred.name):
            return [Mutation(make_false=(lit,))]
        if lit not in s.facts:
            return [IMMUTABLY_VALID]
        return []
    if isinstance(f, And):
        children = [_mutate(s, c, idx, limit, target) for c in f.children]
        return satisfy_each(children, limit) if target else satisfy_any(children, limit)
    if isinstance(f, Or):
        children = [_mutate(s, c, idx, limit, target) for c in f.children]
        return satisfy_any(children, limit) if target else satisfy_each(children, limit)
    if isinstance(f, Not):
        return _mutate(s, f.child, idx, limit, not target)
    if isinstance(f, (Exists, Forall)):
        family = [
            _mutate(s, substitute(f.child, {f.var: c}), idx, limit, target)
            for c in sorted_constants(s.constants)
        ]
        use_each = isinstance(f, Forall) if target else isinstance(f, Exists)
        return satisfy_each(family, limit) if use_each else satisfy_any(family, limit)
    if isinstance(f, ActionAtom):
        if any(isinstance(t, Var) for t in f.terms):
            raise MalformedFormulaError(f"unbound variable in action atom {f.schema}")
        if not target:
            # A negative action constraint is vacuous for the goal test: the
            # final transition already has to match the required action, so a
            # "forbidden action" carries no further constraint.
            return [IMMUTABLY_VALID]
        schema = idx.schemas.get(f.schema)
        if schema is None:
            raise MalformedFormulaError(f"action atom names unknown schema {f.schema}")
        return [Mutation(required_action=GroundAction(schema, f.terms))]
    if isinstance(f, TrueConst):
        return [IMMUTABLY_VALID] if target else []
    raise MalformedFormulaError(f"unknown formula node {f!r}")


def is_satisfied(m, s: RelState, a: GroundAction | None = None) -> bool:
    """Goal test: does state ``s`` (with final action ``a``) realize the mutation?"""
    if m is IMMUTABLY_VALID:
        return True
    facts = s.facts
    if not m.make_true <= facts:
        return False
    if m.make_false & facts:
        return False
    return m.required_action is None or a == m.required_action
