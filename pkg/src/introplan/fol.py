"""First-order logic core: terms, literals, and formulas, with substitution
and evaluation over relational states.

Formulas are immutable trees built from literals, connectives (and/or/not),
quantifiers (exists/forall), action atoms, and the constant ``true``.
Quantifiers range over the constants of the state being evaluated, in name
order.  A quantifier may not rebind a variable that an inner quantifier
already binds, which keeps substitution capture-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Mapping

from .errors import (
    MalformedBindingError,
    MalformedFormulaError,
    MissingActionContextError,
)

if TYPE_CHECKING:
    from .domain import GroundAction, RelState


@dataclass(frozen=True, slots=True)
class Const:
    """A named object."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Var:
    """A named variable; printed with a ``?`` prefix."""

    name: str

    def __str__(self) -> str:
        return "?" + self.name


Term = Const | Var


@dataclass(frozen=True, slots=True)
class PredicateDecl:
    """A predicate name with its fixed arity."""

    name: str
    arity: int

    def __post_init__(self) -> None:
        if self.arity < 0:
            raise MalformedFormulaError(f"negative arity for {self.name}")

    def __call__(self, *terms: Term) -> Literal:
        return Literal(self, terms)


class Literal:
    """A predicate applied to an ordered tuple of terms.

    ``ground`` holds iff no term is a variable.  Hash is cached; literals are
    compared by predicate and terms.
    """

    __slots__ = ("pred", "terms", "_hash")

    def __init__(self, pred: PredicateDecl, terms: Iterable[Term] = ()):
        terms = tuple(terms)
        if len(terms) != pred.arity:
            raise MalformedFormulaError(
                f"{pred.name}/{pred.arity} applied to {len(terms)} term(s)"
            )
        self.pred = pred
        self.terms = terms
        self._hash = hash((pred.name, terms))

    @property
    def ground(self) -> bool:
        return all(type(t) is Const for t in self.terms)

    def __eq__(self, other: object) -> bool:
        return (
            type(other) is Literal
            and self._hash == other._hash
            and self.pred == other.pred
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"{self.pred.name}({', '.join(str(t) for t in self.terms)})"


class Formula:
    """Base class for formula nodes."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Lit(Formula):
    literal: Literal


@dataclass(frozen=True, slots=True)
class And(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise MalformedFormulaError("'and' needs at least one child")


@dataclass(frozen=True, slots=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise MalformedFormulaError("'or' needs at least one child")


@dataclass(frozen=True, slots=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class Exists(Formula):
    var: Var
    child: Formula

    def __post_init__(self) -> None:
        if _rebinds(self.child, self.var):
            raise MalformedFormulaError(f"{self.var} rebound by an inner quantifier")


@dataclass(frozen=True, slots=True)
class Forall(Formula):
    var: Var
    child: Formula

    def __post_init__(self) -> None:
        if _rebinds(self.child, self.var):
            raise MalformedFormulaError(f"{self.var} rebound by an inner quantifier")


@dataclass(frozen=True, slots=True)
class ActionAtom(Formula):
    """Constrains the transition's action to a named schema with given arguments."""

    schema: str
    terms: tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True, slots=True)
class TrueConst(Formula):
    """The formula that is always true; the default decision-list guard."""


TRUE = TrueConst()


def _rebinds(f: Formula, var: Var) -> bool:
    if isinstance(f, (Exists, Forall)):
        return f.var == var or _rebinds(f.child, var)
    if isinstance(f, Not):
        return _rebinds(f.child, var)
    if isinstance(f, (And, Or)):
        return any(_rebinds(c, var) for c in f.children)
    return False


def free_variables(f: Formula) -> frozenset[Var]:
    """Variables occurring outside the scope of any binding quantifier."""
    out: set[Var] = set()
    _collect_free(f, frozenset(), out)
    return frozenset(out)


def _collect_free(f: Formula, bound: frozenset[Var], out: set[Var]) -> None:
    if isinstance(f, Lit):
        out.update(t for t in f.literal.terms if type(t) is Var and t not in bound)
    elif isinstance(f, ActionAtom):
        out.update(t for t in f.terms if type(t) is Var and t not in bound)
    elif isinstance(f, (And, Or)):
        for c in f.children:
            _collect_free(c, bound, out)
    elif isinstance(f, Not):
        _collect_free(f.child, bound, out)
    elif isinstance(f, (Exists, Forall)):
        _collect_free(f.child, bound | {f.var}, out)


def substitute(f: Formula, binding: Mapping[Var, Const]) -> Formula:
    """Return ``f`` with the mapped free variables replaced by constants.

    The input is left unmodified; unchanged subtrees are shared.  Binding a
    variable that an inner quantifier binds raises MalformedBindingError.
    """
    if not binding:
        return f
    return _subst(f, binding)


def _subst_terms(terms: tuple[Term, ...], binding: Mapping[Var, Const]):
    changed = False
    out = []
    for t in terms:
        if type(t) is Var and t in binding:
            out.append(binding[t])
            changed = True
        else:
            out.append(t)
    return (tuple(out), changed)


def _subst(f: Formula, binding: Mapping[Var, Const]) -> Formula:
    if isinstance(f, Lit):
        terms, changed = _subst_terms(f.literal.terms, binding)
        return Lit(Literal(f.literal.pred, terms)) if changed else f
    if isinstance(f, ActionAtom):
        terms, changed = _subst_terms(f.terms, binding)
        return ActionAtom(f.schema, terms) if changed else f
    if isinstance(f, And):
        children = tuple(_subst(c, binding) for c in f.children)
        return f if all(a is b for a, b in zip(children, f.children)) else And(children)
    if isinstance(f, Or):
        children = tuple(_subst(c, binding) for c in f.children)
        return f if all(a is b for a, b in zip(children, f.children)) else Or(children)
    if isinstance(f, Not):
        child = _subst(f.child, binding)
        return f if child is f.child else Not(child)
    if isinstance(f, (Exists, Forall)):
        if f.var in binding:
            raise MalformedBindingError(f"cannot bind quantified variable {f.var}")
        child = _subst(f.child, binding)
        if child is f.child:
            return f
        return Exists(f.var, child) if isinstance(f, Exists) else Forall(f.var, child)
    if isinstance(f, TrueConst):
        return f
    raise MalformedFormulaError(f"unknown formula node {f!r}")


def sorted_constants(constants: Iterable[Const]) -> list[Const]:
    """Canonical (name-ordered) iteration order for a constant set."""
    return sorted(constants, key=lambda c: c.name)


def evaluate(f: Formula, state: RelState, action: GroundAction | None = None) -> bool:
    """Truth of ``f`` in ``state`` under standard FOL semantics.

    Quantifiers range over ``state.constants``; a ground literal is true iff
    it is a member of ``state.facts``; ``forall`` over an empty constant set
    is vacuously true and ``exists`` is false.  Action atoms compare against
    ``action`` (the transition's action) and require it to be supplied.
    """
    return _eval(f, state, action, {}, sorted_constants(state.constants))


def _resolve_terms(terms: tuple[Term, ...], env: dict[Var, Const]) -> tuple[Const, ...]:
    out = []
    for t in terms:
        if type(t) is Const:
            out.append(t)
        else:
            c = env.get(t)
            if c is None:
                raise MalformedFormulaError(f"unbound variable {t}")
            out.append(c)
    return tuple(out)


def _eval(
    f: Formula,
    state: RelState,
    action: GroundAction | None,
    env: dict[Var, Const],
    consts: list[Const],
) -> bool:
    if isinstance(f, Lit):
        lit = f.literal
        if not lit.ground:
            lit = Literal(lit.pred, _resolve_terms(lit.terms, env))
        return lit in state.facts
    if isinstance(f, And):
        return all(_eval(c, state, action, env, consts) for c in f.children)
    if isinstance(f, Or):
        return any(_eval(c, state, action, env, consts) for c in f.children)
    if isinstance(f, Not):
        return not _eval(f.child, state, action, env, consts)
    if isinstance(f, Exists):
        for c in consts:
            env[f.var] = c
            if _eval(f.child, state, action, env, consts):
                del env[f.var]
                return True
        env.pop(f.var, None)
        return False
    if isinstance(f, Forall):
        for c in consts:
            env[f.var] = c
            if not _eval(f.child, state, action, env, consts):
                del env[f.var]
                return False
        env.pop(f.var, None)
        return True
    if isinstance(f, ActionAtom):
        if action is None:
            raise MissingActionContextError(
                f"action atom {f.schema} evaluated without a transition action"
            )
        args = _resolve_terms(f.terms, env)
        return action.schema.name == f.schema and action.args == args
    if isinstance(f, TrueConst):
        return True
    raise MalformedFormulaError(f"unknown formula node {f!r}")


GroundEvaluator = Callable[[frozenset, object], bool]


def compile_ground_evaluator(f: Formula, constants: Iterable[Const]) -> GroundEvaluator:
    """Precompile a closed formula for repeated evaluation over one constant set.

    Quantifiers are expanded up front, so the returned callable takes the fact
    set and the transition action directly.  Agrees with :func:`evaluate` on
    every input; used on hot paths (decision-list guards, search goal tests).
    """
    return _compile(f, sorted_constants(constants))


def _compile(f: Formula, consts: list[Const]) -> GroundEvaluator:
    if isinstance(f, Lit):
        lit = f.literal
        if not lit.ground:
            raise MalformedFormulaError(f"free variable in {lit!r} at compile time")
        return lambda facts, action, _l=lit: _l in facts
    if isinstance(f, And):
        subs = tuple(_compile(c, consts) for c in f.children)
        if len(subs) == 1:
            return subs[0]
        return lambda facts, action, _s=subs: all(fn(facts, action) for fn in _s)
    if isinstance(f, Or):
        subs = tuple(_compile(c, consts) for c in f.children)
        if len(subs) == 1:
            return subs[0]
        return lambda facts, action, _s=subs: any(fn(facts, action) for fn in _s)
    if isinstance(f, Not):
        sub = _compile(f.child, consts)
        return lambda facts, action, _f=sub: not _f(facts, action)
    if isinstance(f, Exists):
        subs = tuple(
            _compile(substitute(f.child, {f.var: c}), consts) for c in consts
        )
        return lambda facts, action, _s=subs: any(fn(facts, action) for fn in _s)
    if isinstance(f, Forall):
        subs = tuple(
            _compile(substitute(f.child, {f.var: c}), consts) for c in consts
        )
        return lambda facts, action, _s=subs: all(fn(facts, action) for fn in _s)
    if isinstance(f, ActionAtom):
        args = tuple(f.terms)
        if any(type(t) is Var for t in args):
            raise MalformedFormulaError(f"free variable in action atom {f.schema}")

        def _match(facts, action, _n=f.schema, _a=args):
            if action is None:
                raise MissingActionContextError(
                    f"action atom {_n} evaluated without a transition action"
                )
            return action.schema.name == _n and action.args == _a

        return _match
    if isinstance(f, TrueConst):
        return lambda facts, action: True
    raise MalformedFormulaError(f"unknown formula node {f!r}")
