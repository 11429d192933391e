"""Textual syntax for formulas, domain definitions, and states.

Formula grammar (round-trips through :func:`format_formula`):

    true
    (lit Name term*)          terms: ?X for variables, bare names for constants
    (and f+) (or f+) (not f)
    (exists ?X f) (forall ?X f)
    (action Name term*)

Domain files declare predicates, schemas, and the reward / termination
decision lists; states list constants and ground facts.  In literal-only
positions (facts, add/del lists) the ``lit`` marker may be omitted.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .domain import ActionSchema, DomainDef, RelState
from .errors import ParseError
from .fol import (
    TRUE,
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
    Term,
    TrueConst,
    Var,
)
from .rewards import EvalOver, DecisionList, TerminationValue

Node = "str | list[Node]"

_TERMINATION_WORDS = {
    "success": Fraction(TerminationValue.SUCCESS.value),
    "continue": Fraction(TerminationValue.CONTINUE.value),
    "failure": Fraction(TerminationValue.FAILURE.value),
}


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in "()":
            tokens.append(ch)
            i += 1
        elif ch.isspace():
            i += 1
        elif ch == ";":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def _read(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise ParseError("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise ParseError("unbalanced '('")
            if tokens[pos] == ")":
                return items, pos + 1
            node, pos = _read(tokens, pos)
            items.append(node)
    if tok == ")":
        raise ParseError("unbalanced ')'")
    return tok, pos + 1


def read_one(text: str):
    """Parse a single s-expression; trailing junk is an error."""
    tokens = _tokenize(text)
    node, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise ParseError(f"trailing input after expression: {tokens[pos]!r}")
    return node


def _term(tok) -> Term:
    if not isinstance(tok, str):
        raise ParseError(f"expected a term, got {tok!r}")
    if tok.startswith("?"):
        if len(tok) == 1:
            raise ParseError("empty variable name")
        return Var(tok[1:])
    return Const(tok)


def _formula(node, predicates: Mapping[str, PredicateDecl] | None) -> Formula:
    if node == "true":
        return TRUE
    if isinstance(node, str):
        raise ParseError(f"unknown formula atom {node!r}")
    if not node:
        raise ParseError("empty formula")
    head = node[0]
    if head == "lit":
        if len(node) < 2 or not isinstance(node[1], str):
            raise ParseError("(lit Name term*) expected")
        name = node[1]
        terms = tuple(_term(t) for t in node[2:])
        if predicates is not None:
            if name not in predicates:
                raise ParseError(f"undeclared predicate {name!r}")
            pred = predicates[name]
        else:
            pred = PredicateDecl(name, len(terms))
        return Lit(Literal(pred, terms))
    if head == "and":
        return And(tuple(_formula(c, predicates) for c in node[1:]))
    if head == "or":
        return Or(tuple(_formula(c, predicates) for c in node[1:]))
    if head == "not":
        if len(node) != 2:
            raise ParseError("(not f) expected")
        return Not(_formula(node[1], predicates))
    if head in ("exists", "forall"):
        if len(node) != 3 or not isinstance(node[1], str) or not node[1].startswith("?"):
            raise ParseError(f"({head} ?X f) expected")
        var = Var(node[1][1:])
        child = _formula(node[2], predicates)
        return Exists(var, child) if head == "exists" else Forall(var, child)
    if head == "action":
        if len(node) < 2 or not isinstance(node[1], str):
            raise ParseError("(action Name term*) expected")
        return ActionAtom(node[1], tuple(_term(t) for t in node[2:]))
    raise ParseError(f"unknown formula head {head!r}")


def parse_formula(text: str, predicates: Mapping[str, PredicateDecl] | None = None) -> Formula:
    """Parse a formula; with ``predicates`` given, literals are checked against it."""
    return _formula(read_one(text), predicates)


def format_formula(f: Formula) -> str:
    if isinstance(f, TrueConst):
        return "true"
    if isinstance(f, Lit):
        parts = [f.literal.pred.name] + [str(t) for t in f.literal.terms]
        return "(lit " + " ".join(parts) + ")"
    if isinstance(f, And):
        return "(and " + " ".join(format_formula(c) for c in f.children) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(format_formula(c) for c in f.children) + ")"
    if isinstance(f, Not):
        return "(not " + format_formula(f.child) + ")"
    if isinstance(f, Exists):
        return f"(exists {f.var} " + format_formula(f.child) + ")"
    if isinstance(f, Forall):
        return f"(forall {f.var} " + format_formula(f.child) + ")"
    if isinstance(f, ActionAtom):
        parts = [f.schema] + [str(t) for t in f.terms]
        return "(action " + " ".join(parts) + ")"
    raise ParseError(f"cannot format {f!r}")


def _bare_literal(node, predicates: Mapping[str, PredicateDecl]) -> Literal:
    """Literal in literal-only position: (Name term*) with (lit ...) also accepted."""
    if not isinstance(node, list) or not node or not isinstance(node[0], str):
        raise ParseError(f"expected a literal, got {node!r}")
    if node[0] == "lit":
        node = node[1:]
        if not node or not isinstance(node[0], str):
            raise ParseError("(lit Name term*) expected")
    name = node[0]
    if name not in predicates:
        raise ParseError(f"undeclared predicate {name!r}")
    return Literal(predicates[name], tuple(_term(t) for t in node[1:]))


def _keyed(items: list, what: str) -> dict:
    out = {}
    for item in items:
        if not isinstance(item, list) or not item or not isinstance(item[0], str):
            raise ParseError(f"malformed {what} entry: {item!r}")
        out.setdefault(item[0], []).append(item[1:])
    return out


def _value(tok) -> Fraction:
    if not isinstance(tok, str):
        raise ParseError(f"expected a value, got {tok!r}")
    if tok in _TERMINATION_WORDS:
        return _TERMINATION_WORDS[tok]
    try:
        return Fraction(tok)
    except ValueError as exc:
        raise ParseError(f"bad clause value {tok!r}") from exc


def _decision_list(entries: list, predicates) -> DecisionList:
    eval_over = EvalOver.NEXT_STATE
    clauses: list[tuple[Formula, Fraction]] = []
    for entry in entries:
        if not isinstance(entry, list) or not entry:
            raise ParseError(f"malformed decision-list entry {entry!r}")
        head = entry[0]
        if head == "over":
            if entry[1:] == ["prior"]:
                eval_over = EvalOver.PRIOR_STATE
            elif entry[1:] == ["next"]:
                eval_over = EvalOver.NEXT_STATE
            else:
                raise ParseError("(over prior|next) expected")
        elif head == "when":
            if len(entry) != 3:
                raise ParseError("(when <formula> <value>) expected")
            clauses.append((_formula(entry[1], predicates), _value(entry[2])))
        elif head == "else":
            if len(entry) != 2:
                raise ParseError("(else <value>) expected")
            clauses.append((TRUE, _value(entry[1])))
        else:
            raise ParseError(f"unknown decision-list entry {head!r}")
    return DecisionList(tuple(clauses), eval_over)


def parse_domain(text: str) -> DomainDef:
    """Parse a domain definition file."""
    node = read_one(text)
    if not isinstance(node, list) or len(node) < 2 or node[0] != "domain":
        raise ParseError("(domain <name> ...) expected")
    name = node[1]
    if not isinstance(name, str):
        raise ParseError("domain name must be an atom")
    sections = _keyed(node[2:], "domain")

    predicates: dict[str, PredicateDecl] = {}
    for decls in sections.get("predicates", []):
        for decl in decls:
            if not isinstance(decl, list) or len(decl) != 2:
                raise ParseError(f"(Name arity) expected, got {decl!r}")
            pname, arity = decl
            try:
                predicates[pname] = PredicateDecl(pname, int(arity))
            except ValueError as exc:
                raise ParseError(f"bad arity {arity!r} for {pname}") from exc

    schemas = []
    for body in sections.get("schema", []):
        if not body or not isinstance(body[0], str):
            raise ParseError("(schema Name ...) expected")
        sname = body[0]
        parts = _keyed(body[1:], f"schema {sname}")
        params_entries = parts.get("params", [[]])
        params = tuple(_term(t) for t in params_entries[0])
        if not all(isinstance(p, Var) for p in params):
            raise ParseError(f"schema {sname} parameters must be variables")
        pre_entries = parts.get("pre")
        if not pre_entries or len(pre_entries[0]) != 1:
            raise ParseError(f"schema {sname} needs exactly one (pre <formula>)")
        pre = _formula(pre_entries[0][0], predicates)
        add = frozenset(
            _bare_literal(l, predicates) for l in parts.get("add", [[]])[0]
        )
        dele = frozenset(
            _bare_literal(l, predicates) for l in parts.get("del", [[]])[0]
        )
        schemas.append(ActionSchema(sname, params, pre, add, dele))

    if "reward" not in sections or "termination" not in sections:
        raise ParseError(f"domain {name} needs reward and termination decision lists")
    reward = _decision_list(sections["reward"][0], predicates)
    termination = _decision_list(sections["termination"][0], predicates)
    for _, v in termination.clauses:
        if v not in (Fraction(-1), Fraction(0), Fraction(1)):
            raise ParseError(f"termination value {v} outside {{-1, 0, 1}}")

    return DomainDef(
        name=name,
        predicates=tuple(predicates.values()),
        schemas=tuple(schemas),
        reward=reward,
        termination=termination,
    )


def parse_state(text_or_node, predicates: Mapping[str, PredicateDecl]) -> RelState:
    """Parse ``(state (constants ...) (facts ...))``."""
    node = read_one(text_or_node) if isinstance(text_or_node, str) else text_or_node
    if not isinstance(node, list) or not node or node[0] != "state":
        raise ParseError("(state ...) expected")
    sections = _keyed(node[1:], "state")
    consts_entries = sections.get("constants", [[]])[0]
    constants = []
    for tok in consts_entries:
        t = _term(tok)
        if not isinstance(t, Const):
            raise ParseError(f"state constants must be constants, got {tok!r}")
        constants.append(t)
    facts = [_bare_literal(l, predicates) for l in sections.get("facts", [[]])[0]]
    return RelState(frozenset(constants), frozenset(facts))


def format_state(state: RelState) -> str:
    consts = " ".join(c.name for c in sorted(state.constants, key=lambda c: c.name))
    facts = " ".join(
        f"({f.pred.name} {' '.join(t.name for t in f.terms)})".replace(" )", ")")
        for f in sorted(state.facts, key=repr)
    )
    return f"(state (constants {consts}) (facts {facts}))"


def parse_instance(
    text: str, domain_lookup: Callable[[str], DomainDef]
) -> tuple[DomainDef, RelState]:
    """Parse ``(instance (domain <name>) (state ...))``; domains resolve by name."""
    node = read_one(text)
    if not isinstance(node, list) or not node or node[0] != "instance":
        raise ParseError("(instance ...) expected")
    sections = _keyed(node[1:], "instance")
    if "domain" not in sections or len(sections["domain"][0]) != 1:
        raise ParseError("(domain <name>) expected in instance")
    domain = domain_lookup(sections["domain"][0][0])
    if "state" not in sections:
        raise ParseError("(state ...) expected in instance")
    predicates = {p.name: p for p in domain.predicates}
    state = parse_state(["state"] + sections["state"][0], predicates)
    return domain, state
