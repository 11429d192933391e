"""Exception types shared across the package."""


class IntroplanError(Exception):
    """Base class for all package errors."""


class ParseError(IntroplanError):
    """Malformed textual input (formula, domain, state, or fixture file)."""


class MalformedFormulaError(IntroplanError):
    """A formula violates a structural rule (arity, empty connective, unbound variable)."""


class MalformedBindingError(IntroplanError):
    """A substitution tries to bind a variable that a quantifier already binds."""


class MissingActionContextError(IntroplanError):
    """An action atom was evaluated without the transition's action."""


class MalformedActionError(IntroplanError):
    """A ground action has the wrong argument count or unknown constants."""


class PreconditionViolationError(IntroplanError):
    """An action was applied in a state where its precondition does not hold."""


class DomainValidationError(IntroplanError):
    """A domain definition references undeclared predicates or has inconsistent effects."""


class MutationLimitError(IntroplanError):
    """A mutation result set grew past the configured size cap."""


class StateCapExceededError(IntroplanError):
    """Reachability enumeration discovered more states than the cap allows."""


class PlanReplayError(IntroplanError):
    """A plan emitted by a planner failed to replay in the true environment."""


class SpecError(IntroplanError):
    """An experiment spec is incomplete or inconsistent."""
