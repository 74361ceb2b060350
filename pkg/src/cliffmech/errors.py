"""Exception hierarchy shared across the package."""


class CliffmechError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(CliffmechError, ValueError):
    """An argument violates a documented precondition."""


class SingularSystemError(CliffmechError, ArithmeticError):
    """A 2-form that must be nondegenerate is not."""


class ParseError(CliffmechError, ValueError):
    """Syntax or range error in a Hamiltonian expression.

    Attributes:
        offset: Character offset into the source text (``0 <= offset <= len(text)``).
        message: Human readable description.
        expected: Token kinds that would have been accepted at ``offset``.
    """

    def __init__(self, message: str, offset: int, expected=(), text: str = ""):
        self.message = message
        self.offset = offset
        self.expected = frozenset(expected)
        self.text = text
        super().__init__(f"{message} at offset {offset}")

    @property
    def diagnostics(self) -> dict:
        return {
            "offset": self.offset,
            "message": self.message,
            "expected": sorted(self.expected),
        }


class EvaluationError(CliffmechError, ArithmeticError):
    """Numerical domain error while evaluating an expression tree."""

    def __init__(self, message: str, subtree=None):
        self.subtree = subtree
        where = f" in {subtree}" if subtree is not None else ""
        super().__init__(message + where)


class IntegrationError(CliffmechError, RuntimeError):
    """The integrator failed at a particular step."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(f"{message} (step {step})")


class DivergenceError(IntegrationError):
    """The state became non-finite."""
