"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class SpeclocError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SpeclocError, ValueError):
    """Input violates a documented precondition."""


class ParseError(ValidationError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class DegenerateDegreeError(ValidationError):
    """A node has zero degree where a degree normalization is required."""

    def __init__(self, node):
        self.node = node
        super().__init__(f"node {node} has zero degree (isolated node)")


class UndefinedRatioError(ValidationError):
    pass


class InsufficientSupportError(ValidationError):
    pass


class GenerationError(SpeclocError):
    """A random generator could not satisfy its constraints within the retry budget."""


class InapplicableCheckError(SpeclocError):
    """A check was requested on data it cannot be applied to."""


class NumericError(SpeclocError, ArithmeticError):
    pass


class NumericOverflowError(NumericError):
    def __init__(self, layer):
        self.layer = layer
        super().__init__(f"non-finite values appeared at layer {layer}")


class ConstructionError(NumericError):
    """A matrix that must be PSD by construction is not."""
