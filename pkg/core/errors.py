"""
Exception hierarchy for keisler-lab.

Input problems subclass ValueError; budget exhaustion is kept apart because the
runner reports it with its own exit code.
"""


class KeislerLabError(Exception):
    """Base class for every error raised by the library."""


class FormulaSyntaxError(KeislerLabError, ValueError):
    def __init__(self, message, offset=None, line=None, column=None):
        self.offset = offset
        self.line = line
        self.column = column
        if offset is not None:
            message = f"{message} (line {line}, column {column}, offset {offset})"
        super().__init__(message)


class SignatureError(KeislerLabError, ValueError):
    """Unknown relation/constant or arity mismatch."""


class PartitionError(KeislerLabError, ValueError):
    pass


class EvaluationError(KeislerLabError, ValueError):
    """Unassigned free variable or element outside the domain."""


class UndecidableInstance(KeislerLabError):
    """A theory plugin cannot decide an instance in the given context."""


class FiberError(KeislerLabError):
    """Two realizers of the same atom gave different fiber values."""


class MeasureError(KeislerLabError, ValueError):
    pass


class CertificateError(KeislerLabError, ValueError):
    pass


class SpecError(KeislerLabError, ValueError):
    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        if lineno is not None:
            message = f"{path or '<experiment>'}:{lineno}: {message}"
        super().__init__(message)


class BudgetExceeded(KeislerLabError):
    pass


class TypeSpaceError(KeislerLabError, ValueError):
    """Atoms that collide on their traces, or a base that is not a sublist."""
