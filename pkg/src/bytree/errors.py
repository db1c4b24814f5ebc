"""Named failures raised across the package."""


class ByTreeError(Exception):
    """Base class for every error raised here."""


class InputError(ByTreeError):
    """Problems with the input document or object (CLI exit code 2)."""


class ComputationError(ByTreeError):
    """Invariant breaches and failed checks (CLI exit code 1)."""


class UndeterminedParity(ComputationError):
    def __init__(self, variable: str, context: str = ""):
        self.variable = variable
        msg = f"parity of variable {variable!r} is unknown"
        super().__init__(f"{msg} ({context})" if context else msg)


class SymbolicLength(InputError):
    pass


class EmptyS(InputError):
    pass


class ParityViolation(ComputationError):
    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message)


class QuotientNotForest(InputError):
    def __init__(self, message: str, cycle=None):
        self.cycle = cycle
        super().__init__(message)


class NonIntegralGram(ComputationError):
    pass


class NotSimpleAfterReduction(ComputationError):
    pass


class NonIntegralResult(ComputationError):
    pass


class NoFixedVertex(ComputationError):
    pass


class MalformedTree(InputError):
    pass


class TrichotomyViolation(ComputationError):
    pass


class NotPerfectPower(ComputationError):
    pass


class FitMismatch(ComputationError):
    pass


class SNotDivisorClosed(InputError):
    pass


class ParseError(InputError):
    pass


class ValidationError(InputError):
    def __init__(self, message: str, diagnostics=None):
        self.diagnostics = list(diagnostics or [])
        super().__init__(message)
