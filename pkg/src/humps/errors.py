"""Exception hierarchy shared by all modules."""


class HumpsError(Exception):
    """Base class for every error raised by this package."""


class InvalidSignPattern(HumpsError):
    pass


class QuadratureFailure(HumpsError):
    pass


class NonPositiveInput(HumpsError, ValueError):
    pass


class EpsilonTooLarge(HumpsError, ValueError):
    pass


class DegenerateHump(HumpsError):
    pass


class NoAdmissibleR(HumpsError):
    pass


class EpsilonOutOfRange(HumpsError, ValueError):
    pass


class StepSizeUnderflow(HumpsError):
    pass


class NonFiniteState(HumpsError):
    pass


class NoConvergence(HumpsError):
    def __init__(self, message, partial=None):
        # last converged entry when a continuation stops early
        self.partial = partial
        super().__init__(message)


class ConvergedToNegative(HumpsError):
    pass


class OnBoundary(HumpsError):
    pass


class AboveR(HumpsError):
    pass


class InfeasibleSize(HumpsError, ValueError):
    pass


class WindowMismatch(HumpsError, ValueError):
    pass


class CommutationFailure(HumpsError):
    pass


class OverlappingIndexSets(HumpsError, ValueError):
    pass


class InvalidRadii(HumpsError, ValueError):
    pass


class IoError(HumpsError, OSError):
    pass


class ConfigParseError(HumpsError):
    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
            if column is not None:
                where += f"{column}:"
        super().__init__(f"{where} {message}" if where else message)
