"""Exception hierarchy.

Data problems (bad files, empty ensembles) derive from :class:`DataError`;
solver failures from :class:`SolverError`. The CLI maps these onto exit codes.
"""


class KbpotError(Exception):
    """Base class for all package errors."""


class DataError(KbpotError):
    pass


class SolverError(KbpotError):
    pass


class MalformedRecord(DataError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class NoCaAtoms(DataError):
    pass


class UnknownResidue(DataError):
    pass


class EmptyEnsemble(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ConfigMismatch(DataError):
    pass


class BadBasisIndex(KbpotError, ValueError):
    pass


class NoConstraints(DataError):
    pass


class MalformedInstance(SolverError, ValueError):
    pass


class SolverInfeasible(SolverError):
    pass
