"""Exception hierarchy.

Every error carries a short diagnostic ``code`` that the command line
front end maps to an exit status.
"""


class HodgeLabError(ValueError):
    code = "E_GENERIC"
    exit_status = 1


class ComplexError(HodgeLabError):
    """Malformed simplex list (repeated vertex, mixed dimension, duplicates)."""

    code = "E_COMPLEX"
    exit_status = 3


class NonManifoldError(ComplexError):
    code = "E_NONMANIFOLD"
    exit_status = 3


class MeshParseError(HodgeLabError):
    code = "E_PARSE"
    exit_status = 3

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class LabelError(HodgeLabError):
    code = "E_LABEL"
    exit_status = 4


class DegenerateGeometryError(HodgeLabError):
    code = "E_DEGENERATE"
    exit_status = 5


class VerificationError(HodgeLabError):
    """A numerical self-check failed (rank tolerance, eigenspace residual)."""

    code = "E_VERIFY"
    exit_status = 6


class RankToleranceWarning(UserWarning):
    """A singular value sits close to the rank cutoff."""
