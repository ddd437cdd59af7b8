"""Exception hierarchy.

Each error carries the CLI exit code it maps to, so the command-line layer can
translate failures without a lookup table.
"""


class SSRCError(Exception):
    exit_code = 1


class ParseError(SSRCError):
    exit_code = 2


class SchemaError(ParseError):
    pass


class EmptySeriesError(ParseError):
    pass


class DegenerateInputError(SSRCError, ValueError):
    exit_code = 3


class InvalidSplitError(SSRCError, ValueError):
    pass


class ContractError(SSRCError, ValueError):
    """Arguments violate an operation's preconditions (shapes, ranges)."""


class DivergenceError(SSRCError, ArithmeticError):
    pass


class UnreachableSNRError(SSRCError, ValueError):
    pass


class ConstructionError(SSRCError, RuntimeError):
    pass


class ConvergenceError(SSRCError, RuntimeError):
    pass


class IllConditionedError(SSRCError, ArithmeticError):
    pass


class InsufficientDataError(SSRCError, ValueError):
    pass


class UndeterminedKindError(SSRCError, ValueError):
    pass


class OptimizationError(SSRCError, RuntimeError):
    exit_code = 4

    def __init__(self, message, causes=()):
        super().__init__(message)
        self.causes = list(causes)
