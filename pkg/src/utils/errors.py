"""
Exception hierarchy for the coded-groupcast toolkit.

Library code raises; only the CLI turns exceptions into exit codes.
Each class carries its exit code so ``exit_code_for()`` can classify
any error without string matching.

Usage:
    from src.utils.errors import InvalidParamsError, exit_code_for
"""
from src.utils.limits import (
    EXIT_BOUND_VIOLATION,
    EXIT_INVALID_INPUT,
    EXIT_SOLVER_GUARD,
    EXIT_UNEXPECTED,
)


class CodedCachingError(Exception):
    """Base class for every error raised by this package."""
    exit_code = EXIT_UNEXPECTED


# ── Input errors (exit 2) ────────────────────────────────────

class InvalidParamsError(CodedCachingError, ValueError):
    """System parameters (n, m, M, L) or derived t are out of range."""
    exit_code = EXIT_INVALID_INPUT


class RequestMatrixError(InvalidParamsError):
    """A request matrix is malformed or inconsistent with the parameters."""


class GraphFormatError(InvalidParamsError):
    """An edge-list file could not be parsed."""


class FieldTooSmallError(InvalidParamsError):
    """GF(2^q) has too few nonzero elements for the requested generator."""


class MissingSymbolError(CodedCachingError, KeyError):
    """A packet needed for encoding or decoding has no symbol row."""
    exit_code = EXIT_INVALID_INPUT

    def __str__(self):
        # KeyError quotes its argument; keep the plain message.
        return str(self.args[0]) if self.args else ""


# ── Solver guard (exit 3) ────────────────────────────────────

class InstanceTooLargeError(CodedCachingError, RuntimeError):
    """Instance exceeds an exact-solver size guard."""
    exit_code = EXIT_SOLVER_GUARD


# ── Verification failures (exit 4) ───────────────────────────

class UndecodableError(CodedCachingError, RuntimeError):
    """A requested packet is not uniquely determined by the codeword."""
    exit_code = EXIT_BOUND_VIOLATION

    def __init__(self, message, user=None, packets=()):
        super().__init__(message)
        self.user = user
        self.packets = tuple(packets)


class BoundViolationError(CodedCachingError, AssertionError):
    """A rate report broke the lb <= exact <= ub sandwich or the gap ceiling."""
    exit_code = EXIT_BOUND_VIOLATION


class InfeasibleProgramError(CodedCachingError, RuntimeError):
    """The exact LP solver found no feasible or no bounded optimum."""
    exit_code = EXIT_BOUND_VIOLATION


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code.

    Package errors carry their own code.  Anything else is unexpected.
    """
    if isinstance(error, CodedCachingError):
        return error.exit_code
    return EXIT_UNEXPECTED
