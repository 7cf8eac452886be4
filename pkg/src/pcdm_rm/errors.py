"""Exception hierarchy.

Every error carries the name of the violated contract in its class name, which
the CLI prints verbatim.
"""


class PcdmError(ValueError):
    """Base class for all toolkit errors."""


# code structure
class CodeValidationError(PcdmError):
    pass


class KraftDeficit(CodeValidationError):
    pass


class KraftExcess(CodeValidationError):
    pass


class InputNotPrefixFree(CodeValidationError):
    pass


class OutputNotPrefixFree(CodeValidationError):
    pass


class SymbolOutOfAlphabet(CodeValidationError):
    pass


class EmptyOutputWord(CodeValidationError):
    pass


class ParseError(PcdmError):
    pass


class RateOutOfRange(PcdmError):
    pass


# codec
class ConfigInfeasible(PcdmError):
    pass


class UnmatchableSymbols(PcdmError):
    pass


class MalformedBlock(PcdmError):
    pass


# search
class EnumerationOverflow(PcdmError):
    pass


class Infeasible(PcdmError):
    pass


class NoFeasibleCode(PcdmError):
    pass


# LDPC
class DimensionMismatch(ParseError):
    pass


class TooLarge(PcdmError):
    pass


class InvalidLifting(PcdmError):
    pass


class LengthInfeasible(PcdmError):
    pass


# planning / pipeline
class NegativeRate(PcdmError):
    pass


class InfeasibleRate(PcdmError):
    pass


class NonIntegerK(PcdmError):
    pass


class LengthMismatch(PcdmError):
    pass


class NotBracketed(PcdmError):
    pass
