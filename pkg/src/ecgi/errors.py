"""Exception hierarchy shared by every ecgi module.

All errors derive from :class:`EcgiError` so the CLI can report them as a
single machine-readable line.
"""


class EcgiError(Exception):
    """Base class for library errors."""


# ingest
class MalformedHeader(EcgiError):
    pass


class UnsupportedFormat(EcgiError):
    pass


class TruncatedSignal(EcgiError):
    pass


class TruncatedAnnotations(EcgiError):
    pass


class UnknownCode(EcgiError):
    pass


class MissingFile(EcgiError):
    pass


class InvariantViolation(EcgiError):
    pass


# datasets
class EmptySide(EcgiError):
    pass


class MissingClass(EcgiError):
    pass


class SchemaError(EcgiError):
    pass


class LengthMismatch(EcgiError, ValueError):
    pass


class OutOfRange(EcgiError, ValueError):
    pass


# models
class UntrainedModel(EcgiError):
    pass


class WrongKind(EcgiError):
    pass


class NonFinite(EcgiError):
    pass


# interpretation
class EmptySelection(EcgiError):
    pass


class EmptySubset(EcgiError):
    pass


class SingularSystem(EcgiError):
    pass


class DegenerateRange(EcgiError):
    pass


# statistics
class TooFewValues(EcgiError):
    pass


class ConstantInput(EcgiError):
    pass


class TooFewGroups(EcgiError):
    pass


class AllZeroDifferences(EcgiError):
    pass


class TooFewBeats(EcgiError):
    pass


class ClassTooSmall(EcgiError):
    pass
