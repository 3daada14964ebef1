"""Exception hierarchy.

Everything raised on bad input derives from :class:`DataError`; the CLI maps
it to exit code 2.
"""


class AASMatchError(Exception):
    """Base class for all package errors."""


class DataError(AASMatchError):
    """Input data is malformed or violates a contract."""


class MalformedTermError(DataError):
    pass


class NTriplesSyntaxError(DataError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvalidIRIError(NTriplesSyntaxError):
    pass


class UnterminatedLiteralError(NTriplesSyntaxError):
    pass


class AASParseError(DataError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class JSONSyntaxError(AASParseError):
    pass


class MissingFieldError(AASParseError):
    pass


class TypeMismatchError(AASParseError):
    pass


class UnresolvedReferenceError(DataError):
    pass


class UnknownShellError(DataError):
    pass


class SPARQLSyntaxError(DataError):
    def __init__(self, message: str, position: int):
        super().__init__(f"at position {position}: {message}")
        self.position = position


class UnknownKeywordError(SPARQLSyntaxError):
    pass


class UnboundProjectionError(DataError):
    pass


class ReservedVariableMissingError(DataError):
    pass


class EmptyCorpusError(DataError):
    pass


class EmptyVocabError(DataError):
    pass


class NonFiniteLossError(AASMatchError):
    """Training diverged; usually the learning rate is too high."""


class NoResolvableTokensError(DataError):
    pass


class ZeroVectorError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class DomainError(DataError):
    """A raw score lies outside the codomain of its metric."""


class EmptyCandidatesError(DataError):
    pass


class InvalidSpecError(DataError):
    pass


class UnknownPropertyError(DataError):
    pass


class MissingGroundTruthError(DataError):
    pass


class EmbeddingFileError(DataError):
    pass


class VersionMismatchError(EmbeddingFileError):
    pass


class CorruptFileError(EmbeddingFileError):
    pass
