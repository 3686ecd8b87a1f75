"""Exception hierarchy shared across the package."""


class ReqDepError(Exception):
    """Base class for all domain errors raised by this package."""


class UnknownLabel(ReqDepError):
    pass


class MissingColumn(ReqDepError):
    pass


class DuplicateId(ReqDepError):
    pass


class EmptyText(ReqDepError):
    pass


class UnknownRequirementId(ReqDepError):
    pass


class DuplicatePair(ReqDepError):
    pass


class MalformedRow(ReqDepError):
    pass


class DimensionMismatch(ReqDepError):
    pass


class ZeroVector(ReqDepError):
    pass


class ModelMismatch(ReqDepError):
    pass


class ProviderUnavailable(ReqDepError):
    pass


class InvalidConfig(ReqDepError):
    pass


class MissingDefinition(ReqDepError):
    pass


class ParseFailure(ReqDepError):
    pass


class ConfidenceOutOfRange(ParseFailure):
    pass


class RankTooLarge(ReqDepError):
    pass


class EmptyVocabulary(ReqDepError):
    pass


class DegenerateValidation(ReqDepError):
    pass


class PairSetMismatch(ReqDepError):
    pass


class LengthMismatch(ReqDepError):
    pass


class InvalidSpec(ReqDepError):
    pass


class ConfigHashMismatch(ReqDepError):
    pass
