class ReqPairError(Exception):
    """Base class for all package errors."""


class MissingColumn(ReqPairError):
    pass


class MalformedRow(ReqPairError):
    pass


class EmptyText(ReqPairError):
    pass


class UnknownRequirementId(ReqPairError):
    pass


class UnknownLabel(ReqPairError):
    pass


class SingleClassTrainingSet(ReqPairError):
    pass


class LabelMapMismatch(ReqPairError):
    pass


class ArtifactError(ReqPairError):
    pass
