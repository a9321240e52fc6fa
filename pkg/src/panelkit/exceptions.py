"""Error and warning classes raised across panelkit."""


class PanelkitError(Exception):
    """Base class for every error raised by panelkit."""


class UsageError(PanelkitError, ValueError):
    """Bad caller input (unknown names, invalid options)."""


# -- data ingestion ---------------------------------------------------------


class DataError(PanelkitError, ValueError):
    pass


class MissingCell(DataError):
    pass


class DuplicateRow(DataError):
    pass


class NonNumericValue(DataError):
    pass


class TooSmall(DataError):
    pass


class UnknownSample(UsageError):
    pass


class UnknownVariable(UsageError):
    pass


# -- estimation -------------------------------------------------------------


class EstimationError(PanelkitError, ValueError):
    pass


class RankDeficient(EstimationError):
    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class TooFewObservations(EstimationError):
    pass


class DegenerateEntityVariance(EstimationError):
    pass


class NotEnoughEntities(EstimationError):
    pass


class WrongModel(UsageError):
    pass


class SingularCorrelation(EstimationError):
    pass


class UndefinedKMO(EstimationError):
    pass


class ZeroVarianceColumn(EstimationError):
    pass


class ZeroCommunalityRow(EstimationError):
    pass


class NoComponentsRetained(EstimationError):
    pass


class ConvergenceFailure(PanelkitError, RuntimeError):
    pass


# -- warnings ---------------------------------------------------------------


class PanelkitWarning(UserWarning):
    pass


class NegativeComponentTruncated(PanelkitWarning):
    pass


class IndefiniteCovarianceDifference(PanelkitWarning):
    pass


class RotationNotConverged(PanelkitWarning):
    pass
