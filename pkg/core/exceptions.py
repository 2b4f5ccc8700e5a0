"""
Exceptions shared by every app of the project.

Management commands turn any PlumeError into a CommandError so the process
exits nonzero with a one-line '<ErrorClass>: <message>' report.
"""


class PlumeError(Exception):
    """
    Base class for all errors raised by the project.
    """

    def describe(self):
        return f'{type(self).__name__}: {self}'


class InvalidArgument(PlumeError, ValueError):
    """
    An operation received an argument outside its precondition.
    """


class InvalidConfig(PlumeError):
    """
    A configuration is inconsistent or violates a stability bound.

    'errors' holds the serializer error dict when the problem came from a config file.
    """

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class InvalidSpec(PlumeError, ValueError):
    """
    A NormalizationSpec cannot be applied.
    """


class InvalidPlan(PlumeError, ValueError):
    """
    A RolloutPlan (or update schedule) cannot be executed.
    """


class NumericalFailure(PlumeError):
    """
    A numerical procedure diverged or did not converge.
    """

    def __init__(self, message, step=None, residual=None):
        super().__init__(message)
        self.step = step
        self.residual = residual


class ConstructionFailure(PlumeError):
    """
    A network's stage shapes do not compose to the required output shape.
    """

    def __init__(self, message, stages=None):
        super().__init__(message)
        self.stages = stages or []


class UndefinedMetric(PlumeError):
    """
    A metric is undefined for the given inputs (e.g. zero reference mass).
    """


class TrainingDiverged(PlumeError):
    """
    The loss became NaN or infinite during training.
    """

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class ArtifactMissing(PlumeError):
    """
    A corpus, checkpoint or report needed by a command does not exist.
    """


class ArtifactExists(PlumeError):
    """
    An output would overwrite an existing corpus or checkpoint without --force.
    """
