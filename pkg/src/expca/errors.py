"""Exception types raised by expca."""


class ExpcaError(Exception):
    """Base class for all data and model errors."""

    stage = "expca"


class ParseError(ExpcaError):
    stage = "parse"


class DesignError(ExpcaError):
    stage = "design"


class AlignmentError(ExpcaError):
    stage = "align"


class DecompositionError(ExpcaError):
    stage = "decomposition"


class ModelError(ExpcaError):
    stage = "model"


class ModelVersionError(ModelError):
    pass


class CorruptModelError(ModelError):
    pass


class ScoreError(ExpcaError):
    stage = "scores"


class StatsError(ExpcaError):
    stage = "stats"
