"""Experiment-aware principal component analysis."""
from .axes import (AxesModel, TrainingMatrix, TrainingSpec, build_training, fit, load_model,
                   save_model)
from .data import (CenteredMatrix, ControlGroup, ExpressionMatrix, ExternalVector, GlobalMean,
                   ReferenceVector, StudyDesign, align_variables, center, compute_reference,
                   parse_design, parse_matrix, parse_policy)
from .decomposition import SvdFactors, align_signs, canonical_signs, svd
from .errors import ExpcaError
from .scores import (BiplotTable, ClassificationResult, ScoreSet, biplot_table, classify,
                     fluctuation, observation_scores, project, scale_observation_scores,
                     scale_variable_scores, training_unit_scores, variable_scores)
from .workflow import align_model_signs, center_for_model, fit_design

__version__ = "0.1.0"
