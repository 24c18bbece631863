"""Glue for the common fit and project paths."""
from __future__ import annotations

import numpy as np

from .axes import AxesModel, TrainingSpec, build_training, fit
from .data import (CenteredMatrix, ExpressionMatrix, StudyDesign, align_variables, center,
                   compute_reference)
from .decomposition import SvdFactors, align_signs
from .errors import AlignmentError


def fit_design(matrix: ExpressionMatrix, design: StudyDesign,
               spec: TrainingSpec = TrainingSpec(), max_rank: int | None = None) -> AxesModel:
    """Reference -> centering -> training matrix -> axes.

    The reference is computed over every variable before any variable
    filter in ``spec`` is applied.
    """
    design.check_covers(matrix.observation_ids)
    reference = compute_reference(matrix, design)
    training = build_training(center(matrix, reference), design, spec)
    return fit(training, reference, max_rank=max_rank)


def center_for_model(matrix: ExpressionMatrix, model: AxesModel,
                     design: StudyDesign | None = None) -> CenteredMatrix:
    """Center a (possibly foreign) matrix and align it to the model's variables.

    Without a design the model's stored reference is used; with one, the
    reference is recomputed from this matrix under the design's policy,
    cancelling study-level offsets.
    """
    known = set(model.variable_ids)
    shared = [v for v in matrix.variable_ids if v in known]
    if not shared:
        raise AlignmentError("matrix shares no variables with the model")
    sub = matrix.select_variables(shared)
    if design is None:
        reference = model.reference.select(shared)
    else:
        design.check_covers(sub.observation_ids)
        reference = compute_reference(sub, design)
    return align_variables(center(sub, reference), model.variable_ids)


def align_model_signs(model: AxesModel, reference: AxesModel) -> AxesModel:
    """Flip model axes to agree with reference axes over their shared variables."""
    index = {v: j for j, v in enumerate(model.variable_ids)}
    shared = [v for v in reference.variable_ids if v in index]
    if not shared:
        raise AlignmentError("models share no variables")
    ref_rows = [j for j, v in enumerate(reference.variable_ids) if v in index]
    own = SvdFactors(model.left, model.singulars, model.right[[index[v] for v in shared]], 0.0)
    other = SvdFactors(reference.left, reference.singulars, reference.right[ref_rows], 0.0)
    flipped = align_signs(own, other).right
    sign = np.where(np.einsum("ij,ij->j", flipped, own.right) < 0, -1.0, 1.0)
    return AxesModel(model.variable_ids, model.reference, model.right * sign,
                     model.singulars, model.left * sign, model.unit_labels, model.format_version)
