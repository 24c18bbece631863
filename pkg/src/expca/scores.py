"""Principal components for observations and variables, and what is built on them.

Observation scores are ``Y = X V_T``; variable scores are ``Y_v = V_T D_T``.
Scaling divides observation rows by sqrt(m_i) and variable rows by
sqrt(n_T), which puts both on the same per-item scale.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .axes import AxesModel
from .data import CenteredMatrix, StudyDesign, _frozen
from .errors import ScoreError

OBSERVATION = "observation"
VARIABLE = "variable"


@dataclass(frozen=True, eq=False)
class ScoreSet:
    row_labels: tuple
    scores: np.ndarray
    kind: str
    scaled: bool = False
    effective_counts: np.ndarray | None = None
    n_T: int | None = None
    warnings: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "scores", _frozen(self.scores))
        if self.effective_counts is not None:
            object.__setattr__(self, "effective_counts", _frozen(self.effective_counts, int))
        if self.kind not in (OBSERVATION, VARIABLE):
            raise ScoreError(f"unknown score kind {self.kind!r}")
        if self.scores.ndim != 2 or self.scores.shape[0] != len(self.row_labels):
            raise ScoreError("scores must have one row per label")
        if not np.all(np.isfinite(self.scores)):
            raise ScoreError("scores must be finite")

    @property
    def k(self) -> int:
        return self.scores.shape[1]


def observation_scores(centered: CenteredMatrix, model: AxesModel) -> ScoreSet:
    if tuple(centered.variable_ids) != model.variable_ids:
        raise ScoreError("centered matrix is not aligned to the model's variables; run align_variables first")
    # row by row: a blocked matrix product would make each row's bits depend on the batch
    right = model.right
    y = np.array([row @ right for row in centered.values]).reshape(len(centered.observation_ids), model.k)
    return ScoreSet(centered.observation_ids, y, OBSERVATION,
                    effective_counts=centered.effective_counts, n_T=model.n_T)


def scale_observation_scores(raw: ScoreSet) -> ScoreSet:
    """Z = m_i^(-1/2) Y. Rows with m_i = 0 become zeros and are reported."""
    if raw.kind != OBSERVATION or raw.effective_counts is None:
        raise ScoreError("observation scores with effective counts required")
    if raw.scaled:
        return raw
    counts = raw.effective_counts.astype(float)
    empty = counts == 0
    factor = np.zeros_like(counts)
    factor[~empty] = 1.0 / np.sqrt(counts[~empty])
    flagged = tuple(lab for lab, e in zip(raw.row_labels, empty) if e)
    for lab in flagged:
        warnings.warn(f"observation {lab} has m_i = 0", RuntimeWarning, stacklevel=2)
    return ScoreSet(raw.row_labels, raw.scores * factor[:, None], OBSERVATION, True,
                    raw.effective_counts, raw.n_T, raw.warnings + flagged)


def variable_scores(model: AxesModel) -> ScoreSet:
    return ScoreSet(model.variable_ids, model.right * model.singulars, VARIABLE, n_T=model.n_T)


def scale_variable_scores(raw: ScoreSet, n_T: int | None = None) -> ScoreSet:
    """Z_v = n_T^(-1/2) Y_v (block scaling)."""
    if raw.kind != VARIABLE:
        raise ScoreError("variable scores required")
    n_T = raw.n_T if n_T is None else n_T
    if n_T is None or n_T < 1:
        raise ScoreError("n_T must be >= 1")
    return ScoreSet(raw.row_labels, raw.scores / np.sqrt(n_T), VARIABLE, True, n_T=n_T)


def training_unit_scores(model: AxesModel, scaled: bool = True) -> ScoreSet:
    """Scores of the training rows themselves, U_T D_T (scaled by m^(-1/2))."""
    y = model.left * model.singulars
    counts = np.full(model.n_T, model.m)
    raw = ScoreSet(model.unit_labels, y, OBSERVATION, effective_counts=counts, n_T=model.n_T)
    return scale_observation_scores(raw) if scaled else raw


def project(centered: CenteredMatrix, model: AxesModel, scaled: bool = True) -> ScoreSet:
    """Convenience: observation_scores followed by scaling."""
    raw = observation_scores(centered, model)
    return scale_observation_scores(raw) if scaled else raw


# --- fluctuation ----------------------------------------------------------

FLUCTUATION_MODES = ("scatter", "distance")


def fluctuation(scaled: ScoreSet, design: StudyDesign, mode: str = "scatter") -> float:
    """Root mean square over groups of the within-group SD on (sPC1, sPC2).

    mode "scatter": SD_g^2 = sum ||z_i - centroid||^2 / (n_g - 1), the 2-D
    scatter about the group centroid.
    mode "distance": SD_g is the sample SD of the distances ||z_i - centroid||.
    Groups with fewer than two observations are skipped.
    """
    if scaled.kind != OBSERVATION:
        raise ScoreError("fluctuation needs observation scores")
    if mode not in FLUCTUATION_MODES:
        raise ScoreError(f"unknown fluctuation mode {mode!r}")
    z = scaled.scores[:, :2]
    var = []
    for g in design.groups:
        idx = design.members(g, scaled.row_labels)
        if len(idx) < 2:
            continue
        pts = z[idx]
        dev = pts - pts.mean(axis=0)
        if mode == "scatter":
            var.append(np.sum(dev * dev) / (len(idx) - 1))
        else:
            d = np.sqrt(np.sum(dev * dev, axis=1))
            var.append(np.var(d, ddof=1))
    if not var:
        raise ScoreError("fluctuation needs at least one group with two or more observations")
    return float(np.sqrt(np.mean(var)))


# --- classification -------------------------------------------------------

@dataclass(frozen=True)
class ClassificationResult:
    observation_id: str
    nearest_unit: str
    distances: dict


def classify(scaled: ScoreSet, model: AxesModel, axes_used: int = 2) -> list[ClassificationResult]:
    """Assign each observation to the nearest training unit in scaled-score space.

    Distances are unweighted Euclidean over the first ``axes_used`` axes;
    ties go to the earlier training row.
    """
    if axes_used < 1:
        raise ScoreError("axes_used must be >= 1")
    if axes_used > model.k or axes_used > scaled.k:
        raise ScoreError(f"axes_used={axes_used} exceeds the {min(model.k, scaled.k)} available axes")
    if scaled.kind != OBSERVATION or not scaled.scaled:
        raise ScoreError("classify needs scaled observation scores")
    units = training_unit_scores(model).scores[:, :axes_used]
    results = []
    for lab, z in zip(scaled.row_labels, scaled.scores[:, :axes_used]):
        d = np.sqrt(np.sum((units - z) ** 2, axis=1))
        best = int(np.argmin(d))
        results.append(ClassificationResult(lab, model.unit_labels[best],
                                            dict(zip(model.unit_labels, d.tolist()))))
    return results


# --- biplot ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BiplotTable:
    labels: tuple
    kinds: tuple
    coords: np.ndarray
    obs_multiplier: float = 1.0


def biplot_table(obs: ScoreSet, variables: ScoreSet, obs_multiplier: float = 1.0) -> BiplotTable:
    """Stack scaled observation and variable scores on identical axes.

    The multiplier only stretches observation rows in the emitted table.
    """
    if obs.kind != OBSERVATION or variables.kind != VARIABLE:
        raise ScoreError("biplot needs observation scores and variable scores")
    if obs.k != variables.k:
        raise ScoreError(f"score sets have different numbers of axes: {obs.k} vs {variables.k}")
    if not obs_multiplier >= 1:
        raise ScoreError("obs_multiplier must be >= 1")
    coords = np.vstack([obs.scores * obs_multiplier, variables.scores])
    kinds = (OBSERVATION,) * len(obs.row_labels) + (VARIABLE,) * len(variables.row_labels)
    return BiplotTable(obs.row_labels + variables.row_labels, kinds, coords, float(obs_multiplier))


def rms(a: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.sqrt(np.mean(np.asarray(a) ** 2, axis=axis))
