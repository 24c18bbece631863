"""Expression matrices, study designs, references and centering.

Matrices are held observations x variables in memory, even though the
on-disk TSV layout puts variables in rows and observations in columns.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import AlignmentError, DesignError, ParseError

MISSING_MARKERS = ("", "na")


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _check_unique(ids, what):
    seen = {}
    for i, x in enumerate(ids):
        if x in seen:
            raise ParseError(f"duplicate {what} ID {x!r} at positions {seen[x] + 1} and {i + 1}")
        seen[x] = i


@dataclass(frozen=True, eq=False)
class ExpressionMatrix:
    observation_ids: tuple
    variable_ids: tuple
    values: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "observation_ids", tuple(self.observation_ids))
        object.__setattr__(self, "variable_ids", tuple(self.variable_ids))
        _check_unique(self.observation_ids, "observation")
        _check_unique(self.variable_ids, "variable")
        values = _frozen(self.values)
        missing = _frozen(self.missing, bool)
        n, m = len(self.observation_ids), len(self.variable_ids)
        if n < 1 or m < 1:
            raise ParseError("matrix needs at least one observation and one variable")
        if values.shape != (n, m) or missing.shape != (n, m):
            raise ParseError(f"values/missing shape must be {(n, m)}, got {values.shape}/{missing.shape}")
        if not np.all(np.isfinite(values[~missing])):
            raise ParseError("non-missing values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def from_array(cls, values, observation_ids=None, variable_ids=None):
        """Build a matrix from an (n, m) array; NaN marks missing."""
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise ParseError("expected a 2-D array")
        n, m = values.shape
        obs = observation_ids if observation_ids is not None else [f"o{i + 1}" for i in range(n)]
        var = variable_ids if variable_ids is not None else [f"v{j + 1}" for j in range(m)]
        missing = np.isnan(values)
        return cls(obs, var, np.where(missing, 0.0, values), missing)

    def select_variables(self, ids: Sequence[str]) -> "ExpressionMatrix":
        index = {v: j for j, v in enumerate(self.variable_ids)}
        cols = [index[v] for v in ids]
        return ExpressionMatrix(self.observation_ids, tuple(ids),
                                self.values[:, cols], self.missing[:, cols])


def parse_matrix(text: str) -> ExpressionMatrix:
    """Parse a variables-in-rows TSV into an ExpressionMatrix."""
    lines = [ln.rstrip("\r") for ln in text.split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    if len(lines) < 2:
        raise ParseError("matrix file needs a header row and at least one variable row")
    header = lines[0].split("\t")
    obs_ids = header[1:]
    if not obs_ids:
        raise ParseError("line 1: header has no observation columns")
    _check_unique(obs_ids, "observation")

    var_ids, rows, miss = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(cells)}")
        var_ids.append(cells[0])
        row, mrow = [], []
        for col, cell in enumerate(cells[1:], start=2):
            cell = cell.strip()
            if cell.lower() in MISSING_MARKERS:
                row.append(0.0)
                mrow.append(True)
                continue
            try:
                x = float(cell)
            except ValueError:
                raise ParseError(f"line {lineno}, column {col}: not a number: {cell!r}") from None
            if not np.isfinite(x):
                raise ParseError(f"line {lineno}, column {col}: non-finite value {cell!r}")
            row.append(x)
            mrow.append(False)
        rows.append(row)
        miss.append(mrow)
    try:
        _check_unique(var_ids, "variable")
    except ParseError as exc:
        raise ParseError(f"{exc} (counting data rows)") from None
    values = np.array(rows, dtype=float).T
    missing = np.array(miss, dtype=bool).T
    return ExpressionMatrix(obs_ids, var_ids, values, missing)


def format_matrix(matrix: ExpressionMatrix, corner: str = "variable") -> str:
    out = [corner + "\t" + "\t".join(matrix.observation_ids)]
    for j, v in enumerate(matrix.variable_ids):
        cells = ["NA" if matrix.missing[i, j] else format(matrix.values[i, j], ".17g")
                 for i in range(len(matrix.observation_ids))]
        out.append(v + "\t" + "\t".join(cells))
    return "\n".join(out) + "\n"


# --- reference policies -------------------------------------------------

@dataclass(frozen=True)
class GlobalMean:
    pass


@dataclass(frozen=True)
class ControlGroup:
    group: str


@dataclass(frozen=True, eq=False)
class ExternalVector:
    reference: "ReferenceVector"


ReferencePolicy = Union[GlobalMean, ControlGroup, ExternalVector]


@dataclass(frozen=True, eq=False)
class ReferenceVector:
    variable_ids: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variable_ids", tuple(self.variable_ids))
        _check_unique(self.variable_ids, "variable")
        values = _frozen(self.values)
        if values.shape != (len(self.variable_ids),):
            raise AlignmentError("reference length does not match its variable IDs")
        if not np.all(np.isfinite(values)):
            raise AlignmentError("reference values must be finite")
        object.__setattr__(self, "values", values)

    def select(self, ids: Sequence[str]) -> "ReferenceVector":
        index = {v: j for j, v in enumerate(self.variable_ids)}
        absent = [v for v in ids if v not in index]
        if absent:
            raise AlignmentError(f"reference lacks {len(absent)} variable(s), e.g. {absent[0]!r}")
        return ReferenceVector(tuple(ids), self.values[[index[v] for v in ids]])

    @classmethod
    def zeros(cls, ids):
        return cls(tuple(ids), np.zeros(len(ids)))


def parse_reference(text: str) -> ReferenceVector:
    """Two-column TSV: variable_id, value."""
    ids, vals = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cells = line.split("\t")
        if len(cells) != 2:
            raise ParseError(f"line {lineno}: expected 2 fields, got {len(cells)}")
        try:
            vals.append(float(cells[1]))
        except ValueError:
            raise ParseError(f"line {lineno}, column 2: not a number: {cells[1]!r}") from None
        ids.append(cells[0])
    if not ids:
        raise ParseError("empty reference file")
    _check_unique(ids, "variable")
    return ReferenceVector(ids, vals)


def parse_policy(text: str) -> ReferencePolicy:
    """Parse "global-mean", "control:<group>" or "external:<path>"."""
    if text == "global-mean":
        return GlobalMean()
    kind, sep, arg = text.partition(":")
    if sep and kind == "control" and arg:
        return ControlGroup(arg)
    if sep and kind == "external" and arg:
        return ExternalVector(parse_reference(Path(arg).read_text(encoding="utf-8")))
    raise DesignError(f"unknown reference policy {text!r}")


# --- study design -------------------------------------------------------

@dataclass(frozen=True)
class StudyDesign:
    assignments: dict
    reference_policy: ReferencePolicy = field(default_factory=GlobalMean)

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments))
        self.validate()

    def validate(self):
        for obs, g in self.assignments.items():
            if not isinstance(g, str) or not g:
                raise DesignError(f"observation {obs!r} has an empty group label")
        pol = self.reference_policy
        if isinstance(pol, ControlGroup) and pol.group not in self.groups:
            raise DesignError(f"control group {pol.group!r} has no observations")

    @property
    def groups(self) -> tuple:
        """Group labels in order of first appearance."""
        return tuple(dict.fromkeys(self.assignments.values()))

    def members(self, group, observation_ids) -> list:
        """Indices into observation_ids belonging to group."""
        return [i for i, o in enumerate(observation_ids) if self.assignments.get(o) == group]

    def check_covers(self, observation_ids):
        absent = [o for o in observation_ids if o not in self.assignments]
        if absent:
            raise DesignError(f"{len(absent)} observation(s) missing from design, e.g. {absent[0]!r}")

    def group_sizes(self) -> dict:
        sizes = {}
        for g in self.assignments.values():
            sizes[g] = sizes.get(g, 0) + 1
        return sizes


def parse_design(text: str, policy: ReferencePolicy | str = "global-mean",
                 header: bool = False) -> StudyDesign:
    if isinstance(policy, str):
        policy = parse_policy(policy)
    assignments = {}
    lines = text.splitlines()
    for lineno, line in enumerate(lines, start=1):
        if header and lineno == 1:
            continue
        if not line.strip():
            continue
        cells = line.rstrip("\r").split("\t")
        if len(cells) != 2:
            raise ParseError(f"design line {lineno}: expected 2 fields, got {len(cells)}")
        obs, group = cells[0], cells[1].strip()
        if obs in assignments:
            raise DesignError(f"design line {lineno}: duplicate observation {obs!r}")
        if not group:
            raise DesignError(f"design line {lineno}: empty group label")
        assignments[obs] = group
    if not assignments:
        raise DesignError("design file has no rows")
    return StudyDesign(assignments, policy)


# --- reference and centering --------------------------------------------

def compute_reference(matrix: ExpressionMatrix, design: StudyDesign) -> ReferenceVector:
    """Per-variable centre chosen by the design's reference policy.

    Missing cells are excluded from the means rather than imputed.
    """
    policy = design.reference_policy
    if isinstance(policy, ExternalVector):
        return policy.reference.select(matrix.variable_ids)
    if isinstance(policy, ControlGroup):
        rows = design.members(policy.group, matrix.observation_ids)
        if not rows:
            raise DesignError(f"control group {policy.group!r} has no observations in the matrix")
    else:
        rows = list(range(len(matrix.observation_ids)))
    present = ~matrix.missing[rows]
    counts = present.sum(axis=0)
    if np.any(counts == 0):
        j = int(np.argmax(counts == 0))
        raise DesignError(f"variable {matrix.variable_ids[j]!r} has no observed value among reference observations")
    sums = np.where(present, matrix.values[rows], 0.0).sum(axis=0)
    return ReferenceVector(matrix.variable_ids, sums / counts)


@dataclass(frozen=True, eq=False)
class CenteredMatrix:
    observation_ids: tuple
    variable_ids: tuple
    values: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "observation_ids", tuple(self.observation_ids))
        object.__setattr__(self, "variable_ids", tuple(self.variable_ids))
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "missing", _frozen(self.missing, bool))
        if np.any(self.values[self.missing] != 0.0):
            raise AlignmentError("missing positions must hold 0 after centering")

    @property
    def effective_counts(self) -> np.ndarray:
        """m_i: non-missing items per observation."""
        return (~self.missing).sum(axis=1)


def center(matrix: ExpressionMatrix, reference: ReferenceVector) -> CenteredMatrix:
    if tuple(reference.variable_ids) != tuple(matrix.variable_ids):
        raise AlignmentError("reference variable IDs do not match the matrix")
    values = np.where(matrix.missing, 0.0, matrix.values - reference.values)
    return CenteredMatrix(matrix.observation_ids, matrix.variable_ids, values, matrix.missing)


def align_variables(matrix: CenteredMatrix, target_ids: Sequence[str]) -> CenteredMatrix:
    """Reorder/subset columns to target_ids.

    Target variables the matrix lacks become zero columns and are marked
    missing, so they do not count toward m_i.
    """
    target_ids = tuple(target_ids)
    index = {v: j for j, v in enumerate(matrix.variable_ids)}
    if not any(v in index for v in target_ids):
        raise AlignmentError("no variable IDs shared with the target")
    n = len(matrix.observation_ids)
    values = np.zeros((n, len(target_ids)))
    missing = np.ones((n, len(target_ids)), dtype=bool)
    for t, v in enumerate(target_ids):
        j = index.get(v)
        if j is not None:
            values[:, t] = matrix.values[:, j]
            missing[:, t] = matrix.missing[:, j]
    return CenteredMatrix(matrix.observation_ids, target_ids, values, missing)
