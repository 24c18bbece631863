"""Training matrices, fitted axes and the shareable ``.axes`` model file."""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import CenteredMatrix, ReferenceVector, StudyDesign, _frozen
from .decomposition import SvdFactors, svd
from .errors import CorruptModelError, DesignError, ModelError, ModelVersionError

FORMAT_VERSION = 1
ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class TrainingSpec:
    """Which groups enter the training matrix and how.

    Groups listed in ``raw_groups`` contribute every observation as its own
    row instead of the group mean (the bias-simulation variant).
    """

    included_groups: tuple = ()
    raw_groups: tuple = ()
    variable_filter: frozenset | None = None

    def resolve(self, design: StudyDesign) -> tuple:
        groups = tuple(self.included_groups) or design.groups
        unknown = [g for g in groups if g not in design.groups]
        if unknown:
            raise DesignError(f"included group {unknown[0]!r} is not in the design")
        stray = [g for g in self.raw_groups if g not in groups]
        if stray:
            raise DesignError(f"raw group {stray[0]!r} is not among the included groups")
        if not groups:
            raise DesignError("no groups to train on")
        return groups

    @classmethod
    def excluding(cls, design: StudyDesign, excluded: Sequence[str], **kw) -> "TrainingSpec":
        for g in excluded:
            if g not in design.groups:
                raise DesignError(f"excluded group {g!r} is not in the design")
        return cls(tuple(g for g in design.groups if g not in set(excluded)), **kw)


@dataclass(frozen=True, eq=False)
class TrainingMatrix:
    unit_labels: tuple
    values: np.ndarray
    variable_ids: tuple

    def __post_init__(self):
        object.__setattr__(self, "unit_labels", tuple(self.unit_labels))
        object.__setattr__(self, "variable_ids", tuple(self.variable_ids))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (len(self.unit_labels), len(self.variable_ids)):
            raise ModelError("training matrix shape does not match its labels")
        if self.values.shape[0] < 1:
            raise DesignError("training matrix is empty")


def build_training(centered: CenteredMatrix, design: StudyDesign,
                   spec: TrainingSpec = TrainingSpec()) -> TrainingMatrix:
    """Group means of the centered rows, in included-group order.

    Missing cells are already zero, so they pull group means toward the
    reference exactly as they do in projection.
    """
    design.check_covers(centered.observation_ids)
    groups = spec.resolve(design)
    labels, rows = [], []
    for g in groups:
        idx = design.members(g, centered.observation_ids)
        if not idx:
            raise DesignError(f"group {g!r} has no observations in the matrix")
        if g in spec.raw_groups:
            for i in idx:
                labels.append(centered.observation_ids[i])
                rows.append(centered.values[i])
        else:
            labels.append(g)
            rows.append(centered.values[idx].mean(axis=0))
    values = np.vstack(rows)
    ids = centered.variable_ids
    if spec.variable_filter is not None:
        cols = [j for j, v in enumerate(ids) if v in spec.variable_filter]
        if not cols:
            raise DesignError("variable filter leaves no variables")
        values = values[:, cols]
        ids = tuple(ids[j] for j in cols)
    return TrainingMatrix(tuple(labels), values, ids)


@dataclass(frozen=True, eq=False)
class AxesModel:
    variable_ids: tuple
    reference: ReferenceVector
    right: np.ndarray      # m x k
    singulars: np.ndarray  # k
    left: np.ndarray       # n_T x k
    unit_labels: tuple
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        object.__setattr__(self, "variable_ids", tuple(self.variable_ids))
        object.__setattr__(self, "unit_labels", tuple(self.unit_labels))
        for name in ("right", "singulars", "left"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        m, k, n_t = len(self.variable_ids), self.singulars.shape[0], len(self.unit_labels)
        if self.right.shape != (m, k) or self.left.shape != (n_t, k):
            raise ModelError(f"factor shapes {self.right.shape}/{self.left.shape} do not fit m={m}, k={k}, n_T={n_t}")
        if k > min(n_t, m) or k < 1:
            raise ModelError(f"k={k} outside 1..min(n_T, m)")
        if tuple(self.reference.variable_ids) != self.variable_ids:
            raise ModelError("reference variable IDs differ from model variable IDs")

    @property
    def n_T(self) -> int:
        return len(self.unit_labels)

    @property
    def m(self) -> int:
        return len(self.variable_ids)

    @property
    def k(self) -> int:
        return self.singulars.shape[0]

    def factors(self) -> SvdFactors:
        tol = 1e-12 * max(self.n_T, self.m) * float(self.singulars[0])
        return SvdFactors(self.left, self.singulars, self.right, tol)

    def equals(self, other: "AxesModel") -> bool:
        """Field-by-field equality with bit-identical floats."""
        return (self.variable_ids == other.variable_ids
                and self.unit_labels == other.unit_labels
                and self.format_version == other.format_version
                and self.reference.variable_ids == other.reference.variable_ids
                and all(a.tobytes() == b.tobytes() for a, b in [
                    (self.reference.values, other.reference.values),
                    (self.right, other.right), (self.singulars, other.singulars),
                    (self.left, other.left)]))


def fit(training: TrainingMatrix, reference: ReferenceVector,
        max_rank: int | None = None) -> AxesModel:
    if not np.any(training.values != 0.0):
        raise DesignError("training matrix is all zeros; nothing to decompose")
    f = svd(training.values, max_rank=max_rank)
    return AxesModel(training.variable_ids, reference.select(training.variable_ids),
                     f.right, f.singulars, f.left, training.unit_labels)


# --- persistence ---------------------------------------------------------

def _g(x) -> str:
    return format(float(x), ".17g")


def format_model(model: AxesModel) -> str:
    out = [f"expca-model v{model.format_version}",
           f"n_T {model.n_T}  k {model.k}  m {model.m}",
           "#reference"]
    out += [f"{v}\t{_g(x)}" for v, x in zip(model.variable_ids, model.reference.values)]
    out.append("#singulars")
    out += [_g(x) for x in model.singulars]
    out.append("#right")
    out += ["\t".join(_g(x) for x in row) for row in model.right]
    out.append("#left")
    out += [lab + "\t" + "\t".join(_g(x) for x in row) for lab, row in zip(model.unit_labels, model.left)]
    return "\n".join(out) + "\n"


def _floats(cells, where):
    try:
        return [float(c) for c in cells]
    except ValueError:
        raise CorruptModelError(f"{where}: non-numeric entry") from None


def parse_model(text: str) -> AxesModel:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith("expca-model v"):
        raise CorruptModelError("missing 'expca-model' header line")
    try:
        version = int(lines[0][len("expca-model v"):])
    except ValueError:
        raise CorruptModelError(f"bad header line {lines[0]!r}") from None
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported model format version {version} (expected {FORMAT_VERSION})")
    dims = lines[1].split() if len(lines) > 1 else []
    if len(dims) != 6 or dims[0::2] != ["n_T", "k", "m"]:
        raise CorruptModelError("bad dimension line")
    try:
        n_t, k, m = (int(x) for x in dims[1::2])
    except ValueError:
        raise CorruptModelError("bad dimension line") from None

    sections = {}
    name = None
    for line in lines[2:]:
        if line.startswith("#"):
            name = line[1:]
            sections[name] = []
        elif name is None:
            raise CorruptModelError("data before first section")
        else:
            sections[name].append(line)
    for sec, rows in (("reference", m), ("singulars", k), ("right", m), ("left", n_t)):
        if len(sections.get(sec, ())) != rows:
            raise CorruptModelError(f"section #{sec}: expected {rows} lines, got {len(sections.get(sec, ()))}")

    ref_cells = [ln.split("\t") for ln in sections["reference"]]
    if any(len(c) != 2 for c in ref_cells):
        raise CorruptModelError("section #reference: expected 2 fields per line")
    var_ids = [c[0] for c in ref_cells]
    ref = _floats([c[1] for c in ref_cells], "#reference")
    singulars = _floats(sections["singulars"], "#singulars")
    right = [_floats(ln.split("\t"), "#right") for ln in sections["right"]]
    left_cells = [ln.split("\t") for ln in sections["left"]]
    labels = [c[0] for c in left_cells]
    left = [_floats(c[1:], "#left") for c in left_cells]
    if any(len(r) != k for r in right) or any(len(r) != k for r in left):
        raise CorruptModelError(f"factor rows must have k={k} columns")

    right = np.array(right, dtype=float).reshape(m, k)
    left = np.array(left, dtype=float).reshape(n_t, k)
    singulars = np.array(singulars, dtype=float)
    if not all(np.all(np.isfinite(a)) for a in (right, left, singulars)):
        raise CorruptModelError("non-finite entries")
    if np.any(singulars < 0) or np.any(np.diff(singulars) > 0):
        raise CorruptModelError("singular values must be non-negative and non-increasing")
    for name, q in (("right", right), ("left", left)):
        err = np.abs(q.T @ q - np.eye(k)).max()
        if err > ORTHO_TOL:
            raise CorruptModelError(f"{name} vectors are not orthonormal (max deviation {err:.3g})")
    try:
        reference = ReferenceVector(var_ids, ref)
        return AxesModel(var_ids, reference, right, singulars, left, labels, version)
    except Exception as exc:
        raise CorruptModelError(str(exc)) from None


def atomic_write(path, text: str) -> int:
    """Write text via temp file + rename in the destination directory."""
    path = Path(path)
    data = text.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(data)


def save_model(model: AxesModel, destination) -> int:
    """Write the model file; returns bytes written."""
    return atomic_write(destination, format_model(model))


def load_model(source) -> AxesModel:
    return parse_model(Path(source).read_text(encoding="utf-8"))
