"""Two-way additive ANOVA per variable: probe sensitivity + group effect."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.special import betainc

from ..errors import ParseError, StatsError

DEFAULT_THRESHOLD = 0.005
# sums of squares below this fraction of the total are treated as exactly zero
_ZERO_SS = 1e-20


@dataclass(frozen=True, eq=False)
class ProbeBlock:
    variable_id: str
    probe_values: np.ndarray  # P x n
    observation_ids: tuple
    probe_ids: tuple = ()

    def __post_init__(self):
        vals = np.array(self.probe_values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "probe_values", vals)
        object.__setattr__(self, "observation_ids", tuple(self.observation_ids))
        object.__setattr__(self, "probe_ids", tuple(self.probe_ids))
        if vals.ndim != 2 or vals.shape[1] != len(self.observation_ids):
            raise StatsError(f"{self.variable_id}: probe values must be P x n with n = {len(self.observation_ids)}")
        if vals.shape[0] < 2 or vals.shape[1] < 2:
            raise StatsError(f"{self.variable_id}: need at least 2 probes and 2 observations")
        if not np.all(np.isfinite(vals)):
            raise StatsError(f"{self.variable_id}: probe values must be finite")


@dataclass(frozen=True)
class AnovaRecord:
    variable_id: str
    f_statistic: float
    df_group: int
    df_residual: int
    p_value: float
    positive: bool
    degenerate: bool = False


def f_upper_tail(f: float, df1: int, df2: int) -> float:
    """P(F(df1, df2) >= f) via the regularized incomplete beta function."""
    if df1 < 1 or df2 < 1:
        raise StatsError("degrees of freedom must be >= 1")
    if f <= 0:
        return 1.0
    if np.isinf(f):
        return 0.0
    return float(betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f)))


def anova_sums(values: np.ndarray, labels: np.ndarray) -> tuple[float, float, float]:
    """(SS_probe, SS_group, SS_res) for the additive model, probes entered first.

    Every probe is measured on every observation, so the probe and group
    factors are orthogonal and the sequential group term reduces to the
    between-group sum of squares of probe-pooled means.
    """
    grand = values.mean()
    probe_mean = values.mean(axis=1)
    group_mean = np.zeros(values.shape[1])
    ss_group = 0.0
    P = values.shape[0]
    for g in np.unique(labels):
        cols = labels == g
        mu = values[:, cols].mean()
        group_mean[cols] = mu
        ss_group += P * cols.sum() * (mu - grand) ** 2
    ss_probe = values.shape[1] * float(np.sum((probe_mean - grand) ** 2))
    resid = values - probe_mean[:, None] - group_mean[None, :] + grand
    return ss_probe, float(ss_group), float(np.sum(resid * resid))


def two_way_anova(block: ProbeBlock, groups: Mapping[str, str],
                  threshold: float = DEFAULT_THRESHOLD) -> AnovaRecord:
    absent = [o for o in block.observation_ids if o not in groups]
    if absent:
        raise StatsError(f"{block.variable_id}: observation {absent[0]!r} has no group")
    labels = np.array([groups[o] for o in block.observation_ids], dtype=object)
    g = len(set(labels.tolist()))
    if g < 2:
        raise StatsError(f"{block.variable_id}: need at least 2 groups, got {g}")
    P, n = block.probe_values.shape
    df1, df2 = g - 1, P * n - P - g + 1
    if df2 < 1:
        raise StatsError(f"{block.variable_id}: model saturated (residual df = {df2})")

    values = block.probe_values
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    _, ss_group, ss_res = anova_sums(values, labels)
    zero = _ZERO_SS * ss_tot
    if ss_res <= zero:
        if ss_group <= zero:
            f, p = 0.0, 1.0
        else:
            f, p = float("inf"), 0.0
        return AnovaRecord(block.variable_id, f, df1, df2, p, p < threshold, degenerate=True)
    f = (ss_group / df1) / (ss_res / df2)
    p = f_upper_tail(f, df1, df2)
    return AnovaRecord(block.variable_id, f, df1, df2, p, p < threshold)


def filter_positive(records: Iterable[AnovaRecord], threshold: float = DEFAULT_THRESHOLD) -> frozenset:
    if not 0 < threshold < 1:
        raise StatsError("threshold must lie in (0, 1)")
    return frozenset(r.variable_id for r in records if r.p_value < threshold)


def parse_probe_table(text: str) -> list[ProbeBlock]:
    """Rows (variable_id, probe_id, values...) with a header naming observations.

    Consecutive or not, rows sharing a variable_id form one block, in order
    of first appearance.
    """
    lines = [ln.rstrip("\r") for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ParseError("probe table needs a header and data rows")
    header = lines[0].split("\t")
    obs = header[2:]
    if len(obs) < 2:
        raise ParseError("line 1: probe table needs at least 2 observation columns")
    blocks: dict[str, tuple[list, list]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != len(header):
            raise ParseError(f"line {lineno}: expected {len(header)} fields, got {len(cells)}")
        try:
            row = [float(c) for c in cells[2:]]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric probe value") from None
        probes, rows = blocks.setdefault(cells[0], ([], []))
        probes.append(cells[1])
        rows.append(row)
    return [ProbeBlock(v, np.array(rows), obs, probes) for v, (probes, rows) in blocks.items()]


def format_anova(records: Iterable[AnovaRecord]) -> str:
    out = ["variable_id\tF\tdf1\tdf2\tp\tpositive"]
    for r in records:
        out.append(f"{r.variable_id}\t{r.f_statistic:.17g}\t{r.df_group}\t{r.df_residual}\t"
                   f"{r.p_value:.17g}\t{'yes' if r.positive else 'no'}")
    return "\n".join(out) + "\n"
