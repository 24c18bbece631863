"""Binomial keyword enrichment and top-k variable selection."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from ..errors import ParseError, StatsError
from ..scores import VARIABLE, ScoreSet


def _log_pmf_terms(n: int, p: float, js: range) -> list[float]:
    logp, logq = math.log(p), math.log1p(-p)
    return [math.log(math.comb(n, j)) + j * logp + (n - j) * logq for j in js]


def _log_sum_exp(terms: list[float]) -> float:
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


def binomial_tail(n: int, p: float, k: int) -> float:
    """Upper tail P(X >= k) for X ~ Binomial(n, p), summed in log space."""
    if not 0 <= p <= 1:
        raise StatsError("success probability must lie in [0, 1]")
    if k <= 0:
        return 1.0
    if k > n or p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    return min(1.0, math.exp(_log_sum_exp(_log_pmf_terms(n, p, range(k, n + 1)))))


def binomial_lower(n: int, p: float, k: int) -> float:
    """Lower tail P(X <= k)."""
    if not 0 <= p <= 1:
        raise StatsError("success probability must lie in [0, 1]")
    if k < 0:
        return 0.0
    if k >= n or p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    return min(1.0, math.exp(_log_sum_exp(_log_pmf_terms(n, p, range(0, k + 1)))))


@dataclass(frozen=True)
class AnnotationMap:
    keywords: dict
    universe: frozenset | None = None

    def __post_init__(self):
        object.__setattr__(self, "keywords", {k: frozenset(v) for k, v in self.keywords.items()})
        if self.universe is not None:
            universe = frozenset(self.universe)
            object.__setattr__(self, "universe", universe)
            for kw, ids in self.keywords.items():
                stray = ids - universe
                if stray:
                    raise StatsError(f"keyword {kw!r} annotates {next(iter(stray))!r}, outside the universe")


def parse_annotations(text: str, universe: Iterable[str] | None = None) -> AnnotationMap:
    """(variable_id, keyword) pairs. With a universe, pairs outside it are dropped."""
    universe = frozenset(universe) if universe is not None else None
    keywords: dict[str, set] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cells = line.rstrip("\r").split("\t")
        if len(cells) != 2 or not cells[1]:
            raise ParseError(f"annotation line {lineno}: expected variable_id<TAB>keyword")
        if universe is not None and cells[0] not in universe:
            continue
        keywords.setdefault(cells[1], set()).add(cells[0])
    return AnnotationMap(keywords, universe)


@dataclass(frozen=True)
class EnrichmentRecord:
    keyword: str
    chip_count: int
    selected_count: int
    p_value: float


def enrich(annotations: AnnotationMap, universe_size: int | None, selected: Iterable[str]) -> list[EnrichmentRecord]:
    """One binomial upper-tail test per keyword, sorted by ascending p.

    The success probability is the keyword's chip frequency and the number
    of trials is the selection size.
    """
    selected = frozenset(selected)
    if universe_size is None:
        if annotations.universe is None:
            raise StatsError("universe size unknown")
        universe_size = len(annotations.universe)
    if universe_size <= 0:
        raise StatsError("universe is empty")
    if annotations.universe is not None and not selected <= annotations.universe:
        raise StatsError("selection contains variables outside the universe")
    if len(selected) > universe_size:
        raise StatsError("selection is larger than the universe")
    table = []
    for kw, ids in annotations.keywords.items():
        chip = len(ids if annotations.universe is None else ids & annotations.universe)
        hit = len(ids & selected)
        p = binomial_tail(len(selected), min(1.0, chip / universe_size), hit)
        table.append(EnrichmentRecord(kw, chip, hit, p))
    table.sort(key=lambda r: (r.p_value, r.keyword))
    return table


def format_enrichment(records: Iterable[EnrichmentRecord]) -> str:
    out = ["keyword\tchip\tselected\tp-value"]
    out += [f"{r.keyword}\t{r.chip_count}\t{r.selected_count}\t{r.p_value:.17g}" for r in records]
    return "\n".join(out) + "\n"


def select_top(variables: ScoreSet, axis: int, direction: str = "largest", count: int = 500) -> tuple:
    """IDs of the ``count`` most extreme variables on a 1-based axis.

    Returned in rank order; equal scores are ordered by variable ID.
    """
    if variables.kind != VARIABLE:
        raise StatsError("select_top needs variable scores")
    if not 1 <= axis <= variables.k:
        raise StatsError(f"axis {axis} outside 1..{variables.k}")
    if count < 1 or count > len(variables.row_labels):
        raise StatsError(f"count {count} outside 1..{len(variables.row_labels)}")
    if direction not in ("largest", "smallest"):
        raise StatsError(f"unknown direction {direction!r}")
    sign = -1.0 if direction == "largest" else 1.0
    col = variables.scores[:, axis - 1]
    ranked = sorted(zip(col.tolist(), variables.row_labels), key=lambda t: (sign * t[0], t[1]))
    return tuple(lab for _, lab in ranked[:count])
