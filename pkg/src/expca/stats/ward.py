"""Agglomerative clustering with Ward linkage (Lance-Williams updates)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..data import CenteredMatrix
from ..errors import StatsError


@dataclass(frozen=True)
class Merge:
    cluster_a: int
    cluster_b: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Merges use scipy-style IDs: leaves 0..n-1, merge s creates cluster n+s."""

    leaf_labels: tuple
    merges: tuple

    def members(self, cluster: int) -> frozenset:
        n = len(self.leaf_labels)
        if cluster < n:
            return frozenset([cluster])
        m = self.merges[cluster - n]
        return self.members(m.cluster_a) | self.members(m.cluster_b)


def ward_linkage(points: np.ndarray) -> list[Merge]:
    """Heights are the increase in within-cluster sum of squares of each merge.

    Pair choice: smallest increase, exact ties broken by the smallest
    (cluster_a, cluster_b) ID pair.
    """
    x = np.asarray(points, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise StatsError("clustering needs at least 2 observations")
    d = np.empty((n, n))
    for i in range(n):
        diff = x - x[i]
        d[i] = 0.5 * np.einsum("ij,ij->i", diff, diff)
    ids = list(range(n))         # cluster ID held by each slot
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        slots = np.flatnonzero(active)
        sub = d[np.ix_(slots, slots)]
        iu = np.triu_indices(len(slots), 1)
        vals = sub[iu]
        best = vals.min()
        cand = [(min(ids[slots[a]], ids[slots[b]]), max(ids[slots[a]], ids[slots[b]]), slots[a], slots[b])
                for a, b in zip(iu[0][vals == best], iu[1][vals == best])]
        ca, cb, i, j = min(cand)
        ni, nj = size[i], size[j]
        # Lance-Williams update for Ward on the sum-of-squares increase
        nk = size[slots]
        new = ((ni + nk) * d[i, slots] + (nj + nk) * d[j, slots] - nk * d[i, j]) / (ni + nj + nk)
        merges.append(Merge(ca, cb, float(best), int(ni + nj)))
        d[i, slots] = new
        d[slots, i] = new
        d[i, i] = 0.0
        active[j] = False
        size[i] = ni + nj
        ids[i] = n + step
    return merges


def ward_cluster(centered: CenteredMatrix, variable_filter: Iterable[str] | None = None) -> Dendrogram:
    values = centered.values
    if variable_filter is not None:
        keep = frozenset(variable_filter)
        cols = [j for j, v in enumerate(centered.variable_ids) if v in keep]
        if not cols:
            raise StatsError("variable filter leaves no variables")
        values = values[:, cols]
    return Dendrogram(centered.observation_ids, tuple(ward_linkage(values)))


def format_dendrogram(tree: Dendrogram) -> str:
    out = ["step\tcluster_a\tcluster_b\theight\tsize"]
    for s, m in enumerate(tree.merges, start=1):
        out.append(f"{s}\t{_name(tree, m.cluster_a)}\t{_name(tree, m.cluster_b)}\t{m.height:.17g}\t{m.size}")
    return "\n".join(out) + "\n"


def _name(tree: Dendrogram, cluster: int) -> str:
    n = len(tree.leaf_labels)
    return tree.leaf_labels[cluster] if cluster < n else f"#{cluster - n + 1}"
