"""Deterministic singular value decomposition and sign conventions.

The SVD is a one-sided (Hestenes) Jacobi iteration. Column pairs are
visited in a fixed round-robin schedule and each round rotates n/2
disjoint pairs at once, so every run performs exactly the same floating
point operations in the same order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError

EPS = np.finfo(float).eps
MAX_SWEEPS = 80


@dataclass(frozen=True, eq=False)
class SvdFactors:
    left: np.ndarray       # n x k, U
    singulars: np.ndarray  # k, diagonal of D
    right: np.ndarray      # m x k, V
    rank_tolerance: float

    @property
    def k(self) -> int:
        return self.singulars.shape[0]

    @property
    def numerically_zero(self) -> np.ndarray:
        return self.singulars < self.rank_tolerance

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singulars) @ self.right.T


def _round_robin(k: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Circle-method schedule: k-1 (or k) rounds of disjoint pairs covering all pairs."""
    players = list(range(k)) + ([-1] if k % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        p, q = [], []
        for i in range(size // 2):
            a, b = players[i], players[size - 1 - i]
            if a >= 0 and b >= 0:
                p.append(min(a, b))
                q.append(max(a, b))
        if p:
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonalise the columns of a (rows >= 1, cols = k).

    Returns (W, V) with W = a @ V, W's columns mutually orthogonal and V
    orthogonal k x k.
    """
    w = a.copy()
    k = w.shape[1]
    v = np.eye(k)
    if k < 2:
        return w, v
    rounds = _round_robin(k)
    tol = EPS * max(w.shape[0], 1)
    # columns reduced to rounding noise are left alone; rotating them never converges
    negligible = (EPS * np.linalg.norm(w)) ** 2
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p, q in rounds:
            wp, wq = w[:, p], w[:, q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            act = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (alpha > negligible) & (beta > negligible)
            if not act.any():
                continue
            rotated = True
            p, q = p[act], q[act]
            alpha, beta, gamma = alpha[act], beta[act], gamma[act]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.hypot(1.0, t)
            s = c * t
            wp, wq = w[:, p], w[:, q]
            w[:, p] = c * wp - s * wq
            w[:, q] = s * wp + c * wq
            vp, vq = v[:, p], v[:, q]
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
        if not rotated:
            return w, v
    raise DecompositionError(f"Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")


def _complete_basis(q: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace columns not in keep by an orthonormal completion.

    Candidates are standard basis vectors in index order, orthogonalised
    twice by modified Gram-Schmidt against the columns accepted so far.
    """
    q = q.copy()
    rows = q.shape[0]
    basis = [q[:, j] for j in np.flatnonzero(keep)]
    e = 0
    for j in np.flatnonzero(~keep):
        while True:
            if e >= rows:
                raise DecompositionError("cannot complete orthonormal basis")
            cand = np.zeros(rows)
            cand[e] = 1.0
            e += 1
            for _ in range(2):
                for b in basis:
                    cand -= (b @ cand) * b
            nrm = np.linalg.norm(cand)
            if nrm > 0.5:
                break
        q[:, j] = cand / nrm
        basis.append(q[:, j])
    return q


def svd(matrix, max_rank: int | None = None) -> SvdFactors:
    """Thin SVD, singular values in non-increasing order, canonical signs.

    k = min(n, m, max_rank). Components whose singular value falls below
    ``1e-12 * max(n, m) * s[0]`` are kept but flagged numerically zero; their
    left (or right) vectors are rebuilt as an orthonormal completion.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DecompositionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DecompositionError("matrix contains non-finite entries")
    n, m = a.shape
    transposed = m > n
    work = a.T if transposed else a          # rows >= cols
    w, v = _jacobi_columns(work)
    sig = np.sqrt(np.einsum("ij,ij->j", w, w))

    # non-increasing singulars; exact ties ordered by column index (stable)
    order = np.argsort(-sig, kind="stable")
    sig, w, v = sig[order], w[:, order], v[:, order]

    tol = 1e-12 * max(n, m) * (sig[0] if sig.size else 0.0)
    keep = sig > tol
    u = np.zeros_like(w)
    u[:, keep] = w[:, keep] / sig[keep]
    if not keep.all():
        u = _complete_basis(u, keep)

    left, right = (v, u) if transposed else (u, v)
    k = min(n, m) if max_rank is None else min(n, m, int(max_rank))
    if k < 1:
        raise DecompositionError("max_rank must be >= 1")
    factors = SvdFactors(left[:, :k].copy(), sig[:k].copy(), right[:, :k].copy(), float(tol))
    return canonical_signs(factors)


def _flip(factors: SvdFactors, flip: np.ndarray) -> SvdFactors:
    sign = np.where(flip, -1.0, 1.0)
    return SvdFactors(factors.left * sign, factors.singulars.copy(),
                      factors.right * sign, factors.rank_tolerance)


def canonical_signs(factors: SvdFactors) -> SvdFactors:
    """Make the largest-magnitude entry of each right vector non-negative.

    Ties in magnitude go to the lowest variable index (argmax picks the
    first maximum). Left vectors flip in tandem.
    """
    right = factors.right
    if right.shape[0] == 0:
        return factors
    peak = np.argmax(np.abs(right), axis=0)
    flip = right[peak, np.arange(right.shape[1])] < 0
    return _flip(factors, flip)


def align_signs(factors: SvdFactors, reference: SvdFactors) -> SvdFactors:
    """Flip component i when its right vector points away from reference's.

    Only the first min(k, k_ref) components are compared; an inner product
    of exactly zero leaves the component unchanged.
    """
    if factors.right.shape[0] != reference.right.shape[0]:
        raise DecompositionError(
            f"right vectors differ in length: {factors.right.shape[0]} vs {reference.right.shape[0]}")
    k = min(factors.k, reference.k)
    dots = np.einsum("ij,ij->j", factors.right[:, :k], reference.right[:, :k])
    flip = np.zeros(factors.k, dtype=bool)
    flip[:k] = dots < 0
    return _flip(factors, flip)
