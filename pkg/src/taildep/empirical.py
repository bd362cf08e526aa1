"""The rank-based nonparametric tail dependence estimator and its moments.

The estimator counts, per evaluation point x, the observations whose rank
in some column exceeds n + 1/2 - k x_j, scaled by 1/k. It is stored through
the per-observation threshold matrix a_ij = (n + 1/2 - R_ij) / k, so that
evaluation and integration share one representation:

    value(x) = #{i : x_j > a_ij for some j} / k.

Integrals of monomial weights against the estimator are exact: each
observation contributes the integral of the weight over the cube minus its
integral over the box [0, a_i] clipped to the cube (the complement of the
union above), and both pieces are closed-form for monomials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RankMatrix, WeightSpec

__all__ = ["EmpiricalStdf"]


@dataclass(frozen=True)
class EmpiricalStdf:
    """Empirical stable tail dependence function at threshold count k."""

    thresholds: np.ndarray  # (n, d): a_ij
    k: int
    n: int
    d: int

    @classmethod
    def from_ranks(cls, ranks: RankMatrix, k: int) -> "EmpiricalStdf":
        if not 1 <= k < ranks.n:
            raise ValueError(f"need 1 <= k < n, got k={k}, n={ranks.n}")
        a = (ranks.n + 0.5 - ranks.ranks.astype(float)) / k
        return cls(thresholds=a, k=k, n=ranks.n, d=ranks.d)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at one point (d,) or a batch (m, d); values in [0, n/k]."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if pts.shape[-1] != self.d:
            raise ValueError(f"points must have {self.d} coordinates")
        if np.any(pts < 0):
            raise ValueError("evaluation points must be nonnegative")
        m = pts.shape[0]
        out = np.empty(m)
        # chunk the body so the (chunk, n, d) comparison stays in cache
        chunk = max(1, int(2**22 // max(1, self.n * self.d)))
        for start in range(0, m, chunk):
            block = pts[start : start + chunk]
            fired = (block[:, None, :] > self.thresholds[None, :, :]).any(axis=2)
            out[start : start + chunk] = fired.sum(axis=1)
        out /= self.k
        return out[0] if single else out

    def weighted_integrals(self, weights: WeightSpec) -> np.ndarray:
        """Exact integrals of each weight function against the estimator.

        For a monomial prod_j x_j^(p_j), observation i contributes
        prod_j 1/(p_j+1) - prod_j c_ij^(p_j+1)/(p_j+1) with
        c_ij = clip(a_ij, 0, 1); contributions are summed and divided by k.
        """
        if weights.d != self.d:
            raise ValueError("weight dimension does not match the sample")
        c = np.clip(self.thresholds, 0.0, 1.0)
        out = np.zeros(weights.q)
        for m, monomials in enumerate(weights.terms):
            total = 0.0
            for coef, expo in monomials:
                inv = 1.0 / (expo + 1.0)
                full = np.prod(inv)
                boxes = np.prod(np.power(c, expo + 1.0) * inv, axis=1)
                total += coef * (self.n * full - boxes.sum())
            out[m] = total / self.k
        return out
