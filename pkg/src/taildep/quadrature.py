"""Deterministic quasi-Monte Carlo integration on the unit cube.

Two independently scrambled Sobol streams are averaged; the half-range
between the two stream estimates is the reported error. Everything is
deterministic given the spec's scrambling seeds, so repeated runs (and
repeated calls inside an optimizer) are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

__all__ = ["CubatureSpec", "CubatureResult", "integrate_cube"]


@dataclass(frozen=True)
class CubatureSpec:
    """Integration rule parameters for one cube dimension.

    ``max_points`` is the budget per scrambled stream; the rule starts at
    ``min_points`` and doubles until the error estimate meets ``rel_tol``
    or the budget is exhausted. Setting min_points == max_points gives a
    fixed-size single-pass rule, which is what the criterion evaluations
    use for speed.
    """

    dim: int
    rel_tol: float = 1e-6
    max_points: int = 2**14
    min_points: int = 2**10
    seeds: tuple[int, int] = (20231107, 907151)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.min_points > self.max_points:
            object.__setattr__(self, "min_points", self.max_points)

    def fixed(self, n_points: int | None = None) -> "CubatureSpec":
        n = self.max_points if n_points is None else n_points
        return CubatureSpec(
            dim=self.dim, rel_tol=self.rel_tol, max_points=n, min_points=n, seeds=self.seeds
        )


@dataclass(frozen=True)
class CubatureResult:
    value: np.ndarray  # scalar array or (k,) for vector integrands
    error: np.ndarray
    converged: bool
    points: int  # per stream

    def scalar(self) -> float:
        return float(self.value)


# deterministic point sets recur across criterion evaluations; cache them
_POINT_CACHE: dict[tuple[int, int, int], np.ndarray] = {}
_POINT_CACHE_LIMIT = 12


def _points(dim: int, n: int, seed: int) -> np.ndarray:
    key = (dim, n, seed)
    pts = _POINT_CACHE.get(key)
    if pts is None:
        m = int(np.log2(n))
        if 2**m != n:
            raise ValueError("point counts must be powers of two")
        engine = qmc.Sobol(d=dim, scramble=True, seed=seed)
        pts = engine.random_base2(m=m)
        pts.setflags(write=False)
        if len(_POINT_CACHE) >= _POINT_CACHE_LIMIT:
            _POINT_CACHE.pop(next(iter(_POINT_CACHE)))
        _POINT_CACHE[key] = pts
    return pts


def _stream_mean(f, dim: int, n: int, seed: int) -> np.ndarray:
    pts = _points(dim, n, seed)
    vals = np.asarray(f(pts), dtype=float)
    if vals.shape[0] != n:
        raise ValueError("integrand must return one value per point")
    return vals.mean(axis=0)


def integrate_cube(f, spec: CubatureSpec) -> CubatureResult:
    """Integrate ``f`` over [0,1]^dim.

    ``f`` maps an (N, dim) array to an (N,) or (N, k) array. The returned
    error is the componentwise half-range between the two scrambled-stream
    estimates; ``converged`` reports whether it met the relative tolerance
    within budget (the value is returned either way).
    """
    n = spec.min_points
    while True:
        a = _stream_mean(f, spec.dim, n, spec.seeds[0])
        b = _stream_mean(f, spec.dim, n, spec.seeds[1])
        value = 0.5 * (a + b)
        error = 0.5 * np.abs(a - b)
        scale = np.maximum(np.abs(value), 1e-12)
        converged = bool(np.all(error <= spec.rel_tol * scale))
        if converged or 2 * n > spec.max_points:
            return CubatureResult(value=value, error=error, converged=converged, points=n)
        n *= 2
