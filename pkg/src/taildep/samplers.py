"""Seeded samplers for the three max-stable families.

All outputs have heavy-tailed Frechet-type margins and a known stable tail
dependence function, which makes them the oracles for the estimation code:
the rank-based estimator computed on their output must converge to the
family's l.

Logistic dependence is generated through the positive-stable mixture: with
S positive alpha-stable (Laplace transform exp(-t^alpha), alpha = theta) and
E_j unit exponentials, (S/E_j)^theta has the logistic law with unit Frechet
margins. The stable variate uses the Kanter/Chambers-Mallows-Stuck transform
evaluated in log space so small and large theta are safe.
"""

from __future__ import annotations

import numpy as np

from .core import Sample
from .families import (
    AsymmetricLogisticFamily,
    FactorFamily,
    LogisticFamily,
    SymmetricLogisticFamily,
    _validate_loadings,
)

__all__ = [
    "sample_logistic",
    "sample_asymmetric_logistic",
    "sample_factor",
    "sample_from_family",
    "replication_rngs",
]


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replication_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent per-replication generators from one master seed.

    Substreams are spawned from a single SeedSequence, so results do not
    depend on how replications are scheduled across workers.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _positive_stable(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Positive alpha-stable variates with Laplace transform exp(-t^alpha)."""
    if not 0 < alpha < 1:
        raise ValueError("stable exponent must lie in (0, 1)")
    u = rng.uniform(0.0, np.pi, size)
    w = rng.exponential(1.0, size)
    ls = np.log(np.sin(u))
    ls_a = np.log(np.sin(alpha * u))
    ls_1a = np.log(np.sin((1.0 - alpha) * u))
    ratio = (1.0 - alpha) / alpha
    log_s = ls_a + ratio * ls_1a - ls / alpha - ratio * np.log(w)
    return np.exp(log_s)


def sample_logistic(theta: float, d: int, n: int, seed) -> Sample:
    """n draws from the d-variate logistic max-stable law, unit Frechet margins."""
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    rng = _as_rng(seed)
    if theta > 1 - 1e-12:
        return Sample(1.0 / rng.exponential(1.0, (n, d)))
    s = _positive_stable(theta, n, rng)
    e = rng.exponential(1.0, (n, d))
    return Sample(np.power(s[:, None] / e, theta))


def _logistic_pairs(theta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    if theta > 1 - 1e-12:
        return 1.0 / rng.exponential(1.0, (n, 2))
    s = _positive_stable(theta, n, rng)
    e = rng.exponential(1.0, (n, 2))
    return np.power(s[:, None] / e, theta)


def sample_asymmetric_logistic(theta: float, psi1: float, psi2: float, n: int, seed) -> Sample:
    """Bivariate asymmetric logistic law via the max-mixture construction.

    X = max((1-psi1) Z1, psi1 V1), Y = max((1-psi2) Z2, psi2 V2) with
    independent unit-Frechet Z and a logistic pair V; minus the log of the
    joint distribution function is exactly the asymmetric logistic stdf
    evaluated at (1/x, 1/y), so margins stay unit Frechet.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    if not (0 <= psi1 <= 1 and 0 <= psi2 <= 1):
        raise ValueError("asymmetry weights must lie in [0, 1]")
    rng = _as_rng(seed)
    v = _logistic_pairs(theta, n, rng)
    z = 1.0 / rng.exponential(1.0, (n, 2))
    x = np.maximum((1.0 - psi1) * z[:, 0], psi1 * v[:, 0])
    y = np.maximum((1.0 - psi2) * z[:, 1], psi2 * v[:, 1])
    return Sample(np.column_stack([x, y]))


def sample_factor(loadings, nu: float, n: int, seed, form: str = "max", noise_scale: float | None = None) -> Sample:
    """Max-linear (or summation) factor model with Frechet(nu) factors.

    ``loadings`` is the (d, r) matrix whose column i holds factor i's
    loadings a_ij. The max form is X_j = max_i a_ij Z_i; the sum form is
    X_j = sum_i a_ij Z_i plus optional centered Gaussian noise, which has
    the same tail dependence function.
    """
    a = np.asarray(loadings, dtype=float)
    if a.ndim != 2:
        raise ValueError("loadings must be a (d, r) matrix")
    if np.any(a < 0):
        raise ValueError("loadings must be nonnegative")
    if np.any(a.sum(axis=1) <= 0):
        raise ValueError("every component needs a positive loading in some factor")
    if np.any(a.sum(axis=0) <= 0):
        raise ValueError("every factor must load on some component")
    if nu <= 0:
        raise ValueError("tail index must be positive")
    if form not in ("max", "sum"):
        raise ValueError("form must be 'max' or 'sum'")
    rng = _as_rng(seed)
    d, r = a.shape
    z = np.power(rng.exponential(1.0, (n, r)), -1.0 / nu)  # Frechet(nu)
    if form == "max":
        data = (z[:, :, None] * a.T[None, :, :]).max(axis=1)
    else:
        data = z @ a.T
        if noise_scale is not None:
            data = data + noise_scale * rng.standard_normal((n, d))
    return Sample(data)


def sample_from_family(family, theta, n: int, seed) -> Sample:
    """Draw from the max-stable law whose stdf is l(.; theta) for the family."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if isinstance(family, LogisticFamily):
        return sample_logistic(float(theta[0]), family.d, n, seed)
    if isinstance(family, AsymmetricLogisticFamily):
        t, p1, p2 = family.to_psi(theta)
        return sample_asymmetric_logistic(t, p1, p2, n, seed)
    if isinstance(family, SymmetricLogisticFamily):
        t, psi = theta
        return sample_asymmetric_logistic(t, psi, psi, n, seed)
    if isinstance(family, FactorFamily):
        b = _validate_loadings(family.loadings_from_theta(theta))
        return sample_factor(b, 1.0, n, seed, form="max")
    raise TypeError(f"no sampler for {type(family).__name__}")
