"""Parametric stable tail dependence functions.

Three families: the logistic model, the bivariate asymmetric logistic model
(with an average/half-difference reparametrization of the asymmetry pair, so
that symmetry is a single zero coordinate), and max-linear factor models.

Each family evaluates l(x; theta) on batches of points, exposes right-hand
partial derivatives in x (needed for the asymptotic covariance kernel), and,
where tractable, the analytic gradient in theta. All evaluation is in terms
of the identifiable tail-scale coefficients; for the factor model that is
the normalized loading matrix, not the raw loadings and tail index.

Internally points are processed in transposed (d, N) layout: the batch axis
is the long contiguous one, which matters because these evaluations sit in
the innermost loop of both the criterion and the covariance cubature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ParameterDomainError,
    ParameterSpace,
    WeightSpec,
    check_stdf_bounds,
    debug_bounds_enabled,
)
from .quadrature import CubatureSpec, integrate_cube

__all__ = [
    "LogisticFamily",
    "AsymmetricLogisticFamily",
    "SymmetricLogisticFamily",
    "FactorFamily",
    "spectral_atoms",
    "factor_monomial_integral",
    "weighted_moments",
    "weighted_moments_jacobian",
    "default_weights",
    "family_from_json",
    "QuadratureToleranceError",
    "PositivityError",
]

_THETA_FLOOR = 1e-12  # below this the logistic is evaluated as its max limit


class QuadratureToleranceError(RuntimeError):
    """Cubature budget exhausted before reaching the requested tolerance."""


class PositivityError(ValueError):
    """A factor loading is zero where the exact reduction needs b_ij > 0."""


def _as_batch_t(x, d: int) -> tuple[np.ndarray, bool]:
    """Validate points and return them transposed to (d, N)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[-1] != d:
        raise ValueError(f"points must have {d} coordinates, got shape {x.shape}")
    if np.any(x < 0):
        raise ValueError("stdf arguments must be componentwise nonnegative")
    return np.ascontiguousarray(x.T), single


def _maybe_check_bounds(values: np.ndarray, xt: np.ndarray) -> None:
    if debug_bounds_enabled():
        if not (
            np.all(values >= xt.max(axis=0) - 1e-10)
            and np.all(values <= xt.sum(axis=0) + 1e-10)
        ):
            raise AssertionError("stdf evaluation violated the max/sum bounds")


def _mixture_value_t(ut: np.ndarray, theta: float):
    """Stabilized (sum_j u_j^(1/theta))^theta on transposed batches.

    Returns (value, m, y, s) with m = max over coordinates and s the power
    sum of y = u/m; entries with m = 0 carry value 0 and s = 1.
    """
    m = ut.max(axis=0)
    safe = np.where(m > 0, m, 1.0)
    y = ut / safe
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.power(y, 1.0 / theta).sum(axis=0)
        s = np.where(m > 0, s, 1.0)
        val = np.where(m > 0, safe * np.power(s, theta), 0.0)
    return val, m, y, s


class _Family:
    """Shared helpers; concrete families define the actual formulas."""

    d: int
    kind: str

    @property
    def p(self) -> int:
        return self.space.p

    @property
    def space(self) -> ParameterSpace:
        cached = self.__dict__.get("_space")
        if cached is None:
            cached = self._build_space()
            self.__dict__["_space"] = cached
        return cached

    def validate(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if not self.space.contains(theta, tol=1e-9):
            raise ParameterDomainError(
                f"{self.kind}: parameter {theta.tolist()} outside the parameter space"
            )
        return theta

    def canonicalize(self, theta) -> np.ndarray:
        return np.asarray(theta, dtype=float).reshape(-1)

    def param_gradient(self, x, theta):
        """Analytic d l/d theta, or None when only finite differences apply."""
        return None

    def describe_json(self, theta) -> dict:
        return {"family": self.kind, "d": self.d, "params": np.asarray(theta).tolist()}


@dataclass(frozen=True)
class LogisticFamily(_Family):
    """l(x; theta) = (sum_j x_j^(1/theta))^theta with theta in (0, 1].

    theta = 1 is independence (l = sum), theta -> 0 complete dependence
    (l = max). Evaluation factors out max(x) so small theta cannot overflow.
    """

    d: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("need d >= 2")

    kind = "logistic"

    def _build_space(self) -> ParameterSpace:
        return ParameterSpace(boxes=[[1e-8, 1.0]], names=("theta",))

    def stdf(self, x, theta) -> np.ndarray:
        (theta,) = self.validate(theta)
        xt, single = _as_batch_t(x, self.d)
        if theta < _THETA_FLOOR:
            out = xt.max(axis=0)
        else:
            out, _, _, _ = _mixture_value_t(xt, theta)
        _maybe_check_bounds(out, xt)
        return out[0] if single else out

    def stdf_gradient(self, x, theta) -> np.ndarray:
        """Right-hand partials in x; each component lies in [0, 1]."""
        (theta,) = self.validate(theta)
        xt, single = _as_batch_t(x, self.d)
        m = xt.max(axis=0)
        if theta < _THETA_FLOOR:
            grad = (xt == m).astype(float)
        else:
            y = xt / np.where(m > 0, m, 1.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                s = np.power(y, 1.0 / theta).sum(axis=0)
                grad = np.power(y, 1.0 / theta - 1.0) * np.power(s, theta - 1.0)
            grad = np.where(m > 0, grad, 1.0)  # right-hand limit at the origin
        return grad[:, 0] if single else grad.T

    def param_gradient(self, x, theta) -> np.ndarray:
        (theta,) = self.validate(theta)
        xt, single = _as_batch_t(x, self.d)
        val, m, y, s = _mixture_value_t(xt, theta)
        with np.errstate(divide="ignore", invalid="ignore"):
            yu = np.power(y, 1.0 / theta)
            logy = np.log(np.where(y > 0, y, 1.0))
            dth = val * (np.log(s) - (yu * logy).sum(axis=0) / (theta * s))
        dth = np.where(m > 0, dth, 0.0)
        return dth[:1] if single else dth[:, None]


@dataclass(frozen=True)
class AsymmetricLogisticFamily(_Family):
    """Bivariate asymmetric logistic model.

    l(x, y) = (1-psi1) x + (1-psi2) y + ((psi1 x)^(1/theta) + (psi2 y)^(1/theta))^theta

    Parameter order is (theta, eta1, eta2) by default, where
    eta1 = (psi1+psi2)/2 and eta2 = (psi1-psi2)/2; eta2 = 0 is the symmetric
    submodel, so testing symmetry is a test on the final coordinate.
    Set coords="psi" for the raw (theta, psi1, psi2) parametrization.
    """

    coords: str = "eta"

    d = 2
    kind = "alog"

    def __post_init__(self):
        if self.coords not in ("eta", "psi"):
            raise ValueError("coords must be 'eta' or 'psi'")

    def _build_space(self) -> ParameterSpace:
        if self.coords == "psi":
            return ParameterSpace(
                boxes=[[1e-8, 1.0], [0.0, 1.0], [0.0, 1.0]],
                names=("theta", "psi1", "psi2"),
            )
        # |eta2| <= eta1 and |eta2| <= 1 - eta1 keep both psi's inside [0, 1]
        lin_a = np.array([[0, -1, 1], [0, -1, -1], [0, 1, 1], [0, 1, -1]], dtype=float)
        lin_b = np.array([0.0, 0.0, 1.0, 1.0])
        return ParameterSpace(
            boxes=[[1e-8, 1.0], [0.0, 1.0], [-0.5, 0.5]],
            lin_a=lin_a,
            lin_b=lin_b,
            names=("theta", "eta1", "eta2"),
        )

    def to_psi(self, theta_vec) -> tuple[float, float, float]:
        t, a, b = np.asarray(theta_vec, dtype=float)
        if self.coords == "psi":
            return t, a, b
        return t, a + b, a - b

    def from_psi(self, theta: float, psi1: float, psi2: float) -> np.ndarray:
        if self.coords == "psi":
            return np.array([theta, psi1, psi2])
        return np.array([theta, 0.5 * (psi1 + psi2), 0.5 * (psi1 - psi2)])

    def stdf(self, x, theta_vec) -> np.ndarray:
        theta_vec = self.validate(theta_vec)
        t, p1, p2 = self.to_psi(theta_vec)
        xt, single = _as_batch_t(x, 2)
        psis = np.array([[p1], [p2]])
        val, _, _, _ = _mixture_value_t(xt * psis, t)
        out = (1.0 - p1) * xt[0] + (1.0 - p2) * xt[1] + val
        _maybe_check_bounds(out, xt)
        return out[0] if single else out

    def stdf_gradient(self, x, theta_vec) -> np.ndarray:
        theta_vec = self.validate(theta_vec)
        t, p1, p2 = self.to_psi(theta_vec)
        xt, single = _as_batch_t(x, 2)
        psis = np.array([[p1], [p2]])
        _, m, y, s = _mixture_value_t(xt * psis, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            pow_term = np.power(y, 1.0 / t - 1.0) * np.power(s, t - 1.0)
        # right-hand limit at the origin carries the full mixture weight
        grad = (1.0 - psis) + psis * np.where(m > 0, pow_term, 1.0)
        return grad[:, 0] if single else grad.T

    def param_gradient(self, x, theta_vec) -> np.ndarray:
        theta_vec = self.validate(theta_vec)
        t, p1, p2 = self.to_psi(theta_vec)
        xt, single = _as_batch_t(x, 2)
        psis = np.array([[p1], [p2]])
        val, m, y, s = _mixture_value_t(xt * psis, t)
        pos = m > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            yu = np.power(y, 1.0 / t)
            logy = np.log(np.where(y > 0, y, 1.0))
            dth = val * (np.log(s) - (yu * logy).sum(axis=0) / (t * s))
            dth = np.where(pos, dth, 0.0)
            pow_term = np.power(y, 1.0 / t - 1.0) * np.power(s, t - 1.0)
        pow_term = np.where(pos, pow_term, 0.0)
        dpsi = -xt + xt * pow_term  # rows: d/dpsi1, d/dpsi2
        if self.coords == "psi":
            out = np.stack([dth, dpsi[0], dpsi[1]], axis=-1)
        else:
            out = np.stack([dth, dpsi[0] + dpsi[1], dpsi[0] - dpsi[1]], axis=-1)
        return out[0] if single else out

    def describe_json(self, theta) -> dict:
        t, p1, p2 = self.to_psi(np.asarray(theta, dtype=float))
        base = super().describe_json(theta)
        base["coords"] = self.coords
        base["psi"] = [p1, p2]
        return base


@dataclass(frozen=True)
class SymmetricLogisticFamily(_Family):
    """Equal-asymmetry submodel: l = (1-psi)(x+y) + psi (x^(1/t)+y^(1/t))^t.

    Parameters (theta, psi); identical to the asymmetric family on the
    diagonal psi1 = psi2 = psi.
    """

    d = 2
    kind = "symlog"

    def _build_space(self) -> ParameterSpace:
        return ParameterSpace(boxes=[[1e-8, 1.0], [0.0, 1.0]], names=("theta", "psi"))

    _FULL = AsymmetricLogisticFamily(coords="psi")

    def _lift(self, theta_vec) -> np.ndarray:
        t, psi = self.validate(theta_vec)
        return np.array([t, psi, psi])

    def stdf(self, x, theta_vec) -> np.ndarray:
        return self._FULL.stdf(x, self._lift(theta_vec))

    def stdf_gradient(self, x, theta_vec) -> np.ndarray:
        return self._FULL.stdf_gradient(x, self._lift(theta_vec))

    def param_gradient(self, x, theta_vec) -> np.ndarray:
        g = self._FULL.param_gradient(x, self._lift(theta_vec))
        # d/dpsi = d/dpsi1 + d/dpsi2 along the diagonal
        return np.stack([g[..., 0], g[..., 1] + g[..., 2]], axis=-1)


def _validate_loadings(loadings: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    b = np.asarray(loadings, dtype=float)
    if b.ndim != 2:
        raise ParameterDomainError("loadings must be a (d, r) matrix")
    if np.any(b < -tol):
        raise ParameterDomainError("loadings must be nonnegative")
    b = np.clip(b, 0.0, None)
    rows = b.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > 1e-6):
        raise ParameterDomainError("each loading row must sum to one")
    if np.any(b.sum(axis=0) <= 0):
        raise ParameterDomainError("every factor must load on some component")
    return b


def _canonical_column_order(loadings: np.ndarray) -> list[int]:
    sums = loadings.sum(axis=0)
    # decreasing column sums; exact lexicographic decreasing order on ties
    return sorted(range(loadings.shape[1]), key=lambda i: (-sums[i], tuple(-loadings[:, i])))


@dataclass(frozen=True)
class FactorFamily(_Family):
    """Max-linear factor model in d dimensions with r factors.

    The tail dependence function is l(x) = sum_i max_j b_ij x_j where the
    (d, r) loading matrix has nonnegative entries and unit row sums (column
    i holds the loadings of factor i). The canonical parameter vector
    stacks the columns in decreasing column-sum order (lexicographic
    decreasing on ties) and drops the lowest-sum column, which the row sums
    reconstruct; p = (r-1) d.
    """

    d: int
    r: int

    kind = "factor"

    def __post_init__(self):
        if self.d < 1 or self.r < 1:
            raise ValueError("need d >= 1 and r >= 1")

    def _build_space(self) -> ParameterSpace:
        p = (self.r - 1) * self.d
        if p == 0:
            return ParameterSpace(boxes=np.zeros((0, 2)), names=())
        boxes = np.tile([0.0, 1.0], (p, 1))
        # the implied last column must stay nonnegative: per-row stack sums <= 1
        lin_a = np.zeros((self.d, p))
        for j in range(self.d):
            lin_a[j, j :: self.d] = 1.0
        lin_b = np.ones(self.d)
        names = tuple(
            f"b{j+1}.{c+1}" for c in range(self.r - 1) for j in range(self.d)
        )
        return ParameterSpace(boxes=boxes, lin_a=lin_a, lin_b=lin_b, names=names)

    def loadings_from_theta(self, theta) -> np.ndarray:
        theta = self.validate(theta)
        cols = theta.reshape(self.r - 1, self.d).T if self.r > 1 else np.zeros((self.d, 0))
        last = 1.0 - cols.sum(axis=1)
        return np.column_stack([cols, last])

    def theta_from_loadings(self, loadings) -> np.ndarray:
        b = _validate_loadings(loadings)
        if b.shape != (self.d, self.r):
            raise ParameterDomainError(f"expected a ({self.d}, {self.r}) loading matrix")
        order = _canonical_column_order(b)
        return np.concatenate([b[:, i] for i in order[:-1]]) if self.r > 1 else np.array([])

    def canonicalize(self, theta) -> np.ndarray:
        return self.theta_from_loadings(self.loadings_from_theta(theta))

    def stdf(self, x, theta) -> np.ndarray:
        return self.stdf_from_loadings(x, self.loadings_from_theta(theta))

    def stdf_from_loadings(self, x, loadings) -> np.ndarray:
        b = _validate_loadings(loadings)
        xt, single = _as_batch_t(x, b.shape[0])
        scaled = b.T[:, :, None] * xt[None, :, :]  # (r, d, N)
        out = scaled.max(axis=1).sum(axis=0)
        _maybe_check_bounds(out, xt)
        return out[0] if single else out

    def stdf_gradient(self, x, theta) -> np.ndarray:
        """Right-hand partials: sum_i b_ij 1{b_ij x_j >= max_s b_is x_s}.

        Ties are resolved toward inclusion, matching the one-sided limit.
        """
        b = _validate_loadings(self.loadings_from_theta(theta))
        xt, single = _as_batch_t(x, b.shape[0])
        scaled = b.T[:, :, None] * xt[None, :, :]  # (r, d, N)
        peak = scaled.max(axis=1, keepdims=True)
        grad = ((scaled >= peak) * b.T[:, :, None]).sum(axis=0)  # (d, N)
        return grad[:, 0] if single else grad.T

    def describe_json(self, theta) -> dict:
        base = super().describe_json(theta)
        base["r"] = self.r
        base["loadings"] = self.loadings_from_theta(theta).tolist()
        return base


def spectral_atoms(loadings) -> tuple[np.ndarray, np.ndarray]:
    """Atoms and masses of the discrete spectral measure of a factor model.

    Factor i contributes the simplex point column_i / colsum_i with mass
    colsum_i; the masses add up to d.
    """
    b = _validate_loadings(loadings)
    masses = b.sum(axis=0)
    points = (b / masses).T  # (r, d)
    return points, masses


def _factor_monomial_batch(b: np.ndarray, monomials: list[tuple[int, float]]) -> np.ndarray:
    """Exact cube integrals of x_axis^s * l(x) for several (axis, s) at once.

    One observation per (factor, leading-coordinate) pair: the integrand on
    each pair is a one-dimensional piecewise power function whose pieces sit
    between the saturation points beta_l = b_il / b_ij, so each piece has a
    closed form. All pair-level work is shared across the monomials.
    """
    d, r = b.shape
    cols = b.T  # (r, d): row i = loadings of factor i
    # pair p = (i, j) flattened row-major; beta[p, l] = b_il / b_ij
    beta = (cols[:, None, :] / cols[:, :, None]).reshape(r * d, d)
    bij = cols.reshape(r * d)
    j_of_pair = np.tile(np.arange(d), r)
    order = np.argsort(beta, axis=1)
    beta_sorted = np.take_along_axis(beta, order, axis=1)
    pos = np.empty_like(order)
    np.put_along_axis(pos, order, np.broadcast_to(np.arange(d), order.shape).copy(), axis=1)
    # suffix[p, piece] = product of 1/beta over coordinates still growing
    suffix = np.ones((r * d, d + 1))
    suffix[:, :d] = np.cumprod((1.0 / beta_sorted)[:, ::-1], axis=1)[:, ::-1]
    edges = np.concatenate(
        [np.zeros((r * d, 1)), np.minimum(beta_sorted, 1.0), np.ones((r * d, 1))], axis=1
    )
    t0 = edges[:, :-1]
    t1 = np.maximum(edges[:, 1:], t0)  # later edges already clipped to 1
    base_gamma = (d - np.arange(d + 1)).astype(float)

    out = np.empty(len(monomials))
    for m, (axis, s) in enumerate(monomials):
        free = pos[:, axis, None] >= np.arange(d + 1)  # axis not yet clamped
        gamma = base_gamma + s * free
        coef = suffix * np.where(free, beta[:, axis, None] ** (-s), 1.0)
        pieces = coef * (t1 ** (gamma + 1.0) - t0 ** (gamma + 1.0)) / (gamma + 1.0)
        denom = 1.0 + s * (j_of_pair != axis)
        out[m] = ((bij / denom) * pieces.sum(axis=1)).sum()
    return out


def factor_monomial_integral(loadings, axis: int, s: float) -> float:
    """Exact integral of x_axis^s * l(x) over the unit cube for a factor model.

    Reduces the d-dimensional integral to one-dimensional piecewise power
    functions, integrated in closed form piece by piece. Requires every
    loading to be strictly positive; callers fall back to cubature when a
    loading vanishes. ``axis`` is 0-based; s >= 0 (s = 0 gives the plain
    integral of l).
    """
    b = np.asarray(loadings, dtype=float)
    if b.ndim != 2:
        raise ParameterDomainError("loadings must be a (d, r) matrix")
    d, r = b.shape
    if s < 0:
        raise ValueError("exponent must be nonnegative")
    if not (0 <= axis < d):
        raise ValueError("axis out of range")
    if np.any(b <= 0):
        raise PositivityError("exact factor integral needs all loadings positive")
    return float(_factor_monomial_batch(b, [(axis, float(s))])[0])


def _phi_spec(family, config_points: int | None = None, rel_tol: float = 1e-6) -> CubatureSpec:
    n = config_points or 2**14
    return CubatureSpec(dim=family.d, rel_tol=rel_tol, max_points=n, min_points=n)


def weighted_moments(
    family,
    theta,
    weights: WeightSpec,
    spec: CubatureSpec | None = None,
    strict: bool = False,
) -> np.ndarray:
    """Integral of each weight function against l(.;theta) over the unit cube.

    Factor-model moments with single-coordinate monomial weights use the
    exact one-dimensional reduction; everything else goes through the
    quasi-Monte Carlo rule. With strict=True a cubature run that exhausts
    its budget above tolerance raises QuadratureToleranceError.
    """
    theta = family.validate(theta)
    out = np.empty(weights.q)
    needs_quad = []
    if isinstance(family, FactorFamily):
        b = family.loadings_from_theta(theta)
        all_positive = bool(np.all(b > 0))
        exact_idx, exact_monos, exact_coefs = [], [], []
        for m in range(weights.q):
            mono = weights.single_coordinate_monomial(m)
            if mono is not None and all_positive:
                coef, k1, s = mono
                exact_idx.append(m)
                exact_monos.append((0 if k1 == 0 else k1 - 1, float(s)))
                exact_coefs.append(coef)
            else:
                needs_quad.append(m)
        if exact_idx:
            out[exact_idx] = np.asarray(exact_coefs) * _factor_monomial_batch(b, exact_monos)
    else:
        needs_quad = list(range(weights.q))

    if needs_quad:
        spec = spec or _phi_spec(family)

        def integrand(pts):
            lv = family.stdf(pts, theta)
            gv = weights.evaluate(pts)[:, needs_quad]
            return gv * lv[:, None]

        res = integrate_cube(integrand, spec)
        if strict and not res.converged:
            raise QuadratureToleranceError(
                f"moment cubature error {res.error} above tolerance at budget {res.points}"
            )
        out[needs_quad] = np.atleast_1d(res.value)
    return out


def weighted_moments_jacobian(
    family,
    theta,
    weights: WeightSpec,
    spec: CubatureSpec | None = None,
    fd_step: float = 1e-5,
) -> np.ndarray:
    """q-by-p Jacobian of the weighted moment map.

    Analytic parameter gradients are integrated directly when the family
    provides them; the factor model is differenced centrally in canonical
    coordinates (the dropped column absorbs the row-sum constraint).
    """
    theta = family.validate(theta)
    p = family.p
    spec = spec or _phi_spec(family)
    probe = family.param_gradient(np.full((1, family.d), 0.5), theta)
    if probe is not None:

        def integrand(pts):
            dl = family.param_gradient(pts, theta)  # (N, p)
            gv = weights.evaluate(pts)  # (N, q)
            return (gv[:, :, None] * dl[:, None, :]).reshape(pts.shape[0], -1)

        res = integrate_cube(integrand, spec)
        return np.atleast_1d(res.value).reshape(weights.q, p)

    if family.space.boundary_distance(theta) <= 0:
        raise ParameterDomainError(
            "finite differences need an interior parameter; nudge inward first"
        )

    def _pull_inside(vec: np.ndarray, c: int, target: float) -> float:
        # shrink the step along coordinate c until the point is feasible
        value = target
        for _ in range(60):
            vec[c] = value
            if family.space.contains(vec, tol=1e-12):
                return value
            value = 0.5 * (value + theta[c])
        return theta[c]

    jac = np.empty((weights.q, p))
    for c in range(p):
        lo, hi = family.space.boxes[c]
        tp, tm = theta.copy(), theta.copy()
        up = _pull_inside(tp, c, min(theta[c] + fd_step, hi))
        dn = _pull_inside(tm, c, max(theta[c] - fd_step, lo))
        tp[c], tm[c] = up, dn
        if up - dn <= 1e-12:
            raise ParameterDomainError(
                f"cannot difference coordinate {c}: no feasible room around theta"
            )
        jac[:, c] = (
            weighted_moments(family, tp, weights, spec)
            - weighted_moments(family, tm, weights, spec)
        ) / (up - dn)
    return jac


def default_weights(family) -> WeightSpec:
    """The paper-style defaults: low-degree monomials sized to the family.

    logistic: the constant 1 (q = 1). Asymmetric logistic: (1, x1, x2).
    Factor models: x_j^s for s = 1..r-1 plus the constant, giving
    q = (r-1) d + 1 >= p.
    """
    if isinstance(family, LogisticFamily):
        return WeightSpec.parse("1", family.d)
    if isinstance(family, AsymmetricLogisticFamily):
        return WeightSpec.parse("1;x1;x2", 2)
    if isinstance(family, SymmetricLogisticFamily):
        return WeightSpec.parse("x1;2*x1+2*x2", 2)
    if isinstance(family, FactorFamily):
        parts = []
        for s in range(1, max(family.r, 2)):
            parts.extend(f"x{j+1}^{s}" if s > 1 else f"x{j+1}" for j in range(family.d))
        parts.append("1")
        return WeightSpec.parse(";".join(parts), family.d)
    raise TypeError(f"no default weights for {type(family).__name__}")


def family_from_json(payload: dict):
    """Rebuild (family, theta) from the serialized form."""
    kind = payload["family"]
    if kind == "logistic":
        fam = LogisticFamily(d=int(payload["d"]))
    elif kind == "alog":
        fam = AsymmetricLogisticFamily(coords=payload.get("coords", "eta"))
    elif kind == "symlog":
        fam = SymmetricLogisticFamily()
    elif kind == "factor":
        fam = FactorFamily(d=int(payload["d"]), r=int(payload["r"]))
    else:
        raise ValueError(f"unknown family kind {kind!r}")
    return fam, np.asarray(payload["params"], dtype=float)
