"""Asymptotic covariance machinery and tests.

The limiting process of the rescaled estimation error is Gaussian; its
covariance is expressible entirely through l and its right-hand partial
derivatives, so no process is ever simulated here. The building block is
the set-overlap covariance

    exceedance_cov(x, y) = l(x) + l(y) - l(x v y)

(inclusion-exclusion of the two exceedance regions), from which the
covariance of the margin-corrected limit process follows by expanding its
four terms. Integrating that kernel against the weight functions gives the
moment covariance Sigma; sandwiching Sigma with the moment-map Jacobian
gives the parameter covariance M used for confidence regions and the
submodel test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg
from scipy.stats import chi2

from .core import EstimationConfig, RankMatrix, Sample, WeightSpec
from .estimator import EstimateResult, fit
from .families import weighted_moments_jacobian
from .quadrature import CubatureResult, CubatureSpec, integrate_cube

__all__ = [
    "exceedance_cov",
    "stdf_limit_cov",
    "moment_covariance",
    "parameter_covariance",
    "ParameterCovariance",
    "with_covariance",
    "confidence_statistic",
    "submodel_test",
    "TestResult",
    "InferenceError",
    "IdentifiabilityError",
]


class InferenceError(RuntimeError):
    """Covariance machinery failed (indefiniteness, singularity)."""


class IdentifiabilityError(InferenceError):
    """The moment-map Jacobian is rank deficient at the given parameter."""


def exceedance_cov(stdf, x, y) -> np.ndarray:
    """Covariance of the limiting exceedance process between points x and y.

    ``stdf`` is a callable on batches; x, y are (d,) or (N, d) with
    nonnegative entries. The value at x = y is l(x), the variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return stdf(x) + stdf(y) - stdf(np.maximum(x, y))


def stdf_limit_cov(family, theta, x, y) -> np.ndarray:
    """Covariance kernel of the limit of the rescaled empirical stdf error.

    Expands the four terms of the margin-corrected process covariance; the
    cross terms against marginal directions reduce to exceedance_cov with
    one argument replaced by a coordinate-axis point.
    """
    theta = family.validate(theta)
    single = np.asarray(x).ndim == 1 and np.asarray(y).ndim == 1
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        x, y = np.broadcast_arrays(x, y)
        x, y = x.copy(), y.copy()
    n, d = x.shape

    def l(pts):
        return family.stdf(pts, theta)

    lx = l(x)
    ly = l(y)
    gx = family.stdf_gradient(x, theta)
    gy = family.stdf_gradient(y, theta)

    out = lx + ly - l(np.maximum(x, y))

    # marginal cross terms: cov(W(x), W(y_j e_j)) = l(x) + y_j - l(x with
    # coordinate j raised to max(x_j, y_j))
    for j in range(d):
        xj_up = x.copy()
        xj_up[:, j] = np.maximum(x[:, j], y[:, j])
        out -= gy[:, j] * (lx + y[:, j] - l(xj_up))
        yj_up = y.copy()
        yj_up[:, j] = np.maximum(x[:, j], y[:, j])
        out -= gx[:, j] * (x[:, j] + ly - l(yj_up))

    # marginal-marginal terms: two-coordinate axis points, min on the diagonal
    for i in range(d):
        for j in range(d):
            if i == j:
                cross = np.minimum(x[:, i], y[:, i])
            else:
                pts = np.zeros_like(x)
                pts[:, i] = x[:, i]
                pts[:, j] = y[:, j]
                cross = x[:, i] + y[:, j] - l(pts)
            out += gx[:, i] * gy[:, j] * cross
    return float(out[0]) if single else out


def moment_covariance(
    family,
    theta,
    weights: WeightSpec,
    points: int = 2**16,
    rel_tol: float = 1e-4,
) -> tuple[np.ndarray, CubatureResult]:
    """The q-by-q covariance of the limiting weighted moment vector.

    Integrates the limit kernel against every weight pair over the doubled
    cube, symmetrizes, and floors small negative eigenvalues at zero;
    negative eigenvalues beyond quadrature tolerance raise InferenceError.
    """
    theta = family.validate(theta)
    d, q = family.d, weights.q
    spec = CubatureSpec(dim=2 * d, rel_tol=rel_tol, max_points=points, min_points=points)

    def integrand(pts):
        x, y = pts[:, :d], pts[:, d:]
        kern = stdf_limit_cov(family, theta, x, y)
        gx = weights.evaluate(x)
        gy = weights.evaluate(y)
        return (gx[:, :, None] * gy[:, None, :]).reshape(pts.shape[0], -1) * kern[:, None]

    res = integrate_cube(integrand, spec)
    sigma = np.atleast_1d(res.value).reshape(q, q)
    sigma = 0.5 * (sigma + sigma.T)
    vals, vecs = np.linalg.eigh(sigma)
    if vals.min() < -1e-8:
        raise InferenceError(
            f"moment covariance has eigenvalue {vals.min():.3e} below tolerance"
        )
    sigma = (vecs * np.maximum(vals, 0.0)) @ vecs.T
    return 0.5 * (sigma + sigma.T), res


@dataclass(frozen=True)
class ParameterCovariance:
    """Asymptotic covariance of the rescaled parameter error."""

    m: np.ndarray  # (p, p)
    sigma: np.ndarray  # (q, q)
    jacobian: np.ndarray  # (q, p)
    converged: bool

    def tail_block(self, r: int) -> np.ndarray:
        """Lower-right r-by-r block, the covariance of the last r coordinates."""
        return self.m[self.m.shape[0] - r :, self.m.shape[0] - r :]


def parameter_covariance(
    family,
    theta,
    weights: WeightSpec,
    config: EstimationConfig | None = None,
) -> ParameterCovariance:
    """Sandwich covariance of the parameter estimator at theta.

    M = (J' J)^-1 J' Sigma J (J' J)^-1 computed through an orthogonal
    factorization of the Jacobian; rank deficiency raises an
    IdentifiabilityError naming the flattest parameter direction.
    """
    config = config or EstimationConfig(k=1)
    theta = family.validate(theta)
    phi_spec = CubatureSpec(
        dim=family.d,
        rel_tol=config.quad_rel_tol,
        max_points=config.phi_points,
        min_points=config.phi_points,
    )
    jac = weighted_moments_jacobian(family, theta, weights, phi_spec)
    svals = np.linalg.svd(jac, compute_uv=False)
    if svals.min() <= 1e-10:
        null_dir = np.linalg.svd(jac)[2][-1]
        raise IdentifiabilityError(
            "moment map Jacobian is rank deficient; flattest direction "
            f"{np.round(null_dir, 4).tolist()}"
        )
    sigma, res = moment_covariance(family, theta, weights, points=config.sigma_points)
    qmat, rmat = np.linalg.qr(jac)
    pinv_left = linalg.solve_triangular(rmat, qmat.T)  # (p, q) = (J'J)^-1 J'
    m = pinv_left @ sigma @ pinv_left.T
    m = 0.5 * (m + m.T)
    return ParameterCovariance(m=m, sigma=sigma, jacobian=jac, converged=res.converged)


def with_covariance(result: EstimateResult, family, weights: WeightSpec, config: EstimationConfig) -> EstimateResult:
    """Attach the plug-in covariance M(theta-hat)/k and standard errors."""
    pc = parameter_covariance(family, result.theta, weights, config)
    cov = pc.m / result.k
    return replace(result, covariance=cov, std_errors=np.sqrt(np.clip(np.diag(cov), 0.0, None)))


def confidence_statistic(result: EstimateResult, theta0) -> float:
    """Wald statistic k (theta-hat - theta0)' M^-1 (theta-hat - theta0).

    Compare against chi-squared quantiles with p degrees of freedom. The
    result must carry its covariance (see with_covariance).
    """
    if result.covariance is None:
        raise InferenceError("estimate carries no covariance; attach one first")
    delta = result.theta - np.asarray(theta0, dtype=float).reshape(-1)
    try:
        cho = linalg.cho_factor(result.covariance)
    except linalg.LinAlgError as exc:
        raise InferenceError(f"singular parameter covariance: {exc}") from None
    return float(delta @ linalg.cho_solve(cho, delta))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    dof: int
    p_value: float
    k: int
    model: dict
    hypothesis: dict
    full_estimate: EstimateResult

    def to_json(self) -> dict:
        return {
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "k": self.k,
            "model": self.model,
            "hypothesis": self.hypothesis,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def submodel_test(
    family,
    data: Sample | RankMatrix,
    theta2_star,
    config: EstimationConfig,
    weights: WeightSpec | None = None,
    full_result: EstimateResult | None = None,
) -> TestResult:
    """Test that the last r parameter coordinates equal theta2_star.

    Fits the full model, evaluates the parameter covariance at the hybrid
    point (first coordinates from the fit, tested coordinates from the
    hypothesis), and forms the Wald statistic on the tail block, which is
    asymptotically chi-squared with r degrees of freedom under the null.
    """
    theta2_star = np.atleast_1d(np.asarray(theta2_star, dtype=float))
    r = theta2_star.size
    if not 1 <= r < family.p:
        raise ValueError(f"tested block must have 1..p-1 coordinates, got {r}")
    if weights is None:
        from .families import default_weights

        weights = default_weights(family)
    full = full_result if full_result is not None else fit(data, family, config, weights)
    head = full.theta[: family.p - r]
    hybrid = np.concatenate([head, theta2_star])
    pc = parameter_covariance(family, hybrid, weights, config)
    m2 = pc.tail_block(r)
    delta = full.theta[family.p - r :] - theta2_star
    try:
        cho = linalg.cho_factor(m2)
    except linalg.LinAlgError as exc:
        raise InferenceError(f"singular tail covariance block: {exc}") from None
    stat = float(config.k * (delta @ linalg.cho_solve(cho, delta)))
    return TestResult(
        statistic=stat,
        dof=r,
        p_value=float(chi2.sf(stat, r)),
        k=config.k,
        model=full.family_json,
        hypothesis={"tail_coordinates": theta2_star.tolist()},
        full_estimate=full,
    )
