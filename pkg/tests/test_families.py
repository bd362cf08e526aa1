import numpy as np
import pytest

from taildep import (
    AsymmetricLogisticFamily,
    CubatureSpec,
    FactorFamily,
    LogisticFamily,
    SymmetricLogisticFamily,
    WeightSpec,
    default_weights,
    factor_monomial_integral,
    integrate_cube,
    spectral_atoms,
    weighted_moments,
    weighted_moments_jacobian,
)
from taildep.core import ParameterDomainError, set_debug_bounds
from taildep.families import PositivityError, family_from_json

PAPER_LOADINGS = np.array([[0.2, 0.8], [0.5, 0.5], [0.7, 0.3], [0.9, 0.1]])

ALL_FAMILIES = [
    (LogisticFamily(d=2), np.array([0.5])),
    (LogisticFamily(d=5), np.array([0.8])),
    (AsymmetricLogisticFamily(), np.array([0.55, 0.6, 0.15])),
    (AsymmetricLogisticFamily(coords="psi"), np.array([0.4, 0.9, 0.3])),
    (SymmetricLogisticFamily(), np.array([0.65, 0.95])),
    (FactorFamily(d=4, r=2), FactorFamily(d=4, r=2).theta_from_loadings(PAPER_LOADINGS)),
    (
        FactorFamily(d=3, r=3),
        FactorFamily(d=3, r=3).theta_from_loadings(
            np.array([[0.5, 0.3, 0.2], [0.2, 0.6, 0.2], [0.25, 0.3, 0.45]])
        ),
    ),
]


@pytest.fixture(autouse=True)
def _bounds_checks():
    previous = set_debug_bounds(True)
    yield
    set_debug_bounds(previous)


class TestLogistic:
    def test_independence_case(self):
        assert LogisticFamily(d=2).stdf([1.0, 1.0], [1.0]) == pytest.approx(2.0)

    def test_five_dim_reference_value(self):
        assert LogisticFamily(d=5).stdf([1.0] * 5, [0.5]) == pytest.approx(np.sqrt(5))

    def test_plug_in(self):
        assert LogisticFamily(d=2).stdf([3.0, 4.0], [0.5]) == pytest.approx(5.0)

    def test_tiny_theta_is_max(self):
        fam = LogisticFamily(d=3)
        assert fam.stdf([0.3, 0.9, 0.5], [1e-8]) == pytest.approx(0.9, abs=1e-6)

    def test_domain_error(self):
        with pytest.raises(ParameterDomainError):
            LogisticFamily(d=2).stdf([1.0, 1.0], [1.3])

    def test_gradient_reference(self):
        g = LogisticFamily(d=2).stdf_gradient([1.0, 1.0], [0.5])
        assert g == pytest.approx([2**-0.5, 2**-0.5])

    def test_gradient_at_theta_one(self):
        g = LogisticFamily(d=4).stdf_gradient([0.3, 0.1, 0.9, 0.4], [1.0])
        assert g == pytest.approx([1.0] * 4)

    def test_gradient_zero_coordinate_right_limit(self):
        g = LogisticFamily(d=2).stdf_gradient([0.0, 1.0], [0.5])
        assert g[0] == pytest.approx(0.0)
        assert g[1] == pytest.approx(1.0)


class TestAsymmetricLogistic:
    def test_reduces_to_logistic_at_full_weight(self):
        fam = AsymmetricLogisticFamily(coords="psi")
        log = LogisticFamily(d=2)
        x = np.array([[0.3, 0.8], [1.4, 0.2]])
        assert fam.stdf(x, [0.5, 1.0, 1.0]) == pytest.approx(log.stdf(x, [0.5]))

    def test_zero_weights_give_independence(self):
        fam = AsymmetricLogisticFamily(coords="psi")
        assert fam.stdf([0.3, 0.8], [0.5, 0.0, 0.0]) == pytest.approx(1.1)

    def test_symmetric_reference_value(self):
        fam = AsymmetricLogisticFamily(coords="psi")
        want = 2 * 0.05 + 0.95 * 2**0.65
        assert fam.stdf([1.0, 1.0], [0.65, 0.95, 0.95]) == pytest.approx(want)

    def test_eta_reparametrization_bijection(self):
        fam = AsymmetricLogisticFamily()
        t, p1, p2 = fam.to_psi([0.5, 0.6, 0.2])
        assert (p1, p2) == pytest.approx((0.8, 0.4))
        assert fam.from_psi(t, p1, p2) == pytest.approx([0.5, 0.6, 0.2])

    def test_eta2_zero_equals_symmetric_family_exactly(self):
        fam = AsymmetricLogisticFamily()
        sym = SymmetricLogisticFamily()
        x = np.random.default_rng(0).uniform(0, 2, (50, 2))
        a = fam.stdf(x, [0.65, 0.95, 0.0])
        b = sym.stdf(x, [0.65, 0.95])
        assert np.array_equal(a, b)

    def test_symmetric_closed_form(self):
        sym = SymmetricLogisticFamily()
        x = np.random.default_rng(1).uniform(0, 2, (50, 2))
        t, psi = 0.65, 0.95
        want = (1 - psi) * (x[:, 0] + x[:, 1]) + psi * (
            x[:, 0] ** (1 / t) + x[:, 1] ** (1 / t)
        ) ** t
        assert sym.stdf(x, [t, psi]) == pytest.approx(want, rel=1e-12)

    def test_eta_box_constraints(self):
        fam = AsymmetricLogisticFamily()
        assert fam.space.contains(np.array([0.5, 0.3, 0.2]))
        assert not fam.space.contains(np.array([0.5, 0.3, 0.4]))  # |eta2| > eta1
        assert not fam.space.contains(np.array([0.5, 0.9, 0.2]))  # psi1 > 1


class TestFactor:
    def test_paper_model_value(self):
        fam = FactorFamily(d=4, r=2)
        theta = fam.theta_from_loadings(PAPER_LOADINGS)
        assert fam.stdf([1.0] * 4, theta) == pytest.approx(1.7)

    def test_unit_vectors_hit_moment_conditions(self):
        fam = FactorFamily(d=4, r=2)
        theta = fam.theta_from_loadings(PAPER_LOADINGS)
        assert fam.stdf(np.eye(4), theta) == pytest.approx(np.ones(4))

    def test_single_factor_is_max(self):
        fam = FactorFamily(d=3, r=1)
        theta = fam.theta_from_loadings(np.ones((3, 1)))
        assert fam.stdf([0.3, 0.9, 0.5], theta) == pytest.approx(0.9)

    def test_canonical_stacking(self):
        fam = FactorFamily(d=4, r=2)
        theta = fam.theta_from_loadings(PAPER_LOADINGS)
        assert theta == pytest.approx([0.2, 0.5, 0.7, 0.9])

    def test_canonicalization_idempotent_and_permutation_invariant(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            d, r = int(rng.integers(2, 5)), int(rng.integers(2, 4))
            b = rng.uniform(0.01, 1, (d, r))
            b /= b.sum(axis=1, keepdims=True)
            fam = FactorFamily(d=d, r=r)
            theta = fam.theta_from_loadings(b)
            assert fam.canonicalize(theta) == pytest.approx(theta)
            perm = rng.permutation(r)
            assert fam.theta_from_loadings(b[:, perm]) == pytest.approx(theta)

    def test_tie_break_lexicographic(self):
        # equal column sums; the lexicographically larger column stacks first
        b = np.array([[0.6, 0.4], [0.4, 0.6]])
        fam = FactorFamily(d=2, r=2)
        assert fam.theta_from_loadings(b) == pytest.approx([0.6, 0.4])

    def test_spectral_atoms_paper_values(self):
        pts, masses = spectral_atoms(PAPER_LOADINGS)
        assert masses == pytest.approx([2.3, 1.7])
        assert pts[0] == pytest.approx([0.08696, 0.21739, 0.30435, 0.39130], abs=5e-6)
        assert pts[1] == pytest.approx([0.47059, 0.29412, 0.17647, 0.05882], abs=5e-6)
        assert masses.sum() == pytest.approx(4.0)

    def test_spectral_representation_matches_stdf(self):
        # sum_i mass_i * max_j w_ij x_j must equal l exactly
        rng = np.random.default_rng(3)
        fam = FactorFamily(d=4, r=2)
        theta = fam.theta_from_loadings(PAPER_LOADINGS)
        pts, masses = spectral_atoms(PAPER_LOADINGS)
        for x in rng.uniform(0, 2, (25, 4)):
            spectral = sum(m * np.max(w * x) for m, w in zip(masses, pts))
            assert fam.stdf(x, theta) == pytest.approx(spectral, abs=1e-12)

    def test_zero_column_rejected(self):
        fam = FactorFamily(d=2, r=2)
        with pytest.raises(ParameterDomainError):
            fam.theta_from_loadings(np.array([[1.0, 0.0], [1.0, 0.0]]))

    def test_gradient_ties_resolved_inclusively(self):
        fam = FactorFamily(d=2, r=2)
        b = np.array([[0.5, 0.5], [0.5, 0.5]])
        theta = fam.theta_from_loadings(b)
        g = fam.stdf_gradient([1.0, 1.0], theta)
        # every factor ties across both coordinates: both coordinates get full mass
        assert g == pytest.approx([1.0, 1.0])


class TestFactorIntegrals:
    def test_degenerate_single_coordinate(self):
        for s in (0.0, 1.0, 3.0, 0.5):
            assert factor_monomial_integral(np.array([[1.0]]), 0, s) == pytest.approx(
                1.0 / (s + 2.0)
            )

    def test_zero_loading_raises(self):
        with pytest.raises(PositivityError):
            factor_monomial_integral(np.array([[1.0, 0.0], [0.5, 0.5]]), 0, 1.0)

    def test_against_cubature_oracle(self):
        rng = np.random.default_rng(17)
        spec_cache = {}
        for _ in range(20):
            d, r = int(rng.integers(2, 5)), int(rng.integers(1, 4))
            b = rng.uniform(0.05, 1, (d, r))
            b /= b.sum(axis=1, keepdims=True)
            axis = int(rng.integers(0, d))
            s = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
            exact = factor_monomial_integral(b, axis, s)
            fam = FactorFamily(d=d, r=r)
            spec = spec_cache.setdefault(
                d, CubatureSpec(dim=d, max_points=2**17, min_points=2**17)
            )
            f = lambda p: (p[:, axis] ** s if s else np.ones(len(p))) * fam.stdf_from_loadings(p, b)
            oracle = integrate_cube(f, spec).scalar()
            assert exact == pytest.approx(oracle, abs=5e-4)


class TestMoments:
    def test_logistic_independence_exact(self):
        fam = LogisticFamily(d=2)
        w = WeightSpec.parse("1;x1", 2)
        m = weighted_moments(fam, [1.0], w)
        assert m == pytest.approx([1.0, 7.0 / 12.0], abs=1e-6)

    def test_logistic_half_vs_monte_carlo(self):
        fam = LogisticFamily(d=2)
        m = weighted_moments(fam, [0.5], WeightSpec.parse("1", 2))
        rng = np.random.default_rng(99)
        draws = fam.stdf(rng.random((10**6, 2)), [0.5])
        assert abs(m[0] - draws.mean()) < 3 * draws.std() / 1000.0

    def test_factor_routes_to_exact_reduction(self):
        fam = FactorFamily(d=4, r=2)
        theta = fam.theta_from_loadings(PAPER_LOADINGS)
        w = default_weights(fam)
        m = weighted_moments(fam, theta, w)
        for i in range(4):
            assert m[i] == pytest.approx(factor_monomial_integral(PAPER_LOADINGS, i, 1.0))
        assert m[4] == pytest.approx(factor_monomial_integral(PAPER_LOADINGS, 0, 0.0))

    def test_factor_cross_monomial_falls_back_to_cubature(self):
        fam = FactorFamily(d=2, r=2)
        b = np.array([[0.3, 0.7], [0.8, 0.2]])
        theta = fam.theta_from_loadings(b)
        w = WeightSpec.parse("x1*x2", 2)
        m = weighted_moments(fam, theta, w)
        spec = CubatureSpec(dim=2, max_points=2**17, min_points=2**17)
        oracle = integrate_cube(
            lambda p: p.prod(axis=1) * fam.stdf_from_loadings(p, b), spec
        ).scalar()
        assert m[0] == pytest.approx(oracle, abs=1e-4)


class TestJacobian:
    def test_logistic_against_finite_difference(self):
        fam = LogisticFamily(d=2)
        w = WeightSpec.parse("1", 2)
        for theta in (0.3, 0.5, 0.8):
            jac = weighted_moments_jacobian(fam, [theta], w)
            h = 1e-6
            fd = (
                weighted_moments(fam, [theta + h], w) - weighted_moments(fam, [theta - h], w)
            ) / (2 * h)
            assert jac[0, 0] == pytest.approx(fd[0], abs=1e-6)
            assert abs(jac[0, 0]) > 1e-3  # full rank for the scalar model

    def test_factor_jacobian_shape(self):
        fam = FactorFamily(d=4, r=2)
        theta = fam.theta_from_loadings(PAPER_LOADINGS)
        w = default_weights(fam)
        jac = weighted_moments_jacobian(fam, theta, w)
        assert jac.shape == (5, 4)
        # differencing must respect the row-sum constraint: perturbing one
        # canonical coordinate moves the dropped column, so columns are finite
        assert np.all(np.isfinite(jac))

    def test_alog_jacobian_matches_fd(self):
        fam = AsymmetricLogisticFamily()
        w = default_weights(fam)
        theta = np.array([0.55, 0.6, 0.15])
        jac = weighted_moments_jacobian(fam, theta, w)
        for c in range(3):
            h = 1e-6
            tp, tm = theta.copy(), theta.copy()
            tp[c] += h
            tm[c] -= h
            fd = (weighted_moments(fam, tp, w) - weighted_moments(fam, tm, w)) / (2 * h)
            assert jac[:, c] == pytest.approx(fd, abs=1e-5)


class TestSharedInvariants:
    @pytest.mark.parametrize("family,theta", ALL_FAMILIES, ids=lambda v: str(v)[:24])
    def test_bounds_on_random_grid(self, family, theta):
        rng = np.random.default_rng(11)
        x = rng.uniform(0, 2, (200, family.d))
        vals = family.stdf(x, theta)
        assert np.all(vals >= x.max(axis=1) - 1e-12)
        assert np.all(vals <= x.sum(axis=1) + 1e-12)

    @pytest.mark.parametrize("family,theta", ALL_FAMILIES, ids=lambda v: str(v)[:24])
    def test_homogeneity(self, family, theta):
        rng = np.random.default_rng(12)
        x = rng.uniform(0, 2, (50, family.d))
        base = family.stdf(x, theta)
        for t in (0.5, 2.0, 7.3):
            scaled = family.stdf(t * x, theta)
            assert scaled == pytest.approx(t * base, rel=1e-10)

    @pytest.mark.parametrize("family,theta", ALL_FAMILIES, ids=lambda v: str(v)[:24])
    def test_marginal_normalization(self, family, theta):
        for j in range(family.d):
            for z in (0.0, 1.0, 3.0):
                e = np.zeros(family.d)
                e[j] = z
                assert family.stdf(e, theta) == pytest.approx(z, abs=1e-12)

    @pytest.mark.parametrize("family,theta", ALL_FAMILIES, ids=lambda v: str(v)[:24])
    def test_convexity_spot_check(self, family, theta):
        rng = np.random.default_rng(13)
        for _ in range(40):
            x = rng.uniform(0, 2, family.d)
            y = rng.uniform(0, 2, family.d)
            lam = rng.uniform()
            mix = family.stdf(lam * x + (1 - lam) * y, theta)
            bound = lam * family.stdf(x, theta) + (1 - lam) * family.stdf(y, theta)
            assert mix <= bound + 1e-10

    @pytest.mark.parametrize("family,theta", ALL_FAMILIES, ids=lambda v: str(v)[:24])
    def test_euler_relation(self, family, theta):
        x = np.ones(family.d)
        g = family.stdf_gradient(x, theta)
        assert g.sum() == pytest.approx(float(family.stdf(x, theta)), abs=1e-10)
        assert np.all(g >= -1e-12) and np.all(g <= 1 + 1e-12)

    @pytest.mark.parametrize("family,theta", ALL_FAMILIES, ids=lambda v: str(v)[:24])
    def test_gradient_matches_finite_differences(self, family, theta):
        rng = np.random.default_rng(14)
        x = rng.uniform(0.05, 2, (100, family.d))
        g = family.stdf_gradient(x, theta)
        h = 1e-6
        for j in range(family.d):
            xp, xm = x.copy(), x.copy()
            xp[:, j] += h
            xm[:, j] -= h
            fd = (family.stdf(xp, theta) - family.stdf(xm, theta)) / (2 * h)
            if family.kind == "factor":
                # skip points within h of a kink, where two-sided differences disagree
                b = family.loadings_from_theta(theta)
                scaled = x[:, None, :] * b.T[None, :, :]
                top2 = np.sort(scaled, axis=2)[:, :, -2:]
                off_kink = np.all(top2[:, :, 1] - top2[:, :, 0] > 4 * h, axis=1)
                assert np.abs(fd - g[:, j])[off_kink].max() < 1e-6
            else:
                assert np.abs(fd - g[:, j]).max() < 1e-6


def test_json_round_trip():
    for family, theta in ALL_FAMILIES:
        payload = family.describe_json(theta)
        rebuilt, theta2 = family_from_json(payload)
        assert rebuilt.kind == family.kind
        assert theta2 == pytest.approx(theta)
        if family.kind == "factor":
            assert np.asarray(payload["loadings"]).shape == (family.d, family.r)
