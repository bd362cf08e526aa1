import numpy as np
import pytest

from taildep import EmpiricalStdf, RankMatrix, Sample, WeightSpec, compute_ranks, sample_logistic

NO_TIES = np.zeros(2, dtype=int)


def make_est(ranks, k):
    ranks = np.asarray(ranks)
    return EmpiricalStdf.from_ranks(
        RankMatrix(ranks=ranks, tie_counts=np.zeros(ranks.shape[1], dtype=int)), k
    )


class TestEvaluation:
    def test_zero_point(self):
        est = make_est([[1, 4], [2, 3], [3, 2], [4, 1]], 2)
        assert est([0.0, 0.0]) == 0.0

    def test_everything_counted(self):
        est = make_est([[1, 4], [2, 3], [3, 2], [4, 1]], 2)
        top = (4 + 0.5) / 2
        assert est([top, top]) == pytest.approx(4 / 2)

    def test_hand_enumeration(self):
        # ranks col1=(1,2,3,4), col2=(4,3,2,1), k=2: count of R1 > 2.5 is 2
        est = make_est([[1, 4], [2, 3], [3, 2], [4, 1]], 2)
        assert est([1.0, 0.0]) == pytest.approx(1.0)

    def test_matches_direct_double_loop(self):
        rng = np.random.default_rng(5)
        sample = Sample(rng.standard_normal((60, 3)))
        ranks = compute_ranks(sample)
        k = 10
        est = EmpiricalStdf.from_ranks(ranks, k)
        pts = rng.uniform(0, 1.5, (40, 3))
        expected = np.empty(40)
        for a, x in enumerate(pts):
            count = 0
            for i in range(60):
                if any(ranks.ranks[i, j] > 60 + 0.5 - k * x[j] for j in range(3)):
                    count += 1
            expected[a] = count / k
        assert np.array_equal(est(pts), expected)

    def test_monotone_in_each_coordinate(self):
        rng = np.random.default_rng(6)
        est = EmpiricalStdf.from_ranks(compute_ranks(Sample(rng.standard_normal((80, 2)))), 15)
        for j in range(2):
            base = rng.uniform(0, 1, 2)
            chain = np.tile(base, (25, 1))
            chain[:, j] = np.linspace(0, 2, 25)
            vals = est(chain)
            assert np.all(np.diff(vals) >= 0)

    def test_range_bound(self):
        rng = np.random.default_rng(7)
        est = EmpiricalStdf.from_ranks(compute_ranks(Sample(rng.standard_normal((50, 2)))), 9)
        vals = est(rng.uniform(0, 3, (100, 2)))
        assert np.all(vals >= 0) and np.all(vals <= 50 / 9)


class TestWeightedIntegrals:
    def test_row_with_thresholds_above_one_contributes_zero(self):
        est = EmpiricalStdf(thresholds=np.array([[1.2, 3.0]]), k=1, n=1, d=2)
        w = WeightSpec.parse("1", 2)
        assert est.weighted_integrals(w)[0] == pytest.approx(0.0)

    def test_row_with_nonpositive_threshold_covers_cube(self):
        est = EmpiricalStdf(thresholds=np.array([[-0.1, 5.0]]), k=1, n=1, d=2)
        w = WeightSpec.parse("1", 2)
        assert est.weighted_integrals(w)[0] == pytest.approx(1.0)

    def test_box_complement_closed_form(self):
        # one row at a = (0.5, 0.5): integral of x1 over the union region
        est = EmpiricalStdf(thresholds=np.array([[0.5, 0.5]]), k=1, n=1, d=2)
        w = WeightSpec.parse("x1", 2)
        assert est.weighted_integrals(w)[0] == pytest.approx(0.4375)

    def test_riemann_grid_oracle(self):
        # independent implementation: midpoint rule on a 1000^2 grid
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(12):
            n = int(rng.integers(10, 51))
            k = int(rng.integers(max(2, n // 3), n))
            est = EmpiricalStdf.from_ranks(
                compute_ranks(Sample(rng.standard_normal((n, 2)))), k
            )
            w = WeightSpec.parse("1;x1;x1*x2;x2^2", 2)
            exact = est.weighted_integrals(w)
            approx = _riemann(est, w)
            worst = max(worst, np.abs(exact - approx).max())
        assert worst <= 2e-3

    def test_consistency_toward_true_stdf(self):
        # sup error on the unit square decreases along growing n
        sups = []
        for n, seed in ((500, 1), (2000, 2), (8000, 3)):
            k = int(round(n**0.6))
            sample = sample_logistic(0.5, 2, n, seed)
            est = EmpiricalStdf.from_ranks(compute_ranks(sample), k)
            g = np.linspace(0.01, 1, 25)
            pts = np.array([[a, b] for a in g for b in g])
            truth = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2)
            sups.append(np.abs(est(pts) - truth).max())
        assert sups[2] < sups[0]


def _riemann(est, weights, cells=1000):
    centers = (np.arange(cells) + 0.5) / cells
    below = [centers[None, :] <= est.thresholds[:, [j]] for j in range(2)]
    covered = np.zeros((cells, cells))
    for i in range(est.n):
        covered += np.outer(below[0][i], below[1][i])
    lhat = (est.n - covered) / est.k
    xx, yy = np.meshgrid(centers, centers, indexing="ij")
    g = weights.evaluate(np.column_stack([xx.ravel(), yy.ravel()]))
    return (g * lhat.reshape(-1, 1)).mean(axis=0)
