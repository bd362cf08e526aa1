"""Shared domain types: samples, ranks, parameter spaces, and weight functions.

Everything downstream of raw data is rank-based; this module owns the
conversion from observations to column ranks, the parameter-space geometry
used by the optimizer, and the monomial weight functions that define the
moment equations.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Sample",
    "RankMatrix",
    "ParameterSpace",
    "WeightSpec",
    "EstimationConfig",
    "DataError",
    "ParameterDomainError",
    "compute_ranks",
    "check_stdf_bounds",
    "read_csv",
]


class DataError(ValueError):
    """Raised on malformed input data (non-finite entries, missing values)."""


class ParameterDomainError(ValueError):
    """Raised when a parameter vector leaves its family's domain."""


@dataclass(frozen=True)
class Sample:
    """An n-by-d matrix of raw observations with (assumed) continuous margins.

    Scales are irrelevant: only column ranks are ever used. Ties within a
    column are allowed but flagged, since they contradict the continuity
    assumption and are usually a data-quality signal.
    """

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise DataError(f"expected a 2-d array, got shape {data.shape}")
        n, d = data.shape
        if d < 2:
            raise DataError(f"need dimension d >= 2, got d={d}")
        if n < d:
            raise DataError(f"need n >= d, got n={n}, d={d}")
        bad = ~np.isfinite(data)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DataError(f"non-finite entry at row {i}, column {j}")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def column_tie_counts(self) -> np.ndarray:
        """Number of tied (duplicated) values per column."""
        return np.array(
            [self.n - np.unique(self.data[:, j]).size for j in range(self.d)]
        )

    def rescaled(self, factors) -> "Sample":
        """Multiply each column by a positive constant (rank-invariant)."""
        factors = np.asarray(factors, dtype=float)
        if np.any(factors <= 0):
            raise DataError("column scale factors must be positive")
        return Sample(self.data * factors)


@dataclass(frozen=True)
class RankMatrix:
    """Column-wise ranks in {1, ..., n}; each column is a permutation."""

    ranks: np.ndarray
    tie_counts: np.ndarray

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def d(self) -> int:
        return self.ranks.shape[1]


def compute_ranks(sample: Sample) -> RankMatrix:
    """Rank each column of the sample; ties broken stably by row order.

    The rank of an entry is its 1-based position in the sorted column.
    Tie counts per column are reported on the result and trigger a warning,
    since the estimator assumes continuous margins.
    """
    data = sample.data
    n, d = data.shape
    ranks = np.empty((n, d), dtype=np.int64)
    for j in range(d):
        order = np.argsort(data[:, j], kind="stable")
        ranks[order, j] = np.arange(1, n + 1)
    ties = sample.column_tie_counts()
    if ties.any():
        warnings.warn(
            f"ties found in columns {np.nonzero(ties)[0].tolist()} "
            "(counts {}); margins are assumed continuous".format(ties[ties > 0].tolist()),
            stacklevel=2,
        )
    return RankMatrix(ranks=ranks, tie_counts=ties)


def check_stdf_bounds(value: float, x, tol: float = 1e-12) -> bool:
    """True iff max(x) <= value <= sum(x) within tolerance.

    Every stable tail dependence function is squeezed between the
    complete-dependence bound max(x) and the independence bound sum(x).
    """
    x = np.asarray(x, dtype=float)
    value = np.asarray(value, dtype=float)
    lo = x.max(axis=-1)
    hi = x.sum(axis=-1)
    return bool(np.all(value >= lo - tol) and np.all(value <= hi + tol))


# Toggled by tests; family evaluations route through the bounds check only
# when enabled, to keep study runs fast.
_DEBUG_BOUNDS = False


def set_debug_bounds(enabled: bool) -> bool:
    global _DEBUG_BOUNDS
    previous = _DEBUG_BOUNDS
    _DEBUG_BOUNDS = bool(enabled)
    return previous


def debug_bounds_enabled() -> bool:
    return _DEBUG_BOUNDS


@dataclass(frozen=True)
class ParameterSpace:
    """Box constraints plus optional linear inequalities A @ theta <= b."""

    boxes: np.ndarray  # (p, 2) with possibly infinite endpoints
    lin_a: np.ndarray | None = None
    lin_b: np.ndarray | None = None
    names: tuple[str, ...] = ()

    def __post_init__(self):
        boxes = np.atleast_2d(np.asarray(self.boxes, dtype=float))
        if boxes.shape[1] != 2 or np.any(boxes[:, 0] > boxes[:, 1]):
            raise ValueError("boxes must be (p, 2) with lo <= hi")
        object.__setattr__(self, "boxes", boxes)
        if self.lin_a is not None:
            a = np.atleast_2d(np.asarray(self.lin_a, dtype=float))
            b = np.atleast_1d(np.asarray(self.lin_b, dtype=float))
            if a.shape != (b.size, boxes.shape[0]):
                raise ValueError("linear constraint shapes do not match")
            object.__setattr__(self, "lin_a", a)
            object.__setattr__(self, "lin_b", b)
        if not self.names:
            object.__setattr__(
                self, "names", tuple(f"theta{i+1}" for i in range(boxes.shape[0]))
            )

    @property
    def p(self) -> int:
        return self.boxes.shape[0]

    def contains(self, theta, tol: float = 0.0) -> bool:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,) or not np.all(np.isfinite(theta)):
            return False
        if np.any(theta < self.boxes[:, 0] - tol) or np.any(theta > self.boxes[:, 1] + tol):
            return False
        if self.lin_a is not None:
            if np.any(self.lin_a @ theta > self.lin_b + tol):
                return False
        return True

    def clip(self, theta) -> np.ndarray:
        """Project onto the box (linear constraints are not enforced here)."""
        return np.clip(np.asarray(theta, dtype=float), self.boxes[:, 0], self.boxes[:, 1])

    def boundary_distance(self, theta) -> float:
        """Smallest distance from theta to a finite box edge."""
        theta = np.asarray(theta, dtype=float)
        dist = np.inf
        for t, (lo, hi) in zip(theta, self.boxes):
            if np.isfinite(lo):
                dist = min(dist, t - lo)
            if np.isfinite(hi):
                dist = min(dist, hi - t)
        return float(dist)


_MONOMIAL_RE = re.compile(r"^x(\d+)(?:\^([0-9]*\.?[0-9]+))?$")


def _parse_monomial(text: str, d: int) -> tuple[float, np.ndarray]:
    """Parse 'c*x1^a*x2^b' into (coefficient, exponent vector)."""
    coef = 1.0
    expo = np.zeros(d)
    for factor in text.split("*"):
        factor = factor.strip()
        if not factor:
            raise ValueError(f"empty factor in monomial {text!r}")
        m = _MONOMIAL_RE.match(factor)
        if m:
            j = int(m.group(1))
            if not 1 <= j <= d:
                raise ValueError(f"coordinate x{j} out of range for d={d}")
            expo[j - 1] += float(m.group(2)) if m.group(2) else 1.0
        else:
            try:
                coef *= float(factor)
            except ValueError:
                raise ValueError(f"cannot parse monomial factor {factor!r}") from None
    return coef, expo


@dataclass(frozen=True)
class WeightSpec:
    """A vector of q weight functions, each a linear combination of monomials.

    Monomials cover every weight used in practice (1, x_k, x_k^2, sums of
    these) and make the integral against the empirical tail dependence
    function exact; see :mod:`taildep.empirical`.

    ``terms[m]`` is a list of ``(coefficient, exponents)`` pairs where
    ``exponents`` has one nonnegative real entry per coordinate.
    """

    d: int
    terms: tuple[tuple[tuple[float, np.ndarray], ...], ...]
    source: str = ""

    @classmethod
    def parse(cls, spec: str, d: int) -> "WeightSpec":
        """Parse a semicolon-separated weight list, e.g. ``"1;x1;2*x1+2*x2"``.

        Each entry is a sum of monomials ``c*x1^a*x2^b``; exponents are
        nonnegative reals, bare numbers are constants.
        """
        functions = []
        for part in spec.split(";"):
            part = part.strip()
            if not part:
                raise ValueError("empty weight function in spec")
            # normalize minus signs into '+-' then split on '+'
            normalized = part.replace("-", "+-")
            monomials = []
            for chunk in normalized.split("+"):
                chunk = chunk.strip()
                if not chunk:
                    continue
                sign = 1.0
                if chunk.startswith("-"):
                    sign, chunk = -1.0, chunk[1:].strip()
                coef, expo = _parse_monomial(chunk, d)
                monomials.append((sign * coef, expo))
            if not monomials:
                raise ValueError(f"no monomials parsed from {part!r}")
            functions.append(tuple(monomials))
        return cls(d=d, terms=tuple(functions), source=spec)

    @property
    def q(self) -> int:
        return len(self.terms)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Evaluate all weight functions on a batch of points.

        x has shape (N, d); the result has shape (N, q).
        """
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (self.q,))
        for m, monomials in enumerate(self.terms):
            acc = np.zeros(x.shape[:-1])
            for coef, expo in monomials:
                term = np.full(x.shape[:-1], coef)
                for j, e in enumerate(expo):
                    if e != 0.0:
                        term = term * np.power(x[..., j], e)
                acc += term
            out[..., m] = acc
        return out

    def cube_integrals(self) -> np.ndarray:
        """Exact integrals of each weight function over the unit cube."""
        vals = np.zeros(self.q)
        for m, monomials in enumerate(self.terms):
            for coef, expo in monomials:
                vals[m] += coef * np.prod(1.0 / (expo + 1.0))
        return vals

    def single_coordinate_monomial(self, m: int) -> tuple[float, int, float] | None:
        """If g_m is c * x_k^s (or a constant), return (c, k, s); else None.

        Constants are reported as (c, 0, 0.0). Used to route factor-model
        moments to the exact one-dimensional reduction.
        """
        monomials = self.terms[m]
        if len(monomials) != 1:
            return None
        coef, expo = monomials[0]
        nonzero = np.nonzero(expo)[0]
        if nonzero.size == 0:
            return coef, 0, 0.0
        if nonzero.size == 1:
            return coef, int(nonzero[0] + 1), float(expo[nonzero[0]])
        return None

    def describe(self) -> str:
        return self.source or f"<{self.q} weight functions>"


@dataclass(frozen=True)
class EstimationConfig:
    """Knobs for estimation and inference runs.

    k is the number of tail observations (k < n, with k/n small in the
    intended regime); the quadrature budgets are points per randomization
    of the cubature rule.
    """

    k: int
    seed: int = 0
    restarts: int = 5
    jitter_frac: float = 0.10
    criterion_tol: float = 1e-10
    param_tol: float = 1e-8
    max_iter: int = 2000
    phi_points: int = 2**14
    sigma_points: int = 2**16
    quad_rel_tol: float = 1e-6
    boundary_tol: float = 1e-4

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")


def read_csv(path) -> Sample:
    """Load a sample from CSV: one header row, one observation per row.

    Missing or non-numeric cells are rejected with their position.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        width = len(header)
        for i, row in enumerate(reader):
            if len(row) != width:
                raise DataError(f"{path}: row {i+1} has {len(row)} fields, expected {width}")
            vals = []
            for j, cell in enumerate(row):
                cell = cell.strip()
                if not cell:
                    raise DataError(f"{path}: missing value at row {i+1}, column {header[j]!r}")
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at row {i+1}, column {header[j]!r}"
                    ) from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Sample(np.array(rows, dtype=float))


def write_csv(path, data: np.ndarray, header: list[str] | None = None) -> None:
    """Write a matrix as CSV in the same shape `read_csv` ingests."""
    data = np.asarray(data, dtype=float)
    if header is None:
        header = [f"x{j+1}" for j in range(data.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in data:
            writer.writerow([repr(float(v)) for v in row])
