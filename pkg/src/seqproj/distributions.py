"""Samplers for unit-sphere projection directions and the Monte Carlo oracles
that check the distributional laws those directions must satisfy: unit norm,
the affine-Beta law of inner products, and exponential-moment domination."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

# Default grid for exponential-moment checks.
LAMBDA_GRID = (-5.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0)

UNIT_NORM_TOL = 1e-12

# Gaussian draws shorter than this are treated as degenerate and redrawn.
_REDRAW_NORM = 1e-300

# Batch oracles accumulate in chunks to keep peak memory flat at large n.
_CHUNK = 200_000


def sample_sphere(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one point uniformly from the unit sphere in R^dim.

    A standard-normal vector is rotationally invariant, so its normalization
    is uniform on the sphere. Draws with norm below 1e-300 are redrawn.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    while True:
        v = rng.standard_normal(dim)
        norm = math.sqrt(v @ v)
        if norm > _REDRAW_NORM:
            v /= norm
            return v


def sample_sphere_batch(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n sphere points as the rows of an (n, dim) array."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    v = rng.standard_normal((n, dim))
    norms = np.linalg.norm(v, axis=1)
    bad = norms <= _REDRAW_NORM
    while np.any(bad):
        v[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms[bad] = np.linalg.norm(v[bad], axis=1)
        bad = norms <= _REDRAW_NORM
    return v / norms[:, None]


def sphere_source(dim: int) -> Callable[[int, np.random.Generator], np.ndarray]:
    """Batch sampler closure with the signature the moment oracles expect."""

    def draw(n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_sphere_batch(n, dim, rng)

    return draw


@dataclass(frozen=True)
class SubGaussianSpec:
    """Scale of the conditional exponential-moment bound, sigma^2 = c0/dim."""

    c0: float
    dim: int

    def __post_init__(self) -> None:
        if self.c0 <= 0:
            raise ValueError(f"c0 must be positive, got {self.c0}")
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")

    @property
    def sigma_sq(self) -> float:
        return self.c0 / self.dim

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)


@dataclass(frozen=True)
class BetaLawParams:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(
                f"Beta parameters must be positive, got ({self.alpha}, {self.beta})"
            )

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        a, b = self.alpha, self.beta
        return a * b / ((a + b) ** 2 * (a + b + 1.0))


@dataclass(frozen=True)
class InnerProductLaw:
    """Law of <z, v> for z uniform on the sphere in R^dim and v a fixed unit
    vector: the affine image 2*B - 1 of B ~ Beta((dim-1)/2, (dim-1)/2)."""

    dim: int
    params: BetaLawParams

    @property
    def variance(self) -> float:
        # 4 * Var(Beta((dim-1)/2, (dim-1)/2)) collapses to 1/dim.
        return 4.0 * self.params.variance

    def transform(self, y: float | np.ndarray) -> float | np.ndarray:
        """Affine map from Beta support [0, 1] to the inner-product range."""
        return 2.0 * y - 1.0

    def cdf(self, x: float | np.ndarray) -> float | np.ndarray:
        y = np.clip((np.asarray(x, dtype=float) + 1.0) / 2.0, 0.0, 1.0)
        return special.betainc(self.params.alpha, self.params.beta, y)


def inner_product_law(dim: int) -> InnerProductLaw:
    if dim < 2:
        raise ValueError(
            "inner-product law requires dimension >= 2; at dimension 1 the "
            "law is the two-point +-1 distribution, not a Beta image"
        )
    half = (dim - 1) / 2.0
    return InnerProductLaw(dim=dim, params=BetaLawParams(half, half))


@dataclass(frozen=True)
class MgfCheckPoint:
    lam: float
    empirical: float
    se: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class MgfReport:
    """Per-lambda comparison of an empirical exponential moment against its
    claimed Gaussian-style bound, with a 3-standard-error Monte Carlo slack."""

    points: tuple[MgfCheckPoint, ...]

    @property
    def violations(self) -> tuple[MgfCheckPoint, ...]:
        return tuple(p for p in self.points if not p.passed)

    @property
    def ok(self) -> bool:
        return not self.violations


def _mgf_point(lam: float, values: np.ndarray, bound: float) -> MgfCheckPoint:
    n = values.size
    empirical = float(values.mean())
    se = float(values.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return MgfCheckPoint(
        lam=lam,
        empirical=empirical,
        se=se,
        bound=bound,
        passed=empirical <= bound + 3.0 * se,
    )


def check_beta_mgf(
    params: BetaLawParams,
    lambda_grid: Sequence[float] = LAMBDA_GRID,
    n_samples: int = 100_000,
    rng: np.random.Generator | None = None,
) -> MgfReport:
    """Estimate E[exp(lam*(X - EX))] for X ~ Beta(alpha, beta) by Monte Carlo
    and compare with exp(lam^2 * Var(X) / 2) at every lam in the grid.

    Requires alpha >= beta, the regime in which the bound is claimed.
    """
    if params.alpha < params.beta:
        raise ValueError(
            f"bound requires alpha >= beta, got ({params.alpha}, {params.beta})"
        )
    if rng is None:
        rng = np.random.default_rng()
    x = rng.beta(params.alpha, params.beta, size=n_samples)
    centered = x - params.mean
    var = params.variance
    points = []
    for lam in lambda_grid:
        values = np.exp(lam * centered)
        points.append(_mgf_point(lam, values, math.exp(lam * lam * var / 2.0)))
    return MgfReport(points=tuple(points))


def check_subgaussian_mgf(
    source: Callable[[int, np.random.Generator], np.ndarray],
    spec: SubGaussianSpec,
    direction: np.ndarray,
    lambda_grid: Sequence[float] = LAMBDA_GRID,
    n_samples: int = 100_000,
    rng: np.random.Generator | None = None,
) -> MgfReport:
    """Estimate E[exp(lam * <z, v>)] for z drawn from `source` and compare
    with exp(lam^2 * sigma^2 / 2), sigma^2 = c0/dim, at every lam."""
    direction = np.asarray(direction, dtype=float)
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"direction must have unit norm, got norm {norm!r}")
    if rng is None:
        rng = np.random.default_rng()
    lams = [float(lam) for lam in lambda_grid]
    sums = np.zeros(len(lams))
    sq_sums = np.zeros(len(lams))
    remaining = n_samples
    while remaining > 0:
        k = min(_CHUNK, remaining)
        ips = source(k, rng) @ direction
        for i, lam in enumerate(lams):
            values = np.exp(lam * ips)
            sums[i] += values.sum()
            sq_sums[i] += values @ values
        remaining -= k
    points = []
    for i, lam in enumerate(lams):
        empirical = sums[i] / n_samples
        var = max(0.0, (sq_sums[i] - n_samples * empirical * empirical) / (n_samples - 1))
        se = math.sqrt(var / n_samples)
        bound = math.exp(lam * lam * spec.sigma_sq / 2.0)
        points.append(
            MgfCheckPoint(
                lam=lam,
                empirical=float(empirical),
                se=se,
                bound=bound,
                passed=empirical <= bound + 3.0 * se,
            )
        )
    return MgfReport(points=tuple(points))


@dataclass(frozen=True)
class KsResult:
    dim: int
    n_samples: int
    statistic: float
    pvalue: float
    significance: float

    @property
    def reject(self) -> bool:
        return self.pvalue < self.significance


def check_inner_product_ks(
    dim: int,
    n_samples: int,
    rng: np.random.Generator,
    direction: np.ndarray | None = None,
    significance: float = 1e-3,
) -> KsResult:
    """One-sample Kolmogorov-Smirnov test of sphere inner products against the
    analytic affine-Beta reference CDF."""
    law = inner_product_law(dim)
    ips = _inner_products(dim, n_samples, rng, direction)
    res = stats.kstest(ips, law.cdf)
    return KsResult(
        dim=dim,
        n_samples=n_samples,
        statistic=float(res.statistic),
        pvalue=float(res.pvalue),
        significance=significance,
    )


@dataclass(frozen=True)
class VarianceCheck:
    dim: int
    n_samples: int
    sample_variance: float
    target: float
    se: float

    @property
    def passed(self) -> bool:
        return abs(self.sample_variance - self.target) <= 3.0 * self.se


def check_inner_product_variance(
    dim: int,
    n_samples: int,
    rng: np.random.Generator,
    direction: np.ndarray | None = None,
) -> VarianceCheck:
    """Sample variance of sphere inner products against the analytic 1/dim,
    with an asymptotic standard error sqrt((m4 - m2^2)/n) from the data."""
    ips = _inner_products(dim, n_samples, rng, direction)
    centered = ips - ips.mean()
    m2 = float(np.mean(centered**2))
    m4 = float(np.mean(centered**4))
    se = math.sqrt(max(0.0, m4 - m2 * m2) / n_samples)
    return VarianceCheck(
        dim=dim,
        n_samples=n_samples,
        sample_variance=float(ips.var(ddof=1)),
        target=1.0 / dim,
        se=se,
    )


def _inner_products(
    dim: int,
    n_samples: int,
    rng: np.random.Generator,
    direction: np.ndarray | None,
) -> np.ndarray:
    if direction is None:
        v = np.zeros(dim)
        v[0] = 1.0
    else:
        v = np.asarray(direction, dtype=float)
        if abs(float(np.linalg.norm(v)) - 1.0) > 1e-9:
            raise ValueError("direction must have unit norm")
    out = np.empty(n_samples)
    done = 0
    while done < n_samples:
        k = min(_CHUNK, n_samples - done)
        out[done : done + k] = sample_sphere_batch(k, dim, rng) @ v
        done += k
    return out
