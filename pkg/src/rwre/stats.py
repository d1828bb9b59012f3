"""Speed, CLT variance, normality and first-regeneration tail estimators.

All estimators are functions of sufficient statistics of a block table, so
merging tables (in any order) before estimating gives the same answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import InsufficientBlocksError, InvalidParameterError
from .regeneration import BlockTable

__all__ = [
    "SpeedEstimate",
    "CltEstimate",
    "KsResult",
    "TailFit",
    "estimate_speed",
    "estimate_speed_endpoint",
    "estimate_sigma2",
    "kolmogorov_distance",
    "normality_check",
    "survival_function",
    "l1_tail_fit",
]

Z95 = 1.959963984540054
KS_CRITICAL = {0.10: 1.22, 0.05: 1.36, 0.01: 1.63}
ESTIMATED_SLACK = 1.2


@dataclass(frozen=True)
class SpeedEstimate:
    v_hat: float
    ci95: float
    n_blocks: int
    method: str

    @property
    def excludes_zero(self) -> bool:
        return self.v_hat - self.ci95 > 0


def estimate_speed(blocks: BlockTable, min_blocks: int = 30) -> SpeedEstimate:
    """Ratio estimator sum(Z) / sum(Y) with a delta-method 95% interval."""
    n = len(blocks)
    if n < min_blocks:
        raise InsufficientBlocksError(f"{n} blocks, need at least {min_blocks}")
    Y = blocks.Y.astype(float)
    Z = blocks.Z.astype(float)
    v = Z.sum() / Y.sum()
    resid = Z - v * Y
    se = math.sqrt(resid.var(ddof=1) / n) / Y.mean()
    return SpeedEstimate(float(v), Z95 * se, n, "blocks")


def estimate_speed_endpoint(final_levels, n_steps: int) -> SpeedEstimate:
    """Mean of |X_N| / N over independent trajectories."""
    x = np.asarray(final_levels, float) / n_steps
    if x.size < 2:
        raise InsufficientBlocksError("need at least two trajectories")
    return SpeedEstimate(float(x.mean()), Z95 * float(x.std(ddof=1)) / math.sqrt(x.size), int(x.size), "endpoint")


@dataclass(frozen=True)
class CltEstimate:
    sigma2_hat: float
    sigma2_se: float
    Sigma_hat: np.ndarray
    Etau_hat: float
    v_hat: float
    n_blocks: int
    sigma2_untyped: float
    ks_distance: float | None = None
    sample_count: int = 0


def estimate_sigma2(blocks: BlockTable, v_hat: float, min_blocks: int = 100) -> CltEstimate:
    """CLT variance ``1' Sigma 1 / E[tau]`` from the typed block covariance.

    ``Sigma`` is the covariance of the vectors ``W_k(s) = Z_k(s) - v Y_k(s)``.
    Exactly one type fires per block, so ``1' Sigma 1`` equals the variance of
    the scalar ``Z - v Y``; both are computed and must agree.
    """
    n = len(blocks)
    if n < min_blocks:
        raise InsufficientBlocksError(f"{n} blocks, need at least {min_blocks}")
    if not 0 < v_hat <= 1:
        raise InvalidParameterError(f"speed estimate {v_hat} outside (0, 1]")
    Y = blocks.Y.astype(float)
    W_typed = blocks.typed_Z() - v_hat * blocks.typed_Y()
    Sigma = np.atleast_2d(np.cov(W_typed, rowvar=False, ddof=1))
    Etau = float(Y.mean())
    typed = float(Sigma.sum()) / Etau
    W = blocks.Z - v_hat * Y
    untyped = float(W.var(ddof=1)) / Etau
    if not math.isclose(typed, untyped, rel_tol=1e-12, abs_tol=1e-12):
        raise ArithmeticError(f"typed ({typed!r}) and scalar ({untyped!r}) variance disagree")
    # delta method for mean(W^2) / mean(Y), treating v_hat as fixed
    W2 = (W - W.mean()) ** 2
    g = W2.mean() / Etau
    se = math.sqrt((W2 - g * Y).var(ddof=1) / n) / Etau
    return CltEstimate(typed, se, Sigma, Etau, float(v_hat), n, untyped)


def kolmogorov_distance(samples, mean0: float = 0.0, var0: float = 1.0) -> float:
    """sup_x |F_m(x) - Phi(x)| after standardising by (mean0, var0)."""
    if not var0 > 0:
        raise InvalidParameterError("var0 must be positive")
    z = (np.asarray(samples, float) - mean0) / math.sqrt(var0)
    return float(sps.kstest(z, "norm").statistic)


@dataclass(frozen=True)
class KsResult:
    distance: float
    threshold: float
    passed: bool
    m: int


def normality_check(samples, mean0: float, var0: float, alpha: float = 0.05,
                    estimated: bool = False, min_samples: int = 100) -> KsResult:
    """Kolmogorov test against Normal(mean0, var0): pass iff D_m <= c(alpha) / sqrt(m).

    ``estimated=True`` multiplies the threshold by 1.2 to allow for
    ``mean0``/``var0`` having been estimated.
    """
    samples = np.asarray(samples, float)
    m = samples.size
    if m < min_samples:
        raise InvalidParameterError(f"{m} samples, need at least {min_samples}")
    D = kolmogorov_distance(samples, mean0, var0)
    c = KS_CRITICAL.get(alpha)
    if c is None:
        c = float(sps.kstwobign.isf(alpha))
    threshold = c / math.sqrt(m) * (ESTIMATED_SLACK if estimated else 1.0)
    return KsResult(D, threshold, bool(D <= threshold), m)


def survival_function(samples, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Empirical P(X >= x) at x = stride, 2*stride, ... up to the sample maximum."""
    x = np.asarray(samples)
    grid = np.arange(stride, int(x.max()) + stride, stride)
    srt = np.sort(x)
    surv = 1.0 - np.searchsorted(srt, grid, side="left") / x.size
    return grid, surv


@dataclass(frozen=True)
class TailFit:
    slope: float
    slope_se: float
    gamma_hat: float
    stride: int
    n_points: int
    degenerate: bool = False

    def negative_at(self, n_se: float = 3.0) -> bool:
        return not self.degenerate and self.slope + n_se * self.slope_se < 0


def l1_tail_fit(samples, stride: int = 1, min_samples: int = 1000) -> TailFit:
    """Least-squares slope of log P(l_1 >= x) over the well-sampled range.

    Points with survival below 20 / n are dropped; ``gamma_hat`` is
    ``exp(slope * stride)``, the per-stride decay factor.
    """
    x = np.asarray(samples)
    if x.size < min_samples:
        raise InvalidParameterError(f"{x.size} samples, need at least {min_samples}")
    if stride < 1:
        raise InvalidParameterError("stride must be >= 1")
    if np.all(x == x.flat[0]):
        return TailFit(math.nan, math.nan, math.nan, stride, 0, degenerate=True)
    grid, surv = survival_function(x, stride)
    keep = surv >= 20.0 / x.size
    if keep.sum() < 3:
        return TailFit(math.nan, math.nan, math.nan, stride, int(keep.sum()), degenerate=True)
    fit = sps.linregress(grid[keep], np.log(surv[keep]))
    return TailFit(float(fit.slope), float(fit.stderr), float(math.exp(fit.slope * stride)), stride,
                   int(keep.sum()))
