"""Colouring-scheme branching process: escape probabilities and offspring matrix.

A vertex ``y`` at level ``k*psi`` is red when its ancestor ``x`` at level
``(k-1)*psi`` is red and the walk restricted to the geodesic ``[x, y]``,
started at ``x``, reaches ``y`` before coming back to ``x``. Counting red
vertices by type gives a multi-type branching process whose expected
offspring matrix ``M`` is estimated here by Monte Carlo over environments.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import _kernels as K
from .environment import Environment, EnvironmentLaw, derive_seed
from .errors import EllipticityViolationError, InvalidParameterError, TooLargePsiError
from .group_tree import GeneratorSet, Vertex
from .walk import HIT_FAR_END, RETURN_TO_START, PathEnvironment, path_environment, simulate_restricted_walk

__all__ = [
    "PATH_CAP",
    "OffspringMatrix",
    "PerronReport",
    "escape_probability_path",
    "escape_probability_floor",
    "estimate_offspring_matrix",
    "perron_root",
    "simulate_colouring_generation",
]

PATH_CAP = 10**5
CONVENTIONS = ("descendant", "first_step")


def escape_probability_path(path: PathEnvironment) -> float:
    """Gambler's-ruin probability of reaching ``x_n`` before returning to ``x_0``.

    ``1 / sum_{m=0}^{n-1} prod_{j=1}^{m} omega(x_j, x_{j-1}) / omega(x_j, x_{j+1})``
    """
    if np.any(path.forward <= 0):
        raise EllipticityViolationError("zero forward probability on path")
    prods = np.cumprod(path.ratios)
    return float(1.0 / (1.0 + prods.sum()))


def escape_probability_floor(n: int, epsilon: float) -> float:
    """Smallest escape probability over length-``n`` paths with all weights >= epsilon."""
    rho = (1.0 - epsilon) / epsilon
    return 1.0 / sum(rho**m for m in range(n))


@dataclass(frozen=True)
class OffspringMatrix:
    psi: int
    m: np.ndarray
    stderr: np.ndarray
    row_sum_stderr: np.ndarray
    mc_samples: int
    convention: str = "descendant"

    @property
    def d(self) -> int:
        return self.m.shape[0]

    @property
    def row_sums(self) -> np.ndarray:
        return self.m.sum(axis=1)

    def min_row_sum_exceeds(self, threshold: float = 1.0, n_se: float = 3.0) -> bool:
        """True if every row sum is above ``threshold`` by ``n_se`` standard errors."""
        return bool(np.all(self.row_sums - n_se * self.row_sum_stderr > threshold))


def estimate_offspring_matrix(law: EnvironmentLaw, gs: GeneratorSet, psi: int, mc_samples: int, seed: int,
                              convention: str = "descendant") -> OffspringMatrix:
    """Monte Carlo estimate of ``m_su``.

    ``descendant`` (default): row ``s`` sums escape probabilities over the
    non-backtracking paths of length ``psi`` from a type-``s`` vertex into its
    subtree, tallied by the type ``u`` of the endpoint. ``first_step``: rows are
    indexed by the type of the first step instead (paths start at the root).
    """
    if psi < 1 or mc_samples < 1:
        raise InvalidParameterError("psi and mc_samples must be >= 1")
    if convention not in CONVENTIONS:
        raise InvalidParameterError(f"unknown convention {convention!r}")
    if law.d != gs.d:
        raise InvalidParameterError("law and group dimensions differ")
    n_paths = (gs.d - 1) ** psi
    if n_paths > PATH_CAP:
        raise TooLargePsiError(f"(d-1)^psi = {n_paths} paths per type exceeds {PATH_CAP}")
    seeds = np.array([derive_seed(seed, i) for i in range(mc_samples)], dtype=np.uint64)
    samples = K.offspring_samples(seeds, psi, gs.inverse_table, convention == "first_step", *law.kernel_args)
    return _summarise(samples, psi, convention)


def _summarise(samples: np.ndarray, psi: int, convention: str) -> OffspringMatrix:
    n = samples.shape[0]
    m = samples.mean(axis=0)
    if n > 1:
        se = samples.std(axis=0, ddof=1) / math.sqrt(n)
        row_se = samples.sum(axis=2).std(axis=0, ddof=1) / math.sqrt(n)
    else:
        se = np.zeros_like(m)
        row_se = np.zeros(m.shape[0])
    return OffspringMatrix(psi, m, se, row_se, n, convention)


@dataclass(frozen=True)
class PerronReport:
    rho: float
    iterations: int
    converged: bool
    shifted: bool
    irreducible: bool
    min_row_sum: float
    max_row_sum: float
    vector: np.ndarray

    @property
    def warning(self) -> bool:
        return not self.converged


def _power(M: np.ndarray, tol: float, max_iter: int):
    x = np.full(M.shape[0], 1.0 / M.shape[0])
    lam = np.nan
    for it in range(1, max_iter + 1):
        y = M @ x
        total = y.sum()
        if total == 0:
            return 0.0, x, it, True
        new = total / x.sum()
        x = y / total
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            return new, x, it, True
        lam = new
    return lam, x, max_iter, False


def perron_root(M, tol: float = 1e-12, max_iter: int = 10**5) -> PerronReport:
    """Spectral radius of a nonnegative matrix by normalised power iteration.

    Successive quotients ``1'Mx / 1'x`` are compared. If they fail to settle
    (equal-modulus eigenvalues, e.g. periodic matrices) the iteration is
    rerun on ``M + I`` and 1 is subtracted; if that also fails the best
    estimate is returned with ``converged=False``.
    """
    M = np.asarray(getattr(M, "m", M), dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidParameterError("matrix must be square")
    if M.min() < 0:
        raise InvalidParameterError("matrix must be nonnegative")
    n_comp, _ = connected_components(M > 0, directed=True, connection="strong")
    rows = M.sum(axis=1)
    lam, x, it, ok = _power(M, tol, max_iter)
    shifted = False
    if not ok:
        lam, x, it2, ok = _power(M + np.eye(M.shape[0]), tol, max_iter)
        lam, it, shifted = lam - 1.0, it + it2, True
    if not ok:
        warnings.warn(f"power iteration did not converge in {max_iter} iterations", RuntimeWarning)
    return PerronReport(float(lam), it, ok, shifted, n_comp == 1, float(rows.min()), float(rows.max()), x)


def simulate_colouring_generation(env: Environment, gs: GeneratorSet, x: Vertex, psi: int,
                                  rng: np.random.Generator) -> np.ndarray:
    """Red offspring counts by type of one red vertex ``x`` (one generation of Z_psi).

    Each descendant ``y`` at distance ``psi`` is tested by running the
    restricted walk on ``[x, y]`` once. Used to cross-check ``M`` directly.
    """
    counts = np.zeros(gs.d, np.int64)
    frontier = [(x, [x])]
    for _ in range(psi):
        frontier = [(c, path + [c]) for v, path in frontier for c in gs.children(v)]
    for y, path in frontier:
        if psi == 1:
            counts[y.type] += 1
            continue
        outcome, _ = simulate_restricted_walk(path_environment(env, gs, path), rng,
                                              stop=(HIT_FAR_END, RETURN_TO_START))
        if outcome == HIT_FAR_END:
            counts[y.type] += 1
    return counts
