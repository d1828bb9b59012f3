"""I.i.d. uniformly elliptic random environments, generated lazily per vertex.

A transition vector ``p`` at vertex ``x`` gives the probability ``p[s]`` of
the step ``x -> s.x``. Every vertex draws ``p`` from the same law using a
private pseudorandom stream keyed by (master seed, vertex), so an
environment on the infinite tree costs O(1) memory and any vertex can be
queried in any order with identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as K
from .errors import EllipticityViolationError, InfeasibleEllipticityError, InvalidParameterError
from .group_tree import Vertex

__all__ = [
    "EnvironmentLaw",
    "Environment",
    "build_law",
    "dirichlet_law",
    "finite_support_law",
    "uniform_law",
    "elliptic_mixture",
    "derive_seed",
]

KINDS = ("dirichlet_mixture", "finite_support")


def derive_seed(master: int, *path: int) -> int:
    """Child seed for ``path`` (e.g. a trajectory index) below ``master``; uint64."""
    ss = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, *map(int, path)])
    return int(ss.generate_state(1, np.uint64)[0])


def elliptic_mixture(D: Sequence[float], epsilon: float) -> np.ndarray:
    """``epsilon + (1 - d*epsilon) * D``: maps the simplex into the elliptic simplex."""
    D = np.asarray(D, dtype=float)
    return epsilon + (1.0 - D.size * epsilon) * D


@dataclass(frozen=True)
class EnvironmentLaw:
    """Common marginal law of every ``omega(x, .)``."""

    d: int
    epsilon: float
    kind: str
    alpha: tuple[float, ...] | None = None
    vectors: tuple[tuple[float, ...], ...] | None = None
    weights: tuple[float, ...] | None = None
    _args: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d, eps = self.d, self.epsilon
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown environment kind {self.kind!r}")
        if not eps > 0:
            raise InvalidParameterError(f"epsilon must be positive, got {eps}")
        if eps * d >= 1.0:
            raise InfeasibleEllipticityError(f"epsilon = {eps} infeasible for d = {d}: need epsilon < 1/d")

        if self.kind == "dirichlet_mixture":
            if self.alpha is None or len(self.alpha) != d:
                raise InvalidParameterError(f"alpha must have length d = {d}")
            if min(self.alpha) <= 0 or not np.all(np.isfinite(self.alpha)):
                raise InvalidParameterError("all alpha must be positive and finite")
            args = (K.LAW_DIRICHLET, float(eps), np.asarray(self.alpha, float),
                    np.zeros((1, d)), np.ones(1))
        else:
            if not self.vectors:
                raise InvalidParameterError("finite_support needs at least one vector")
            vecs = np.asarray(self.vectors, dtype=float)
            if vecs.ndim != 2 or vecs.shape[1] != d:
                raise InvalidParameterError(f"support vectors must have length d = {d}")
            if np.any(np.abs(vecs.sum(axis=1) - 1.0) > 1e-12):
                raise InvalidParameterError("support vectors must sum to 1")
            if vecs.min() < eps:
                raise EllipticityViolationError(f"support vector entry {vecs.min()} below epsilon = {eps}")
            w = np.asarray(self.weights if self.weights is not None else [1.0] * len(vecs), float)
            if w.shape != (len(vecs),) or w.min() < 0 or abs(w.sum() - 1.0) > 1e-12:
                raise InvalidParameterError("weights must be a probability vector, one per support vector")
            args = (K.LAW_FINITE, float(eps), np.ones(d), vecs, np.cumsum(w))
        object.__setattr__(self, "_args", args)

    @property
    def kernel_args(self) -> tuple:
        """(law code, epsilon, alpha, vectors, cumulative weights) for the compiled kernels."""
        return self._args

    def describe(self) -> str:
        if self.kind == "dirichlet_mixture":
            return "dirichlet_mixture(" + ",".join(f"{a:g}" for a in self.alpha) + ")"
        return f"finite_support({len(self.vectors)})"

    def sample(self, keys: np.ndarray) -> np.ndarray:
        """Transition vectors for an array of uint64 vertex keys, shape (n, d)."""
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        return K.transitions_for_keys(keys, self.d, *self._args)


def dirichlet_law(alpha: Sequence[float], epsilon: float) -> EnvironmentLaw:
    alpha = tuple(float(a) for a in alpha)
    return EnvironmentLaw(len(alpha), float(epsilon), "dirichlet_mixture", alpha=alpha)


def finite_support_law(vectors, epsilon: float, weights=None) -> EnvironmentLaw:
    vectors = tuple(tuple(float(v) for v in vec) for vec in vectors)
    if weights is not None:
        weights = tuple(float(w) for w in weights)
    return EnvironmentLaw(len(vectors[0]), float(epsilon), "finite_support", vectors=vectors, weights=weights)


def uniform_law(d: int, epsilon: float | None = None) -> EnvironmentLaw:
    """Point mass at the uniform vector: the walk projects to a birth-death chain."""
    return finite_support_law([[1.0 / d] * d], epsilon if epsilon is not None else 0.5 / d)


def build_law(spec: Mapping, d: int | None = None) -> EnvironmentLaw:
    """Law from a parsed config mapping with keys kind, epsilon, alpha / vectors, weights."""
    kind = spec.get("kind")
    eps = spec.get("epsilon")
    if eps is None:
        raise InvalidParameterError("epsilon is required")
    if kind == "dirichlet_mixture":
        law = dirichlet_law(spec["alpha"], eps)
    elif kind == "finite_support":
        law = finite_support_law(spec["vectors"], eps, spec.get("weights"))
    else:
        raise InvalidParameterError(f"unknown environment kind {kind!r}")
    if d is not None and law.d != d:
        raise InvalidParameterError(f"law has dimension {law.d} but the group has d = {d}")
    return law


@dataclass(frozen=True)
class Environment:
    """One realisation of the random environment, addressed by master seed."""

    law: EnvironmentLaw
    master_seed: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise InvalidParameterError("master seed must be an unsigned 64-bit integer")

    @property
    def d(self) -> int:
        return self.law.d

    def key(self, x: Vertex) -> np.uint64:
        return np.uint64(K.vertex_key(np.uint64(self.master_seed), x.root_first()))

    def transition_at(self, x: Vertex) -> np.ndarray:
        out = np.empty(self.law.d)
        K.transition_from_key(self.key(x), *self.law.kernel_args, out)
        return out

    def omega(self, x: Vertex, s: int) -> float:
        """Probability of the step from ``x`` to ``s.x``."""
        return float(self.transition_at(x)[s])
