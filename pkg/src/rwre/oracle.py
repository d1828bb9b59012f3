"""Exact absorption quantities for small finite Markov chains.

First-step analysis: with ``Q`` the interior-to-interior block and ``r`` the
one-step probabilities into the target set, the probability of reaching the
targets before the taboo set solves ``(I - Q) h = r`` and the expected
absorption time solves ``(I - Q) t = 1``. The systems are dense and solved
by LU with partial pivoting; every solution is checked by its residual.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from .environment import Environment
from .errors import AbsorbingStructureError, ChainTooLargeError, InvalidParameterError
from .group_tree import GeneratorSet, Vertex
from .walk import PathEnvironment

__all__ = [
    "MAX_STATES",
    "FiniteChain",
    "exact_hitting_probability",
    "exact_expected_hitting_time",
    "exact_escape_probability",
    "path_chain",
    "truncated_tree_chain",
]

MAX_STATES = 2000
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class FiniteChain:
    """Row-stochastic chain with target set A and taboo set B (both absorbing)."""

    states: tuple
    P: np.ndarray
    targets: frozenset
    taboo: frozenset

    def __post_init__(self):
        P = np.asarray(self.P, float)
        n = len(self.states)
        if n > MAX_STATES:
            raise ChainTooLargeError(f"{n} states exceeds the dense limit of {MAX_STATES}")
        if P.shape != (n, n):
            raise InvalidParameterError(f"transition matrix shape {P.shape} != ({n}, {n})")
        if P.min() < 0:
            raise InvalidParameterError("negative transition probability")
        targets, taboo = frozenset(self.targets), frozenset(self.taboo)
        if targets & taboo:
            raise InvalidParameterError("target and taboo sets intersect")
        if not (targets | taboo) <= set(range(n)):
            raise InvalidParameterError("absorbing sets must be state indices")
        interior = [i for i in range(n) if i not in targets and i not in taboo]
        if interior and np.max(np.abs(P[interior].sum(axis=1) - 1.0)) > 1e-12:
            raise InvalidParameterError("interior rows must sum to 1")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "taboo", taboo)

    @property
    def interior(self) -> np.ndarray:
        absorbing = self.targets | self.taboo
        return np.array([i for i in range(len(self.states)) if i not in absorbing], dtype=np.int64)

    def index(self, state: Hashable) -> int:
        return self.states.index(state)

    def check_absorbing_structure(self) -> None:
        """Every interior state must reach A or B; raises otherwise."""
        n = len(self.states)
        absorbing = self.targets | self.taboo
        # backward search from the absorbing set
        reach = np.zeros(n, bool)
        queue = deque(absorbing)
        for i in absorbing:
            reach[i] = True
        PT = self.P.T
        while queue:
            j = queue.popleft()
            for i in np.flatnonzero(PT[j] > 0):
                if not reach[i] and i not in absorbing:
                    reach[i] = True
                    queue.append(int(i))
        stuck = [self.states[i] for i in self.interior if not reach[i]]
        if stuck:
            raise AbsorbingStructureError(f"{len(stuck)} interior states cannot reach A or B, e.g. {stuck[0]!r}")


def _solve(chain: FiniteChain, rhs_of: Callable[[np.ndarray], np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    chain.check_absorbing_structure()
    inner = chain.interior
    if inner.size == 0:
        return inner, np.zeros(0)
    A = np.eye(inner.size) - chain.P[np.ix_(inner, inner)]
    b = rhs_of(inner)
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise AbsorbingStructureError("singular interior block") from exc
    resid = np.max(np.abs(A @ x - b))
    if not resid <= RESIDUAL_TOL:
        raise AbsorbingStructureError(f"solution residual {resid:.3g} exceeds {RESIDUAL_TOL}")
    return inner, x


def _start_index(chain: FiniteChain, start) -> int:
    try:
        return chain.index(start)
    except ValueError:
        if isinstance(start, (int, np.integer)) and 0 <= start < len(chain.states):
            return int(start)
        raise InvalidParameterError(f"unknown start state {start!r}") from None


def exact_hitting_probability(chain: FiniteChain, start) -> float:
    """P(reach targets before taboo | start); ``start`` is a state or its index."""
    i = _start_index(chain, start)
    if i in chain.targets:
        return 1.0
    if i in chain.taboo:
        return 0.0
    tgt = np.array(sorted(chain.targets), dtype=np.int64)
    inner, h = _solve(chain, lambda inner: chain.P[np.ix_(inner, tgt)].sum(axis=1))
    return float(np.clip(h[np.searchsorted(inner, i)], 0.0, 1.0))


def exact_expected_hitting_time(chain: FiniteChain, start) -> float:
    """Expected number of steps until the chain enters A or B."""
    i = _start_index(chain, start)
    if i in chain.targets or i in chain.taboo:
        return 0.0
    inner, t = _solve(chain, lambda inner: np.ones(inner.size))
    return float(t[np.searchsorted(inner, i)])


def exact_escape_probability(chain: FiniteChain, start) -> float:
    """P(reach targets before returning to ``start``), ``start`` excluded from the taboo set.

    The first step is taken from ``start``'s row; ``start`` then acts as taboo.
    """
    i = _start_index(chain, start)
    tmp = FiniteChain(chain.states, chain.P, chain.targets - {i}, chain.taboo | {i})
    row = chain.P[i]
    return float(sum(row[j] * exact_hitting_probability(tmp, j) for j in np.flatnonzero(row > 0)))


def path_chain(path: PathEnvironment) -> FiniteChain:
    """Restricted walk on ``x_0 .. x_n``: target ``x_n``, taboo ``x_0``, start from ``x_1``."""
    n = path.n
    P = np.zeros((n + 1, n + 1))
    P[0, 1] = 1.0
    P[n, n - 1] = 1.0
    q = path.forward_probabilities
    for j in range(1, n):
        P[j, j + 1] = q[j - 1]
        P[j, j - 1] = 1.0 - q[j - 1]
    return FiniteChain(tuple(range(n + 1)), P, frozenset({n}), frozenset({0}))


def truncated_tree_chain(env: Environment, gs: GeneratorSet, depth: int,
                         is_target: Callable[[Vertex], bool] = lambda v: True,
                         extra_taboo: Sequence[Vertex] = ()) -> FiniteChain:
    """Quenched walk on the ball of radius ``depth`` around the identity.

    Boundary vertices (level ``depth``) are targets when ``is_target`` says so
    and taboo otherwise; ``extra_taboo`` adds interior vertices to the taboo set.
    """
    if depth < 1:
        raise InvalidParameterError("depth must be at least 1")
    states = tuple(gs.ball(depth))
    if len(states) > MAX_STATES:
        raise ChainTooLargeError(f"ball of radius {depth} has {len(states)} states")
    index = {x: i for i, x in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    targets, taboo = set(), {index[x] for x in extra_taboo}
    for i, x in enumerate(states):
        if x.level == depth:
            (targets if is_target(x) else taboo).add(i)
            P[i, i] = 1.0
            continue
        p = env.transition_at(x)
        for s in range(gs.d):
            P[i, index[gs.left_multiply(s, x)]] += p[s]
    return FiniteChain(states, P, frozenset(targets - taboo), frozenset(taboo))
