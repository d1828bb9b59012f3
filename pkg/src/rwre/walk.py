"""Quenched random walk on the Cayley tree and its path-restricted version.

Randomness conventions
----------------------
* The environment is addressed by its master seed (see ``environment``).
* A trajectory's own randomness comes from a Philox stream keyed by the
  trajectory seed, so (environment seed, trajectory seed) fixes the path.
* Events that do not happen within the simulated horizon are reported as
  ``BEYOND_HORIZON``, never as a number.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from .environment import Environment
from .errors import EllipticityViolationError, InvalidParameterError
from .group_tree import IDENTITY, GeneratorSet, Vertex

__all__ = [
    "BEYOND_HORIZON",
    "Trajectory",
    "PathEnvironment",
    "HittingTimes",
    "walk_rng",
    "draw_categorical",
    "draw_exponential_race",
    "step_categorical",
    "step_exponential_race",
    "simulate_walk",
    "path_environment",
    "simulate_restricted_walk",
    "hitting_and_return_times",
]

SAMPLERS = {"categorical": K.SAMPLER_CATEGORICAL, "exponential_race": K.SAMPLER_RACE}
HIT_FAR_END = "hit-far-end"
RETURN_TO_START = "return-to-start"


class _BeyondHorizon:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "BEYOND_HORIZON"

    def __bool__(self):
        return False


BEYOND_HORIZON = _BeyondHorizon()


def walk_rng(seed: int) -> np.random.Generator:
    """Counter-based generator owned by one trajectory."""
    return np.random.Generator(np.random.Philox(int(seed)))


def draw_categorical(p, size: int, rng: np.random.Generator) -> np.ndarray:
    """Generator indices drawn by inverse-CDF scan of ``p``."""
    p = np.asarray(p, float)
    u = rng.random(size)
    idx = np.searchsorted(np.cumsum(p)[:-1], u, side="right")
    return idx.astype(np.int64)


def draw_exponential_race(p, size: int, rng: np.random.Generator) -> np.ndarray:
    """Generator indices ``argmin_s h_s / p_s`` with i.i.d. unit exponentials ``h``."""
    p = np.asarray(p, float)
    h = rng.standard_exponential((size, p.size))
    return np.argmin(h / p, axis=1)


def step_categorical(env: Environment, gs: GeneratorSet, x: Vertex, rng: np.random.Generator) -> Vertex:
    s = K.choose_categorical(env.transition_at(x), rng.random())
    return gs.left_multiply(int(s), x)


def step_exponential_race(env: Environment, gs: GeneratorSet, x: Vertex, rng: np.random.Generator) -> Vertex:
    h = rng.standard_exponential(gs.d)
    s = K.choose_race(env.transition_at(x), h)
    return gs.left_multiply(int(s), x)


class TreeTrace(NamedTuple):
    nodes: np.ndarray  # node id at each time
    parent: np.ndarray
    letter: np.ndarray  # type of each node, -1 for the identity
    level: np.ndarray
    count: int


@dataclass
class Trajectory:
    """A finite walk stored as the generator letters applied at each step."""

    gs: GeneratorSet
    start: Vertex
    steps: np.ndarray
    levels: np.ndarray
    stream_id: int | None = None

    @classmethod
    def from_steps(cls, gs: GeneratorSet, steps: Sequence[int], start: Vertex = IDENTITY,
                   stream_id: int | None = None) -> Trajectory:
        steps = np.asarray(steps, dtype=np.uint8)
        levels = np.empty(steps.size + 1, np.int64)
        levels[0] = start.level
        x = start
        for n, s in enumerate(steps):
            x = gs.left_multiply(int(s), x)
            levels[n + 1] = x.level
        return cls(gs, start, steps, levels, stream_id)

    @classmethod
    def from_vertices(cls, gs: GeneratorSet, vertices: Sequence[Vertex]) -> Trajectory:
        steps = []
        for x, y in zip(vertices, vertices[1:]):
            s = gs.multiply(y, gs.inverse(x))
            if s.level != 1:
                raise InvalidParameterError(f"{x} and {y} are not neighbours")
            steps.append(s.word[0])
        return cls.from_steps(gs, steps, vertices[0])

    @property
    def n_steps(self) -> int:
        return int(self.steps.size)

    def vertices(self) -> Iterator[Vertex]:
        x = self.start
        yield x
        for s in self.steps:
            x = self.gs.left_multiply(int(s), x)
            yield x

    def vertex(self, n: int) -> Vertex:
        for i, x in enumerate(self.vertices()):
            if i == n:
                return x
        raise IndexError(n)

    @cached_property
    def tree(self) -> TreeTrace:
        """Node ids for the visited subtree (identity = node 0)."""
        nodes, parent, letter, level, count = K.trace_tree(
            self.start.root_first(), self.steps, self.gs.inverse_table)
        return TreeTrace(nodes, parent, letter, level, int(count))

    def node_of(self, y: Vertex) -> int | None:
        """Node id of ``y`` if visited, else None."""
        tr = self.tree
        node = 0
        for s in y.root_first():
            kids = np.flatnonzero((tr.parent == node) & (tr.letter == s))
            if kids.size == 0:
                return None
            node = int(kids[0])
        return node


def simulate_walk(env: Environment, gs: GeneratorSet, start: Vertex, n_steps: int, seed: int,
                  sampler: str = "categorical") -> Trajectory:
    """Quenched walk of ``n_steps`` steps driven by the trajectory stream ``seed``."""
    if n_steps < 0:
        raise InvalidParameterError("n_steps must be nonnegative")
    if env.d != gs.d:
        raise InvalidParameterError(f"environment dimension {env.d} != group degree {gs.d}")
    code = SAMPLERS[sampler]
    rng = walk_rng(seed)
    if code == K.SAMPLER_CATEGORICAL:
        uniforms, exps = rng.random(n_steps), np.zeros((1, gs.d))
    else:
        uniforms, exps = np.zeros(1), rng.standard_exponential((n_steps, gs.d))
    steps, levels = K.simulate(start.root_first(), n_steps, gs.inverse_table, np.uint64(env.master_seed),
                               *env.law.kernel_args, code, uniforms, exps)
    return Trajectory(gs, start, steps, levels, seed)


@dataclass(frozen=True)
class PathEnvironment:
    """Geodesic ``x_0 .. x_n`` with backward/forward weights at interior vertices.

    ``back[j-1] = omega(x_j, x_{j-1})`` and ``forward[j-1] = omega(x_j, x_{j+1})``
    for ``j = 1 .. n-1``.
    """

    back: np.ndarray
    forward: np.ndarray
    vertices: tuple[Vertex, ...] | None = None

    def __post_init__(self):
        back = np.asarray(self.back, float)
        fwd = np.asarray(self.forward, float)
        if back.shape != fwd.shape or back.ndim != 1:
            raise InvalidParameterError("back and forward must be 1-d arrays of equal length")
        object.__setattr__(self, "back", back)
        object.__setattr__(self, "forward", fwd)

    @property
    def n(self) -> int:
        """Path length (number of edges)."""
        return self.back.size + 1

    @property
    def ratios(self) -> np.ndarray:
        if np.any(self.forward <= 0):
            raise EllipticityViolationError("zero forward probability on path")
        return self.back / self.forward

    @property
    def forward_probabilities(self) -> np.ndarray:
        """Renormalised one-step probability toward the far end at each interior vertex."""
        return self.forward / (self.forward + self.back)


def path_environment(env: Environment, gs: GeneratorSet, vertices: Sequence[Vertex]) -> PathEnvironment:
    vertices = tuple(vertices)
    if len(vertices) < 2:
        raise InvalidParameterError("a path needs at least one edge")
    back, fwd = [], []
    for prev, x, nxt in zip(vertices, vertices[1:], vertices[2:]):
        p = env.transition_at(x)
        back.append(p[_letter_between(gs, x, prev)])
        fwd.append(p[_letter_between(gs, x, nxt)])
    return PathEnvironment(np.array(back), np.array(fwd), vertices)


def _letter_between(gs: GeneratorSet, x: Vertex, y: Vertex) -> int:
    s = gs.multiply(y, gs.inverse(x))
    if s.level != 1:
        raise InvalidParameterError(f"{x} and {y} are not neighbours")
    return s.word[0]


def simulate_restricted_walk(path: PathEnvironment, rng: np.random.Generator,
                             stop: Iterable[str] = (HIT_FAR_END, RETURN_TO_START),
                             max_steps: int = 10**7) -> tuple[str, np.ndarray]:
    """Walk on ``x_0 .. x_n`` with transitions renormalised to the path.

    From ``x_0`` the step to ``x_1`` is forced. The walk stops at the first
    event in ``stop``; visits to each path vertex (including the start and the
    stopping vertex) are returned alongside the outcome.
    """
    stop = set(stop)
    if not stop or not stop <= {HIT_FAR_END, RETURN_TO_START}:
        raise InvalidParameterError(f"unknown stopping events {stop}")
    n = path.n
    q = path.forward_probabilities
    visits = np.zeros(n + 1, np.int64)
    pos = 0
    visits[0] = 1
    for _ in range(max_steps):
        if pos == 0:
            pos = 1
        elif pos == n:
            pos = n - 1
        elif rng.random() < q[pos - 1]:
            pos += 1
        else:
            pos -= 1
        visits[pos] += 1
        if pos == n and HIT_FAR_END in stop:
            return HIT_FAR_END, visits
        if pos == 0 and RETURN_TO_START in stop:
            return RETURN_TO_START, visits
    raise RuntimeError("restricted walk did not stop within max_steps")


@dataclass
class HittingTimes:
    """First hitting and return times along a finite trajectory."""

    traj: Trajectory

    @cached_property
    def _first_visit(self) -> np.ndarray:
        tr = self.traj.tree
        first = np.full(tr.count, -1, np.int64)
        nodes = tr.nodes
        seen = np.unique(nodes, return_index=True)
        first[seen[0]] = seen[1]
        return first

    @cached_property
    def _first_level(self) -> np.ndarray:
        L = self.traj.levels
        first = np.full(int(L.max()) + 1, -1, np.int64)
        lv, idx = np.unique(L, return_index=True)
        first[lv] = idx
        return first

    def T(self, y: Vertex):
        """First index with X = y."""
        node = self.traj.node_of(y)
        return BEYOND_HORIZON if node is None else int(self._first_visit[node])

    def T_level(self, n: int):
        """First index at which the walk is at level n."""
        f = self._first_level
        return int(f[n]) if 0 <= n < f.size and f[n] >= 0 else BEYOND_HORIZON

    @property
    def R(self):
        """First return to the starting vertex."""
        nodes = self.traj.tree.nodes
        hits = np.flatnonzero(nodes[1:] == nodes[0])
        return int(hits[0]) + 1 if hits.size else BEYOND_HORIZON

    def R_y(self, y: Vertex, from_subtree: bool = True):
        """First n >= 1 with X_n = y entered from inside the subtree of y.

        With ``from_subtree=False`` this is the first return to y after T(y),
        from either side.
        """
        node = self.traj.node_of(y)
        if node is None:
            return BEYOND_HORIZON
        tr = self.traj.tree
        nodes, L = tr.nodes, self.traj.levels
        arrive = nodes[1:] == node
        if from_subtree:
            arrive &= L[:-1] > L[1:]
        else:
            arrive[: self._first_visit[node]] = False
        hits = np.flatnonzero(arrive)
        return int(hits[0]) + 1 if hits.size else BEYOND_HORIZON


def hitting_and_return_times(traj: Trajectory) -> HittingTimes:
    return HittingTimes(traj)
