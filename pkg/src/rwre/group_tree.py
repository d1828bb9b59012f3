"""Free products of copies of Z and Z_2 as reduced words, and their Cayley tree.

Generators are integer indices. With ``k`` copies of Z and ``r`` copies of
Z_2, indices ``0 .. 2k-1`` are ``a_1, a_1^-1, ..., a_k, a_k^-1`` (inverse
pairs differ in the lowest bit) and ``2k .. 2k+r-1`` are the involutions
``b_1 .. b_r``.

A vertex is a reduced word ``(w_0, w_1, ..., w_{m-1})`` read as the product
``w_0 w_1 ... w_{m-1}``. Neighbours are obtained by *left* multiplication,
so ``w_0`` is the generator most recently applied, the parent of a vertex
is the word with its first letter removed, and the type of a vertex is its
first letter.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidGeneratorError, InvalidParameterError, RootHasNoParentError

__all__ = ["GeneratorSet", "Vertex", "IDENTITY", "parent_and_type"]


@dataclass(frozen=True)
class Vertex:
    """Group element / tree node stored as a reduced word of generator indices."""

    word: tuple[int, ...] = ()

    @property
    def level(self) -> int:
        """Graph distance to the identity."""
        return len(self.word)

    @property
    def is_identity(self) -> bool:
        return not self.word

    @property
    def parent(self) -> Vertex:
        return self.parent_and_type()[0]

    @property
    def type(self) -> int:
        return self.parent_and_type()[1]

    def parent_and_type(self) -> tuple[Vertex, int]:
        if not self.word:
            raise RootHasNoParentError("the identity has no parent")
        return Vertex(self.word[1:]), self.word[0]

    def in_subtree_of(self, y: Vertex) -> bool:
        """True if the geodesic from the identity to ``self`` passes through ``y``."""
        m = len(y.word)
        return m <= len(self.word) and self.word[len(self.word) - m:] == y.word

    @property
    def text(self) -> str:
        """CSV text form: letters joined by '.', empty for the identity."""
        return ".".join(str(s) for s in self.word)

    @classmethod
    def from_text(cls, text: str) -> Vertex:
        text = text.strip()
        return cls(tuple(int(t) for t in text.split("."))) if text else cls()

    def to_bytes(self) -> bytes:
        """Canonical serialisation: uint32 little-endian length, then one byte per letter."""
        return struct.pack("<I", len(self.word)) + bytes(self.word)

    def root_first(self) -> np.ndarray:
        """Letters in the order they are applied starting from the identity."""
        return np.array(self.word[::-1], dtype=np.uint8)

    def __len__(self) -> int:
        return len(self.word)

    def __repr__(self) -> str:
        return f"Vertex({self.text or 'e'})"


IDENTITY = Vertex()


def parent_and_type(x: Vertex) -> tuple[Vertex, int]:
    return x.parent_and_type()


@dataclass(frozen=True)
class GeneratorSet:
    """Symmetric generating set of Z^{*k} * Z_2^{*r}; the Cayley graph is the d-regular tree."""

    k: int
    r: int
    _inv: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.k < 0 or self.r < 0:
            raise InvalidParameterError("k and r must be nonnegative")
        if self.d < 3:
            raise InvalidParameterError(f"degree d = 2k + r = {self.d} must be at least 3")
        if self.d > 255:
            raise InvalidParameterError("degree above 255 is not supported")
        two_k = 2 * self.k
        object.__setattr__(self, "_inv", tuple(s ^ 1 if s < two_k else s for s in range(self.d)))

    @property
    def d(self) -> int:
        return 2 * self.k + self.r

    def inv(self, s: int) -> int:
        self._check(s)
        return self._inv[s]

    @property
    def inverse_table(self) -> np.ndarray:
        return np.array([self.inv(s) for s in range(self.d)], dtype=np.int64)

    def label(self, s: int) -> str:
        self._check(s)
        if s < 2 * self.k:
            return f"a{s // 2 + 1}" + ("^-1" if s & 1 else "")
        return f"b{s - 2 * self.k + 1}"

    @property
    def labels(self) -> list[str]:
        return [self.label(s) for s in range(self.d)]

    def _check(self, s: int) -> None:
        if not (0 <= s < self.d):
            raise InvalidGeneratorError(f"generator index {s} outside 0..{self.d - 1}")

    def reduce_word(self, letters: Iterable[int]) -> Vertex:
        """Free reduction of an arbitrary product of generators."""
        d, inv = self.d, self._inv
        out: list[int] = []
        for s in letters:
            s = int(s)
            if not 0 <= s < d:
                raise InvalidGeneratorError(f"generator index {s} outside 0..{d - 1}")
            if out and out[-1] == inv[s]:
                out.pop()
            else:
                out.append(s)
        return Vertex(tuple(out))

    def left_multiply(self, s: int, x: Vertex) -> Vertex:
        self._check(s)
        if x.word and x.word[0] == self._inv[s]:
            return Vertex(x.word[1:])
        return Vertex((s,) + x.word)

    def multiply(self, x: Vertex, y: Vertex) -> Vertex:
        return self.reduce_word(x.word + y.word)

    def inverse(self, x: Vertex) -> Vertex:
        inv = self._inv
        return Vertex(tuple(inv[s] for s in reversed(x.word)))

    def neighbors(self, x: Vertex) -> list[Vertex]:
        return [self.left_multiply(s, x) for s in range(self.d)]

    def is_reduced(self, word: Sequence[int]) -> bool:
        return all(word[i + 1] != self.inv(word[i]) for i in range(len(word) - 1))

    def vertex(self, word: Sequence[int]) -> Vertex:
        """Validate an already reduced word."""
        for s in word:
            self._check(int(s))
        if not self.is_reduced(word):
            raise InvalidGeneratorError(f"word {tuple(word)} is not reduced")
        return Vertex(tuple(int(s) for s in word))

    def children(self, x: Vertex) -> list[Vertex]:
        """Neighbours one level further from the identity."""
        skip = self.inv(x.word[0]) if x.word else None
        return [Vertex((s,) + x.word) for s in range(self.d) if s != skip]

    def sphere(self, n: int) -> Iterator[Vertex]:
        """All vertices at level ``n`` (depth-first, lexicographic in root-first order)."""
        if n == 0:
            yield IDENTITY
            return
        for x in self.sphere(n - 1):
            yield from self.children(x)

    def ball(self, depth: int) -> list[Vertex]:
        """Breadth-first enumeration of all vertices with level <= depth."""
        layer = [IDENTITY]
        out = [IDENTITY]
        for _ in range(depth):
            layer = [y for x in layer for y in self.children(x)]
            out.extend(layer)
        return out

    def random_vertex(self, level: int, rng: np.random.Generator) -> Vertex:
        word: list[int] = []
        for _ in range(level):
            choices = [s for s in range(self.d) if not word or s != self.inv(word[0])]
            word.insert(0, int(rng.choice(choices)))
        return Vertex(tuple(word))
