"""Regeneration levels, regeneration times and the block tables built on them.

Two notions of "level k regenerates" at the first hitting time ``T_k``:

``literal``
    the walk never re-enters ``X_{T_k}`` from inside its own subtree
    (returns through the parent are allowed);
``strict``
    the walk never visits level ``k`` again after ``T_k``, so it stays in the
    subtree of ``X_{T_k}`` and never comes back to ``X_{T_k}`` itself.

Strict regenerations are always literal ones. On a finite trajectory a
qualifying level is *confirmed* only once the walk has climbed ``delta``
further levels; unconfirmed levels form the tail and never enter a block.

Block ``i`` covers times ``[tau_{i-1}, tau_i)`` and carries
``Y = tau_i - tau_{i-1}``, ``Z = l_i - l_{i-1}`` and the type of
``X_{tau_i}``. Block 1 starts at time 0 and is excluded by default because
its law differs from the later ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import InsufficientBlocksError, InvalidMarginError, InvalidParameterError
from .walk import Trajectory

__all__ = [
    "DEFAULT_DELTA",
    "RegenerationRecord",
    "BlockTable",
    "OccupationStats",
    "detect_regenerations",
    "block_statistics",
    "occupation_stats",
]

DEFAULT_DELTA = 200
MODES = {"strict": K.MODE_STRICT, "literal": K.MODE_LITERAL}


@dataclass(frozen=True)
class BlockTable:
    """Per-block rows; concatenation of tables from several trajectories is a table."""

    d: int
    Y: np.ndarray
    Z: np.ndarray
    type: np.ndarray
    L: np.ndarray
    D: np.ndarray
    traj_id: np.ndarray
    index: np.ndarray  # regeneration index i of the block's right end
    tau: np.ndarray  # tau_i, the block's right end
    level: np.ndarray  # l_i

    def __len__(self) -> int:
        return int(self.Y.size)

    @classmethod
    def concat(cls, tables: list[BlockTable], d: int | None = None) -> BlockTable:
        if not tables:
            if d is None:
                raise InvalidParameterError("need d to build an empty table")
            e = np.zeros(0, np.int64)
            return cls(d, *([e] * len(_COLUMNS)))
        return cls(tables[0].d, *(np.concatenate([getattr(t, f) for t in tables]) for f in _COLUMNS))

    def take(self, idx) -> BlockTable:
        return BlockTable(self.d, *(getattr(self, f)[idx] for f in _COLUMNS))

    def _typed(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros((values.size, self.d), dtype=float)
        out[np.arange(values.size), self.type] = values
        return out

    def typed_Y(self) -> np.ndarray:
        """``Y_i(s) = Y_i 1{type_i = s}``, shape (n_blocks, d)."""
        return self._typed(self.Y)

    def typed_Z(self) -> np.ndarray:
        return self._typed(self.Z)


_COLUMNS = ("Y", "Z", "type", "L", "D", "traj_id", "index", "tau", "level")


@dataclass(frozen=True)
class RegenerationRecord:
    mode: str
    delta: int
    d: int
    start_level: int
    level: np.ndarray
    tau: np.ndarray
    type: np.ndarray
    confirmed: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    L_block: np.ndarray
    D_block: np.ndarray
    traj_id: int = 0

    @property
    def n_confirmed(self) -> int:
        return int(self.confirmed.sum())

    @property
    def confirmed_levels(self) -> np.ndarray:
        return self.level[self.confirmed]

    @property
    def first_level(self) -> int | None:
        """``l_1`` if confirmed, else None."""
        return int(self.level[0]) if self.confirmed.size and self.confirmed[0] else None

    def blocks(self, include_first: bool = False) -> BlockTable:
        """Blocks between consecutive confirmed regenerations (no error if empty)."""
        m = self.n_confirmed
        lo = 0 if include_first else 1
        sl = slice(lo, max(m, lo))
        idx = np.arange(self.level.size)[sl] + 1
        return BlockTable(self.d, self.Y[sl], self.Z[sl], self.type[sl], self.L_block[sl], self.D_block[sl],
                          np.full(idx.size, self.traj_id, np.int64), idx, self.tau[sl], self.level[sl])


def detect_regenerations(traj: Trajectory, mode: str = "strict", delta: int = DEFAULT_DELTA,
                         traj_id: int = 0) -> RegenerationRecord:
    """Regeneration levels above the starting level, with confirmation margin ``delta``."""
    if delta < 1:
        raise InvalidMarginError(f"delta must be >= 1, got {delta}")
    if mode not in MODES:
        raise InvalidParameterError(f"unknown regeneration mode {mode!r}")
    tr = traj.tree
    out = K.regenerations(traj.levels, tr.nodes, tr.letter, tr.count, MODES[mode], int(delta))
    return RegenerationRecord(mode, int(delta), traj.gs.d, int(traj.levels[0]), *out, traj_id=traj_id)


def block_statistics(rec: RegenerationRecord, include_first: bool = False) -> BlockTable:
    if rec.n_confirmed < 2:
        raise InsufficientBlocksError(f"need at least 2 confirmed regenerations, have {rec.n_confirmed}")
    return rec.blocks(include_first)


@dataclass(frozen=True)
class OccupationStats:
    L_start: int  # visits to the start vertex within the horizon
    D_first: int  # distinct vertices visited strictly before tau_1
    tau_1: int
    L_block: np.ndarray
    D_block: np.ndarray


def occupation_stats(traj: Trajectory, rec: RegenerationRecord) -> OccupationStats:
    if rec.first_level is None:
        raise InsufficientBlocksError("first regeneration time is not confirmed")
    m = rec.n_confirmed
    tr = traj.tree
    L_start = int(np.count_nonzero(tr.nodes == tr.nodes[0]))
    return OccupationStats(L_start, int(rec.D_block[0]), int(rec.tau[0]),
                           rec.L_block[:m].copy(), rec.D_block[:m].copy())
