"""Annealed ensembles: many trajectories, each in a fresh environment.

Trajectory ``i`` uses environment seed ``derive_seed(master, 0, i)`` and walk
seed ``derive_seed(master, 1, i)``. Results are gathered in trajectory order
whatever the number of worker threads, so every estimate is reproducible.
The compiled kernels release the GIL, so threads do run in parallel.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .environment import Environment, EnvironmentLaw, derive_seed
from .group_tree import IDENTITY, GeneratorSet, Vertex
from .regeneration import DEFAULT_DELTA, BlockTable, detect_regenerations
from .stats import (
    CltEstimate,
    KsResult,
    SpeedEstimate,
    estimate_sigma2,
    estimate_speed,
    estimate_speed_endpoint,
    normality_check,
)
from .walk import Trajectory, simulate_walk

__all__ = [
    "TrajectoryResult",
    "EnsembleResult",
    "trajectory_seeds",
    "resolve_workers",
    "run_ensemble",
    "clt_samples",
    "clt_check",
    "first_regeneration_levels",
]


def trajectory_seeds(master_seed: int, i: int) -> tuple[int, int]:
    """(environment seed, walk seed) of trajectory ``i``."""
    return derive_seed(master_seed, 0, i), derive_seed(master_seed, 1, i)


def resolve_workers(workers: int | None = None) -> int:
    env = os.environ.get("RWRE_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(workers or 1))


@dataclass
class TrajectoryResult:
    traj_id: int
    final_level: int
    blocks: BlockTable
    first_level: int | None
    tau_1: int | None
    D_first: int | None
    L_start: int
    n_confirmed: int
    trajectory: Trajectory | None = None
    record: object = None


@dataclass
class EnsembleResult:
    gs: GeneratorSet
    n_steps: int
    mode: str
    delta: int
    results: list[TrajectoryResult] = field(repr=False)

    @property
    def n_traj(self) -> int:
        return len(self.results)

    @cached_property
    def blocks(self) -> BlockTable:
        return BlockTable.concat([r.blocks for r in self.results], self.gs.d)

    @property
    def final_levels(self) -> np.ndarray:
        return np.array([r.final_level for r in self.results], dtype=np.int64)

    @property
    def first_levels(self) -> np.ndarray:
        """Confirmed l_1 per trajectory, -1 where unconfirmed."""
        return np.array([-1 if r.first_level is None else r.first_level for r in self.results], np.int64)

    def speed(self) -> SpeedEstimate:
        return estimate_speed(self.blocks)

    def speed_endpoint(self) -> SpeedEstimate:
        return estimate_speed_endpoint(self.final_levels, self.n_steps)

    def sigma2(self, v_hat: float | None = None) -> CltEstimate:
        blocks = self.blocks
        if v_hat is None:
            v_hat = estimate_speed(blocks).v_hat
        return estimate_sigma2(blocks, v_hat)


def _one(args) -> TrajectoryResult:
    (i, law, gs, master, n_steps, mode, delta, include_first, sampler, start, keep) = args
    env_seed, walk_seed = trajectory_seeds(master, i)
    traj = simulate_walk(Environment(law, env_seed), gs, start, n_steps, walk_seed, sampler)
    rec = detect_regenerations(traj, mode, delta, traj_id=i)
    first = rec.first_level
    return TrajectoryResult(
        traj_id=i,
        final_level=int(traj.levels[-1]),
        blocks=rec.blocks(include_first),
        first_level=first,
        tau_1=int(rec.tau[0]) if first is not None else None,
        D_first=int(rec.D_block[0]) if first is not None else None,
        L_start=int(np.count_nonzero(traj.tree.nodes == traj.tree.nodes[0])),
        n_confirmed=rec.n_confirmed,
        trajectory=traj if keep else None,
        record=rec if keep else None,
    )


def run_ensemble(law: EnvironmentLaw, gs: GeneratorSet, master_seed: int, n_traj: int, n_steps: int,
                 mode: str = "strict", delta: int = DEFAULT_DELTA, include_first_block: bool = False,
                 sampler: str = "categorical", workers: int | None = None, start: Vertex = IDENTITY,
                 keep_trajectories: bool = False, first_id: int = 0) -> EnsembleResult:
    """Simulate trajectories ``first_id .. first_id + n_traj - 1`` and detect regenerations."""
    jobs = [(i, law, gs, master_seed, n_steps, mode, delta, include_first_block, sampler, start,
             keep_trajectories) for i in range(first_id, first_id + n_traj)]
    n_workers = resolve_workers(workers)
    if n_workers == 1:
        results = [_one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            results = list(pool.map(_one, jobs, chunksize=max(1, len(jobs) // (8 * n_workers))))
    return EnsembleResult(gs, n_steps, mode, delta, results)


def clt_samples(final_levels, n_steps: int, v: float) -> np.ndarray:
    """sqrt(n) (|X_n| / n - v) for each trajectory."""
    x = np.asarray(final_levels, float)
    return math.sqrt(n_steps) * (x / n_steps - v)


def clt_check(ens: EnsembleResult, v0: float | None = None, sigma2_0: float | None = None,
              alpha: float = 0.05, estimated: bool | None = None) -> tuple[KsResult, np.ndarray, float, float]:
    """Kolmogorov check of the endpoint CLT statistic.

    Missing reference values are estimated from the ensemble's own blocks.
    The estimated-parameter slack applies whenever either value was
    estimated, here or by the caller (``estimated=True``).
    """
    if estimated is None:
        estimated = v0 is None or sigma2_0 is None
    if v0 is None:
        v0 = ens.speed().v_hat
    if sigma2_0 is None:
        sigma2_0 = ens.sigma2(v0).sigma2_hat
    samples = clt_samples(ens.final_levels, ens.n_steps, v0)
    ks = normality_check(samples, 0.0, sigma2_0, alpha, estimated=estimated)
    return ks, samples, v0, sigma2_0


def first_regeneration_levels(law: EnvironmentLaw, gs: GeneratorSet, master_seed: int, n_samples: int,
                              n_steps: int = 2000, delta: int = DEFAULT_DELTA, mode: str = "strict",
                              workers: int | None = None, max_doublings: int = 8) -> np.ndarray:
    """Confirmed first regeneration level of ``n_samples`` annealed trajectories.

    Trajectories whose ``l_1`` is not yet confirmed are re-run with twice the
    horizon (same seeds, so the path only gets longer) until it is.
    """
    ens = run_ensemble(law, gs, master_seed, n_samples, n_steps, mode, delta, workers=workers)
    levels = ens.first_levels
    horizon = n_steps
    for _ in range(max_doublings):
        todo = np.flatnonzero(levels < 0)
        if todo.size == 0:
            break
        horizon *= 2
        for i in todo:
            levels[i] = run_ensemble(law, gs, master_seed, 1, horizon, mode, delta, first_id=int(i)).first_levels[0]
    if np.any(levels < 0):
        raise RuntimeError(f"{int(np.sum(levels < 0))} first regenerations unconfirmed at horizon {horizon}")
    return levels
