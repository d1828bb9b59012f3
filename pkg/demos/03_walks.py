"""Quenched walks and the two equivalent step samplers."""
import numpy as np

from rwre import IDENTITY, Environment, GeneratorSet, dirichlet_law, hitting_and_return_times, simulate_walk

gs = GeneratorSet(2, 0)
env = Environment(dirichlet_law([1.0] * 4, 0.05), 11)

for sampler in ("categorical", "exponential_race"):
    traj = simulate_walk(env, gs, IDENTITY, 20_000, seed=5, sampler=sampler)
    print(f"{sampler:16s} |X_n|/n = {traj.levels[-1] / traj.n_steps:.4f}  end at level {traj.levels[-1]}")

traj = simulate_walk(env, gs, IDENTITY, 2_000, seed=5)
print("first ten vertices:", [v.text or "e" for v in list(traj.vertices())[:10]])

times = hitting_and_return_times(traj)
print("T_10 (first time at level 10):", times.T_level(10))
print("distinct vertices visited:", traj.tree.count)
print("max level reached:", int(np.max(traj.levels)))
