"""Seed-addressed random environments.

The transition vector at a vertex is a pure function of (master seed, vertex),
so the same environment can be queried in any order, from any thread.
"""
import numpy as np

from rwre import Environment, GeneratorSet, dirichlet_law, finite_support_law, uniform_law

gs = GeneratorSet(2, 0)
law = dirichlet_law([1.0, 1.0, 1.0, 1.0], epsilon=0.05)
env = Environment(law, master_seed=2024)

x = gs.reduce_word([0, 2, 0])
print(law.describe())
print("omega at", x, "=", np.round(env.transition_at(x), 4))
print("asked again (same seed) =", np.round(Environment(law, 2024).transition_at(x), 4))
print("smallest entry over the ball of radius 3:",
      min(env.transition_at(v).min() for v in gs.ball(3)), ">= epsilon", law.epsilon)

# A two-point law: each vertex picks one of two vectors.
two = finite_support_law([(0.4, 0.1, 0.4, 0.1), (0.1, 0.4, 0.1, 0.4)], epsilon=0.1, weights=(0.5, 0.5))
env2 = Environment(two, 7)
picks = [tuple(env2.transition_at(v)) for v in gs.sphere(3)]
print("two-point law, share of first vector on level 3:", picks.count(two.vectors[0]) / len(picks))

print("uniform law:", uniform_law(4).describe())
