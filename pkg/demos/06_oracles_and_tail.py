"""Exact linear-algebra answers next to Monte Carlo, and the first-regeneration tail."""
import numpy as np

from rwre import (Environment, GeneratorSet, dirichlet_law, escape_probability_path, exact_escape_probability,
                  first_regeneration_levels, l1_tail_fit, path_chain, path_environment, truncated_tree_chain)

gs = GeneratorSet(2, 0)
law = dirichlet_law([1.0] * 4, 0.05)
env = Environment(law, 3)

# Escape along a geodesic: closed form against a linear solve.
path = [gs.reduce_word(w) for w in ([], [0], [2, 0], [0, 2, 0], [0, 0, 2, 0])]
pe = path_environment(env, gs, path)
print("escape, closed form :", escape_probability_path(pe))
print("escape, linear solve:", exact_escape_probability(path_chain(pe), 0))

# Reach the sphere of radius 4 before coming back to the identity.
chain = truncated_tree_chain(env, gs, 4)
print("P(reach level 4 before returning), exact:", exact_escape_probability(chain, gs.reduce_word([])))

# Tail of the first regeneration level.
levels = first_regeneration_levels(law, gs, master_seed=8, n_samples=2000)
fit = l1_tail_fit(levels)
print(f"l1 mean {np.mean(levels):.2f}; log-survival slope {fit.slope:.3f} +- {fit.slope_se:.3f}"
      f" (decay per level {fit.gamma_hat:.3f})")
