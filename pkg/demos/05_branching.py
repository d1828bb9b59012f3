"""Offspring matrix of the colouring branching process and its Perron root."""
import numpy as np

from rwre import GeneratorSet, dirichlet_law, estimate_offspring_matrix, perron_root, uniform_law

gs = GeneratorSet(2, 0)

M = estimate_offspring_matrix(uniform_law(4), gs, psi=2, mc_samples=1, seed=0)
print("simple random walk, psi = 2:\n", np.round(M.m, 4))
print("Perron root:", perron_root(M).rho)

law = dirichlet_law([0.5] * 4, 0.02)
for psi in (1, 2, 3):
    M = estimate_offspring_matrix(law, gs, psi=psi, mc_samples=2000, seed=1)
    rep = perron_root(M)
    print(f"psi={psi}: rho = {rep.rho:.3f}, min row sum {rep.min_row_sum:.3f}, "
          f"all rows > 1 at 3 se: {M.min_row_sum_exceeds(1.0)}")
