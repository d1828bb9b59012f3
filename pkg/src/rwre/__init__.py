"""Random walks in i.i.d. random environments on Cayley trees of free products.

The group is ``Z^{*k} * Z_2^{*r}``; its Cayley graph is the ``d``-regular tree
with ``d = 2k + r``. Environments are addressed by a master seed, walks by a
stream seed, so every quantity here can be recomputed exactly.
"""

__version__ = "0.1.0"

from .branching import (OffspringMatrix, PerronReport, escape_probability_floor, escape_probability_path,
                        estimate_offspring_matrix, perron_root, simulate_colouring_generation)
from .config import RunConfig, load_config, parse_config
from .environment import (Environment, EnvironmentLaw, build_law, derive_seed, dirichlet_law, finite_support_law,
                          uniform_law)
from .errors import *  # noqa: F401,F403
from .experiments import EnsembleResult, clt_check, clt_samples, first_regeneration_levels, run_ensemble
from .group_tree import IDENTITY, GeneratorSet, Vertex, parent_and_type
from .oracle import (FiniteChain, exact_escape_probability, exact_expected_hitting_time, exact_hitting_probability,
                     path_chain, truncated_tree_chain)
from .regeneration import (BlockTable, RegenerationRecord, block_statistics, detect_regenerations,
                           occupation_stats)
from .stats import (estimate_sigma2, estimate_speed, estimate_speed_endpoint, kolmogorov_distance, l1_tail_fit,
                    normality_check, survival_function)
from .walk import (BEYOND_HORIZON, PathEnvironment, Trajectory, hitting_and_return_times, path_environment,
                   simulate_restricted_walk, simulate_walk)
