import numpy as np
import pytest

from rwre.branching import escape_probability_path
from rwre.environment import Environment, dirichlet_law
from rwre.errors import AbsorbingStructureError, ChainTooLargeError, InvalidParameterError
from rwre.group_tree import IDENTITY, GeneratorSet
from rwre.oracle import (FiniteChain, exact_escape_probability, exact_expected_hitting_time,
                         exact_hitting_probability, path_chain, truncated_tree_chain)
from rwre.walk import PathEnvironment, simulate_walk


def chain(P, targets, taboo):
    return FiniteChain(tuple(range(len(P))), np.asarray(P, float), frozenset(targets), frozenset(taboo))


def test_three_state_path():
    c = chain([[1, 0, 0], [0.3, 0, 0.7], [0, 0, 1]], {2}, {0})
    assert exact_hitting_probability(c, 1) == pytest.approx(0.7, abs=1e-15)
    assert exact_hitting_probability(c, 2) == 1.0 and exact_hitting_probability(c, 0) == 0.0


def test_symmetric_ruin_and_duration():
    path = PathEnvironment(np.full(3, 0.5), np.full(3, 0.5))
    assert exact_hitting_probability(path_chain(path), 1) == pytest.approx(0.25, abs=1e-14)
    for n in range(1, 10):
        p = PathEnvironment(np.full(n - 1, 0.5), np.full(n - 1, 0.5))
        assert exact_expected_hitting_time(path_chain(p), 1) == pytest.approx(n - 1, abs=1e-10)


def test_one_step_absorption_time():
    c = chain([[0, 1], [0, 1]], {1}, set())
    assert exact_expected_hitting_time(c, 0) == pytest.approx(1.0)


def test_agreement_with_formula(rng):
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        back = rng.uniform(0.05, 0.95, n - 1)
        fwd = np.maximum(rng.uniform(0, 1 - back), 0.05)
        path = PathEnvironment(back, fwd)
        worst = max(worst, abs(escape_probability_path(path) - exact_hitting_probability(path_chain(path), 1)))
        assert abs(escape_probability_path(path) - exact_escape_probability(path_chain(path), 0)) <= 1e-10
    assert worst <= 1e-10


def test_structure_errors():
    with pytest.raises(InvalidParameterError):
        chain([[0.5, 0.4], [0, 1]], {1}, set())
    with pytest.raises(InvalidParameterError):
        chain([[0, 1], [0, 1]], {1}, {1})
    stuck = chain([[1, 0, 0], [0, 0.5, 0.5], [0, 0.5, 0.5]], {0}, set())
    with pytest.raises(AbsorbingStructureError):
        exact_hitting_probability(stuck, 1)
    with pytest.raises(ChainTooLargeError):
        FiniteChain(tuple(range(2001)), np.eye(2001), frozenset({0}), frozenset())
    with pytest.raises(ChainTooLargeError):
        truncated_tree_chain(Environment(dirichlet_law([1] * 4, 0.1), 0), GeneratorSet(2, 0), 7)


def test_probabilities_and_times_in_range(dirichlet4, gs4):
    env = Environment(dirichlet4, 3)
    c = truncated_tree_chain(env, gs4, 3, is_target=lambda v: v.word[-1] == 0)
    for i in c.interior[:20]:
        assert 0 <= exact_hitting_probability(c, int(i)) <= 1
        assert exact_expected_hitting_time(c, int(i)) >= 1


def test_enlarging_targets_never_decreases(dirichlet4, gs4):
    env = Environment(dirichlet4, 4)
    base = truncated_tree_chain(env, gs4, 3, is_target=lambda v: v.word[-1] == 0)
    h0 = exact_hitting_probability(base, IDENTITY)
    moved = min(base.taboo)
    bigger = FiniteChain(base.states, base.P, base.targets | {moved}, base.taboo - {moved})
    assert exact_hitting_probability(bigger, IDENTITY) >= h0


def test_simulated_absorption_time_matches(gs3):
    law = dirichlet_law([1, 1, 1], 0.1)
    depth = 3  # 22 states
    for seed in (1, 2, 3):
        env = Environment(law, seed)
        c = truncated_tree_chain(env, gs3, depth)
        exact = exact_expected_hitting_time(c, IDENTITY)
        times = []
        for i in range(3000):
            L = simulate_walk(env, gs3, IDENTITY, 400, 10**6 + 3000 * seed + i).levels
            times.append(int(np.argmax(L == depth)))
        times = np.array(times)
        assert np.all(times > 0)
        assert abs(times.mean() - exact) < 3 * times.std() / np.sqrt(times.size)
