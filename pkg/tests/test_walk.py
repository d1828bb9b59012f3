import numpy as np
import pytest
from scipy import integrate, stats as sps

from rwre import _kernels as K
from rwre.environment import Environment, dirichlet_law, finite_support_law
from rwre.errors import InvalidParameterError
from rwre.experiments import run_ensemble
from rwre.group_tree import IDENTITY, GeneratorSet, Vertex
from rwre.oracle import exact_hitting_probability, path_chain
from rwre.walk import (BEYOND_HORIZON, HIT_FAR_END, RETURN_TO_START, PathEnvironment, Trajectory, draw_categorical,
                       draw_exponential_race, hitting_and_return_times, path_environment, simulate_restricted_walk,
                       simulate_walk, step_categorical, step_exponential_race, walk_rng)

from conftest import binomial_ok

A, B = 0, 2  # a1 and a2 in GeneratorSet(2, 0)


def test_categorical_frequencies_uniform(rng):
    draws = draw_categorical([0.25] * 4, 10**5, rng)
    counts = np.bincount(draws, minlength=4)
    assert all(binomial_ok(c, 10**5, 0.25) for c in counts)


def test_categorical_concentrated(rng):
    eps = 0.01
    p = [1 - 3 * eps, eps, eps, eps]
    draws = draw_categorical(p, 10**5, rng)
    assert binomial_ok(np.sum(draws == 0), 10**5, p[0])


def test_race_matches_categorical_chi_square(rng):
    p = np.array([0.4, 0.3, 0.2, 0.1])
    counts = np.bincount(draw_exponential_race(p, 10**5, rng), minlength=4)
    assert sps.chisquare(counts, p * 10**5).statistic < 16.27


def test_race_probabilities_by_quadrature_d3():
    p = np.array([0.5, 0.3, 0.2])
    for s in range(3):
        # density of h_s / p_s at t times survival of the others
        f = lambda t: p[s] * np.exp(-p.sum() * t)
        assert integrate.quad(f, 0, np.inf)[0] == pytest.approx(p[s], abs=1e-10)
    h = np.random.default_rng(3).standard_exponential((10**5, 3))
    wins = np.bincount([K.choose_race(p, row) for row in h[:20000]], minlength=3)
    assert sps.chisquare(wins, p * 20000).pvalue > 1e-3


def test_race_degenerate_and_ties():
    p = np.array([1 - 3e-9, 1e-9, 1e-9, 1e-9])
    h = np.random.default_rng(0).standard_exponential((1000, 4))
    assert all(K.choose_race(p, row) == 0 for row in h)
    assert K.choose_race(np.array([0.5, 0.5]), np.array([1.0, 1.0])) == 0


def test_step_replay(dirichlet4, gs4):
    env = Environment(dirichlet4, 11)
    x = Vertex((A, B))
    for step in (step_categorical, step_exponential_race):
        assert step(env, gs4, x, walk_rng(5)) == step(env, gs4, x, walk_rng(5))


def test_zero_steps(dirichlet4, gs4):
    t = simulate_walk(Environment(dirichlet4, 1), gs4, IDENTITY, 0, 9)
    assert list(t.vertices()) == [IDENTITY]
    assert t.levels.tolist() == [0]


@pytest.mark.parametrize("sampler", ["categorical", "exponential_race"])
def test_trajectory_invariants_and_replay(dirichlet4, gs4, sampler):
    env = Environment(dirichlet4, 3)
    start = Vertex((B, B))
    t1 = simulate_walk(env, gs4, start, 5000, 8, sampler)
    t2 = simulate_walk(env, gs4, start, 5000, 8, sampler)
    assert np.array_equal(t1.steps, t2.steps)
    assert t1.levels[0] == 2
    assert np.all(np.abs(np.diff(t1.levels)) == 1)
    verts = list(t1.vertices())
    assert all(gs4.multiply(y, gs4.inverse(x)).level == 1 for x, y in zip(verts[:50], verts[1:51]))
    assert [v.level for v in verts] == t1.levels.tolist()


def test_longer_horizon_extends_prefix(dirichlet4, gs4):
    env = Environment(dirichlet4, 3)
    short = simulate_walk(env, gs4, IDENTITY, 1000, 4)
    long = simulate_walk(env, gs4, IDENTITY, 3000, 4)
    assert np.array_equal(short.steps, long.steps[:1000])


def test_kernel_walk_matches_python_steps(dirichlet4, gs4):
    env = Environment(dirichlet4, 21)
    traj = simulate_walk(env, gs4, IDENTITY, 300, 22)
    u = walk_rng(22).random(300)
    x = IDENTITY
    for n in range(300):
        s = K.choose_categorical(env.transition_at(x), u[n])
        assert s == traj.steps[n]
        x = gs4.left_multiply(int(s), x)


def test_uniform_up_step_frequency(uniform4, gs4):
    traj = simulate_walk(Environment(uniform4, 0), gs4, IDENTITY, 10**5, 1)
    L = traj.levels
    at_pos = L[:-1] >= 1
    ups = np.sum(np.diff(L)[at_pos] == 1)
    assert binomial_ok(ups, int(at_pos.sum()), 0.75)


def test_quenched_markov_property(dirichlet4, gs4):
    env = Environment(dirichlet4, 31)
    n = 20000
    first = np.array([simulate_walk(env, gs4, IDENTITY, 2, 1000 + i).steps for i in range(n)])
    p0 = env.transition_at(IDENTITY)
    for s in range(4):
        assert binomial_ok(np.sum(first[:, 0] == s), n, p0[s])
    sel = first[first[:, 0] == 1]
    p1 = env.transition_at(Vertex((1,)))
    for s in range(4):
        assert binomial_ok(np.sum(sel[:, 1] == s), len(sel), p1[s])


def test_transience_proxy(gs4):
    law = dirichlet_law([1, 1, 1, 1], 0.1)
    ens = run_ensemble(law, gs4, 5, 1000, 10**4, keep_trajectories=True)
    late = sum(bool(np.any(r.trajectory.tree.nodes[1000:] == 0)) for r in ens.results)
    assert late / 1000 < 0.01


def test_restricted_walk_length_one():
    path = PathEnvironment(np.zeros(0), np.zeros(0))
    rng = np.random.default_rng(0)
    assert all(simulate_restricted_walk(path, rng)[0] == HIT_FAR_END for _ in range(100))


def test_restricted_walk_symmetric_ruin():
    n, reps = 5, 20000
    path = PathEnvironment(np.full(n - 1, 0.3), np.full(n - 1, 0.3))
    rng = np.random.default_rng(1)
    hits = sum(simulate_restricted_walk(path, rng)[0] == HIT_FAR_END for _ in range(reps))
    assert binomial_ok(hits, reps, 1 / n)


def test_restricted_walk_matches_oracle(dirichlet4, gs4):
    rng = np.random.default_rng(2)
    reps = 4000
    for i in range(5):
        env = Environment(dirichlet4, 100 + i)
        y = gs4.random_vertex(4, rng)
        path = path_environment(env, gs4, [Vertex(y.word[j:]) for j in range(4, -1, -1)])
        exact = exact_hitting_probability(path_chain(path), 1)
        hits = sum(simulate_restricted_walk(path, rng)[0] == HIT_FAR_END for _ in range(reps))
        # escape from x_0: the first step to x_1 is forced
        assert binomial_ok(hits, reps, exact)


def test_restricted_walk_visits_and_stop_sets():
    path = PathEnvironment(np.full(3, 0.5), np.full(3, 0.5))
    rng = np.random.default_rng(4)
    outcome, visits = simulate_restricted_walk(path, rng, stop=(HIT_FAR_END,))
    assert outcome == HIT_FAR_END and visits[-1] == 1 and visits[0] >= 1
    outcome, visits = simulate_restricted_walk(path, rng, stop=(RETURN_TO_START,))
    assert outcome == RETURN_TO_START and visits[0] == 2
    with pytest.raises(InvalidParameterError):
        simulate_restricted_walk(path, rng, stop=())


def test_path_environment_agrees_with_tree(dirichlet4, gs4):
    env = Environment(dirichlet4, 8)
    verts = [IDENTITY, Vertex((A,)), Vertex((B, A)), Vertex((B, B, A))]
    path = path_environment(env, gs4, verts)
    assert path.back[0] == env.transition_at(verts[1])[1]  # a1^-1 leads back to e
    assert path.forward[0] == env.transition_at(verts[1])[B]
    assert path.forward[1] == env.transition_at(verts[2])[B]
    assert np.all(path.back >= 0.1) and np.all(path.forward >= 0.1)


def test_hitting_times_monotone(gs4):
    traj = Trajectory.from_steps(gs4, [A] * 10)
    ht = hitting_and_return_times(traj)
    assert [ht.T_level(n) for n in range(11)] == list(range(11))
    assert ht.R is BEYOND_HORIZON
    assert all(ht.R_y(Vertex((A,) * m)) is BEYOND_HORIZON for m in range(11))
    assert ht.T(Vertex((B,))) is BEYOND_HORIZON
    assert not BEYOND_HORIZON


def test_hitting_times_examples(gs4):
    a, aa = Vertex((A,)), Vertex((A, A))
    ht = hitting_and_return_times(Trajectory.from_vertices(gs4, [IDENTITY, a, IDENTITY]))
    assert ht.R == 2
    assert ht.R_y(a) is BEYOND_HORIZON
    assert ht.R_y(IDENTITY) == 2
    ht = hitting_and_return_times(Trajectory.from_vertices(gs4, [IDENTITY, a, aa, a]))
    assert ht.R_y(a) == 3
    assert ht.T(aa) == 2
    # arrival from the parent side counts only without the subtree restriction
    ht = hitting_and_return_times(Trajectory.from_vertices(gs4, [IDENTITY, a, IDENTITY, a]))
    assert ht.R_y(a) is BEYOND_HORIZON
    assert ht.R_y(a, from_subtree=False) == 3


def test_level_hitting_times_increase(dirichlet4, gs4):
    traj = simulate_walk(Environment(dirichlet4, 4), gs4, IDENTITY, 3000, 5)
    ht = hitting_and_return_times(traj)
    T = [ht.T_level(n) for n in range(int(traj.levels.max()) + 1)]
    assert all(b > a for a, b in zip(T, T[1:]))
