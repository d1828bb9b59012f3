import numpy as np
import pytest
from scipy import stats as sps

from rwre import _kernels as K
from rwre.environment import (Environment, build_law, derive_seed, dirichlet_law, elliptic_mixture,
                              finite_support_law, uniform_law)
from rwre.errors import EllipticityViolationError, InfeasibleEllipticityError, InvalidParameterError
from rwre.group_tree import IDENTITY, GeneratorSet, Vertex


def random_keys(n, seed=1):
    return np.random.default_rng(seed).integers(0, 2**64, n, dtype=np.uint64)


def test_law_construction_examples():
    law = build_law({"kind": "dirichlet_mixture", "epsilon": 0.1, "alpha": [1, 1, 1, 1]})
    assert law.d == 4
    with pytest.raises(InfeasibleEllipticityError):
        dirichlet_law([1, 1, 1, 1], 0.25)
    point = finite_support_law([[0.4, 0.3, 0.2, 0.1]], 0.1)
    assert point.d == 4


def test_law_errors():
    with pytest.raises(InvalidParameterError):
        dirichlet_law([1, 0, 1, 1], 0.1)
    with pytest.raises(EllipticityViolationError):
        finite_support_law([[0.55, 0.3, 0.1, 0.05]], 0.1)
    with pytest.raises(InvalidParameterError):
        finite_support_law([[0.25] * 4, [0.4, 0.3, 0.2, 0.1]], 0.1, weights=[0.5, 0.4])
    with pytest.raises(InvalidParameterError):
        build_law({"kind": "dirichlet_mixture", "epsilon": 0.1, "alpha": [1, 1, 1]}, d=4)
    with pytest.raises(InvalidParameterError):
        build_law({"kind": "nope", "epsilon": 0.1})


def test_point_mass_is_constant():
    law = finite_support_law([[0.4, 0.3, 0.2, 0.1]], 0.1)
    env = Environment(law, 99)
    gs = GeneratorSet(2, 0)
    for x in gs.ball(3):
        assert np.array_equal(env.transition_at(x), [0.4, 0.3, 0.2, 0.1])
    env = Environment(uniform_law(4), 5)
    assert np.array_equal(env.transition_at(Vertex((0, 2))), [0.25] * 4)


def test_mixture_formula():
    assert np.allclose(elliptic_mixture([1, 0, 0, 0], 0.1), [0.7, 0.1, 0.1, 0.1], atol=1e-15)


def test_determinism_and_distinct_streams(dirichlet4):
    x = Vertex((3, 0, 0, 2))
    a = Environment(dirichlet4, 2024).transition_at(x)
    b = Environment(dirichlet4, 2024).transition_at(x)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, Environment(dirichlet4, 2025).transition_at(x))
    assert not np.array_equal(a, Environment(dirichlet4, 2024).transition_at(Vertex((3, 0, 0))))


def test_sums_to_one_and_elliptic_on_a_million_vectors(dirichlet4):
    p = dirichlet4.sample(random_keys(10**6))
    assert p.min() >= 0.1
    assert np.max(np.abs(p.sum(axis=1) - 1)) <= 1e-12


def test_sparse_alpha_is_still_elliptic():
    law = dirichlet_law([0.05, 0.3, 2.0, 1.0, 0.7], 0.02)
    p = law.sample(random_keys(10**5, 2))
    assert p.min() >= 0.02
    assert np.max(np.abs(p.sum(axis=1) - 1)) <= 1e-12


def test_dirichlet_means(dirichlet4):
    n = 10**5
    p = dirichlet4.sample(random_keys(n, 3))
    D = (p - 0.1) / (1 - 4 * 0.1)
    # Dirichlet(1,1,1,1) coordinates are Beta(1, 3): mean 1/4, variance 3/80
    se = np.sqrt(3 / 80 / n)
    assert np.all(np.abs(D.mean(axis=0) - 0.25) < 3 * se)


@pytest.mark.parametrize("a", [0.3, 1.0, 2.5, 7.0])
def test_gamma_stream_distribution(a):
    g = K.gamma_samples(a, random_keys(20000, 4))
    assert sps.kstest(g, sps.gamma(a).cdf).pvalue > 1e-3


def test_finite_support_weights():
    vecs = [[0.25] * 4, [0.4, 0.3, 0.2, 0.1]]
    law = finite_support_law(vecs, 0.1, weights=[0.3, 0.7])
    p = law.sample(random_keys(10**5, 5))
    frac = np.mean(p[:, 0] == 0.4)
    assert abs(frac - 0.7) < 3 * np.sqrt(0.21 / 10**5)


def test_translation_invariance(dirichlet4):
    gs = GeneratorSet(2, 0)
    y = gs.random_vertex(10, np.random.default_rng(6))
    seeds = [derive_seed(77, i) for i in range(10**4)]
    at_e = np.array([Environment(dirichlet4, s).transition_at(IDENTITY)[0] for s in seeds])
    at_y = np.array([Environment(dirichlet4, s).transition_at(y)[0] for s in seeds])
    assert sps.ks_2samp(at_e, at_y).statistic < 0.05


def test_independence_across_vertices(dirichlet4):
    u, w = Vertex((0,)), Vertex((2, 0))
    seeds = [derive_seed(78, i) for i in range(10**4)]
    a = np.array([Environment(dirichlet4, s).transition_at(u)[0] for s in seeds])
    b = np.array([Environment(dirichlet4, s).transition_at(w)[0] for s in seeds])
    assert abs(np.corrcoef(a, b)[0, 1]) < 3 / np.sqrt(10**4)


def test_derive_seed_is_stable_and_spread():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert len({derive_seed(1, i) for i in range(1000)}) == 1000
    assert derive_seed(1, 0, 5) != derive_seed(1, 1, 5)


def test_environment_rejects_bad_seed(dirichlet4):
    with pytest.raises(InvalidParameterError):
        Environment(dirichlet4, -1)
