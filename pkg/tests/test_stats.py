import numpy as np
import pytest

from rwre.errors import InsufficientBlocksError, InvalidParameterError
from rwre.experiments import run_ensemble
from rwre.regeneration import BlockTable
from rwre.stats import (estimate_sigma2, estimate_speed, estimate_speed_endpoint, kolmogorov_distance, l1_tail_fit,
                        normality_check, survival_function)


def table(Y, Z, types, d=4):
    Y, Z, types = (np.asarray(a, np.int64) for a in (Y, Z, types))
    n = Y.size
    z = np.zeros(n, np.int64)
    return BlockTable(d, Y, Z, types, z, z, z, np.arange(1, n + 1), np.cumsum(Y), np.cumsum(Z))


def synthetic(rng, n=5000):
    Y = 1 + rng.geometric(0.4, n)
    Z = np.maximum(1, (Y * rng.uniform(0.3, 0.7, n)).astype(int))
    return table(Y, Z, rng.integers(0, 4, n))


def test_monotone_blocks():
    b = table(np.ones(200), np.ones(200), np.arange(200) % 4)
    sp = estimate_speed(b)
    assert sp.v_hat == 1.0 and sp.ci95 == 0.0 and sp.excludes_zero
    clt = estimate_sigma2(b, sp.v_hat)
    assert clt.sigma2_hat == 0.0 and clt.Etau_hat == 1.0


def test_minimum_block_counts():
    with pytest.raises(InsufficientBlocksError):
        estimate_speed(table(np.ones(29), np.ones(29), np.zeros(29)))
    with pytest.raises(InsufficientBlocksError):
        estimate_sigma2(table(np.ones(99), np.ones(99), np.zeros(99)), 1.0)
    with pytest.raises(InvalidParameterError):
        estimate_sigma2(table(np.ones(200), np.ones(200), np.zeros(200)), 1.5)


def test_typed_and_untyped_agree(rng):
    b = synthetic(rng)
    v = estimate_speed(b).v_hat
    clt = estimate_sigma2(b, v)
    assert clt.sigma2_hat == pytest.approx(clt.sigma2_untyped, rel=1e-12)
    S = clt.Sigma_hat
    assert np.allclose(S, S.T) and np.linalg.eigvalsh(S).min() > -1e-10


def test_permutation_invariance(rng):
    b = synthetic(rng)
    perm = b.take(rng.permutation(len(b)))
    v1, v2 = estimate_speed(b), estimate_speed(perm)
    assert v1.v_hat == pytest.approx(v2.v_hat, rel=1e-14) and v1.ci95 == pytest.approx(v2.ci95, rel=1e-10)
    s1, s2 = estimate_sigma2(b, v1.v_hat), estimate_sigma2(perm, v1.v_hat)
    assert s1.sigma2_hat == pytest.approx(s2.sigma2_hat, rel=1e-10)


def test_uniform_speed_and_variance(uniform4, gs4):
    ens = run_ensemble(uniform4, gs4, 41, 40, 50000)
    sp, ep = ens.speed(), ens.speed_endpoint()
    assert abs(sp.v_hat - 0.5) < sp.ci95 * 1.5
    assert abs(sp.v_hat - ep.v_hat) < 2 * max(sp.ci95, ep.ci95)
    clt = ens.sigma2(sp.v_hat)
    assert abs(clt.sigma2_hat - 0.75) < 3 * clt.sigma2_se


def test_uniform_d3_speed(gs3):
    from rwre.environment import uniform_law
    ens = run_ensemble(uniform_law(3), gs3, 42, 20, 50000)
    sp = ens.speed()
    assert abs(sp.v_hat - 1 / 3) < 0.01


def test_endpoint_estimator():
    sp = estimate_speed_endpoint([50, 50, 50], 100)
    assert sp.v_hat == 0.5 and sp.ci95 == 0.0 and sp.method == "endpoint"


def test_point_mass_distance():
    assert kolmogorov_distance(np.zeros(1000)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        kolmogorov_distance(np.zeros(10), 0.0, 0.0)


def test_normal_null_pass_rate():
    rng = np.random.default_rng(7)
    passes = sum(normality_check(rng.standard_normal(10**4), 0, 1).passed for _ in range(300))
    assert passes / 300 >= 0.94


def test_shifted_alternative_fails(rng):
    res = normality_check(rng.normal(1.0, 1.0, 10**4), 0, 1)
    assert not res.passed and res.distance > 0.3


def test_normality_slack_and_minimum(rng):
    x = rng.standard_normal(400)
    a, b = normality_check(x, 0, 1), normality_check(x, 0, 1, estimated=True)
    assert b.threshold == pytest.approx(1.2 * a.threshold)
    assert a.threshold == pytest.approx(1.36 / 20)
    with pytest.raises(InvalidParameterError):
        normality_check(x[:99], 0, 1)


def test_geometric_calibration():
    rng = np.random.default_rng(8)
    for gamma in (0.5, 0.8):
        fit = l1_tail_fit(rng.geometric(1 - gamma, 10**4))
        assert abs(fit.gamma_hat - gamma) <= 0.05
        assert fit.negative_at(3.0)


def test_stride():
    x = np.random.default_rng(9).geometric(0.3, 10**4)
    fit = l1_tail_fit(x, stride=2)
    assert fit.gamma_hat == pytest.approx(0.7**2, abs=0.05)


def test_degenerate_tail():
    fit = l1_tail_fit(np.ones(1000, int))
    assert fit.degenerate and np.isnan(fit.slope) and not fit.negative_at()
    with pytest.raises(InvalidParameterError):
        l1_tail_fit(np.ones(999, int))


def test_survival_function():
    grid, surv = survival_function(np.array([1, 1, 2, 3]))
    assert grid.tolist() == [1, 2, 3] and surv.tolist() == [1.0, 0.5, 0.25]
