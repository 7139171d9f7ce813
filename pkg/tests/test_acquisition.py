import numpy as np
import pytest
from hypothesis import given, strategies as st

from cimbo import gp
from cimbo.acquisition import DEFAULT_BETA, lcb, score_batch
from cimbo.nsga2 import fast_non_dominated_sort


def models(n_models=5, d=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((12, d))
    return [gp.condition(X, rng.standard_normal(12), gp.KernelHyperparams.default(d)) for _ in range(n_models)]


def test_lcb_examples():
    assert lcb(1.0, 0.5, 2.0) == 0.0
    assert lcb(1.3, 0.7, 0.0) == 1.3
    assert lcb(1.3, 0.0, 5.0) == 1.3
    assert DEFAULT_BETA == 2.0


def test_lcb_rejects_negative():
    with pytest.raises(ValueError):
        lcb(0.0, -1.0, 2.0)
    with pytest.raises(ValueError):
        lcb(0.0, 1.0, -0.1)


@given(st.floats(-1e6, 1e6), st.floats(0, 1e3), st.floats(0, 10))
def test_lcb_below_mean(mu, sigma, beta):
    assert lcb(mu, sigma, beta) <= mu


def test_score_shape():
    ms = models()
    assert score_batch(ms, np.full(3, 0.5)).shape == (1, 5)
    with pytest.raises(ValueError):
        score_batch(ms, np.zeros((0, 3)))


def test_matches_manual_composition():
    ms = models()
    X = np.random.default_rng(1).random((20, 3))
    S = score_batch(ms, X, 1.5)
    for i, x in enumerate(X):
        for k, m in enumerate(ms):
            mean, var = gp.predict(m, x)
            assert S[i, k] == pytest.approx(lcb(mean, np.sqrt(var), 1.5), abs=1e-12)


def test_monotone_in_beta():
    ms = models()
    X = np.random.default_rng(2).random((30, 3))
    prev = score_batch(ms, X, 0.0)
    for beta in (0.5, 1.0, 2.0, 4.0):
        cur = score_batch(ms, X, beta)
        assert np.all(cur <= prev)
        prev = cur


@given(st.integers(0, 1000))
def test_front_invariant_to_affine_rescaling(seed):
    rng = np.random.default_rng(seed)
    S = score_batch(models(3, seed=seed % 7), rng.random((40, 3)))
    scale = rng.uniform(0.1, 10, 3)
    shift = rng.uniform(-5, 5, 3)
    assert sorted(fast_non_dominated_sort(S)[0]) == sorted(fast_non_dominated_sort(S * scale + shift)[0])
