"""Null model fit, per-feature statistics, and set spectra."""

import warnings

import numpy as np
import pytest
from scipy.optimize import minimize

import ctgt
from ctgt import (Dataset, RankDeficientError, SeparationWarning,
                  feature_stats, fit_null, spectrum)

from conftest import active_universe, make_instance


def _dataset(seed=11, n=60, p_extra=2, m=4):
    rng = np.random.default_rng(seed)
    Z = np.column_stack([np.ones(n), rng.standard_normal((n, p_extra))])
    beta = rng.uniform(-0.8, 0.8, size=Z.shape[1])
    prob = 1.0 / (1.0 + np.exp(-(Z @ beta)))
    y = (rng.uniform(size=n) < prob).astype(float)
    if y.min() == y.max():
        y[0] = 1.0 - y[0]
    X = rng.standard_normal((n, m))
    return Dataset(y=y, Z=Z, X=X,
                   feature_names=tuple(f"x{j}" for j in range(m)),
                   sample_ids=tuple(f"s{i + 1}" for i in range(n)))


def test_irls_matches_direct_likelihood_optimization():
    data = _dataset(seed=11)
    null = fit_null(data)

    def nll(beta):
        eta = data.Z @ beta
        return np.sum(np.log1p(np.exp(eta)) - data.y * eta)

    res = minimize(nll, np.zeros(data.Z.shape[1]), method="BFGS",
                   options={"gtol": 1e-10})
    mu_ref = 1.0 / (1.0 + np.exp(-(data.Z @ res.x)))
    assert np.abs(null.mu_hat - mu_ref).max() < 1e-6


def test_intercept_only_fit_is_the_class_rate():
    data = _dataset(seed=3, p_extra=0)
    null = fit_null(data)
    assert null.mu_hat == pytest.approx(np.full_like(null.mu_hat,
                                                     data.y.mean()), abs=1e-9)
    assert null.sigma_diag == pytest.approx(null.mu_hat * (1 - null.mu_hat))


def test_residual_identity():
    data = _dataset(seed=5)
    null = fit_null(data)
    # resid is the response with the covariate projection removed:
    # projecting it again changes nothing, and adding the projected part
    # back recovers y
    again = null.residualize(null.resid[:, None])[:, 0]
    assert np.abs(null.resid - again).max() < 1e-10
    hat_y = data.y - null.resid
    assert np.abs(null.residualize(hat_y[:, None])).max() < 1e-10
    # orthogonal to every covariate column
    assert np.abs(data.Z.T @ null.resid).max() < 1e-8


def test_intercept_only_residual_is_centering():
    rng = np.random.default_rng(55)
    n = 12
    y = np.array([0, 1] * 6, dtype=float)
    data = Dataset(y=y, Z=np.ones((n, 1)), X=rng.standard_normal((n, 2)),
                   feature_names=("a", "b"),
                   sample_ids=tuple(f"s{i + 1}" for i in range(n)))
    null = fit_null(data)
    assert null.resid == pytest.approx(y - 0.5, abs=1e-10)


def test_rank_deficient_covariates_rejected():
    data = _dataset(seed=9)
    Z_bad = np.column_stack([data.Z, data.Z[:, -1]])
    bad = Dataset(y=data.y, Z=Z_bad, X=data.X,
                  feature_names=data.feature_names, sample_ids=data.sample_ids)
    with pytest.raises(RankDeficientError):
        fit_null(bad)


def test_separated_response_warns_but_fits():
    rng = np.random.default_rng(21)
    n = 40
    zcol = np.concatenate([np.full(20, -2.0), np.full(20, 2.0)])
    Z = np.column_stack([np.ones(n), zcol])
    y = (zcol > 0).astype(float)       # perfectly separated
    X = rng.standard_normal((n, 3))
    data = Dataset(y=y, Z=Z, X=X, feature_names=("a", "b", "c"),
                   sample_ids=tuple(f"s{i + 1}" for i in range(n)))
    with pytest.warns(SeparationWarning):
        null = fit_null(data)
    assert np.all(null.mu_hat >= 1e-6)
    assert np.all(null.mu_hat <= 1 - 1e-6)


def test_dataset_validation():
    rng = np.random.default_rng(1)
    n = 10
    ids = tuple(f"s{i}" for i in range(n))
    ones = np.ones((n, 1))
    X = rng.standard_normal((n, 2))
    y = np.array([0, 1] * 5, dtype=float)
    with pytest.raises(ValueError):
        Dataset(y=np.zeros(n), Z=ones, X=X, feature_names=("a", "b"),
                sample_ids=ids)                       # one-class response
    with pytest.raises(ValueError):
        Dataset(y=y, Z=rng.standard_normal((n, 1)), X=X,
                feature_names=("a", "b"), sample_ids=ids)   # no intercept
    with pytest.raises(ValueError):
        Dataset(y=y, Z=ones, X=X, feature_names=("a", "a"),
                sample_ids=ids)                       # duplicate names
    with pytest.raises(ValueError):
        Dataset(y=y, Z=ones, X=X[:, :1], feature_names=("a", "b"),
                sample_ids=ids)                       # shape mismatch


def test_statistic_additivity_against_full_quadratic_form():
    # set statistic recomputed from the explicit hat-matrix quadratic form
    data, null, stats, provider = make_instance(seed=13, n=40, m=6,
                                                effect=1.0, confounders=2)
    Z = data.Z
    H = Z @ np.linalg.solve(Z.T @ Z, Z.T)
    resid_full = (np.eye(data.n_samples) - H) @ data.y
    for R in [(0,), (1, 3), (0, 2, 4, 5), tuple(range(6))]:
        XR = data.X[:, list(R)]
        direct = float(resid_full @ XR @ XR.T @ resid_full)
        additive = float(stats.g[list(R)].sum())
        assert additive == pytest.approx(direct, rel=1e-9)


def test_weights_match_spectrum_traces():
    data, null, stats, provider = make_instance(seed=17, n=35, m=7)
    for R in [(0,), (2, 5), tuple(range(7))]:
        spec = provider.spectrum(R)
        assert spec.lambdas.sum() == pytest.approx(
            stats.w[list(R)].sum(), rel=1e-9)
        assert spec.level == pytest.approx(stats.w[list(R)].sum(), rel=1e-9)


def test_singleton_spectrum_is_the_weight():
    data, null, stats, provider = make_instance(seed=19, n=30, m=5)
    for j in active_universe(stats):
        spec = provider.spectrum((j,))
        assert spec.lambdas.size == 1
        assert spec.lambdas[0] == pytest.approx(stats.w[j], rel=1e-9)


def test_spectrum_psd_and_interlacing_bound():
    data, null, stats, provider = make_instance(seed=23, n=25, m=10)
    full = provider.spectrum(tuple(range(10)))
    assert np.all(full.lambdas > 0)
    assert np.all(np.diff(full.lambdas) <= 1e-12)     # sorted descending
    sub = provider.spectrum((0, 1, 2))
    # largest eigenvalue of a principal submatrix never exceeds the full one
    assert sub.lambdas[0] <= full.lambdas[0] + 1e-10


def test_constant_feature_is_inactive():
    rng = np.random.default_rng(29)
    n = 30
    X = rng.standard_normal((n, 4))
    X[:, 2] = 3.14                      # constant column
    y = (rng.uniform(size=n) < 0.5).astype(float)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    data = Dataset(y=y, Z=np.ones((n, 1)), X=X,
                   feature_names=("a", "b", "c", "d"),
                   sample_ids=tuple(f"s{i + 1}" for i in range(n)))
    null = fit_null(data)
    stats = feature_stats(data, null)
    assert not stats.active[2]
    assert stats.active[[0, 1, 3]].all()
    assert np.isnan(stats.q[2])


def test_label_swap_keeps_decisions():
    data, null, stats, provider = make_instance(seed=31, n=40, m=6, effect=1.0)
    flipped = Dataset(y=1.0 - data.y, Z=data.Z, X=data.X,
                      feature_names=data.feature_names,
                      sample_ids=data.sample_ids)
    null2 = fit_null(flipped)
    stats2 = feature_stats(flipped, null2)
    provider2 = ctgt.SpectrumProvider(flipped, null2)
    # mu flips, sigma and hence weights are invariant; g is quadratic in
    # the flipped residual so it is invariant too
    assert np.abs(stats.w - stats2.w).max() < 1e-8
    assert np.abs(stats.g - stats2.g).max() < 1e-8
    F = active_universe(stats)
    r1 = ctgt.iterative_shortcut(stats, provider, (0, 1), F, 0.05)
    r2 = ctgt.iterative_shortcut(stats2, provider2, (0, 1), F, 0.05)
    assert r1.decision == r2.decision


def test_fit_is_deterministic():
    a = fit_null(_dataset(seed=37))
    b = fit_null(_dataset(seed=37))
    assert np.array_equal(a.mu_hat, b.mu_hat)
    assert np.array_equal(a.resid, b.resid)


def test_provider_caches_and_validates():
    data, null, stats, provider = make_instance(seed=41, n=30, m=5)
    s1 = provider.spectrum((1, 2))
    s2 = provider.spectrum((2, 1))            # order-insensitive key
    assert s1 is s2
    d1 = provider.dist((1, 2))
    assert d1 is provider.dist((1, 2))
    with pytest.raises(ValueError):
        provider.spectrum(())
    with pytest.raises(ValueError):
        provider.spectrum((0, 99))


def test_spectrum_function_matches_provider():
    data, null, stats, provider = make_instance(seed=43, n=30, m=5)
    direct = spectrum(data, null, (0, 3))
    cached = provider.spectrum((0, 3))
    assert direct.lambdas == pytest.approx(cached.lambdas, rel=1e-12)
