import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emkm import em, linalg
from emkm.model import (
    ClusterParams,
    FitConfig,
    MixtureState,
    as_dataset,
    global_covariance,
    select_initial_rows,
)
from conftest import blobs, random_spd

mpmath.mp.dps = 40


def mp_log_pdf(x, mean, cov):
    """Gaussian log density in extended precision, explicit inverse and det."""
    d = len(x)
    S = mpmath.matrix([[mpmath.mpf(float(v)) for v in row] for row in cov])
    diff = mpmath.matrix([mpmath.mpf(float(a)) - mpmath.mpf(float(b)) for a, b in zip(x, mean)])
    quad = (diff.T * S ** -1 * diff)[0]
    return -mpmath.mpf(d) / 2 * mpmath.log(2 * mpmath.pi) - mpmath.log(mpmath.det(S)) / 2 - quad / 2


def mp_responsibilities(data, state):
    out = []
    for x in data:
        terms = [mpmath.mpf(float(w)) * mpmath.exp(mp_log_pdf(x, m, c))
                 for m, c, w in zip(state.means, state.covariances, state.weights)]
        total = mpmath.fsum(terms)
        out.append([t / total for t in terms])
    return out


def random_state(rng, k, d, scale=1.0):
    covs = np.stack([random_spd(rng, d) for _ in range(k)]) * scale
    w = rng.random(k) + 0.2
    return MixtureState.build(rng.standard_normal((k, d)) * 2, covs, w / w.sum())


def test_log_pdf_standard_cases():
    p = ClusterParams(np.zeros(1), np.eye(1), 1.0)
    assert em.log_gaussian_pdf([0.0], p) == pytest.approx(-0.9189385332, abs=1e-10)
    assert em.log_gaussian_pdf([1.0], p) == pytest.approx(-1.4189385332, abs=1e-10)
    p2 = ClusterParams(np.array([3.0, -1.0]), np.eye(2), 1.0)
    assert em.log_gaussian_pdf([3.0, -1.0], p2) == pytest.approx(-math.log(2 * math.pi), rel=1e-14)


def test_log_pdf_matches_extended_precision(rng):
    cov = random_spd(rng, 4)
    mean = rng.standard_normal(4)
    x = rng.standard_normal(4) * 3
    got = em.log_gaussian_pdf(x, ClusterParams(mean, cov, 1.0))
    assert got == pytest.approx(float(mp_log_pdf(x, mean, cov)), abs=1e-11)


def test_mixture_density_single_component(rng):
    state = random_state(rng, 1, 3)
    x = rng.standard_normal(3)
    expect = em.log_gaussian_pdf(x, state.clusters[0])
    assert em.mixture_log_density(x, state) == pytest.approx(expect, abs=1e-12)


def test_mixture_density_identical_halves(rng):
    cov = random_spd(rng, 2)
    mean = rng.standard_normal(2)
    state = MixtureState.build([mean, mean], [cov, cov], [0.5, 0.5])
    x = rng.standard_normal(2)
    assert em.mixture_log_density(x, state) == pytest.approx(
        em.log_gaussian_pdf(x, ClusterParams(mean, cov, 1.0)), abs=1e-12)


def test_mixture_density_matches_direct_sum(rng):
    state = random_state(rng, 3, 3)
    for x in rng.standard_normal((5, 3)) * 2:
        direct = mpmath.log(mpmath.fsum(
            mpmath.mpf(float(w)) * mpmath.exp(mp_log_pdf(x, m, c))
            for m, c, w in zip(state.means, state.covariances, state.weights)))
        assert em.mixture_log_density(x, state) == pytest.approx(float(direct), abs=1e-11)


def test_mixture_density_finite_far_away(rng):
    state = random_state(rng, 3, 16)
    assert np.isfinite(em.mixture_log_density(np.full(16, 1e4), state))


def test_responsibilities_identical_clusters(rng):
    cov = random_spd(rng, 2)
    state = MixtureState.build([[1.0, 1.0]] * 2, [cov, cov], [0.5, 0.5])
    resp, assign, _ = em.responsibilities(rng.standard_normal((10, 2)), state)
    np.testing.assert_allclose(resp, 0.5, rtol=0, atol=1e-15)
    assert np.all(assign.labels == 0)


def test_responsibilities_k1(rng):
    state = random_state(rng, 1, 2)
    resp, _, _ = em.responsibilities(rng.standard_normal((10, 2)), state)
    np.testing.assert_allclose(resp, 1.0, rtol=0, atol=1e-15)


def test_responsibilities_oracle(rng):
    data = rng.standard_normal((20, 2)) * 2
    state = random_state(rng, 3, 2)
    resp, assign, _ = em.responsibilities(data, state)
    oracle = np.array(mp_responsibilities(data, state), dtype=float)
    np.testing.assert_allclose(resp, oracle, rtol=0, atol=1e-9)
    np.testing.assert_array_equal(assign.labels, oracle.argmax(1))


def test_responsibilities_match_naive_ratio(rng):
    # straightforward double-precision evaluation of the ratio where nothing underflows
    data = rng.standard_normal((40, 3))
    state = random_state(rng, 4, 3)
    dens = np.empty((40, 4))
    for j in range(4):
        inv = np.linalg.inv(state.covariances[j])
        diff = data - state.means[j]
        q = np.einsum("ni,ij,nj->n", diff, inv, diff)
        dens[:, j] = state.weights[j] * np.exp(-0.5 * q) / np.sqrt(
            (2 * np.pi) ** 3 * np.linalg.det(state.covariances[j]))
    naive = dens / dens.sum(1, keepdims=True)
    resp, _, _ = em.responsibilities(data, state)
    np.testing.assert_allclose(resp, naive, rtol=0, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_responsibility_rows_normalized(k, d, seed):
    rng = np.random.default_rng(seed)
    state = random_state(rng, k, d, scale=rng.uniform(0.01, 100))
    resp, assign, _ = em.responsibilities(rng.standard_normal((25, d)) * 5, state)
    assert np.all(resp >= 0) and np.all(resp <= 1)
    np.testing.assert_allclose(resp.sum(1), 1.0, rtol=0, atol=1e-12)
    assert np.all(assign.labels < k)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-50, 50))
def test_hard_labels_invariant_under_monotone_rescaling(seed, scale, shift):
    rng = np.random.default_rng(seed)
    state = random_state(rng, 4, 3)
    data = rng.standard_normal((30, 3)) * 3
    joint = em.weighted_log_pdfs(data, state)
    _, assign, _ = em.responsibilities(data, state)
    np.testing.assert_array_equal(np.argmax(scale * joint + shift, axis=1), assign.labels)


def brute_m_step(data, resp, prior_means):
    n, d = data.shape
    k = resp.shape[1]
    means, covs, weights = [], [], []
    for j in range(k):
        s = sum(resp[i][j] for i in range(n))
        mu = [sum(resp[i][j] * data[i][a] for i in range(n)) / s for a in range(d)]
        c = [[sum(resp[i][j] * (data[i][a] - prior_means[j][a]) * (data[i][b] - prior_means[j][b])
                  for i in range(n)) / s for b in range(d)] for a in range(d)]
        means.append(mu)
        covs.append(c)
        weights.append(s / n)
    return np.array(means), np.array(covs), np.array(weights)


def test_m_step_matches_brute_force(rng):
    data = rng.standard_normal((10, 2)) * 3
    raw = rng.random((10, 2))
    resp = raw / raw.sum(1, keepdims=True)
    state = random_state(rng, 2, 2)
    new = em.m_step(data, resp, state)
    means, covs, weights = brute_m_step(data, resp, state.means)
    np.testing.assert_allclose(new.means, means, rtol=1e-10)
    for j in range(2):
        np.testing.assert_allclose(new.covariances[j], linalg.regularize(covs[j]), rtol=1e-10)
    np.testing.assert_allclose(new.weights, weights, rtol=1e-10)
    assert new.t == state.t + 1


def test_m_step_updated_mean_variant(rng):
    data = rng.standard_normal((10, 2))
    raw = rng.random((10, 2))
    resp = raw / raw.sum(1, keepdims=True)
    state = random_state(rng, 2, 2)
    new = em.m_step(data, resp, state, covariance_mean="updated")
    means, covs, _ = brute_m_step(data, resp, em.m_step(data, resp, state).means)
    np.testing.assert_allclose(new.covariances, [linalg.regularize(c) for c in covs], rtol=1e-10)


def test_m_step_hard_responsibilities(rng):
    data = rng.standard_normal((12, 3))
    labels = np.array([0, 1, 2] * 4)
    resp = np.eye(3)[labels]
    new = em.m_step(data, resp, random_state(rng, 3, 3))
    for j in range(3):
        np.testing.assert_allclose(new.means[j], data[labels == j].mean(0), rtol=1e-12)
    np.testing.assert_allclose(new.weights, [4 / 12] * 3, rtol=1e-15)


def test_m_step_uniform_responsibilities(rng):
    data = rng.standard_normal((15, 2))
    resp = np.full((15, 3), 1 / 3)
    new = em.m_step(data, resp, random_state(rng, 3, 2))
    np.testing.assert_allclose(new.weights, 1 / 3, rtol=1e-14)
    for j in range(3):
        np.testing.assert_allclose(new.means[j], data.mean(0), rtol=1e-12, atol=1e-14)


def test_m_step_degenerate_cluster_repair(rng):
    data = rng.standard_normal((30, 2))
    data[7] = [40.0, 40.0]  # the least likely point
    state = random_state(rng, 3, 2)
    resp = np.zeros((30, 3))
    resp[:, 0] = 0.6
    resp[:, 1] = 0.4
    new = em.m_step(as_dataset(data), resp, state)
    np.testing.assert_array_equal(new.means[2], [40.0, 40.0])
    np.testing.assert_array_equal(new.covariances[2], linalg.regularize(global_covariance(data)))
    assert new.weights.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(new.weights, np.array([0.6, 0.4, 1 / 3]) / (1 + 1 / 3))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_m_step_weights_and_factorizable(k, d, seed):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((max(k, 3), d))
    raw = rng.random((data.shape[0], k)) ** 4
    resp = raw / raw.sum(1, keepdims=True)
    new = em.m_step(data, resp, random_state(rng, k, d))
    assert abs(new.weights.sum() - 1) <= 1e-12
    assert np.all((new.weights >= 0) & (new.weights <= 1))
    for c in new.covariances:
        linalg.cholesky(c)


def _straddling_seed(x, truth, k):
    """First seed whose initial rows hit every true blob once."""
    for seed in range(100):
        rows = select_initial_rows(x.shape[0], k, np.random.default_rng(seed))
        if len(set(truth[rows])) == k:
            return seed
    raise AssertionError("no straddling seed")


def test_em_two_blobs(rng):
    # sigma = 1; 5000 points per blob puts the sample-mean error near 0.014
    x, truth = blobs(rng, [[0, 0], [12, 0]], 5000)
    seed = _straddling_seed(x, truth, 2)
    res = em.em_run(as_dataset(x), 2, np.random.default_rng(seed))
    assert res.converged
    # labels settle on the blobs; the run stops there (zero reassignments)
    # while the soft mixture means are still drifting outward
    agree = np.mean(res.labels == truth)
    assert max(agree, 1 - agree) == 1.0
    centroids = np.array([x[res.labels == j].mean(0) for j in range(2)])
    order = np.argsort(centroids[:, 0])
    np.testing.assert_allclose(centroids[order], [[0, 0], [12, 0]], atol=0.1)
    np.testing.assert_allclose(res.state.means[np.argsort(res.state.means[:, 0])],
                               [[0, 0], [12, 0]], atol=1.5)


def test_em_k1_recovers_global_moments(rng):
    x = as_dataset(rng.standard_normal((200, 3)) @ np.diag([1.0, 2.0, 0.5]))
    res = em.em_run(x, 1, np.random.default_rng(0))
    assert res.converged and res.iterations == 2
    assert res.psi_history == [200, 0]
    np.testing.assert_allclose(res.state.means[0], x.mean(0), rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(res.state.covariances[0], linalg.regularize(global_covariance(x)),
                               rtol=1e-12)


def test_em_deterministic(rng):
    x = as_dataset(rng.standard_normal((300, 3)) * 4)
    a = em.em_run(x, 4, np.random.default_rng(9))
    b = em.em_run(x, 4, np.random.default_rng(9))
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_array_equal(a.state.covariances, b.state.covariances)
    assert a.iterations == b.iterations


def test_em_callback_sees_every_iteration(rng):
    x = as_dataset(rng.standard_normal((200, 2)) * 3)
    seen = []
    res = em.em_run(x, 3, np.random.default_rng(2), FitConfig(), seen.append)
    assert [s["iteration"] for s in seen] == list(range(1, res.iterations + 1))
    assert [s["psi"] for s in seen] == res.psi_history
