import math

import numpy as np
import pytest

from ce_lab.mi import (MIEstimate, convergence_sweep, delta_i, estimate_mi, kl_entropy, knn_mi, residual_mi,
                       sample_interventional)
from ce_lab.optimizer import optimal_w
from ce_lab.system import CoarseMap, LinearSystem, gaussian_entropy

from _helpers import random_spd


def _gaussian_pair(rng, dx, dy, n):
    C = random_spd(rng, dx + dy, floor=0.2)
    Z = rng.multivariate_normal(np.zeros(dx + dy), C, size=n)
    d = np.sqrt(np.diag(C))
    C = C / np.outer(d, d)
    mi = 0.5 * (np.linalg.slogdet(C[:dx, :dx])[1] + np.linalg.slogdet(C[dx:, dx:])[1]
                - np.linalg.slogdet(C)[1])
    return Z[:, :dx], Z[:, dx:], mi


def test_sample_interventional(heat):
    X, Y = sample_interventional(heat.system, 20_000, 2.0, seed=1)
    assert X.shape == Y.shape == (20_000, 4)
    assert np.all(np.abs(X) <= 1.0)
    assert np.all(np.abs(X.mean(axis=0)) < 3 * math.sqrt(1 / 3) / math.sqrt(20_000))
    X2, Y2 = sample_interventional(heat.system, 20_000, 2.0, seed=1)
    assert np.array_equal(Y, Y2)


def test_noise_covariance_of_samples():
    S = np.array([[0.5, 0.1], [0.1, 0.3]])
    s = LinearSystem(np.array([[0.9, 0.2], [0.0, 0.5]]), S)
    X, Y = sample_interventional(s, 100_000, 2.0, seed=3)
    R = Y - X @ s.A.T
    assert np.max(np.abs(np.cov(R, rowvar=False) - S)) < 0.02 * S.max()


def test_zero_dynamics_independent():
    s = LinearSystem(np.zeros((2, 2)), np.eye(2))
    X, Y = sample_interventional(s, 10_000, 2.0, seed=0)
    assert knn_mi(X, Y).value < 0.02


def test_ksg_independent(rng):
    X, Y = rng.standard_normal(10_000), rng.standard_normal(10_000)
    assert abs(knn_mi(X, Y).value) < 0.05


def test_ksg_gaussian_oracle(rng):
    rho = 0.9
    Z = rng.multivariate_normal([0, 0], [[1, rho], [rho, 1]], size=10_000)
    est = knn_mi(Z[:, 0], Z[:, 1])
    assert est.value == pytest.approx(-0.5 * math.log(1 - rho ** 2), abs=0.1)
    assert est.method == "ksg" and est.k_neighbors == 4


@pytest.mark.parametrize("dx,dy", [(1, 1), (1, 2), (2, 2), (1, 3), (2, 1)])
def test_estimator_consistency(rng, dx, dy):
    X, Y, mi = _gaussian_pair(rng, dx, dy, 10_000)
    assert knn_mi(X, Y).value == pytest.approx(mi, abs=0.1)
    assert residual_mi(X, Y).value == pytest.approx(mi, abs=0.1)


def test_copy_saturates_with_warning(rng):
    X = rng.standard_normal(2000)
    with pytest.warns(RuntimeWarning, match="ceiling"):
        knn_mi(X, X)


def test_constant_column_warns(rng):
    with pytest.warns(RuntimeWarning, match="constant"):
        knn_mi(np.ones(100), rng.standard_normal(100))


def test_bad_inputs(rng):
    with pytest.raises(ValueError):
        knn_mi(rng.standard_normal(10), rng.standard_normal(11))
    with pytest.raises(ValueError):
        knn_mi(rng.standard_normal(3), rng.standard_normal(3), k_neighbors=4)
    with pytest.raises(ValueError):
        estimate_mi(rng.standard_normal(10), rng.standard_normal(10), method="binning")
    with pytest.raises(ValueError):
        MIEstimate(0.0, 3, 4)


def test_kl_entropy_gaussian(rng):
    S = random_spd(rng, 3, floor=0.3)
    Z = rng.multivariate_normal(np.zeros(3), S, size=20_000)
    assert kl_entropy(Z) == pytest.approx(gaussian_entropy(S), abs=0.05)


def test_identity_map_near_zero(heat):
    assert abs(delta_i(heat.system, CoarseMap.identity(4), 10_000, seed=0)) < 0.03


def test_heat_delta_i_close(heat):
    cm = optimal_w(heat.system, 1, 0.0).W
    assert delta_i(heat.system, cm, 20_000, seed=0) == pytest.approx(0.6656, abs=0.1)


def test_delta_i_deterministic(heat):
    cm = optimal_w(heat.system, 1, 0.0).W
    assert delta_i(heat.system, cm, 3000, seed=11) == delta_i(heat.system, cm, 3000, seed=11)


def test_l_insensitive(heat):
    cm = optimal_w(heat.system, 1, 0.0).W
    a = np.array([delta_i(heat.system, cm, 5000, L=2.0, seed=s) for s in range(5)])
    b = np.array([delta_i(heat.system, cm, 5000, L=4.0, seed=s) for s in range(5)])
    pooled = math.sqrt(0.5 * (a.var(ddof=1) + b.var(ddof=1)))
    assert abs(a.mean() - b.mean()) < 2 * pooled + 1e-3


def test_ksg_biased_on_near_deterministic_heat(heat):
    # sigma = 0.01: the micro pair is nearly a copy and plain KSG is far too low,
    # which is why the residual estimator is the default
    X, Y = sample_interventional(heat.system, 5000, 2.0, seed=0)
    ent_gap = 4 * math.log(2.0) + math.log(abs(np.linalg.det(heat.system.A))) \
        - 0.5 * np.linalg.slogdet(2 * math.pi * math.e * heat.system.Sigma)[1]
    assert knn_mi(X, Y).value < ent_gap - 5
    assert residual_mi(X, Y).value == pytest.approx(ent_gap, abs=0.5)


def test_convergence_sweep(heat):
    cm = CoarseMap.identity(4)
    rows = convergence_sweep(heat.system, cm, [1000, 3000], seeds=range(3))
    assert [r["n_samples"] for r in rows] == [1000, 3000]
    assert all(r["delta_j"] == 0.0 for r in rows)
    assert all(abs(r["delta_i_mean"]) < 0.05 for r in rows)
    again = convergence_sweep(heat.system, cm, [1000, 3000], seeds=range(3))
    assert rows == again
    with pytest.raises(ValueError):
        convergence_sweep(heat.system, cm, [])


def test_workers_env(monkeypatch, rng):
    X, Y = rng.standard_normal((2, 3000))
    base = knn_mi(X, Y).value
    monkeypatch.setenv("CE_LAB_THREADS", "2")
    assert knn_mi(X, Y).value == base
    monkeypatch.setenv("CE_LAB_THREADS", "nonsense")
    assert knn_mi(X, Y).value == base
