import math

import numpy as np
import pytest

from ce_lab.cases import RANDOM_WALK_W
from ce_lab.errors import NotSPDError, RankError
from ce_lab.system import (CoarseMap, LinearSystem, check_constraint, check_constraint_det,
                           entropy_gap, gaussian_entropy, reduce)

from _helpers import HEAT_LEFT_VEC, random_orthogonal, random_spd


def test_linear_system_validation():
    with pytest.raises(NotSPDError):
        LinearSystem(np.eye(2), np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(NotSPDError):
        LinearSystem(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        LinearSystem(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        LinearSystem(np.array([[np.inf]]), np.eye(1))
    s = LinearSystem(np.eye(2), np.eye(2))
    assert s.full_rank and s.n == 2
    assert not LinearSystem(np.zeros((2, 2)), np.eye(2)).full_rank
    with pytest.raises(ValueError):
        s.A[0, 0] = 3.0


def test_sigma_symmetrized_within_tolerance():
    S = np.array([[1.0, 0.2], [0.2 + 1e-12, 1.0]])
    s = LinearSystem(np.eye(2), S)
    assert np.array_equal(s.Sigma, s.Sigma.T)


def test_coarse_map_rank():
    with pytest.raises(RankError):
        CoarseMap(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(RankError):
        CoarseMap(np.ones((3, 2)))
    cm = CoarseMap([1.0, 0.0, 0.0])
    assert cm.k == 1 and cm.n == 3


def test_reduce_heat(heat):
    m = reduce(heat.system, CoarseMap([0.5856, 0.7910, 0.1748, 0.03065]))
    assert m.A_M[0, 0] == pytest.approx(0.8702, abs=1e-3)
    m = reduce(heat.system, CoarseMap(HEAT_LEFT_VEC))
    assert m.A_M[0, 0] == pytest.approx(0.87015621, abs=1e-8)


def test_reduce_identity(rng):
    s = LinearSystem(rng.standard_normal((4, 4)), random_spd(rng, 4))
    m = reduce(s, CoarseMap.identity(4))
    np.testing.assert_allclose(m.A_M, s.A, atol=1e-14)
    np.testing.assert_allclose(m.Sigma_M, s.Sigma, atol=1e-14)


def test_reduce_sigma_spd(rng):
    for _ in range(50):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, n + 1))
        s = LinearSystem(rng.standard_normal((n, n)), random_spd(rng, n))
        m = reduce(s, CoarseMap(rng.standard_normal((k, n))))
        assert np.array_equal(m.Sigma_M, m.Sigma_M.T)
        assert np.all(np.linalg.eigvalsh(m.Sigma_M) > 0)
        assert m.k == k


def test_reduce_similarity(rng):
    for _ in range(50):
        n, k = 5, 3
        s = LinearSystem(rng.standard_normal((n, n)), random_spd(rng, n))
        W = rng.standard_normal((k, n))
        M = rng.standard_normal((k, k))
        a = reduce(s, CoarseMap(W)).A_M
        b = reduce(s, CoarseMap(M @ W)).A_M
        np.testing.assert_allclose(b, M @ a @ np.linalg.inv(M), atol=1e-8)
        assert np.linalg.det(b) == pytest.approx(np.linalg.det(a), rel=1e-8, abs=1e-12)


def test_gaussian_entropy():
    assert gaussian_entropy(np.eye(1)) == pytest.approx(0.5 * math.log(2 * math.pi * math.e))
    assert gaussian_entropy(np.eye(1)) == pytest.approx(1.4189, abs=1e-4)
    sig, d = 0.3, 3
    assert gaussian_entropy(sig ** 2 * np.eye(d)) == pytest.approx(d * (0.5 * math.log(2 * math.pi * math.e) + math.log(sig)))
    with pytest.raises(NotSPDError):
        gaussian_entropy(-np.eye(2))


def test_gaussian_entropy_monte_carlo(rng):
    S = random_spd(rng, 3)
    X = rng.multivariate_normal(np.zeros(3), S, size=200000)
    # average negative log-density estimates the entropy
    Si = np.linalg.inv(S)
    logp = -0.5 * np.einsum("ij,jk,ik->i", X, Si, X) - 0.5 * np.linalg.slogdet(2 * math.pi * S)[1]
    assert abs(-logp.mean() - gaussian_entropy(S)) < 0.05


def test_entropy_gap_random_walk(random_walk):
    gap = entropy_gap(random_walk.system, CoarseMap(RANDOM_WALK_W))
    assert gap == pytest.approx(-0.5 * math.log(0.614), abs=1e-2)
    assert gap == pytest.approx(0.2439, abs=1e-2)


def test_entropy_gap_isotropic_orthonormal(rng):
    s = LinearSystem.isotropic(rng.standard_normal((5, 5)), 0.7)
    W = random_orthogonal(rng, 5)[:2]
    assert abs(entropy_gap(s, CoarseMap(W))) < 1e-12


def test_entropy_gap_identity_exact(rng):
    s = LinearSystem(rng.standard_normal((4, 4)), random_spd(rng, 4))
    assert entropy_gap(s, CoarseMap.identity(4)) == 0.0


def test_entropy_gap_homogeneity(rng):
    s = LinearSystem(rng.standard_normal((4, 4)), random_spd(rng, 4))
    W = rng.standard_normal((2, 4))
    for c in (0.1, 3.0, -2.5):
        assert entropy_gap(s, CoarseMap(c * W)) == pytest.approx(entropy_gap(s, CoarseMap(W)) - math.log(abs(c)), abs=1e-12)


def test_check_constraint_examples(random_walk, rng):
    s = random_walk.system
    assert check_constraint(s, CoarseMap(RANDOM_WALK_W), 0.3466)
    assert check_constraint(s, CoarseMap.identity(4), 0.0)
    eta = 0.2
    iso = LinearSystem.isotropic(np.eye(3), 1.0)
    W = random_orthogonal(rng, 3)[:2]
    assert check_constraint(iso, CoarseMap(W), eta)
    c = math.exp(-2 * eta - 0.1)
    assert not check_constraint(iso, CoarseMap(c * W), eta)
    with pytest.raises(ValueError):
        check_constraint(s, CoarseMap.identity(4), math.nan)


def test_constraint_forms_agree(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(1, n + 1))
        s = LinearSystem(np.eye(n), random_spd(rng, n))
        cm = CoarseMap(rng.standard_normal((k, n)))
        eta = float(rng.uniform(0, 2))
        assert check_constraint(s, cm, eta) == check_constraint_det(s, cm, eta)
