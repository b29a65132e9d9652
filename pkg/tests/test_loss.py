import math

import numpy as np
import pytest

from ce_lab.loss import (argmin_sd_check, dynamical_loss, loss_supremum, orthonormalize_rows, projector,
                         sd_candidates, trajectory_loss)
from ce_lab.optimizer import optimal_w
from ce_lab.simulation import simulate_micro
from ce_lab.system import CoarseMap, LinearSystem

from _helpers import random_normal_matrix, random_spd


def test_projector_properties(rng):
    for _ in range(50):
        n = int(rng.integers(1, 7))
        k = int(rng.integers(1, n + 1))
        cm = CoarseMap(rng.standard_normal((k, n)))
        P = projector(cm)
        assert np.allclose(P @ P, P, atol=1e-10)
        assert np.allclose(P, P.T, atol=1e-10)
        assert np.trace(P) == pytest.approx(k, abs=1e-10)
        assert np.linalg.norm(np.eye(n) - P, "fro") == pytest.approx(math.sqrt(n - k), abs=1e-9)


def test_full_rank_map_has_zero_loss(rng):
    s = LinearSystem(rng.standard_normal((3, 3)), np.eye(3))
    cm = CoarseMap(rng.standard_normal((3, 3)))
    rep = loss_supremum(s, cm, 2.0, 1.0)
    assert rep.s_d == pytest.approx(0.0, abs=1e-10)
    assert dynamical_loss(s, cm, rng.standard_normal(3), rng.standard_normal(3)) == pytest.approx(0.0, abs=1e-10)


def test_modes_differ_only_in_noise_term(heat):
    cm = optimal_w(heat.system, 1, 0.0).W
    p = loss_supremum(heat.system, cm, 1.0, 0.5, "paper")
    t = loss_supremum(heat.system, cm, 1.0, 0.5, "tight")
    assert p.frobenius_term == t.frobenius_term
    assert p.noise_term == pytest.approx(3 * 0.5)
    assert t.noise_term == pytest.approx(math.sqrt(3) * 0.5)
    with pytest.raises(ValueError):
        loss_supremum(heat.system, cm, 1.0, 0.5, "loose")
    with pytest.raises(ValueError):
        loss_supremum(heat.system, cm, -1.0, 0.5)


def test_orthonormalize_rows(rng):
    W = rng.standard_normal((2, 5))
    Q = orthonormalize_rows(W)
    assert np.allclose(Q @ Q.T, np.eye(2))
    assert np.allclose(projector(CoarseMap(Q)), projector(CoarseMap(W)))


@pytest.mark.parametrize("mode", ["paper", "tight"])
def test_loss_below_supremum(rng, mode):
    for _ in range(30):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, n + 1))
        s = LinearSystem(rng.standard_normal((n, n)), random_spd(rng, n))
        cm = CoarseMap(rng.standard_normal((k, n)))
        x = rng.standard_normal((200, n))
        x *= (rng.uniform(0, 1.5, 200) / np.linalg.norm(x, axis=1))[:, None]
        e = rng.standard_normal((200, n))
        e *= (rng.uniform(0, 0.7, 200) / np.linalg.norm(e, axis=1))[:, None]
        l_d = dynamical_loss(s, cm, x, e)
        assert np.all(l_d <= loss_supremum(s, cm, 1.5, 0.7, mode).s_d + 1e-12)


def test_adversarial_candidate_attains_frobenius_direction():
    # rank-one residual: the top right singular vector of A - PAP attains the Frobenius term
    s = LinearSystem(np.array([[1.0, 0.0], [2.0, 0.5]]), np.eye(2))
    cm = CoarseMap([[1.0, 0.0]])
    P = projector(cm)
    M = s.A - P @ s.A @ P
    v = np.linalg.svd(M)[2][0]
    got = dynamical_loss(s, cm, v, np.zeros(2))
    assert got == pytest.approx(loss_supremum(s, cm, 1.0, 0.0).frobenius_term, rel=1e-12)


def test_frobenius_lower_bound_for_normal(rng):
    for _ in range(50):
        n = int(rng.integers(2, 6))
        k = int(rng.integers(1, n))
        A = random_normal_matrix(rng, n)
        s = LinearSystem(A, np.eye(n))
        cm = CoarseMap(rng.standard_normal((k, n)))
        m = np.sort(np.abs(np.linalg.eigvals(A)))[::-1]
        floor = math.sqrt(np.sum(m[k:] ** 2))
        assert loss_supremum(s, cm, 1.0, 0.0).frobenius_term >= floor - 1e-9


def test_argmin_sd_check(heat):
    assert argmin_sd_check(heat.system, 1, 0.0, 1000, seed=0)
    s_d, dj1 = sd_candidates(heat.system, 1, 0.0, 200, seed=0)
    assert s_d.shape == dj1.shape == (201,)
    assert int(np.argmin(s_d)) == 200


def test_argmin_sd_check_identity():
    s = LinearSystem(np.eye(3), np.eye(3))
    with pytest.warns(RuntimeWarning):
        assert argmin_sd_check(s, 1, 0.0, 100, seed=0)


def test_trajectory_loss(heat):
    cm = optimal_w(heat.system, 1, 0.0).W
    tr = simulate_micro(heat.system, heat.x0, 200, seed=1)
    l_d, tight, paper = trajectory_loss(heat.system, cm, tr.states, tr.noise_record)
    assert l_d.shape == (200,)
    assert np.all(l_d <= tight.s_d + 1e-12)
    assert tight.s_d <= paper.s_d
    with pytest.raises(ValueError):
        trajectory_loss(heat.system, cm, tr.states, tr.noise_record[:-1])
