import numpy as np
import pytest

from ce_lab.optimizer import optimal_w
from ce_lab.simulation import Trajectory, draw_noise, macro_pair, noise_covariance_check, simulate_micro
from ce_lab.system import CoarseMap, LinearSystem


def test_shape_and_determinism(heat):
    a = simulate_micro(heat.system, heat.x0, 50, seed=3)
    b = simulate_micro(heat.system, heat.x0, 50, seed=3)
    assert a.states.shape == (51, 4) and a.steps == 50
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.times, np.arange(51))
    assert not np.array_equal(a.states, simulate_micro(heat.system, heat.x0, 50, seed=4).states)


def test_zero_noise_is_matrix_power(heat):
    tr = simulate_micro(heat.system, heat.x0, 20, noise=np.zeros((20, 4)))
    for t in (0, 5, 20):
        assert np.allclose(tr.states[t], np.linalg.matrix_power(heat.system.A, t) @ heat.x0, atol=1e-12)


def test_heat_decay(heat):
    finals = [np.linalg.norm(simulate_micro(heat.system, heat.x0, 50, seed=s).states[-1]) for s in range(200)]
    assert np.mean(np.array(finals) < 0.5) >= 0.99


def test_zero_steps(heat):
    tr = simulate_micro(heat.system, heat.x0, 0)
    assert tr.states.shape == (1, 4)
    with pytest.raises(ValueError):
        simulate_micro(heat.system, heat.x0, -1)
    with pytest.raises(ValueError):
        simulate_micro(heat.system, np.ones(3), 5)


def test_linearity_under_replay(heat):
    tr = simulate_micro(heat.system, heat.x0, 30, seed=9)
    zero = simulate_micro(heat.system, np.zeros(4), 30, noise=tr.noise_record)
    dbl = simulate_micro(heat.system, 2 * heat.x0, 30, noise=tr.noise_record)
    assert np.allclose(dbl.states - zero.states, 2 * (tr.states - zero.states), atol=1e-12)


def test_identity_map_pair_matches(heat):
    y, y_hat = macro_pair(heat.system, CoarseMap.identity(4), heat.x0, 30, seed=1)
    assert np.allclose(y.states, y_hat.states, atol=1e-12)


def test_heat_macro_close(heat):
    cm = optimal_w(heat.system, 1, 0.0).W
    y, y_hat = macro_pair(heat.system, cm, heat.x0, 50, seed=0)
    rmse = np.sqrt(np.mean((y.states - y_hat.states) ** 2))
    assert rmse / np.sqrt(np.mean(y.states ** 2)) < 0.1


def test_invariant_subspace_exact(heat):
    # the optimal rows span a left invariant subspace (W A = A_M W), so with
    # vanishing noise the macro model reproduces W x exactly
    cm = optimal_w(heat.system, 1, 0.0).W
    s = LinearSystem(heat.system.A, 1e-30 * np.eye(4))
    y, y_hat = macro_pair(s, cm, heat.x0, 10, seed=0)
    assert np.allclose(y.states, y_hat.states, atol=1e-10)


def test_replay_identity(heat):
    cm = optimal_w(heat.system, 1, 0.0).W
    tr = simulate_micro(heat.system, heat.x0, 40, seed=2)
    y, _ = macro_pair(heat.system, cm, heat.x0, 40, seed=2)
    lhs = y.states[1:] - tr.states[:-1] @ (cm.W @ heat.system.A).T
    assert np.allclose(lhs, tr.noise_record @ cm.W.T, atol=1e-12)


def test_noise_covariance_check():
    s = LinearSystem(np.eye(4), np.eye(4))
    assert noise_covariance_check(s, 100_000, seed=0) < 0.02
    assert noise_covariance_check(s, 5000, seed=1) == noise_covariance_check(s, 5000, seed=1)
    with pytest.raises(ValueError):
        noise_covariance_check(s, 5)


def test_noise_covariance_scaling():
    s = LinearSystem(np.eye(4), np.eye(4))
    small = np.median([noise_covariance_check(s, 4000, seed=i) for i in range(30)])
    large = np.median([noise_covariance_check(s, 16000, seed=100 + i) for i in range(30)])
    assert 0.25 <= large / small <= 0.75


def test_seed_isolation():
    a = draw_noise(np.eye(1), 10_000, seed=1)[:, 0]
    b = draw_noise(np.eye(1), 10_000, seed=2)[:, 0]
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05


def test_cholesky_colouring(rng):
    S = np.array([[2.0, 0.5], [0.5, 1.0]])
    eps = draw_noise(S, 200_000, seed=5)
    assert np.allclose(np.cov(eps, rowvar=False), S, atol=0.03)
    z = np.random.default_rng(5).standard_normal((3, 2))
    assert np.allclose(draw_noise(S, 3, 5), z @ np.linalg.cholesky(S).T)


def test_bad_seed(heat):
    with pytest.raises(ValueError):
        simulate_micro(heat.system, heat.x0, 3, seed=-1)
    assert isinstance(simulate_micro(heat.system, heat.x0, 3, seed=2**63), Trajectory)
