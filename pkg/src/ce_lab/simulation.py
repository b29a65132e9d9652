"""Seeded simulation of micro and macro trajectories.

Noise is drawn as one standard-normal d-vector per step from
``numpy.random.default_rng(seed)`` and coloured with the lower-triangular
Cholesky factor of ``Sigma``. The coloured draws are kept in
``noise_record`` so a run can be replayed exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .system import CoarseMap, LinearSystem, reduce

__all__ = ["Trajectory", "draw_noise", "simulate_micro", "macro_pair", "noise_covariance_check"]


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


@dataclass(frozen=True)
class Trajectory:
    """States as rows (``steps + 1`` of them, initial state first)."""

    states: np.ndarray
    t0: int = 0
    seed: Optional[int] = None
    noise_record: Optional[np.ndarray] = None

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.states.shape[0])


def draw_noise(Sigma, steps: int, seed: int) -> np.ndarray:
    """``steps`` draws from ``N(0, Sigma)``, one row per step."""
    F = np.linalg.cholesky(Sigma)
    z = np.random.default_rng(_check_seed(seed)).standard_normal((steps, F.shape[0]))
    return z @ F.T


def _iterate(A, x0, eps) -> np.ndarray:
    X = np.empty((eps.shape[0] + 1, x0.size))
    X[0] = x0
    for t in range(eps.shape[0]):
        X[t + 1] = A @ X[t] + eps[t]
    return X


def simulate_micro(sys: LinearSystem, x0, steps: int, seed: int = 0,
                   noise: Optional[np.ndarray] = None) -> Trajectory:
    """Iterate ``x[t+1] = A x[t] + eps[t]``.

    Parameters
    ----------
    noise : ndarray, optional
        Replay these ``steps x n`` noise draws instead of sampling.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise ValueError(f"x0 must have length {sys.n}")
    if noise is None:
        eps = draw_noise(sys.Sigma, steps, seed)
    else:
        eps = np.asarray(noise, dtype=float)
        if eps.shape != (steps, sys.n):
            raise ValueError(f"noise must have shape ({steps}, {sys.n})")
    X = _iterate(sys.A, x0, eps)
    if not np.all(np.isfinite(X)):
        raise FloatingPointError("trajectory overflowed; shorten the run")
    return Trajectory(X, 0, _check_seed(seed), eps)


def macro_pair(sys: LinearSystem, cm: CoarseMap, x0, steps: int,
               seed: int = 0) -> Tuple[Trajectory, Trajectory]:
    """Coarse-grained micro run ``y = W x`` and the macro-model run ``y_hat``.

    ``y_hat`` starts at ``W x0`` and iterates the macro dynamics driven by
    ``W eps[t]``, using the very noise that drove the micro run.
    """
    micro = simulate_micro(sys, x0, steps, seed)
    W = cm.W
    macro = reduce(sys, cm)
    eps_M = micro.noise_record @ W.T
    y = Trajectory(micro.states @ W.T, 0, micro.seed, eps_M)
    y_hat = Trajectory(_iterate(macro.A_M, W @ micro.states[0], eps_M), 0, micro.seed, eps_M)
    return y, y_hat


def noise_covariance_check(sys: LinearSystem, n_samples: int, seed: int = 0) -> float:
    """Largest entrywise gap between the sample covariance of the noise
    generator and ``Sigma``."""
    if n_samples < 10:
        raise ValueError("n_samples must be >= 10")
    eps = draw_noise(sys.Sigma, n_samples, seed)
    C = np.cov(eps, rowvar=False).reshape(sys.n, sys.n)
    return float(np.max(np.abs(C - sys.Sigma)))
