"""One-step reconstruction loss of a coarse-graining.

Lifting the macro prediction back with ``pinv(W)`` loses the directions
the map discards. ``dynamical_loss`` measures that error for a given state
and noise draw; ``loss_supremum`` bounds it over all states with
``|x| <= x_sup`` and noise with ``|eps| <= eps_norm``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .optimizer import optimal_w
from .spectral import pinv
from .system import CoarseMap, LinearSystem

__all__ = [
    "LossReport",
    "projector",
    "orthonormalize_rows",
    "dynamical_loss",
    "loss_supremum",
    "sd_candidates",
    "argmin_sd_check",
    "trajectory_loss",
]

MODES = ("paper", "tight")


@dataclass(frozen=True)
class LossReport:
    s_d: float
    s_d_mode: str
    frobenius_term: float
    noise_term: float
    l_d: Optional[float] = None


def projector(cm: CoarseMap) -> np.ndarray:
    """Orthogonal projector ``pinv(W) W`` onto the row space of ``W``."""
    return cm.W_pinv @ cm.W


def orthonormalize_rows(W) -> np.ndarray:
    """Map ``W`` to ``(W W^T)^(-1/2) W``: same row space, unit singular values."""
    W = np.asarray(W, dtype=float)
    U, _, Vt = np.linalg.svd(W, full_matrices=False)
    return U @ Vt


def dynamical_loss(sys: LinearSystem, cm: CoarseMap, x_t, eps_t) -> float:
    """``|x_(t+1) - pinv(W) y_(t+1)|`` for one step from ``x_t`` with noise ``eps_t``."""
    x_t = np.asarray(x_t, dtype=float)
    eps_t = np.asarray(eps_t, dtype=float)
    n = sys.n
    if cm.n != n or x_t.shape[-1] != n or eps_t.shape[-1] != n:
        raise ValueError("dimension mismatch between system, map, state and noise")
    P = projector(cm)
    A = sys.A
    M = P @ A @ P - A
    r = x_t @ M.T + eps_t @ (P - np.eye(n)).T
    return np.linalg.norm(r, axis=-1) if r.ndim > 1 else float(np.linalg.norm(r))


def loss_supremum(sys: LinearSystem, cm: CoarseMap, x_sup: float, eps_norm: float,
                  mode: str = "paper") -> LossReport:
    """Upper bound on the dynamical loss.

    ``frobenius_term = |A - P A P|_F * x_sup`` with ``P = pinv(W) W``. The
    noise term is ``(n - k) * eps_norm`` in ``paper`` mode and
    ``sqrt(n - k) * eps_norm`` in ``tight`` mode; ``sqrt(n - k)`` is the
    Frobenius norm of ``I - P``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not (math.isfinite(x_sup) and x_sup >= 0 and math.isfinite(eps_norm) and eps_norm >= 0):
        raise ValueError("x_sup and eps_norm must be finite and non-negative")
    P = projector(cm)
    frob = float(np.linalg.norm(sys.A - P @ sys.A @ P, "fro")) * x_sup
    d = sys.n - cm.k
    coef = d if mode == "paper" else math.sqrt(d)
    noise = coef * eps_norm
    return LossReport(frob + noise, mode, frob, noise)


def sd_candidates(sys: LinearSystem, k: int, eta: float, n_candidates: int, seed: int = 0,
                  x_sup: float = 1.0, eps_norm: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Supremum and dynamics-part emergence for a pool of candidate maps.

    The pool is ``n_candidates`` Gaussian maps followed by the analytic
    optimum, all reduced to unit singular values. Returns ``(s_d, dj1)``
    with the optimum in the last slot.
    """
    rng = np.random.default_rng(seed)
    n = sys.n
    pool = list(rng.standard_normal((n_candidates, k, n)))
    pool.append(optimal_w(sys, k, eta).W.W)
    _, ld_A = np.linalg.slogdet(sys.A)
    s_d = np.empty(len(pool))
    dj1 = np.empty(len(pool))
    for i, W in enumerate(pool):
        cm = CoarseMap(orthonormalize_rows(W))
        s_d[i] = loss_supremum(sys, cm, x_sup, eps_norm).s_d
        _, ld_M = np.linalg.slogdet(cm.W @ sys.A @ pinv(cm.W))
        dj1[i] = ld_M / k - ld_A / n
    return s_d, dj1


def argmin_sd_check(sys: LinearSystem, k: int, eta: float, n_candidates: int, seed: int = 0,
                    x_sup: float = 1.0, eps_norm: float = 1.0, tol: float = 1e-6) -> bool:
    """True iff the candidate with the smallest supremum also has (within
    ``tol``) the largest dynamics-part emergence."""
    s_d, dj1 = sd_candidates(sys, k, eta, n_candidates, seed, x_sup, eps_norm)
    return bool(dj1[int(np.argmin(s_d))] >= dj1.max() - tol)


def trajectory_loss(sys: LinearSystem, cm: CoarseMap, states, noise) -> Tuple[np.ndarray, LossReport, LossReport]:
    """Dynamical loss at every step of a recorded run, with both suprema.

    ``x_sup`` and ``eps_norm`` are taken as the largest norms seen in the run.
    """
    X = np.asarray(states, dtype=float)[:-1]
    E = np.asarray(noise, dtype=float)
    if X.shape != E.shape:
        raise ValueError("states must have one more row than noise")
    l_d = dynamical_loss(sys, cm, X, E)
    x_sup = float(np.max(np.linalg.norm(X, axis=1)))
    eps_norm = float(np.max(np.linalg.norm(E, axis=1)))
    return (np.atleast_1d(l_d), loss_supremum(sys, cm, x_sup, eps_norm, "tight"),
            loss_supremum(sys, cm, x_sup, eps_norm, "paper"))
