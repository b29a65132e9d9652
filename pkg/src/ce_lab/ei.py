"""Effective information (EI) for discrete and Gaussian dynamics.

Every function returns an :class:`EIBreakdown` (or its per-dimension value)
whose ``ei`` is the sum of a determinism and a degeneracy term. Continuous
quantities are in nats; :func:`ei_tpm` works in bits.

The Gaussian forms use the small-noise effect distribution
``1 / (|det A| L^n)`` over the intervention box ``[-L/2, L/2]^n``; they do
not correct for the box edges.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NotSPDError
from .spectral import _as_matrix, _as_square, numerical_rank, pdet
from .system import LinearSystem, check_spd, logdet_spd

__all__ = [
    "EIBreakdown",
    "DEFAULT_L",
    "ei_tpm",
    "ei_gaussian",
    "j_value",
    "ei_rectangular",
    "ei_observed",
    "numerical_jacobian",
    "local_j_nonlinear",
]

DEFAULT_L = 2.0
LN_2PIE = math.log(2 * math.pi * math.e)


@dataclass(frozen=True)
class EIBreakdown:
    ei: float
    determinism: float
    degeneracy: float
    per_dimension: float
    L: Optional[float]
    dim: int
    units: str = "nats"

    def to_dict(self) -> dict:
        return {
            "ei": self.ei,
            "determinism": self.determinism,
            "degeneracy": self.degeneracy,
            "per_dimension": self.per_dimension,
            "L": self.L,
            "dim": self.dim,
            "units": self.units,
        }


def _breakdown(determinism, degeneracy, dim, L, units="nats") -> EIBreakdown:
    ei = determinism + degeneracy
    return EIBreakdown(ei, determinism, degeneracy, ei / dim, L, dim, units)


def _check_L(L):
    if not (L > 0 and math.isfinite(L)):
        raise ValueError(f"intervention width L must be positive and finite, got {L}")


def ei_tpm(M) -> EIBreakdown:
    """EI of a row-stochastic transition matrix, in bits.

    Determinism is the mean row negentropy, degeneracy the entropy of the
    effect distribution (column means).
    """
    M = _as_square(M, "M")
    if np.any(M < 0) or np.max(np.abs(M.sum(axis=1) - 1.0)) > 1e-9:
        raise DomainError("M must be row-stochastic (non-negative rows summing to 1)")
    n = M.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(M > 0, M * np.log2(M), 0.0)
        effect = M.sum(axis=0) / n
        h_eff = -np.sum(np.where(effect > 0, effect * np.log2(effect), 0.0))
    determinism = float(plogp.sum() / n)
    return _breakdown(determinism, float(h_eff), n, None, units="bits")


def ei_gaussian(sys: LinearSystem, L: float = DEFAULT_L) -> EIBreakdown:
    """EI of ``x' = A x + eps`` under ``do(x ~ U([-L/2, L/2]^n))``.

    ``ei = ln(|det A| L^n) - ln((2 pi e)^(n/2) det(Sigma)^(1/2))``

    Raises
    ------
    DomainError
        If ``A`` is numerically singular; use :func:`ei_rectangular` then.
    """
    _check_L(L)
    n = sys.n
    if not sys.full_rank:
        raise DomainError("A is singular; use ei_rectangular for rank-deficient dynamics")
    _, logabsdet = np.linalg.slogdet(sys.A)
    determinism = -(0.5 * n * LN_2PIE + 0.5 * logdet_spd(sys.Sigma))
    degeneracy = float(logabsdet) + n * math.log(L)
    return _breakdown(determinism, degeneracy, n, L)


def j_value(sys: LinearSystem, L: float = DEFAULT_L) -> float:
    """Dimension-averaged EI, ``EI / n``."""
    return ei_gaussian(sys, L).per_dimension


def ei_rectangular(A, Sigma, L: float = DEFAULT_L) -> EIBreakdown:
    """EI for ``y = A x + eps`` with ``A`` of shape (m, n), possibly rank deficient.

    ``ei = ln(pdet(A^T Sigma^-1 A)^(1/2) L^n / ((2 pi)^(n/2) e^(m/2)))``

    A zero-rank ``A`` has no cause-effect coupling and yields ``-inf`` for
    ``ei`` and the degeneracy term.
    """
    _check_L(L)
    A = _as_matrix(A, "A")
    m, n = A.shape
    S = check_spd(Sigma)
    if S.shape != (m, m):
        raise ValueError(f"Sigma must be {m}x{m} for A of shape {A.shape}")
    determinism = -(0.5 * m * LN_2PIE + 0.5 * logdet_spd(S))
    G = A.T @ np.linalg.solve(S, A)
    G = 0.5 * (G + G.T)
    if numerical_rank(G) == 0:
        warnings.warn("A has rank 0: effective information diverges to -inf", RuntimeWarning, stacklevel=2)
        ei = -math.inf
    else:
        ei = 0.5 * math.log(pdet(G)) + n * math.log(L) - 0.5 * n * math.log(2 * math.pi) - 0.5 * m
    degeneracy = ei - determinism
    return EIBreakdown(ei, determinism, degeneracy, ei / n, L, n)


def _check_psd(M, name):
    M = _as_square(M, name)
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise NotSPDError(f"{name} is not symmetric")
    M = 0.5 * (M + M.T)
    w = np.linalg.eigvalsh(M) if M.size else np.zeros(0)
    if w.size and w.min() < -1e-12 * max(1.0, float(np.abs(w).max())):
        raise NotSPDError(f"{name} is not positive semi-definite")
    return M


def ei_observed(A, Sigma, Theta_x, Theta_y, L: float = DEFAULT_L) -> EIBreakdown:
    """EI when both cause and effect are observed through Gaussian noise.

    The effective conditional covariance is ``Theta_y + A Theta_x A^T + Sigma``.
    """
    A = _as_matrix(A, "A")
    m, n = A.shape
    Tx = _check_psd(Theta_x, "Theta_x")
    Ty = _check_psd(Theta_y, "Theta_y")
    if Tx.shape != (n, n) or Ty.shape != (m, m):
        raise ValueError("observation covariance shapes do not match A")
    S = check_spd(Sigma)
    Theta = Ty + A @ Tx @ A.T + S
    return ei_rectangular(A, 0.5 * (Theta + Theta.T), L)


def numerical_jacobian(f: Callable, x) -> np.ndarray:
    """Central-difference Jacobian with step ``1e-5 * (1 + |x_i|)``."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(f(x), dtype=float))
    J = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = 1e-5 * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = h
        J[:, i] = (np.atleast_1d(f(x + e)) - np.atleast_1d(f(x - e))) / (2 * h)
    return J


def local_j_nonlinear(f: Callable, x, Sigma, L: float = DEFAULT_L,
                      jacobian: Optional[Callable] = None) -> float:
    """Dimension-averaged EI of ``x' = f(x) + eps`` linearized at ``x``.

    Uses ``jacobian(x)`` when given, otherwise central differences. A
    singular Jacobian returns ``-inf`` with a warning.
    """
    _check_L(L)
    x = np.asarray(x, dtype=float)
    n = x.size
    J = np.asarray(jacobian(x), dtype=float) if jacobian is not None else numerical_jacobian(f, x)
    if J.shape != (n, n) or not np.all(np.isfinite(J)):
        raise DomainError(f"Jacobian at x must be a finite {n}x{n} matrix")
    S = check_spd(Sigma)
    sign, logabsdet = np.linalg.slogdet(J)
    if sign == 0 or numerical_rank(J) < n:
        warnings.warn(f"singular Jacobian at x={x.tolist()}: J(x) = -inf", RuntimeWarning, stacklevel=2)
        return -math.inf
    return float(logabsdet) / n + math.log(L) - 0.5 * LN_2PIE - 0.5 * logdet_spd(S) / n
