"""Micro systems, coarse-graining maps and their macro reductions.

A micro system iterates ``x[t+1] = A x[t] + eps[t]`` with ``eps ~ N(0, Sigma)``.
A coarse-graining ``y = W x`` (``W`` is k x n with full row rank) induces the
macro system ``A_M = W A pinv(W)``, ``Sigma_M = W Sigma W^T``.

All entropies are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotSPDError, RankError
from .spectral import _as_matrix, _as_square, numerical_rank, pinv

__all__ = [
    "LinearSystem",
    "CoarseMap",
    "MacroSystem",
    "check_spd",
    "logdet_spd",
    "reduce",
    "gaussian_entropy",
    "entropy_gap",
    "check_constraint",
    "check_constraint_det",
]

SYM_ATOL = 1e-10
SPD_SHIFT = 1e-12
CONSTRAINT_SLACK = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def check_spd(S, name="Sigma") -> np.ndarray:
    """Validate and return a symmetrized copy of an SPD matrix.

    The matrix must be symmetric to ``1e-10`` (scaled by its largest entry)
    and ``S - 1e-12 * trace(S) * I`` must admit a Cholesky factor.
    """
    S = _as_square(S, name)
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if np.max(np.abs(S - S.T), initial=0.0) > SYM_ATOL * scale:
        raise NotSPDError(f"{name} is not symmetric")
    S = 0.5 * (S + S.T)
    shift = SPD_SHIFT * float(np.trace(S))
    try:
        np.linalg.cholesky(S - shift * np.eye(S.shape[0]))
    except np.linalg.LinAlgError:
        raise NotSPDError(f"{name} is not positive definite") from None
    return S


def logdet_spd(S) -> float:
    sign, ld = np.linalg.slogdet(S)
    if sign <= 0:
        raise NotSPDError("determinant of covariance is not positive")
    return float(ld)


@dataclass(frozen=True)
class LinearSystem:
    """Micro dynamics ``x[t+1] = A x[t] + eps[t]``, ``eps ~ N(0, Sigma)``."""

    A: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        A = _as_square(self.A, "A")
        S = check_spd(self.Sigma)
        if S.shape != A.shape:
            raise ValueError(f"Sigma shape {S.shape} does not match A shape {A.shape}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "Sigma", _frozen(S))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def full_rank(self) -> bool:
        return numerical_rank(self.A) == self.n

    @classmethod
    def isotropic(cls, A, sigma: float) -> "LinearSystem":
        A = np.asarray(A, dtype=float)
        return cls(A, sigma**2 * np.eye(A.shape[0]))


@dataclass(frozen=True)
class CoarseMap:
    """Full-row-rank linear coarse-graining ``y = W x``."""

    W: np.ndarray

    def __post_init__(self):
        W = _as_matrix(self.W, "W")
        k, n = W.shape
        if k > n:
            raise RankError(f"W has more rows ({k}) than columns ({n})")
        r = numerical_rank(W)
        if r != k:
            raise RankError(f"W must have full row rank {k}, numerical rank is {r}")
        object.__setattr__(self, "W", _frozen(W))

    @property
    def k(self) -> int:
        return self.W.shape[0]

    @property
    def n(self) -> int:
        return self.W.shape[1]

    @property
    def W_pinv(self) -> np.ndarray:
        return pinv(self.W)

    @classmethod
    def identity(cls, n: int) -> "CoarseMap":
        return cls(np.eye(n))


@dataclass(frozen=True)
class MacroSystem:
    A_M: np.ndarray
    Sigma_M: np.ndarray
    k: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "A_M", _frozen(self.A_M))
        object.__setattr__(self, "Sigma_M", _frozen(self.Sigma_M))
        object.__setattr__(self, "k", self.A_M.shape[0])

    def as_system(self) -> LinearSystem:
        return LinearSystem(self.A_M, self.Sigma_M)


def _check_dims(sys: LinearSystem, cm: CoarseMap):
    if cm.n != sys.n:
        raise ValueError(f"W has {cm.n} columns but the system has n={sys.n}")


def reduce(sys: LinearSystem, cm: CoarseMap) -> MacroSystem:
    """Macro system induced by ``cm``: ``(W A pinv(W), W Sigma W^T)``."""
    _check_dims(sys, cm)
    W = cm.W
    A_M = W @ sys.A @ pinv(W)
    S_M = W @ sys.Sigma @ W.T
    S_M = 0.5 * (S_M + S_M.T)
    check_spd(S_M, "Sigma_M")
    return MacroSystem(A_M, S_M)


def gaussian_entropy(Sigma) -> float:
    """Differential entropy (nats) of ``N(0, Sigma)``."""
    S = check_spd(Sigma)
    d = S.shape[0]
    return 0.5 * d * math.log(2 * math.pi * math.e) + 0.5 * logdet_spd(S)


def entropy_gap(sys: LinearSystem, cm: CoarseMap) -> float:
    """Per-dimension entropy removed by coarse-graining the noise.

    ``H(N(0,Sigma))/n - H(N(0, W Sigma W^T))/k``; the ``ln(2 pi e)`` terms
    cancel, so only the log-determinants are evaluated.
    """
    _check_dims(sys, cm)
    S_M = cm.W @ sys.Sigma @ cm.W.T
    return 0.5 * (logdet_spd(sys.Sigma) / sys.n - logdet_spd(S_M) / cm.k)


def check_constraint(sys: LinearSystem, cm: CoarseMap, eta: float) -> bool:
    """True iff the entropy gap of ``cm`` stays within ``eta`` (+1e-9 slack)."""
    if not math.isfinite(eta):
        raise ValueError("eta must be finite")
    return entropy_gap(sys, cm) <= eta + CONSTRAINT_SLACK


def check_constraint_det(sys: LinearSystem, cm: CoarseMap, eta: float) -> bool:
    """Determinant form: ``det(W Sigma W^T)^(1/k) >= exp(-2 eta) det(Sigma)^(1/n)``.

    Compared in log space with the same slack as :func:`check_constraint`.
    """
    _check_dims(sys, cm)
    lhs = logdet_spd(cm.W @ sys.Sigma @ cm.W.T) / cm.k
    rhs = -2.0 * eta + logdet_spd(sys.Sigma) / sys.n
    return lhs >= rhs - 2.0 * CONSTRAINT_SLACK
