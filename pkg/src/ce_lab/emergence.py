"""Causal emergence of a coarse-graining and its analytic bounds.

``delta_j`` is the gain in dimension-averaged EI from micro to macro. It
splits into a dynamics part (``delta_j1``, from the determinant of the
macro dynamics) and a noise part (``delta_j2``, from the noise covariance).
The intervention width ``L`` cancels in the difference, so ``delta_j`` is
computed without it; ``L`` only enters the reported ``j_micro``/``j_macro``.

Everything is in nats. Complex eigenvalues enter only through their moduli.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .ei import DEFAULT_L, LN_2PIE, numerical_jacobian
from .errors import DomainError
from .spectral import _as_square, eig_sorted, numerical_rank, pinv, singular_values, spd_inv_sqrt
from .system import CoarseMap, LinearSystem, check_constraint, check_spd, logdet_spd, reduce

__all__ = [
    "EmergenceReport",
    "delta_j",
    "degeneracy_bound",
    "sigma_det_bounds",
    "delta_j_max",
    "feasibility",
    "delta_j_orthogonal_bound",
    "delta_j_shared_eigs",
    "delta_j_local",
]


@dataclass(frozen=True)
class EmergenceReport:
    """Micro/macro dimension-averaged EI and their difference, in nats."""

    j_micro: float
    j_macro: float
    delta_j: float
    delta_j1: float
    delta_j2: float
    k: int
    n: int
    L: float = DEFAULT_L
    constraint_eta: Optional[float] = None
    constraint_satisfied: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "j_micro": self.j_micro,
            "j_macro": self.j_macro,
            "delta_j": self.delta_j,
            "delta_j1": self.delta_j1,
            "delta_j2": self.delta_j2,
            "k": self.k,
            "n": self.n,
            "L": self.L,
            "constraint_eta": self.constraint_eta,
            "constraint_satisfied": self.constraint_satisfied,
        }


def _log_abs_det(M) -> float:
    """``ln|det M|``, or ``-inf`` when ``M`` is numerically singular."""
    if numerical_rank(M) < M.shape[0]:
        return -math.inf
    return float(np.linalg.slogdet(M)[1])


def _j_from_logs(log_abs_det_A, logdet_sigma, d, L) -> float:
    return log_abs_det_A / d + math.log(L) - 0.5 * LN_2PIE - 0.5 * logdet_sigma / d


def delta_j(sys: LinearSystem, cm: CoarseMap, L: float = DEFAULT_L,
            eta: Optional[float] = None) -> EmergenceReport:
    """Causal emergence of the coarse-graining ``cm`` applied to ``sys``.

    Parameters
    ----------
    L : float
        Intervention width used only for ``j_micro`` and ``j_macro``.
    eta : float, optional
        If given, the entropy-gap constraint is checked and reported.

    Raises
    ------
    DomainError
        If the micro dynamics matrix is singular.

    Notes
    -----
    A singular macro dynamics matrix gives ``delta_j1 = -inf`` (with a
    warning) rather than an error.
    """
    n, k = sys.n, cm.k
    ld_A = _log_abs_det(sys.A)
    if ld_A == -math.inf:
        raise DomainError("micro dynamics matrix A is singular; J_micro is -inf")
    macro = reduce(sys, cm)
    ld_AM = _log_abs_det(macro.A_M)
    if ld_AM == -math.inf:
        warnings.warn("macro dynamics W A pinv(W) is singular: delta_j1 = -inf", RuntimeWarning, stacklevel=2)
    ld_S = logdet_spd(sys.Sigma)
    ld_SM = logdet_spd(macro.Sigma_M)
    dj1 = ld_AM / k - ld_A / n
    dj2 = 0.5 * (ld_S / n - ld_SM / k)
    satisfied = None if eta is None else bool(check_constraint(sys, cm, eta))
    return EmergenceReport(
        j_micro=_j_from_logs(ld_A, ld_S, n, L),
        j_macro=_j_from_logs(ld_AM, ld_SM, k, L),
        delta_j=dj1 + dj2,
        delta_j1=dj1,
        delta_j2=dj2,
        k=k,
        n=n,
        L=L,
        constraint_eta=eta,
        constraint_satisfied=satisfied,
    )


def degeneracy_bound(A, k: int) -> float:
    """Product of the ``k`` largest eigenvalue moduli of ``A``.

    For normal ``A`` this bounds ``|det(W A pinv(W))|`` over every rank-k
    ``W``; for non-normal ``A`` the bound can fail.
    """
    spec = eig_sorted(A)
    if not 1 <= k <= spec.n:
        raise ValueError(f"k={k} outside [1, {spec.n}]")
    return float(np.prod(spec.moduli[:k]))


def sigma_det_bounds(Sigma, W) -> Tuple[float, float]:
    """Lower and upper bounds on ``det(W Sigma W^T)^(1/(2k))``.

    Pairs the singular values of ``W`` (descending) with the smallest and
    the largest eigenvalues of ``Sigma`` respectively.
    """
    S = check_spd(Sigma)
    W = CoarseMap(W).W
    k = W.shape[0]
    if W.shape[1] != S.shape[0]:
        raise ValueError("W and Sigma dimensions do not match")
    s = singular_values(W)[:k]
    kappa = np.sort(np.linalg.eigvalsh(S))[::-1]
    lower = float(np.exp(np.mean(np.log(s) + 0.5 * np.log(kappa[::-1][:k]))))
    upper = float(np.exp(np.mean(np.log(s) + 0.5 * np.log(kappa[:k]))))
    return lower, upper


def _top_k_log_gap(moduli: np.ndarray, k: int) -> float:
    logs = np.log(moduli)
    return float(np.mean(logs[:k]) - np.mean(logs))


def _check_eta(eta):
    if not math.isfinite(eta) or eta < 0:
        raise ValueError(f"eta must be finite and non-negative, got {eta}")


def delta_j_max(sys: LinearSystem, k: int, eta: float) -> float:
    """Largest causal emergence reachable with a rank-k map under gap ``eta``.

    Equals the mean log-modulus of the ``k`` leading eigenvalues minus the
    mean over all ``n``, plus ``eta``. It is the global maximum when ``A``
    is normal; for non-normal ``A`` other maps can do better.

    Raises
    ------
    ConjugatePairSplit
        If ``k`` separates a complex-conjugate pair.
    DomainError
        If ``A`` has a zero eigenvalue.
    """
    _check_eta(eta)
    spec = eig_sorted(sys.A)
    spec.check_k(k)
    if not sys.full_rank or np.any(spec.moduli == 0):
        raise DomainError("A has a zero eigenvalue; the maximum is undefined")
    return _top_k_log_gap(spec.moduli, k) + eta


def feasibility(sys: LinearSystem, k: int, eta: float) -> bool:
    """True iff some rank-k map gives strictly positive causal emergence."""
    return delta_j_max(sys, k, eta) > 0


def delta_j_orthogonal_bound(sys: LinearSystem, k: int) -> float:
    """Bound on causal emergence over maps with orthonormal rows.

    Uses the moduli of the eigenvalues of ``A Sigma^(-1/2)`` (principal SPD
    root). Holds when ``A Sigma^(-1/2)`` is normal, e.g. normal ``A`` with
    isotropic noise or ``A`` and ``Sigma`` sharing an orthonormal eigenbasis.
    A normal ``A`` alone is not enough once ``Sigma`` is anisotropic.
    """
    if not 1 <= k <= sys.n:
        raise ValueError(f"k={k} outside [1, {sys.n}]")
    moduli = np.sort(np.abs(np.linalg.eigvals(sys.A @ spd_inv_sqrt(sys.Sigma))))[::-1]
    if np.any(moduli == 0):
        raise DomainError("A Sigma^(-1/2) has a zero eigenvalue")
    return _top_k_log_gap(moduli, k)


def delta_j_shared_eigs(lam: Sequence[float], kappa: Sequence[float], k: int) -> float:
    """Exact causal emergence of the best orthonormal-row map when ``A`` and
    ``Sigma`` share an orthonormal eigenbasis.

    ``lam`` are the eigenvalues of ``A``, ``kappa`` those of ``Sigma`` on the
    same eigenvectors.
    """
    lam = np.asarray(lam, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if lam.shape != kappa.shape or lam.ndim != 1:
        raise ValueError("lam and kappa must be 1-D of equal length")
    if np.any(kappa <= 0):
        raise DomainError("kappa must be strictly positive")
    if np.any(lam == 0):
        raise DomainError("lam has a zero entry")
    if not 1 <= k <= lam.size:
        raise ValueError(f"k={k} outside [1, {lam.size}]")
    d = np.sort(np.abs(lam) / np.sqrt(kappa))[::-1]
    return _top_k_log_gap(d, k)


def delta_j_local(f: Callable, jacobian_f: Optional[Callable], cm: CoarseMap, x, Sigma) -> float:
    """Causal emergence of the linearization of ``x' = f(x) + eps`` at ``x``.

    The macro Jacobian is ``W J(pinv(W) y) pinv(W)`` evaluated at
    ``y = W x``. Jacobians come from ``jacobian_f`` when supplied, else from
    central differences. A singular Jacobian gives ``-inf`` with a warning.
    """
    x = np.asarray(x, dtype=float)
    n, k = cm.n, cm.k
    if x.shape != (n,):
        raise ValueError(f"x must have length {n}")
    S = check_spd(Sigma)
    W = cm.W
    Wp = pinv(W)

    def jac(z):
        return np.asarray(jacobian_f(z), dtype=float) if jacobian_f is not None else numerical_jacobian(f, z)

    J_micro = jac(x)
    J_macro = W @ jac(Wp @ (W @ x)) @ Wp
    ld_micro = _log_abs_det(_as_square(J_micro, "Jacobian"))
    ld_macro = _log_abs_det(J_macro)
    if ld_micro == -math.inf or ld_macro == -math.inf:
        warnings.warn(f"singular Jacobian at x={x.tolist()}: local delta_j undefined", RuntimeWarning, stacklevel=2)
        return -math.inf
    noise = 0.5 * (logdet_spd(S) / n - logdet_spd(W @ S @ W.T) / k)
    return ld_macro / k - ld_micro / n + noise
