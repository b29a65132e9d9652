"""Coarse-graining maps that attain the maximal causal emergence.

The analytic maximizer keeps the left invariant subspace of the ``k``
largest-modulus eigenvalues of ``A`` and scales it so the entropy-gap
constraint is tight. A real basis of that subspace comes from an ordered
real Schur form of ``A^T``, so complex spectra never produce complex maps.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List

import numpy as np

from .emergence import delta_j, delta_j_max
from .errors import ConjugatePairSplit, DomainError
from .spectral import eig_sorted, schur_top_k
from .system import CoarseMap, LinearSystem, logdet_spd

__all__ = [
    "OptimalCoarsening",
    "CircleSolutionSet",
    "canonical_signs",
    "scale_to_constraint",
    "optimal_w",
    "circle_solution_set",
    "random_search",
    "orthogonal_optimal_w",
]

DEGENERACY_RTOL = 1e-8


@dataclass(frozen=True)
class OptimalCoarsening:
    W: CoarseMap
    achieved_delta_j: float
    analytic_bound: float
    gap: float
    retained_moduli: List[float]


def canonical_signs(W: np.ndarray) -> np.ndarray:
    """Flip rows so the first nonzero entry of each is positive."""
    W = np.array(W, dtype=float, copy=True)
    for row in W:
        nz = np.flatnonzero(np.abs(row) > 1e-14 * max(1.0, np.abs(row).max()))
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return W


def scale_to_constraint(sys: LinearSystem, W: np.ndarray, eta: float) -> np.ndarray:
    """Rescale ``W`` by a positive scalar so its entropy gap equals ``eta``.

    Scaling ``W`` by ``c`` lowers the gap by ``ln c``.
    """
    W = np.asarray(W, dtype=float)
    k, n = W.shape
    ld_macro = logdet_spd(W @ sys.Sigma @ W.T)
    log_c = 0.5 * (-2.0 * eta + logdet_spd(sys.Sigma) / n - ld_macro / k)
    return math.exp(log_c) * W


def _moduli_bound(sys: LinearSystem, k: int, eta: float) -> float:
    try:
        return delta_j_max(sys, k, eta)
    except ConjugatePairSplit:
        logs = np.log(eig_sorted(sys.A).moduli)
        return float(np.mean(logs[:k]) - np.mean(logs)) + eta


def optimal_w(sys: LinearSystem, k: int, eta: float) -> OptimalCoarsening:
    """Analytic maximizer of causal emergence for macro dimension ``k``.

    Raises
    ------
    ConjugatePairSplit
        If ``k`` falls inside a complex-conjugate pair.
    DomainError
        If ``A`` has a zero eigenvalue.

    Warns
    -----
    RuntimeWarning
        If ``|lambda_k|`` and ``|lambda_(k+1)|`` nearly coincide, in which
        case the maximizer is not unique.
    """
    bound = delta_j_max(sys, k, eta)
    spec = eig_sorted(sys.A)
    m = spec.moduli
    if k < sys.n and m[k - 1] - m[k] < DEGENERACY_RTOL * m[0]:
        warnings.warn(
            f"|lambda_{k}| and |lambda_{k + 1}| nearly coincide; the optimal map is not unique",
            RuntimeWarning,
            stacklevel=2,
        )
    Q, retained = schur_top_k(sys.A.T, k)
    W0 = Q.T
    # the retained block must carry the top-k spectrum of A
    A_M = W0 @ sys.A @ W0.T
    got = np.sort(np.abs(np.linalg.eigvals(A_M)))[::-1]
    if not np.allclose(got, m[:k], rtol=1e-6, atol=1e-10 * max(1.0, m[0])):
        raise np.linalg.LinAlgError("Schur subspace does not reproduce the leading eigenvalues")
    W = canonical_signs(scale_to_constraint(sys, W0, eta))
    cm = CoarseMap(W)
    achieved = delta_j(sys, cm).delta_j
    return OptimalCoarsening(cm, achieved, bound, bound - achieved, [float(r) for r in retained])


@dataclass(frozen=True)
class CircleSolutionSet:
    """Maximizers ``W = [w1; w2]`` in three dimensions with ``k = 2``.

    Both rows lie in the plane orthogonal to ``constraint_plane_normal``.
    For the fixed second row ``w2`` the admissible first rows are the two
    points of the radius-``radius`` circle orthogonal to ``w2``; rotating
    the pair rigidly inside the plane sweeps the whole circle.
    """

    center: np.ndarray
    radius: float
    basis: np.ndarray  # rows: unit vectors spanning the plane, basis[1] || w2
    constraint_plane_normal: np.ndarray
    w2: np.ndarray

    def point(self, t: float) -> np.ndarray:
        a, b = self.basis
        return self.center + self.radius * (math.cos(t) * a + math.sin(t) * b)

    def coarse_map(self, t: float) -> np.ndarray:
        """``W(t)``: first row on the circle, second row co-rotated with it."""
        a, b = self.basis
        r2 = float(np.linalg.norm(self.w2))
        w2_t = r2 * (-math.sin(t) * a + math.cos(t) * b)
        return np.vstack([self.point(t), w2_t])

    def sample(self, n_points: int) -> np.ndarray:
        ts = np.arange(n_points) * (2 * math.pi / n_points)
        return np.stack([self.coarse_map(t) for t in ts])

    def admissible_points(self) -> np.ndarray:
        """The two first rows compatible with the fixed ``w2``."""
        return np.stack([self.point(0.0), self.point(math.pi)])


def circle_solution_set(v3, w2, sigma: float, eta: float) -> CircleSolutionSet:
    """Solution set of the optimal ``W`` for ``n = 3``, ``k = 2``, ``Sigma = sigma^2 I``.

    ``v3`` is the right eigenvector of the discarded eigenvalue; optimal
    rows are orthogonal to it. With orthogonal rows the constraint is tight
    when ``|w1| |w2| = exp(-2 eta)``, so the radius is ``exp(-2 eta) / |w2|``.
    """
    v3 = np.asarray(v3, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if v3.shape != (3,) or w2.shape != (3,):
        raise ValueError("v3 and w2 must be 3-vectors")
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError("sigma must be positive")
    if not math.isfinite(eta) or eta < 0:
        raise ValueError("eta must be finite and non-negative")
    nv, nw = np.linalg.norm(v3), np.linalg.norm(w2)
    if nv == 0 or nw == 0:
        raise DomainError("v3 and w2 must be nonzero")
    normal = v3 / nv
    if abs(w2 @ normal) > 1e-9 * nw:
        raise DomainError("w2 is not perpendicular to v3")
    b = w2 / nw
    a = np.cross(b, normal)
    a /= np.linalg.norm(a)
    radius = math.exp(-2.0 * eta) / nw
    return CircleSolutionSet(np.zeros(3), radius, np.vstack([a, b]), normal, w2.copy())


def random_search(sys: LinearSystem, k: int, eta: float, n_samples: int,
                  seed: int = 0, batch: int = 4096) -> OptimalCoarsening:
    """Best of ``n_samples`` Gaussian maps, each scaled to a tight constraint.

    Scaling fixes the noise part at ``eta``, so candidates are ranked by
    the dynamics part alone. The first maximizer in draw order wins. For
    non-normal ``A`` the result may exceed :func:`delta_j_max`.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n = sys.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    A = sys.A
    best_val, best_W = -math.inf, None
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        Ws = rng.standard_normal((m, k, n))
        Wt = np.swapaxes(Ws, 1, 2)
        # W A pinv(W) is similar to (W A W^T)(W W^T)^-1
        _, ld_num = np.linalg.slogdet(Ws @ A @ Wt)
        _, ld_den = np.linalg.slogdet(Ws @ Wt)
        score = (ld_num - ld_den) / k
        i = int(np.argmax(score))
        if score[i] > best_val:
            best_val, best_W = float(score[i]), Ws[i]
        done += m
    W = CoarseMap(scale_to_constraint(sys, best_W, eta))
    achieved = delta_j(sys, W).delta_j
    bound = _moduli_bound(sys, k, eta)
    moduli = np.sort(np.abs(np.linalg.eigvals(W.W @ A @ W.W_pinv)))[::-1]
    return OptimalCoarsening(W, achieved, bound, bound - achieved, [float(x) for x in moduli])


def orthogonal_optimal_w(lam, kappa, V, k: int) -> CoarseMap:
    """Best orthonormal-row map when ``A = V diag(lam) V^T`` and
    ``Sigma = V diag(kappa) V^T`` share the orthogonal eigenbasis ``V``.

    Keeps the eigenvectors with the ``k`` largest ``|lam| / sqrt(kappa)``.
    """
    lam = np.asarray(lam, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    V = np.asarray(V, dtype=float)
    n = lam.size
    if kappa.shape != (n,) or V.shape != (n, n):
        raise ValueError("lam, kappa and V dimensions do not match")
    if np.any(kappa <= 0):
        raise DomainError("kappa must be strictly positive")
    if np.max(np.abs(V.T @ V - np.eye(n))) > 1e-8:
        raise DomainError("V is not orthogonal")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    d = np.abs(lam) / np.sqrt(kappa)
    order = np.argsort(-d, kind="stable")
    if k < n and d[order[k - 1]] == d[order[k]]:
        warnings.warn("tie in |lam|/sqrt(kappa) across the cut; kept the earlier index",
                      RuntimeWarning, stacklevel=2)
    return CoarseMap(canonical_signs(V[:, order[:k]].T))

