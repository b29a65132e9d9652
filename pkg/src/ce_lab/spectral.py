"""Linear-algebra substrate: sorted spectra, ordered real Schur forms,
pseudoinverse, pseudo-determinant and singular values.

Everything here is a pure function of its inputs. Eigenvalues are always
ordered by descending modulus; ties go to the larger real part, then the
larger imaginary part, so a complex-conjugate pair sits with its ``+i``
member first.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg as sla
from scipy.linalg import lapack

from .errors import ConjugatePairSplit, NotSPDError

__all__ = [
    "Spectrum",
    "OrderedSchur",
    "rank_tolerance",
    "numerical_rank",
    "eig_sorted",
    "ordered_schur",
    "schur_top_k",
    "pinv",
    "pdet",
    "singular_values",
    "spd_inv_sqrt",
]

RANK_RTOL = 1e-10


def _as_matrix(M, name="matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[None, :]
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def _as_square(A, name="A") -> np.ndarray:
    A = _as_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def rank_tolerance(s: np.ndarray, shape: Tuple[int, int]) -> float:
    """Threshold below which a singular value counts as zero."""
    smax = float(np.max(s)) if np.size(s) else 0.0
    return RANK_RTOL * smax * max(shape)


def numerical_rank(M) -> int:
    M = _as_matrix(M)
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rank_tolerance(s, M.shape)))


def _cut_is_clean(eigenvalues: np.ndarray, k: int) -> bool:
    head = eigenvalues[:k]
    return int(np.sum(head.imag > 0)) == int(np.sum(head.imag < 0))


@dataclass(frozen=True)
class Spectrum:
    """Modulus-sorted eigendecomposition ``A V = V diag(eigenvalues)``."""

    eigenvalues: np.ndarray
    moduli: np.ndarray
    right_eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def splits_pair(self, k: int) -> bool:
        """True if keeping the first ``k`` eigenvalues breaks a conjugate pair."""
        if not 0 <= k <= self.n:
            raise ValueError(f"k={k} outside [0, {self.n}]")
        return not _cut_is_clean(self.eigenvalues, k)

    def admissible_k(self) -> List[int]:
        return [k for k in range(1, self.n + 1) if not self.splits_pair(k)]

    def check_k(self, k: int) -> None:
        """Raise :class:`ConjugatePairSplit` unless ``1 <= k <= n`` is a clean cut."""
        if not 1 <= k <= self.n:
            raise ValueError(f"k={k} outside [1, {self.n}]")
        if self.splits_pair(k):
            ok = self.admissible_k()
            near = sorted(ok, key=lambda j: (abs(j - k), j))[:2]
            raise ConjugatePairSplit(k, sorted(near))


def _sort_order(ev: np.ndarray) -> np.ndarray:
    # lexsort keys run last-to-first: modulus, then real part, then imag part
    order = np.lexsort((-ev.imag, -ev.real, -np.abs(ev)))
    ev = ev[order]
    # repeated conjugate pairs come out as (+,+,-,-); interleave them
    i = 0
    out = list(order)
    while i < len(ev):
        j = i
        while j + 1 < len(ev) and np.abs(ev[j + 1]) == np.abs(ev[i]) and ev[j + 1].real == ev[i].real:
            j += 1
        if j > i:
            block = out[i:j + 1]
            vals = ev[i:j + 1]
            pos = [b for b, v in zip(block, vals) if v.imag > 0]
            neg = [b for b, v in zip(block, vals) if v.imag < 0]
            rest = [b for b, v in zip(block, vals) if v.imag == 0]
            if pos and len(pos) == len(neg):
                merged = [x for pair in zip(pos, neg) for x in pair]
                out[i:j + 1] = rest + merged
        i = j + 1
    return np.asarray(out, dtype=int)


def eig_sorted(A) -> Spectrum:
    """Eigendecomposition of a real square matrix, sorted by descending modulus.

    Raises
    ------
    ValueError
        If ``A`` is not square or has non-finite entries.
    numpy.linalg.LinAlgError
        If the eigensolver does not converge.
    """
    A = _as_square(A)
    w, V = np.linalg.eig(A)
    w = np.asarray(w, dtype=complex)
    V = np.asarray(V, dtype=complex)
    order = _sort_order(w)
    w = w[order]
    V = V[:, order]
    return Spectrum(eigenvalues=w, moduli=np.abs(w), right_eigenvectors=V)


@dataclass(frozen=True)
class OrderedSchur:
    """Real Schur form ``A = Q T Q^T`` with diagonal blocks sorted by modulus.

    ``block_sizes`` lists the diagonal blocks of ``T`` from top-left; a 2
    marks a complex-conjugate pair.
    """

    Q: np.ndarray
    T: np.ndarray
    block_sizes: Tuple[int, ...]

    @property
    def cuts(self) -> List[int]:
        """Leading dimensions that do not cut through a 2x2 block."""
        return [int(c) for c in np.cumsum(self.block_sizes)]

    def block_moduli(self) -> List[float]:
        out = []
        for start, size in _iter_blocks(self.block_sizes):
            out.append(_block_key(self.T, start, size)[0])
        return out

    def moduli(self) -> np.ndarray:
        """Eigenvalue moduli in diagonal order (pairs repeated)."""
        return np.repeat(self.block_moduli(), self.block_sizes)


def _iter_blocks(sizes):
    start = 0
    for s in sizes:
        yield start, s
        start += s


def _block_sizes(T: np.ndarray) -> Tuple[int, ...]:
    n = T.shape[0]
    sizes = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            sizes.append(2)
            i += 2
        else:
            sizes.append(1)
            i += 1
    return tuple(sizes)


def _block_key(T: np.ndarray, start: int, size: int) -> Tuple[float, float]:
    if size == 1:
        x = T[start, start]
        return abs(x), x
    B = T[start:start + 2, start:start + 2]
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    return float(np.sqrt(max(det, 0.0))), 0.5 * (B[0, 0] + B[1, 1])


def ordered_schur(A) -> OrderedSchur:
    """Real Schur decomposition with blocks reordered by descending modulus.

    Blocks are moved with LAPACK ``dtrexc`` one at a time (selection sort).
    Among exact ties the block already higher up stays first.
    """
    A = _as_square(A)
    n = A.shape[0]
    T, Q = sla.schur(A, output="real")
    T = np.array(T, order="F")
    Q = np.array(Q, order="F")
    p = 0
    while p < n:
        sizes = _block_sizes(T)
        best = None
        for start, size in _iter_blocks(sizes):
            if start < p:
                continue
            mod, re = _block_key(T, start, size)
            key = (-mod, -re)
            if best is None or key < best[0]:
                best = (key, start)
        if best[1] != p:
            T, Q, info = lapack.dtrexc(T, Q, best[1] + 1, p + 1)
            if info != 0:
                raise np.linalg.LinAlgError(f"dtrexc failed to reorder Schur blocks (info={info})")
        p += 2 if (p + 1 < n and T[p + 1, p] != 0.0) else 1
    T = np.asarray(T)
    Q = np.asarray(Q)
    return OrderedSchur(Q=Q, T=T, block_sizes=_block_sizes(T))


def schur_top_k(A, k: int) -> Tuple[np.ndarray, List[float]]:
    """Orthonormal basis of the invariant subspace of the ``k`` largest-modulus
    eigenvalues of ``A``.

    Returns
    -------
    Q_k : ndarray, shape (n, k)
        Orthonormal columns spanning the subspace.
    retained_moduli : list of float
        Moduli of the retained eigenvalues, descending.

    Raises
    ------
    ConjugatePairSplit
        If ``k`` falls inside a 2x2 block of the ordered Schur form.
    """
    A = _as_square(A)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    osf = ordered_schur(A)
    if k not in osf.cuts:
        near = sorted(osf.cuts, key=lambda j: (abs(j - k), j))[:2]
        raise ConjugatePairSplit(k, sorted(near))
    return osf.Q[:, :k].copy(), [float(m) for m in osf.moduli()[:k]]


def pinv(M) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD, using the package rank tolerance."""
    M = _as_matrix(M)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    keep = s > rank_tolerance(s, M.shape)
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def pdet(M) -> float:
    """Pseudo-determinant: modulus of the product of the nonzero eigenvalues.

    An eigenvalue counts as nonzero when its modulus exceeds the rank
    tolerance derived from the singular values. The zero matrix has no
    nonzero eigenvalues and gets the empty product, 1.0; callers that need
    to treat that case as degenerate must check the rank themselves.
    """
    M = _as_square(M, "M")
    if M.size == 0:
        return 1.0
    s = np.linalg.svd(M, compute_uv=False)
    tol = rank_tolerance(s, M.shape)
    w = np.linalg.eigvals(M)
    nz = w[np.abs(w) > tol]
    return float(np.abs(np.prod(nz))) if nz.size else 1.0


def singular_values(M) -> np.ndarray:
    return np.linalg.svd(_as_matrix(M), compute_uv=False)


def spd_inv_sqrt(S) -> np.ndarray:
    """Inverse of the principal (symmetric) square root of an SPD matrix."""
    S = _as_square(S, "Sigma")
    w, U = np.linalg.eigh(0.5 * (S + S.T))
    if np.any(w <= 0):
        raise NotSPDError("matrix is not positive definite")
    return (U / np.sqrt(w)) @ U.T
