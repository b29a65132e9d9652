import numpy as np

from ce_lab.system import LinearSystem

HEAT_MODULI = np.array([0.87015621, 0.5, 0.4, 0.22984379])
HEAT_LEFT_VEC = np.array([0.58556536, 0.7909706, 0.17475489, 0.03065035])
HEAT_DJ_K1 = 0.6656364266


def random_orthogonal(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_spd(rng, n, floor=0.05):
    B = rng.standard_normal((n, n))
    return B @ B.T / n + floor * np.eye(n)


def random_normal_matrix(rng, n, complex_pairs=True):
    """Q blockdiag(...) Q^T with real 1x1 blocks and scaled 2x2 rotations."""
    blocks = []
    i = 0
    while i < n:
        if complex_pairs and i + 1 < n and rng.random() < 0.4:
            r = rng.uniform(0.2, 1.5)
            t = rng.uniform(0.2, np.pi - 0.2)
            blocks.append(r * np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]))
            i += 2
        else:
            blocks.append(np.array([[rng.choice([-1, 1]) * rng.uniform(0.2, 1.5)]]))
            i += 1
    D = np.zeros((n, n))
    j = 0
    for b in blocks:
        s = b.shape[0]
        D[j:j + s, j:j + s] = b
        j += s
    Q = random_orthogonal(rng, n)
    return Q @ D @ Q.T


def random_system(rng, n, normal=False, sigma_iso=False):
    A = random_normal_matrix(rng, n) if normal else rng.standard_normal((n, n))
    S = np.eye(n) * rng.uniform(0.1, 2) if sigma_iso else random_spd(rng, n)
    return LinearSystem(A, S)


def separated_system(rng, n, min_gap=0.05):
    """General (non-normal) real A whose eigenvalue moduli are all distinct."""
    while True:
        A = rng.standard_normal((n, n))
        m = np.sort(np.abs(np.linalg.eigvals(A)))[::-1]
        # pairs share a modulus by construction; require gaps between distinct moduli
        uniq = []
        for v in m:
            if not uniq or abs(uniq[-1] - v) > 1e-9 * m[0]:
                uniq.append(v)
        if m[-1] > 0.05 and np.all(-np.diff(uniq) > min_gap * m[0]):
            return LinearSystem(A, random_spd(rng, n))
