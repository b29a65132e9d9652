"""Canonical case studies and the experiments built on them.

Three systems are provided: independent random walkers with correlated
noise, a four-node heat-dissipation chain, and a damped rotation about an
axis in three dimensions. :func:`run_case` writes the full set of output
files for one of them.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import stats

from .emergence import delta_j, delta_j_max, delta_j_orthogonal_bound, feasibility
from .errors import ConjugatePairSplit
from .io import spec_to_dict, with_units, write_csv, write_json, write_matrix_csv, write_trajectory_csv
from .loss import loss_supremum
from .optimizer import optimal_w
from .simulation import macro_pair, simulate_micro
from .spectral import eig_sorted
from .system import CoarseMap, LinearSystem, reduce

__all__ = [
    "CaseConfig",
    "CASE_NAMES",
    "RANDOM_WALK_SIGMA",
    "RANDOM_WALK_W",
    "RANDOM_WALK_ETA",
    "HEAT_A",
    "SPIRAL_SCENARIOS",
    "rotation_matrix",
    "build_random_walk",
    "build_heat",
    "build_spiral",
    "build_case",
    "k_sweep",
    "theta_sweep",
    "run_case",
    "noise_spread_experiment",
    "shared_eig_correlation_experiment",
]

CASE_NAMES = ("random_walk", "heat", "spiral")

RANDOM_WALK_SIGMA = np.array([
    [0.4782, -0.1967, -0.0287, 0.0419],
    [-0.1967, 0.6711, 0.0233, -0.1067],
    [-0.0287, 0.0233, 0.3154, 0.0738],
    [0.0419, -0.1067, 0.0738, 0.4211],
])
# reference map with unit singular value; gap ln(2)/2 corresponds to epsilon = 0.5
RANDOM_WALK_W = np.array([[-0.0819, 0.1432, -0.8421, 0.5135]])
RANDOM_WALK_ETA = 0.3466

HEAT_A = np.array([
    [0.6, 0.2, 0.0, 0.0],
    [0.2, 0.7, 0.1, 0.0],
    [0.0, 0.1, 0.4, 0.1],
    [0.0, 0.0, 0.1, 0.3],
])
HEAT_SIGMA = 0.01

SPIRAL_U0 = (0.0, 0.1, 1.0)
SPIRAL_THETA = math.pi / 16
SPIRAL_SIGMA = 0.01
# scenario 1 contracts towards the axis, scenario 2 flattens onto a plane
SPIRAL_SCENARIOS = {
    1: {"psi": (0.94, 0.94, 0.99), "x0": (1.0, 1.0, 3.0)},
    2: {"psi": (0.99, 0.97, 0.2), "x0": (1.0, 1.0, 1.0)},
}

DEFAULT_STEPS = {"random_walk": 100, "heat": 50, "spiral": 200}


@dataclass(frozen=True)
class CaseConfig:
    name: str
    system: LinearSystem
    eta: float
    default_k: int
    extras: Dict[str, object] = field(default_factory=dict)

    @property
    def x0(self) -> np.ndarray:
        return np.asarray(self.extras.get("x0", np.zeros(self.system.n)), dtype=float)


def rotation_matrix(u, theta: float) -> np.ndarray:
    """Rotation by ``theta`` about the axis ``u`` (normalized internally)."""
    u = np.asarray(u, dtype=float)
    nu = np.linalg.norm(u)
    if u.shape != (3,) or nu == 0:
        raise ValueError("rotation axis must be a nonzero 3-vector")
    a, b, c = u / nu
    C, S = math.cos(theta), math.sin(theta)
    t = 1.0 - C
    return np.array([
        [C + a * a * t, a * b * t - c * S, a * c * t + b * S],
        [a * b * t + c * S, C + b * b * t, b * c * t - a * S],
        [a * c * t - b * S, b * c * t + a * S, C + c * c * t],
    ])


def build_random_walk() -> CaseConfig:
    sys = LinearSystem(np.eye(4), RANDOM_WALK_SIGMA)
    return CaseConfig("random_walk", sys, RANDOM_WALK_ETA, 1,
                      {"x0": np.zeros(4), "reference_w": RANDOM_WALK_W})


def build_heat() -> CaseConfig:
    sys = LinearSystem.isotropic(HEAT_A, HEAT_SIGMA)
    return CaseConfig("heat", sys, 0.0, 1, {"x0": np.full(4, 10.0)})


def _best_k(sys: LinearSystem, eta: float) -> int:
    best, best_k = -math.inf, 1
    for k in eig_sorted(sys.A).admissible_k():
        if k == sys.n:
            continue
        v = delta_j_max(sys, k, eta)
        if v > best + 1e-12:
            best, best_k = v, k
    return best_k


def build_spiral(u0=SPIRAL_U0, theta: float = SPIRAL_THETA, psi=SPIRAL_SCENARIOS[1]["psi"],
                 sigma: float = SPIRAL_SIGMA, eta: float = 0.0, x0=None,
                 default_k: Optional[int] = None) -> CaseConfig:
    """Damped rotation ``A = R(u, theta) diag(psi)`` with ``Sigma = sigma^2 I``.

    ``default_k`` defaults to the admissible ``k < 3`` with the largest
    maximal emergence.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (3,) or np.any(psi <= 0):
        raise ValueError("psi must be three positive numbers")
    u = np.asarray(u0, dtype=float)
    if np.linalg.norm(u) == 0:
        raise ValueError("rotation axis must be nonzero")
    R = rotation_matrix(u, theta)
    sys = LinearSystem.isotropic(R @ np.diag(psi), sigma)
    if x0 is None:
        x0 = SPIRAL_SCENARIOS[1]["x0"]
    k = default_k if default_k is not None else _best_k(sys, eta)
    extras = {"u": u / np.linalg.norm(u), "theta": theta, "psi": psi, "sigma": sigma,
              "R": R, "x0": np.asarray(x0, dtype=float)}
    return CaseConfig("spiral", sys, eta, k, extras)


def build_case(name: str, scenario: int = 1) -> CaseConfig:
    name = name.replace("-", "_")
    if name == "random_walk":
        return build_random_walk()
    if name == "heat":
        return build_heat()
    if name == "spiral":
        sc = SPIRAL_SCENARIOS[scenario]
        return build_spiral(psi=sc["psi"], x0=sc["x0"])
    raise ValueError(f"unknown case {name!r}; choose from {CASE_NAMES}")


def _dj_max_or_nan(sys, k, eta) -> float:
    try:
        return delta_j_max(sys, k, eta)
    except ConjugatePairSplit:
        return math.nan


def k_sweep(config: CaseConfig) -> List[dict]:
    """Maximal emergence for every ``k``; a pair-splitting ``k`` gives NaN.

    ``delta_j_orthogonal`` is the bound over maps with orthonormal rows;
    when ``A`` and ``Sigma`` commute (as for the random walk) it is attained.
    """
    sys, eta = config.system, config.eta
    rows = []
    for k in range(1, sys.n + 1):
        rows.append({
            "k": k,
            "delta_j_max": _dj_max_or_nan(sys, k, eta),
            "delta_j_orthogonal": delta_j_orthogonal_bound(sys, k),
        })
    return rows


def theta_sweep(config: CaseConfig, n_points: int = 64, ks: Optional[Sequence[int]] = None) -> List[dict]:
    """Maximal emergence of the spiral over ``theta`` in ``[0, 2 pi)``."""
    if config.name != "spiral":
        raise ValueError("theta sweep is defined for the spiral case only")
    ex = config.extras
    ks = sorted({1, config.default_k}) if ks is None else list(ks)
    sigma = ex["sigma"]
    rows = []
    for i in range(n_points):
        theta = 2 * math.pi * i / n_points
        A = rotation_matrix(ex["u"], theta) @ np.diag(ex["psi"])
        sys = LinearSystem.isotropic(A, sigma)
        for k in ks:
            rows.append({"theta": theta, "k": k, "delta_j_max": _dj_max_or_nan(sys, k, config.eta)})
    return rows


def _noise_density_rows(sys: LinearSystem, W: np.ndarray, n_grid: int = 201) -> (list, list):
    sd = np.sqrt(np.diag(sys.Sigma))
    macro_var = float((W @ sys.Sigma @ W.T)[0, 0])
    span = 4 * max(sd.max(), math.sqrt(macro_var))
    grid = np.linspace(-span, span, n_grid)
    header = ["e"] + [f"micro{j + 1}" for j in range(sys.n)] + ["macro"]
    rows = []
    for e in grid:
        rows.append([e] + [stats.norm.pdf(e, scale=s) for s in sd]
                    + [stats.norm.pdf(e, scale=math.sqrt(macro_var))])
    return header, rows


EMERGENCE_UNITS = {
    "j_micro": "nats", "j_macro": "nats", "delta_j": "nats", "delta_j1": "nats",
    "delta_j2": "nats", "delta_j_max": "nats", "constraint_eta": "nats",
    "L": "state units", "entropy_gap": "nats", "relative_rmse": "dimensionless",
    "loss_supremum": "state units",
}


def run_case(config: CaseConfig, k: Optional[int] = None, steps: Optional[int] = None,
             seed: int = 0, out_dir=".") -> dict:
    """Compute the optimal map for ``config`` and write every output file.

    Returns the emergence summary that was written to ``emergence.json``.
    """
    sys, eta = config.system, config.eta
    k = config.default_k if k is None else k
    steps = DEFAULT_STEPS.get(config.name, 100) if steps is None else steps
    opt = optimal_w(sys, k, eta)
    cm = opt.W
    rep = delta_j(sys, cm, eta=eta)
    macro = reduce(sys, cm)
    spec = eig_sorted(sys.A)
    am = np.linalg.eigvals(macro.A_M)
    am = am[np.lexsort((-am.imag, -am.real, -np.abs(am)))]

    micro = simulate_micro(sys, config.x0, steps, seed)
    y, y_hat = macro_pair(sys, cm, config.x0, steps, seed)
    rms = float(np.sqrt(np.mean(y.states ** 2)))
    rmse = float(np.sqrt(np.mean((y.states - y_hat.states) ** 2)))
    x_sup = float(np.max(np.linalg.norm(micro.states, axis=1)))
    eps_norm = float(np.max(np.linalg.norm(micro.noise_record, axis=1))) if steps else 0.0

    summary = rep.to_dict()
    summary.update({
        "case": config.name,
        "delta_j_max": opt.analytic_bound,
        "feasible": bool(feasibility(sys, k, eta)),
        "entropy_gap": rep.delta_j2,
        "W": cm.W,
        "eigenvalue_moduli": spec.moduli,
        "eigenvalues_real": spec.eigenvalues.real,
        "eigenvalues_imag": spec.eigenvalues.imag,
        "macro_eigenvalues_real": am.real,
        "macro_eigenvalues_imag": am.imag,
        "relative_rmse": rmse / rms if rms > 0 else 0.0,
        "loss_supremum": loss_supremum(sys, cm, x_sup, eps_norm, "paper").s_d,
        "seed": seed,
        "steps": steps,
    })
    ref = config.extras.get("reference_w")
    if ref is not None:
        ref_cm = CoarseMap(ref)
        r = delta_j(sys, ref_cm, eta=eta)
        S_M = ref_cm.W @ sys.Sigma @ ref_cm.W.T
        ratio = np.linalg.det(S_M) ** (1 / ref_cm.k) / np.linalg.det(sys.Sigma) ** (1 / sys.n)
        summary["reference"] = with_units(
            {"W": ref_cm.W, "delta_j": r.delta_j, "delta_j1": r.delta_j1, "delta_j2": r.delta_j2,
             "det_ratio": float(ratio), "constraint_satisfied": r.constraint_satisfied},
            EMERGENCE_UNITS)
    summary = with_units(summary, EMERGENCE_UNITS)

    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    p = lambda name: os.path.join(out_dir, name)  # noqa: E731
    write_json(p("system.json"), spec_to_dict(sys, cm, eta=eta, seed=seed))
    write_matrix_csv(p("w_optimal.csv"), cm.W)
    write_json(p("emergence.json"), summary)
    write_trajectory_csv(p("trajectory_micro.csv"), micro.states)
    write_trajectory_csv(p("trajectory_macro.csv"), y.states, prefix="y", extra={"yhat": y_hat.states})
    write_csv(p("sweep_k.csv"), ["k", "delta_j_max", "delta_j_orthogonal"],
              [[r["k"], r["delta_j_max"], r["delta_j_orthogonal"]] for r in k_sweep(config)])
    if config.name == "spiral":
        write_csv(p("sweep_theta.csv"), ["theta", "k", "delta_j_max"],
                  [[r["theta"], r["k"], r["delta_j_max"]] for r in theta_sweep(config)])
    if config.name == "random_walk":
        W_unit = ref if ref is not None else cm.W
        header, rows = _noise_density_rows(sys, np.atleast_2d(W_unit))
        write_csv(p("noise_density.csv"), header, rows)
    return summary


def _random_spd(rng, n) -> np.ndarray:
    B = rng.standard_normal((n, n))
    return B @ B.T / n + 0.05 * np.eye(n)


def noise_spread_experiment(n_systems: int = 200, n_maps: int = 100, n: int = 4, k: int = 1,
                            seed: int = 0) -> dict:
    """Random walks with random noise: spread of noise eigenvalues versus
    the best emergence among random orthonormal-row maps.

    Each ``Sigma`` is normalized to unit determinant, so only the shape of
    its spectrum varies. Returns the arrays and their Spearman correlation.
    """
    rng = np.random.default_rng(seed)
    spread = np.empty(n_systems)
    best = np.empty(n_systems)
    for i in range(n_systems):
        S = _random_spd(rng, n)
        S /= np.linalg.det(S) ** (1 / n)
        kappa = np.linalg.eigvalsh(S)
        spread[i] = kappa.std()
        Q = np.linalg.qr(rng.standard_normal((n_maps, n, k)))[0]
        Ws = np.swapaxes(Q, 1, 2)
        _, ld = np.linalg.slogdet(Ws @ S @ Q)
        # A = I, unit singular values: emergence is the noise part only
        best[i] = np.max(-0.5 * ld / k)
    rho = stats.spearmanr(spread, best).statistic
    return {"std_kappa": spread, "best_delta_j": best, "spearman": float(rho)}


def shared_eig_correlation_experiment(n_draws: int = 1000, n_maps: int = 100,
                                      lam: Sequence[float] = (0.8, 0.6, 0.4, 0.2), k: int = 2,
                                      seed: int = 0) -> dict:
    """Competition between the dynamics and noise parts of emergence.

    Each draw pairs ``lam`` with a random permutation ``kappa`` of the same
    values on a random shared eigenbasis, then samples orthonormal-row maps.
    Returns per-draw Pearson correlations ``corr(kappa, lam)`` and
    ``corr(delta_j1, delta_j2)`` and the slope of a least-squares line
    through them.
    """
    rng = np.random.default_rng(seed)
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    base = np.sort(lam)
    c_kl = np.empty(n_draws)
    c_12 = np.empty(n_draws)
    ld_A = np.sum(np.log(np.abs(lam)))
    for i in range(n_draws):
        kappa = rng.permutation(base)
        V = np.linalg.qr(rng.standard_normal((n, n)))[0]
        A = (V * lam) @ V.T
        S = (V * kappa) @ V.T
        Q = np.linalg.qr(rng.standard_normal((n_maps, n, k)))[0]
        Ws = np.swapaxes(Q, 1, 2)
        _, ld_AM = np.linalg.slogdet(Ws @ A @ Q)
        _, ld_SM = np.linalg.slogdet(Ws @ S @ Q)
        d1 = ld_AM / k - ld_A / n
        d2 = 0.5 * (np.sum(np.log(kappa)) / n - ld_SM / k)
        c_kl[i] = np.corrcoef(kappa, lam)[0, 1]
        c_12[i] = np.corrcoef(d1, d2)[0, 1]
    slope = float(np.polyfit(c_kl, c_12, 1)[0])
    return {"corr_kappa_lambda": c_kl, "corr_dj1_dj2": c_12, "slope": slope}
