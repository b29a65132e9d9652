"""Exact effective information and causal emergence for linear Gaussian
iteration systems ``x[t+1] = A x[t] + eps[t]``."""
from .errors import (CELabError, ConjugatePairSplit, DomainError, NotSPDError, RankError,
                     SpecError, StructuralError)
from .spectral import (OrderedSchur, Spectrum, eig_sorted, ordered_schur, pdet, pinv,
                       schur_top_k, singular_values)
from .system import (CoarseMap, LinearSystem, MacroSystem, check_constraint, entropy_gap,
                     gaussian_entropy, reduce)
from .ei import (EIBreakdown, ei_gaussian, ei_observed, ei_rectangular, ei_tpm, j_value,
                 local_j_nonlinear)
from .emergence import (EmergenceReport, degeneracy_bound, delta_j, delta_j_local, delta_j_max,
                        delta_j_orthogonal_bound, delta_j_shared_eigs, feasibility, sigma_det_bounds)
from .optimizer import (CircleSolutionSet, OptimalCoarsening, circle_solution_set, optimal_w,
                        orthogonal_optimal_w, random_search)
from .loss import LossReport, argmin_sd_check, dynamical_loss, loss_supremum
from .simulation import Trajectory, macro_pair, noise_covariance_check, simulate_micro
from .mi import MIEstimate, delta_i, knn_mi, sample_interventional
from .cases import CaseConfig, build_heat, build_random_walk, build_spiral, run_case

__version__ = "0.1.0"
