"""Finite-sample identification of LTI state-space systems from a single
input/output trajectory.

The pipeline: simulate or load one trajectory, recover the Markov parameter
matrix by least squares, realize a balanced state-space model through the
block-Hankel SVD, and compare the measured errors against the closed-form
finite-sample bounds.
"""

from .bounds import (BoundConfig, BoundReport, InfiniteOperatorBounds, RobustnessBounds,
                     bound_full, bound_simple, corollary_robustness_bounds,
                     hankel_perturbation_bounds, hokalman_robustness_bounds,
                     horizon_condition, infinite_operator_bounds, tail_spectral_bound)
from .estimation import (Conditioning, RegressionData, build_regression,
                         least_squares_markov, predict_output, prediction_error_bound)
from .exceptions import (FixedPointError, InsufficientDataError, LtisidError,
                         RankDeficientError, SimulationOverflowError, UnstableSystemError)
from .experiment import (ExperimentConfig, load_experiment_config, read_results_csv,
                         run_cell, run_experiment, save_experiment_config)
from .hankel import (BlockHankel, RealizationResult, build_hankel, build_padded_hankel,
                     clip_singular_values, hankel_shape, ho_kalman, rank_n_approx,
                     split_hankel, suggest_order)
from .markov import MarkovParams
from .metrics import (AlignmentResult, ErrorReport, error_report, frequency_response,
                      h2_norm, hinf_norm, joint_procrustes, procrustes_align,
                      system_difference)
from .plots import plot_results
from .systems import (NoiseModel, StateSpace, SystemStats, Trajectory, dlyap,
                      forced_response, make_rng, markov_params, noise_response_map,
                      phi_ratio, random_system, simulate, spectral_radius,
                      steady_state_cov, system_stats)

__version__ = "0.1.0"
