"""Joint synchronization-impairment and sparse channel estimation for
single-user MIMO-OFDM links.

Core pieces: the frequency-domain signal model (`model`), subspace pursuit
and least-squares recovery (`recovery`), the two-stage maximum-likelihood
grid search (`estimator`), Monte Carlo evaluation with numerical
Cramer-Rao bounds (`evaluation`) and the CLI harness (`cli`).
"""

__version__ = "0.1.0"

from .estimator import (EstimationResult, GridSpec, joint_estimate_ls,
                        joint_estimate_sp, residual_cost)
from .evaluation import (complexity_trend, monte_carlo_sweep, mse,
                         numerical_crlb, timing_failure_prob)
from .model import (EmbeddedChannel, ImpairmentParams, MeasurementSelection,
                    NoiseSpec, PilotBlock, SparseChannel, SystemConfig,
                    embed_timing, embedded_model_matrix, generate_channel,
                    generate_pilots, model_matrix, received_signal,
                    row_subsample, select_samples)
from .recovery import (HAVE_COMPILED, NormalizedMatrix, PursuitResult,
                       active_backend, least_squares, normalize_columns,
                       subspace_pursuit)
