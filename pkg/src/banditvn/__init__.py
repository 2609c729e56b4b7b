"""Stochastic linear bandits on the unit sphere with linearly vanishing noise.

A simulation library plus benchmark CLI: batched eigenvector-pair exploration
with weighted least squares (``linucb-vn``), a standard optimistic baseline,
environment models, analytical verification oracles, and an experiment
harness with scaling-law fits.
"""

from .env import EnvironmentSpec, NoiseMode, RewardSample, instantaneous_regret, random_unit_vector, sample_reward
from .errors import (
    BanditVnError,
    ConfigurationError,
    EigenConvergenceError,
    FitError,
    InvariantError,
    NotPositiveDefiniteError,
    PreconditionError,
)
from .estimator import ConfidenceReport, EstimatorState, absorb, beta, confidence_report, new_state, refresh_eig
from .harness import (
    AggregateTrace,
    BatchRecord,
    ExperimentConfig,
    ExperimentResult,
    FitModel,
    FitResult,
    RunTrace,
    config_from_json,
    emit_csv,
    emit_svg,
    fit_curve,
    fit_points,
    read_aggregate_csv,
    run_experiment,
    run_single,
    verify,
)
from .linalg import EigenDecomp, SymMat, eigh, logdet_spd, rank_one_add, solve_spd
from .oracle2d import Oracle2dInput, check_distance_lemma, exact_min_eigenvalue_2d
from .policies import (
    BaselineMaximizerConfig,
    BatchPlan,
    OmegaMode,
    PolicyConfig,
    PolicyKind,
    StepResult,
    build_batch,
    compute_lambda0,
    fixed_oracle_step,
    linucb_baseline_step,
    linucbvn_step,
    omega,
    policy_step,
)

__version__ = "0.1.0"
