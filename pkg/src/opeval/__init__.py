"""Off-policy evaluation for contextual bandits.

Importance-weighted and model-based value estimators for logged bandit
data, threshold-switching estimators with automatic bias-variance tuning,
a multiclass-to-bandit experiment harness, and numerical verification of
exact risk expressions and minimax risk floors on finite instances.
"""

from .core import (
    AbsoluteContinuityError,
    BanditLog,
    DegenerateNormalizerError,
    DegenerateWeightsError,
    FiniteInstance,
    FunctionPolicy,
    InvalidProbabilityError,
    LogRecord,
    LogValidationReport,
    MissingLoggingPolicyError,
    OpevalError,
    Policy,
    TablePolicy,
    UniformPolicy,
    importance_weight,
    importance_weights,
    policy_value_exact,
    read_log,
    validate_log,
    write_log,
)
from .estimators import (
    ESTIMATOR_NAMES,
    ConstantModel,
    EstimateReport,
    RewardModel,
    TabularRewardModel,
    ZeroModel,
    dm,
    dr,
    geometric_grid,
    ips,
    switch_dr_estimate,
    switch_estimate,
    threshold_grid,
    trim_ips,
    trun_ips,
)
from .tuning import (
    TuningTrace,
    bias_bound_sq,
    magic_combine,
    per_record_value,
    per_record_values,
    select_tau,
    tuned_switch,
    tuned_switch_dr,
    tuned_trim_ips,
    tuned_trun_ips,
    var_hat,
)
from .reward_model import (
    ArgmaxPolicy,
    CrossFitPair,
    LogisticModel,
    LogisticRewardModel,
    SoftmaxPolicy,
    TrainerConfig,
    cross_fit,
    cross_fitted_dr,
    predict_reward,
    train_policy_model,
    train_reward_model,
)
from .bandit_sim import (
    DETERMINISTIC,
    NOISY,
    MulticlassDataset,
    RewardChannel,
    covariate_shift_subsample,
    ground_truth_value,
    load_csv,
    make_policies,
    save_csv,
    simulate_log,
    synth_dataset,
)
from .theory_check import (
    HardPair,
    MCResult,
    bernoulli_hard_prior,
    c_gamma,
    dr_closed_form_mse,
    empirical_mse,
    gaussian_hard_pair,
    kl_bernoulli_bound,
    lb_rmax_expr,
    lb_sigma_expr,
    minimax_lower_bound,
    simulate_estimates,
    switch_mse_bound,
)
from .harness import (
    DatasetSpec,
    EstimatorSpec,
    ExperimentConfig,
    ResultRow,
    run_experiment,
    run_oracle_tau,
    write_results_csv,
)
from .seeding import mix64

__version__ = "0.1.0"
