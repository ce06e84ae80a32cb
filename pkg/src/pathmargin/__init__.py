"""Leaky-ReLU networks as linear classifiers in path space.

Train a network, embed its training data through the slope patterns it
induces, find the hard-margin separator in that path space, count the
support vectors, evaluate the sample-compression risk bound, and
recover the weights back from their path products.
"""

from .compression import (
    BoundBreakdown,
    BoundInputs,
    BreakdownRow,
    bound_exact_zte,
    bound_value,
    breakdown,
    is_vacuous,
    kl_bernoulli,
    kl_inverse,
)
from .exceptions import (
    BudgetExceededError,
    GatedRefusalError,
    InconsistentPathProductsError,
    NonSeparableError,
    PathmarginError,
    TrainingDivergedError,
    UnconvergedSolutionError,
    UnreachableNeuronError,
    ValidationError,
)
from .harness import (
    ExperimentConfig,
    RunRecord,
    boundary_grid,
    check_wbar_positive,
    check_wbar_positive_parity,
    count_unique_signatures,
    derive_seed,
    generate_dataset,
    load_dataset_csv,
    load_idx,
    margin_classifier,
    network_classifier,
    randomize_labels,
    run_pipeline,
    run_sweep,
    save_dataset_csv,
)
from .maxmargin import (
    MarginSolution,
    agreement,
    cosine_similarity,
    extract_nsvs,
    margin_predict,
    margin_predict_batch,
    reconstruct_wbar,
    solve_hard_margin,
)
from .network import (
    DEFAULT_PATH_BUDGET,
    ActivationSignature,
    LabeledDataset,
    NetworkConfig,
    NetworkWeights,
    PathVector,
    TrainingConfig,
    TrainResult,
    classify,
    classify_batch,
    forward,
    forward_batch,
    forward_via_paths,
    load_weights,
    loss_and_gradients,
    path_products,
    save_weights,
    train_sgd,
    zero_training_error,
)
from .pathspace import (
    GramMatrix,
    cross_kernel_matrix,
    embed,
    kernel,
    kernel_bruteforce,
    kernel_matrix,
    signature_stability,
    stability_threshold,
)
from .skeleton import (
    PruneResult,
    Skeleton,
    classifier_count_bound,
    normalize_to_skeleton,
    prune_dead_neurons,
    recover_weights,
)

__version__ = "0.1.0"
