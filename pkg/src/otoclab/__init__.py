"""otoc-lab: exact Weingarten calculus, OTOC distinguishing experiments,
and adaptive learning-tree POVM simulation."""

from .linalg import (
    adjoint,
    make_rng,
    multiply,
    sample_haar_unitary,
    tensor_product,
    unitarity_defect,
    zero_state,
)
from .learning_tree import (
    EXACT_ENUMERATION_CAP,
    HardnessReport,
    LeafDistribution,
    QueryKind,
    RoundSpec,
    Strategy,
    child_sum_check,
    depolarizing_reference,
    ensemble_leaf_distribution,
    hardness_experiment,
    leaf_distribution_to_json,
    leaf_mass_defect,
    lecam_success_bound,
    run_tree_exact,
    sample_trajectory,
    tv_distance,
    validate_povm,
)
from .otoc import (
    EnsembleKind,
    expected_otoc_exact,
    expected_otoc_weingarten,
    monte_carlo_expected_otoc,
    otoc_value,
    sample_ensemble_unitary,
    success_probability,
    theorem1_trial,
)
from .permutations import (
    compose,
    cycle_type,
    enumerate_group,
    inverse,
    longest_cycle_census,
    num_cycles,
)
from .strategies import available_strategies, build_strategy
from .weingarten import (
    gram_matrix,
    lemma6_sum,
    monte_carlo_moment,
    orthogonality_holds,
    weingarten_moment,
    weingarten_table,
    wg_asymptotic_report,
)

__version__ = "0.1.0"

__all__ = [
    "EXACT_ENUMERATION_CAP",
    "EnsembleKind",
    "HardnessReport",
    "LeafDistribution",
    "QueryKind",
    "RoundSpec",
    "Strategy",
    "adjoint",
    "available_strategies",
    "build_strategy",
    "child_sum_check",
    "compose",
    "cycle_type",
    "depolarizing_reference",
    "ensemble_leaf_distribution",
    "enumerate_group",
    "expected_otoc_exact",
    "expected_otoc_weingarten",
    "gram_matrix",
    "hardness_experiment",
    "inverse",
    "leaf_distribution_to_json",
    "leaf_mass_defect",
    "lecam_success_bound",
    "lemma6_sum",
    "longest_cycle_census",
    "make_rng",
    "monte_carlo_expected_otoc",
    "monte_carlo_moment",
    "multiply",
    "num_cycles",
    "orthogonality_holds",
    "otoc_value",
    "run_tree_exact",
    "sample_ensemble_unitary",
    "sample_haar_unitary",
    "sample_trajectory",
    "success_probability",
    "tensor_product",
    "theorem1_trial",
    "tv_distance",
    "unitarity_defect",
    "validate_povm",
    "weingarten_moment",
    "weingarten_table",
    "wg_asymptotic_report",
    "zero_state",
]
