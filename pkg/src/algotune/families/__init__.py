"""Parametrized algorithm families."""

from .catalog import (
    FAMILIES,
    ExpFamily,
    Family,
    KnapsackFamily,
    LloydsFamily,
    MwisFamily,
    SclFamily,
    SlinearFamily,
    adaptive_dual,
    make_family,
)
from .greedy import (
    GreedyFamilySpec,
    knapsack_critical_values,
    knapsack_greedy,
    knapsack_spec,
    knapsack_utilities,
    mwis_greedy,
    mwis_spec,
    mwis_stability_interval,
    run_scored_greedy,
)
from .linkage import (
    ClusterTree,
    ExpRule,
    Merge,
    SclRule,
    StabilityInterval,
    cluster_cost,
    clustering_utility,
    extract_k_clustering,
    linkage_tree,
    scl_stability_interval,
    scl_sweep,
)
from .lloyds import lloyds_alpha, lloyds_from_seeds, lloyds_seed
from .rounding import Embedding, expected_given_projection, phi, sdp_embed, slinear_flip_points, slinear_round

__all__ = [name for name in dir() if not name.startswith("_")]
