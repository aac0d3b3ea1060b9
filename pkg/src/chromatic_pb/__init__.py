"""Chromatic PAC-Bayes generalization bounds for interdependent data."""

from .bounds import (
    BoundResult,
    auc_bound,
    auc_linear_bound,
    beta_mixing_bound,
    chromatic_bound_I,
    chromatic_bound_II,
    generalized_chromatic_bound,
    iid_bound,
    phi_mixing_bound,
    ranking_bound,
    subgraph_bound,
)
from .covers import (
    BipartiteRankingShape,
    beta_block_decomposition,
    bipartite_ranking_cover,
    bipartite_ranking_graph,
    iid_cover,
    ranking_dependency_graph,
    ustat_ranking_cover,
)
from .depgraph import (
    DependencyGraph,
    FractionalCover,
    clique_number,
    fractional_chromatic_exact,
    greedy_chromatic_upper,
    validate_cover,
)
from .gibbs import GaussianLinearPosterior, LabeledDataset, LinearScorer, PairSet
from .klcore import kl_bernoulli, kl_inverse, pinsker_inverse

__version__ = "0.1.0"

__all__ = [
    "BoundResult",
    "auc_bound",
    "auc_linear_bound",
    "beta_mixing_bound",
    "chromatic_bound_I",
    "chromatic_bound_II",
    "generalized_chromatic_bound",
    "iid_bound",
    "phi_mixing_bound",
    "ranking_bound",
    "subgraph_bound",
    "BipartiteRankingShape",
    "beta_block_decomposition",
    "bipartite_ranking_cover",
    "bipartite_ranking_graph",
    "iid_cover",
    "ranking_dependency_graph",
    "ustat_ranking_cover",
    "DependencyGraph",
    "FractionalCover",
    "clique_number",
    "fractional_chromatic_exact",
    "greedy_chromatic_upper",
    "validate_cover",
    "GaussianLinearPosterior",
    "LabeledDataset",
    "LinearScorer",
    "PairSet",
    "kl_bernoulli",
    "kl_inverse",
    "pinsker_inverse",
]
