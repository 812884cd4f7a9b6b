"""Ranking agents in noisy meta-games.

alpha-Rank rankings, adaptive sampling of match-ups with ResponseGraphUCB,
sample-complexity calculators, ranking-weight intervals under payoff
uncertainty, batch Elo and low-rank completion of win-rate matrices.
"""

from metaeval.alpharank import (
    MULTI,
    SINGLE,
    AlphaRankParams,
    ComplexityInstance,
    RankingDistribution,
    ResponseGraph,
    TransitionModel,
    alpharank,
    build_infinite_alpha_transitions,
    build_transition_matrix,
    find_mccs,
    mcc_stationary,
    response_graph,
    sample_complexity_finite_alpha,
    sample_complexity_infinite_alpha,
    stationary_distribution,
)
from metaeval.completion import MaskedMatrix, alternating_minimization, complete_and_rank
from metaeval.confidence import ConfidenceInterval, confidence_interval, is_resolved
from metaeval.elo import EloRatings, OutcomeBatch, batch_elo_fit, elo_predict, elo_sample_complexity
from metaeval.errors import ContractViolation, ConvergenceError, InputError
from metaeval.game import (
    BernoulliSimulator,
    GameShape,
    OutcomeSimulator,
    PayoffTensor,
    generate_bernoulli_game,
    load_table,
    make_rng,
    save_table,
)
from metaeval.metrics import PartialRanking, edge_errors, kendall_partial, ranking_from_distribution
from metaeval.rgucb import RGUCBResult, run_response_graph_ucb, run_symmetric_rgucb
from metaeval.uncertainty import (
    PayoffBounds,
    RankingInterval,
    UncertainResponseGraph,
    classify_edges,
    mcc_membership_possible,
    ranking_weight_interval,
    ssp_extremal_return_time,
)

__version__ = "0.1.0"
