"""Rank agents from noisy match outcomes.

Start from a known 3x3 win-rate table, pretend we can only observe it through
Bernoulli matches, and let ResponseGraphUCB decide which profiles to play.
Then compare the ranking of the estimated table with the ranking of the
true one.

    python3 demos/rank_noisy_metagame.py
"""

import numpy as np

from metaeval import (AlphaRankParams, BernoulliSimulator, PayoffTensor, alpharank, make_rng,
                      run_response_graph_ucb)
from metaeval.metrics import edge_errors, kendall_partial, ranking_from_distribution
from metaeval.alpharank import response_graph

# strategy i beats strategy j with probability win[i, j]
# (close win rates make the comparisons hard to resolve from samples)
win = np.array([[0.5, 0.62, 0.75],
                [0.38, 0.5, 0.65],
                [0.25, 0.35, 0.5]])
game = PayoffTensor.from_bimatrix(win, 1 - win, labels=[["a", "b", "c"]] * 2)


def show(title, dist):
    print(title)
    for group in dist.ordering[:4]:
        print("   ", ", ".join(map(str, group)), f"{dist.mass(group[0]):.4f}")


def main():
    params = AlphaRankParams()
    truth = alpharank(game, params)
    show("ranking of the true table:", truth)

    res = run_response_graph_ucb(BernoulliSimulator(game), game.shape, delta=0.1, scheme="CW",
                                 criterion="CP-UCB", budget_cap=200_000, rng=make_rng(0))
    print(f"\nResponseGraphUCB played {res.total_samples} matches "
          f"({'truncated' if res.truncated else 'all comparisons resolved'})")
    print("matches per profile:", res.samples_per_profile)
    print("edge errors vs truth:", edge_errors(res.graph, response_graph(game)))

    estimate = alpharank(res.estimated_table(), params)
    show("\nranking of the estimated table:", estimate)
    d = kendall_partial(ranking_from_distribution(truth), ranking_from_distribution(estimate))
    print("\nKendall distance between the two rankings:", d)


if __name__ == "__main__":
    main()
