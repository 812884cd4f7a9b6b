"""Elo summarises transitive games well and intransitive ones badly.

Fits batch Elo to a transitive win-rate table and to rock-paper-scissors,
then compares predicted and actual win rates. On the cycle every rating is
equal and every prediction is 0.5, while the single-population ranking still
sees the three strategies as a cycle of equal mass.

    python3 demos/elo_vs_alpharank.py
"""

import numpy as np

from metaeval import AlphaRankParams, PayoffTensor, alpharank
from metaeval.elo import OutcomeBatch, batch_elo_fit


def report(name, p):
    fit = batch_elo_fit(OutcomeBatch.from_win_matrix(p, counts=100))
    err = np.abs(fit.predict_matrix() - p)[~np.eye(len(p), dtype=bool)].max()
    dist = alpharank(PayoffTensor.from_bimatrix(p, 1 - p), AlphaRankParams(population_mode="single-population"))
    print(f"{name}: ratings {fit.ratings.round(3)}, worst prediction error {err:.3f}, "
          f"ranking masses {dist.pi.round(3)}")


def main():
    r = np.array([1.0, 0.0, -1.0])
    report("transitive", 1 / (1 + np.exp(-(r[:, None] - r[None, :]))))
    report("rock-paper-scissors", np.array([[0.5, 0.0, 1.0], [1.0, 0.5, 0.0], [0.0, 1.0, 0.5]]))


if __name__ == "__main__":
    main()
