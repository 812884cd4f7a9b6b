"""How uncertain is a ranking when the payoffs are only known up to +/- w?

For growing half-widths w, print each profile's interval of possible
infinite-alpha ranking weight. Profiles whose lower end is 0 could drop out
of the top sink component altogether.

    python3 demos/ranking_uncertainty.py
"""

from metaeval.experiments import uncertainty_sweep
from metaeval.game import generate_bernoulli_game, make_rng


def main():
    game = generate_bernoulli_game(3, 0.1, make_rng(7), min_margin=0.05)
    print("player 1 win rates:\n", game.payoffs[0].round(3))
    for w, iv in uncertainty_sweep(game, [0.0, 0.05, 0.15]):
        if iv.pi_hi > 0:
            flag = "  may be excluded" if iv.excludable else ""
            print(f"w={w:<5} {iv.state}  [{iv.pi_lo:.3f}, {iv.pi_hi:.3f}]{flag}")


if __name__ == "__main__":
    main()
