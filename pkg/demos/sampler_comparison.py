"""Which sampling scheme and stopping rule needs the fewest matches?

Runs every (scheme, criterion) pair on the same generated 4x4 games with
shared outcome streams and prints the median number of matches and the
number of runs with a wrong response graph. Takes a minute or two.

    python3 demos/sampler_comparison.py
"""

from metaeval.experiments import median_by, sweep_rgucb

SCHEMES = ["U", "UE", "VW", "CW"]
CRITERIA = ["UCB", "CP-UCB", "R-UCB", "R-CP-UCB"]


def main(trials=5):
    rows = sweep_rgucb(SCHEMES, CRITERIA, [0.1], trials=trials, seed=0, n=4, gap=0.1, min_margin=0.1)
    med = {(r["scheme"], r["criterion"]): r["median_samples"]
           for r in median_by(rows, ["scheme", "criterion"], "samples")}
    wrong = {}
    for r in rows:
        wrong[r["scheme"], r["criterion"]] = wrong.get((r["scheme"], r["criterion"]), 0) + (r["edge_errors"] > 0)
    print(f"median matches over {trials} games (runs with any wrong edge)")
    print("scheme " + "".join(f"{c:>16}" for c in CRITERIA))
    for s in SCHEMES:
        print(f"{s:<7}" + "".join(f"{med[s, c]:>11.0f} ({wrong[s, c]})" for c in CRITERIA))
    # the relaxed criteria stop once the intervals overlap by less than the
    # relaxation, so they trade a little accuracy for far fewer matches


if __name__ == "__main__":
    main()
