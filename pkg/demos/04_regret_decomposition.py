"""Show the two halves of the online model's error shrinking at different rates.

Per step, each prediction is scored against the offline oracle's conditional
distribution by squared Hellinger distance, split into a distributional part
(wrong probabilities on the shared state space) and a state-space part (the
online cluster space not yet matching the offline one). Early on the state
space dominates — clusters are still forming; later the remaining error is
distributional and shrinks as the posterior sharpens.
"""

import argparse
from collections import defaultdict

from tripcast import RunConfig, SynthSpec, generate_synthetic, sample_ground_truth
from tripcast.pipeline import run_online_user


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=21)
    ap.add_argument("--trips", type=int, default=200)
    args = ap.parse_args()

    spec = SynthSpec(users=1, k_true=4, noise_m=25.0, outlier_prob=0.08,
                     trips_per_user=args.trips, seed=args.seed)
    trips, _ = generate_synthetic(sample_ground_truth(spec), spec.seed)
    result = run_online_user(trips, RunConfig(), "demo")

    rows = result.regret["bayes"]
    print("bayes model, per-step error against the oracle conditional:")
    print("step    h2      h2_d    h2_s")
    for row in rows:
        if row["step"] in (1, 2, 3, 5, 8, 13, 21, 40, 80, 120, 200):
            print(f"{row['step']:4d}  {row['h2']:.4f}  {row['h2_d']:.4f}  "
                  f"{row['h2_s']:.4f}")

    quarter = len(rows) // 4
    first = sum(r["h2"] for r in rows[:quarter]) / quarter
    last = sum(r["h2"] for r in rows[-quarter:]) / quarter
    first_s = sum(r["h2_s"] for r in rows[:quarter]) / quarter
    last_s = sum(r["h2_s"] for r in rows[-quarter:]) / quarter
    print()
    print(f"first-quartile mean h2 {first:.4f} (state-space part {first_s:.4f})")
    print(f"last-quartile  mean h2 {last:.4f} (state-space part {last_s:.4f})")

    print()
    print("final cumulative regret by oracle source cluster:")
    finals = defaultdict(dict)
    for name, model_rows in result.regret.items():
        for row in model_rows:
            finals[row["source_label"]][name] = row["cum_regret"]
    names = list(result.regret)
    print("source  " + "  ".join(f"{n:>13s}" for n in names))
    for source in sorted(finals):
        cells = "  ".join(f"{finals[source].get(n, float('nan')):13.2f}"
                          for n in names)
        print(f"{source:6d}  {cells}")
    print()
    print("greedy pays a constant point-mass penalty every step; the bayes and")
    print("expert curves flatten once the cluster space stabilizes")


if __name__ == "__main__":
    main()
