"""End-to-end run on a small synthetic corpus: online vs offline, via the CLI.

Generates a 10-user corpus, runs the streaming pipeline (v1 clustering, all
models) and the train-once offline baseline, then reads the emitted CSVs
back and prints the comparison the larger acceptance corpus is scored on.
"""

import argparse
import csv
import tempfile
from collections import defaultdict
from pathlib import Path

from tripcast.cli import main as tripcast_main


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=17)
    ap.add_argument("--users", type=int, default=10)
    args = ap.parse_args()

    base = Path(tempfile.mkdtemp(prefix="tripcast_demo_"))
    spec_path = base / "corpus.cfg"
    spec_path.write_text(f"users = {args.users}\nk_true = 4\nnoise_m = 30\n"
                         f"outlier_prob = 0.1\ntrips_per_user = 200\n"
                         f"seed = {args.seed}\n")

    print(f"workspace: {base}")
    assert tripcast_main(["synth", str(spec_path), "--out", str(base)]) == 0
    trips = base / "trips.csv"
    assert tripcast_main(["run", str(trips), "--out", str(base / "online")]) == 0
    assert tripcast_main(["run", str(trips), "--out", str(base / "offline"),
                          "--set", "variant=offline"]) == 0

    print()
    print("mean acc_all by (variant, model):")
    acc = defaultdict(list)
    for out in ("online", "offline"):
        for row in read_rows(base / out / "accuracy.csv"):
            if row["acc_all"] != "":
                acc[(row["variant"], row["model"])].append(float(row["acc_all"]))
    for key in sorted(acc):
        vals = acc[key]
        print(f"  {key[0]:8s} {key[1]:13s} {sum(vals) / len(vals):.4f}  "
              f"({len(vals)} users)")
    gap = abs(sum(acc[('v1', 'bayes')]) / len(acc[('v1', 'bayes')])
              - sum(acc[('offline', 'bayes')]) / len(acc[('offline', 'bayes')]))
    print(f"  online/offline parity gap (bayes): {gap:.4f}")

    print()
    finals = read_rows(base / "online" / "agreement_final.csv")
    for col in ("ami", "ari", "v_measure"):
        mean = sum(float(r[col]) for r in finals) / len(finals)
        print(f"mean final {col:9s} vs offline oracle: {mean:.4f}")

    print()
    print("artifacts written:")
    for p in sorted((base / "online").glob("*")):
        print(f"  {p.relative_to(base)}")


if __name__ == "__main__":
    main()
