"""Stream destinations into the online clusterers and narrate the events.

Three planted places plus stray noise, arrival order shuffled. Both online
variants see the identical stream; the offline batch clustering of the full
set is printed for reference.
"""

import argparse

import numpy as np

from tripcast import (
    ClusterParams,
    GeoPoint,
    OnlineClustererV1,
    OnlineClustererV2,
    offline_dbscan,
)
from tripcast.geo import offset_point

CENTER = GeoPoint(57.70, 11.97)
PLACES = {"home": (0.0, 0.0), "work": (2500.0, 400.0), "gym": (-900.0, -1800.0)}


def make_stream(rng, n=40, noise_m=25.0):
    points, truth = [], []
    names = list(PLACES)
    for _ in range(n):
        if rng.random() < 0.08:
            points.append(offset_point(CENTER, rng.uniform(-4000, 4000),
                                       rng.uniform(-4000, 4000)))
            truth.append("stray")
        else:
            name = names[rng.integers(0, len(names))]
            e, x = PLACES[name]
            points.append(offset_point(CENTER, e + rng.normal(0, noise_m),
                                       x + rng.normal(0, noise_m)))
            truth.append(name)
    return points, truth


def narrate(clusterer, points, truth):
    print(f"--- {clusterer.variant} ---")
    for i, (p, name) in enumerate(zip(points, truth)):
        label, events = clusterer.observe(p, 600.0 * i)
        for ev in events:
            print(f"  step {i:2d} ({name:5s}): {ev}")
        if i in (0, 1) or (i < 8 and label == -1):
            state = "pending" if label == -1 else f"cluster {label}"
            print(f"  step {i:2d} ({name:5s}): -> {state}")
    snap = clusterer.snapshot()
    sizes = {}
    for c in snap["centroids"]:
        sizes[c["label"]] = sizes.get(c["label"], 0) + c["count"]
    print(f"  final: {len(sizes)} clusters, sizes {dict(sorted(sizes.items()))}, "
          f"{len(snap['pending'])} pending")
    return clusterer.final_labels(points)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--steps", type=int, default=40)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    points, truth = make_stream(rng, n=args.steps)
    params = ClusterParams(epsilon=100.0, min_pts=2)

    v1 = narrate(OnlineClustererV1(params), points, truth)
    v2 = narrate(OnlineClustererV2(params), points, truth)
    batch = offline_dbscan(points, params)

    print("--- final labels on the full stream ---")
    print("place   offline  v1  v2")
    shown = set()
    for name, b, a, c in zip(truth, batch, v1, v2):
        if name not in shown:
            shown.add(name)
            print(f"{name:7s} {b:7d} {a:3d} {c:3d}")
    agree_v1 = sum(1 for b, a in zip(batch, v1) if (b == -1) == (a == -1))
    print(f"offline/v1 outlier agreement: {agree_v1}/{len(points)} points")


if __name__ == "__main__":
    main()
