"""Destination clustering: an offline density baseline and two online variants.

Labels are non-negative integers; OUTLIER (-1) marks points assigned to no
cluster. The online variants keep a pool of pending points that are promoted
to centroids once enough neighbors have been seen, so cluster structure can
appear, join, and merge as trips stream in. All radius comparisons are strict.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geo import GeoPoint, haversine_distance, pairwise_distances, weighted_mean_point

OUTLIER = -1

__all__ = [
    "OUTLIER",
    "ClusterParams",
    "NewCluster",
    "Merge",
    "offline_dbscan",
    "dbscan_with_cores",
    "OfflineClusters",
    "label_from_distances",
    "assign_source_label",
    "OnlineClustererV1",
    "OnlineClustererV2",
]


@dataclass(frozen=True)
class ClusterParams:
    """Shared clustering knobs.

    epsilon: neighborhood radius, meters. min_pts: density threshold including
    the point itself. radii_fraction: centroid absorb radius as a fraction of
    epsilon (first online variant). delta: nearest/second-nearest distance
    ratio a source must beat to take a label. d_max: hard cap on the nearest
    distance for source labeling. expire: age in seconds after which pending
    points are discarded (math.inf disables expiry).
    """

    epsilon: float = 100.0
    min_pts: int = 2
    radii_fraction: float = 0.5
    delta: float = 2.0
    d_max: float = 500.0
    expire: float = 28 * 86400.0

    def __post_init__(self):
        if self.epsilon <= 0 or self.d_max <= 0 or self.expire <= 0:
            raise ValueError("epsilon, d_max, and expire must be positive")
        if self.min_pts < 2:
            raise ValueError("min_pts must be at least 2")
        if not 0 < self.radii_fraction <= 1:
            raise ValueError("radii_fraction must lie in (0, 1]")
        if self.delta <= 1:
            raise ValueError("delta must exceed 1")


@dataclass(frozen=True)
class NewCluster:
    """A fresh cluster label entered the live set."""

    label: int


@dataclass(frozen=True)
class Merge:
    """Two or more clusters fused; the smallest source label survives."""

    sources: tuple[int, ...]
    survivor: int

    def __post_init__(self):
        if len(self.sources) < 2 or tuple(sorted(self.sources)) != self.sources:
            raise ValueError("sources must be >= 2 labels in ascending order")
        if self.survivor != self.sources[0]:
            raise ValueError("survivor must be the smallest source label")


# ---------------------------------------------------------------------------
# offline clustering
# ---------------------------------------------------------------------------

def dbscan_with_cores(points: list[GeoPoint],
                      params: ClusterParams) -> tuple[list[int], list[bool]]:
    """Density clustering over the full point set; returns (labels, core flags).

    Core points have at least min_pts neighbors within epsilon (strictly,
    counting themselves). Cores closer than epsilon share a cluster; a
    non-core point within epsilon of a core joins the cluster of its first
    core neighbor in input order. Cluster ids follow first core appearance,
    so the outcome is a pure function of the input order.
    """
    n = len(points)
    if n == 0:
        return [], []
    dist = pairwise_distances(points)
    adj = dist < params.epsilon
    core = adj.sum(axis=1) >= params.min_pts

    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    core_idx = np.flatnonzero(core)
    core_mask = np.asarray(core)
    for i in core_idx:
        for j in np.flatnonzero(adj[i] & core_mask):
            ri, rj = find(int(i)), find(int(j))
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)

    labels = [OUTLIER] * n
    next_label = 0
    by_root: dict[int, int] = {}
    for i in core_idx:
        root = find(int(i))
        if root not in by_root:
            by_root[root] = next_label
            next_label += 1
        labels[int(i)] = by_root[root]
    for i in range(n):
        if core_mask[i]:
            continue
        hits = np.flatnonzero(adj[i] & core_mask)
        if hits.size:
            labels[i] = labels[int(hits[0])]
    return labels, core_mask.tolist()


def offline_dbscan(points: list[GeoPoint], params: ClusterParams) -> list[int]:
    """Labels per input point; OUTLIER for density-unreachable points."""
    return dbscan_with_cores(points, params)[0]


class OfflineClusters:
    """A fitted offline clustering, queryable by position."""

    def __init__(self, points: list[GeoPoint], labels: list[int],
                 core_flags: list[bool], params: ClusterParams):
        if not (len(points) == len(labels) == len(core_flags)):
            raise ValueError("points, labels, and core flags must align")
        self.points = list(points)
        self.labels = list(labels)
        self.core_flags = list(core_flags)
        self.params = params
        self._members: dict[int, list[int]] = {}
        for idx, lab in enumerate(labels):
            if lab != OUTLIER:
                self._members.setdefault(lab, []).append(idx)

    @classmethod
    def fit(cls, points: list[GeoPoint], params: ClusterParams) -> "OfflineClusters":
        labels, cores = dbscan_with_cores(points, params)
        return cls(points, labels, cores, params)

    @property
    def live_labels(self) -> list[int]:
        return sorted(self._members)

    def resolve_label(self, label: int) -> int:
        return label

    def distances_to_clusters(self, p: GeoPoint) -> dict[int, float]:
        """Per-label distance from p to the nearest member point, meters."""
        out: dict[int, float] = {}
        for lab, idxs in sorted(self._members.items()):
            out[lab] = min(haversine_distance(p, self.points[i]) for i in idxs)
        return out

    def distances_matrix(self, queries: list[GeoPoint]) -> tuple[list[int], np.ndarray]:
        """Batch form: (labels, matrix of min member distance per query)."""
        labs = self.live_labels
        if not queries or not labs:
            return labs, np.zeros((len(queries), len(labs)))
        dist = pairwise_distances(queries, self.points)
        out = np.empty((len(queries), len(labs)))
        for k, lab in enumerate(labs):
            out[:, k] = dist[:, self._members[lab]].min(axis=1)
        return labs, out

    def assign_destination(self, p: GeoPoint) -> int:
        """Label a new destination: nearest core point within epsilon, else OUTLIER."""
        best = OUTLIER
        best_d = math.inf
        for idx, is_core in enumerate(self.core_flags):
            if not is_core:
                continue
            d = haversine_distance(p, self.points[idx])
            if d < self.params.epsilon and d < best_d:
                best_d = d
                best = self.labels[idx]
        return best


# ---------------------------------------------------------------------------
# source labeling
# ---------------------------------------------------------------------------

def label_from_distances(distances: dict[int, float], delta: float, d_max: float) -> int:
    """Pick a source label from per-cluster distances, or OUTLIER.

    With two or more clusters the nearest one is taken only when the
    second-nearest is more than delta times farther and the nearest is within
    d_max. A single cluster only needs the d_max cap. Equal distances never
    yield a label (the ratio collapses to 1).
    """
    if not distances:
        return OUTLIER
    ranked = sorted(distances.items(), key=lambda kv: (kv[1], kv[0]))
    d1 = ranked[0][1]
    if d1 > d_max:
        return OUTLIER
    if len(ranked) == 1:
        return ranked[0][0]
    d2 = ranked[1][1]
    ratio = (d2 / d1) if d1 > 0 else (math.inf if d2 > 0 else 1.0)
    return ranked[0][0] if ratio > delta else OUTLIER


def assign_source_label(p: GeoPoint, clusters, params: ClusterParams) -> int:
    """Label a trip source against any clusterer exposing distances_to_clusters."""
    return label_from_distances(clusters.distances_to_clusters(p), params.delta, params.d_max)


# ---------------------------------------------------------------------------
# online clustering
# ---------------------------------------------------------------------------

class _Pending:
    __slots__ = ("pos", "neighbor_count", "t", "seq")

    def __init__(self, pos: GeoPoint, neighbor_count: int, t: float, seq: int):
        self.pos = pos
        self.neighbor_count = neighbor_count
        self.t = t
        self.seq = seq


class _Centroid:
    __slots__ = ("pos", "count", "label", "radius")

    def __init__(self, pos: GeoPoint, count: int, label: int, radius: float = 0.0):
        self.pos = pos
        self.count = count
        self.label = label
        self.radius = radius


class _OnlineBase:
    """State and bookkeeping shared by both online variants."""

    variant = ""

    def __init__(self, params: ClusterParams):
        self.params = params
        self._pending: list[_Pending] = []
        self._centroids: list[_Centroid] = []
        self._merged: dict[int, int] = {}
        self._next_label = 0
        self._last_t = -math.inf
        self._seq = 0

    @property
    def live_labels(self) -> list[int]:
        return sorted({c.label for c in self._centroids})

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def resolve_label(self, label: int) -> int:
        """Follow merges so a historical label lands on its surviving cluster."""
        while label in self._merged:
            label = self._merged[label]
        return label

    def _check_time(self, t: float) -> None:
        if t < self._last_t:
            raise ValueError("observations must arrive in non-decreasing time order")
        self._last_t = t

    def _expire_pending(self, t: float) -> None:
        if math.isinf(self.params.expire):
            return
        self._pending = [p for p in self._pending if t - p.t <= self.params.expire]

    def _touch_pending(self, point: GeoPoint) -> list[_Pending]:
        hits = []
        for p in self._pending:
            if haversine_distance(point, p.pos) < self.params.epsilon:
                p.neighbor_count += 1
                hits.append(p)
        return hits

    def _fresh_label(self) -> int:
        label = self._next_label
        self._next_label += 1
        return label

    def _merge_labels(self, labels: list[int]) -> Merge:
        survivor = min(labels)
        for c in self._centroids:
            if c.label in labels:
                c.label = survivor
        for lab in labels:
            if lab != survivor:
                self._merged[lab] = survivor
        return Merge(tuple(sorted(labels)), survivor)

    def _run_candidates(self, candidates: list[_Pending], own: _Pending | None,
                        ) -> tuple[int | None, list]:
        """Promote qualifying pending points in arrival order.

        Returns (label given to `own` if it left the pending pool, events).
        """
        events = []
        own_label = None
        for cand in sorted(candidates, key=lambda p: (p.t, p.seq)):
            if cand.neighbor_count < self.params.min_pts - 1:
                continue
            if cand not in self._pending:
                continue
            label, event = self._promote(cand)
            self._pending.remove(cand)
            if event is not None:
                events.append(event)
            if cand is own:
                own_label = label
        return own_label, events

    def snapshot(self) -> dict:
        expire = self.params.expire
        return {
            "variant": self.variant,
            "params": {
                "epsilon": self.params.epsilon,
                "min_pts": self.params.min_pts,
                "radii_fraction": self.params.radii_fraction,
                "expire": "inf" if math.isinf(expire) else expire,
            },
            "next_label": self._next_label,
            "merged": {str(k): v for k, v in sorted(self._merged.items())},
            "centroids": [self._centroid_dict(c) for c in self._centroids],
            "pending": [
                {"lat": p.pos.lat, "lon": p.pos.lon,
                 "neighbor_count": p.neighbor_count, "t": p.t}
                for p in self._pending
            ],
        }

    def _centroid_dict(self, c: _Centroid) -> dict:
        return {"lat": c.pos.lat, "lon": c.pos.lon, "count": c.count, "label": c.label}


class OnlineClustererV1(_OnlineBase):
    """Online variant with fixed-radius centroids.

    Every promoted point becomes a centroid with absorb radius
    radii_fraction * epsilon, so a cluster is covered by many small discs.
    """

    variant = "v1"

    def __init__(self, params: ClusterParams):
        super().__init__(params)
        self._absorb = params.radii_fraction * params.epsilon
        self._reach = (params.radii_fraction + 1.0) * params.epsilon

    def observe(self, point: GeoPoint, t: float) -> tuple[int, list]:
        """Insert one destination; returns (label at observation, events).

        The label is OUTLIER while the point stays pending.
        """
        self._check_time(t)
        touched = self._touch_pending(point)
        dists = [(haversine_distance(point, c.pos), c) for c in self._centroids]
        label = OUTLIER
        own = None
        best = min(dists, key=lambda dc: dc[0], default=None)
        if best is not None and best[0] < self._absorb:
            best[1].count += 1
            label = best[1].label
        else:
            seeded = len(touched) + sum(c.count for d, c in dists if d < self._reach)
            own = _Pending(point, seeded, t, self._seq)
            self._seq += 1
            self._pending.append(own)
        own_label, events = self._run_candidates(touched + ([own] if own else []), own)
        if own_label is not None:
            label = own_label
        self._expire_pending(t)
        return self.resolve_label(label), events

    def _promote(self, cand: _Pending) -> tuple[int, object]:
        dists = [(haversine_distance(cand.pos, c.pos), c) for c in self._centroids]
        best = min(dists, key=lambda dc: dc[0], default=None)
        if best is not None and best[0] < self._absorb:
            # a centroid created earlier in this pass already covers it
            best[1].count += 1
            return best[1].label, None
        neighbor_labels: list[int] = []
        for d, c in dists:
            if d < self._reach and c.label not in neighbor_labels:
                neighbor_labels.append(c.label)
        event = None
        if not neighbor_labels:
            label = self._fresh_label()
            event = NewCluster(label)
        elif len(neighbor_labels) == 1:
            label = neighbor_labels[0]
        else:
            event = self._merge_labels(neighbor_labels)
            label = event.survivor
        self._centroids.append(_Centroid(cand.pos, 1, label))
        return label, event

    def distances_to_clusters(self, p: GeoPoint) -> dict[int, float]:
        """Per-label distance to the nearest centroid disc edge (0 inside)."""
        out: dict[int, float] = {}
        for c in self._centroids:
            d = max(0.0, haversine_distance(p, c.pos) - self._absorb)
            if c.label not in out or d < out[c.label]:
                out[c.label] = d
        return out

    def final_labels(self, points: list[GeoPoint]) -> list[int]:
        """Post-hoc assignment against the final state: within epsilon of the
        nearest centroid disc, else OUTLIER."""
        labels = []
        for p in points:
            best = None
            best_d = math.inf
            for c in self._centroids:
                d = haversine_distance(p, c.pos)
                if d < best_d:
                    best_d = d
                    best = c
            if best is not None and best_d - self._absorb < self.params.epsilon:
                labels.append(best.label)
            else:
                labels.append(OUTLIER)
        return labels


class OnlineClustererV2(_OnlineBase):
    """Online variant with one growing disc per cluster.

    Each cluster is summarized by a single centroid whose radius expands to
    cover the points it accepts; merging replaces the participating discs by
    one covering disc around their weighted mean center.
    """

    variant = "v2"

    def observe(self, point: GeoPoint, t: float) -> tuple[int, list]:
        """Insert one destination; returns (label at observation, events)."""
        self._check_time(t)
        touched = self._touch_pending(point)
        gaps = [(haversine_distance(point, c.pos) - c.radius, c) for c in self._centroids]
        label = OUTLIER
        own = None
        best = min(gaps, key=lambda gc: gc[0], default=None)
        if best is not None and best[0] < 0.0:
            best[1].count += 1
            label = best[1].label
        else:
            seeded = len(touched) + sum(c.count for g, c in gaps if g < self.params.epsilon)
            own = _Pending(point, seeded, t, self._seq)
            self._seq += 1
            self._pending.append(own)
        own_label, events = self._run_candidates(touched + ([own] if own else []), own)
        if own_label is not None:
            label = own_label
        self._expire_pending(t)
        return self.resolve_label(label), events

    def _promote(self, cand: _Pending) -> tuple[int, object]:
        gaps = [(haversine_distance(cand.pos, c.pos) - c.radius, c) for c in self._centroids]
        best = min(gaps, key=lambda gc: gc[0], default=None)
        if best is not None and best[0] < 0.0:
            best[1].count += 1
            return best[1].label, None
        neighbors = [(g, c) for g, c in gaps if g < self.params.epsilon]
        if not neighbors:
            label = self._fresh_label()
            self._centroids.append(_Centroid(cand.pos, 1, label, radius=0.0))
            return label, NewCluster(label)
        if len(neighbors) == 1:
            _, c = neighbors[0]
            c.radius = max(c.radius, haversine_distance(cand.pos, c.pos))
            c.count += 1
            return c.label, None
        # merge: covering disc around the count-weighted mean of the members
        members = [c for _, c in neighbors]
        positions = [c.pos for c in members] + [cand.pos]
        weights = [float(c.count) for c in members] + [1.0]
        center = weighted_mean_point(positions, weights)
        radius = max(
            max(haversine_distance(center, c.pos) + c.radius for c in members),
            haversine_distance(center, cand.pos),
        )
        count = sum(c.count for c in members) + 1
        labels = [c.label for c in members]
        event = self._merge_labels(labels)
        self._centroids = [c for c in self._centroids if c not in members]
        self._centroids.append(_Centroid(center, count, event.survivor, radius=radius))
        return event.survivor, event

    def distances_to_clusters(self, p: GeoPoint) -> dict[int, float]:
        """Per-label distance to the disc edge (0 inside)."""
        return {c.label: max(0.0, haversine_distance(p, c.pos) - c.radius)
                for c in self._centroids}

    def final_labels(self, points: list[GeoPoint]) -> list[int]:
        """Post-hoc assignment: within epsilon of the nearest disc, else OUTLIER."""
        labels = []
        for p in points:
            best = None
            best_g = math.inf
            for c in self._centroids:
                g = haversine_distance(p, c.pos) - c.radius
                if g < best_g:
                    best_g = g
                    best = c
            if best is not None and best_g < self.params.epsilon:
                labels.append(best.label)
            else:
                labels.append(OUTLIER)
        return labels

    def _centroid_dict(self, c: _Centroid) -> dict:
        return {"lat": c.pos.lat, "lon": c.pos.lon, "count": c.count,
                "label": c.label, "radius": c.radius}
