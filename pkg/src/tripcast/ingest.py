"""GPS fix ingestion: trip extraction, corpus filtering, file formats, and
synthetic corpus generation.

A trip is a movement between two stays. Extraction cuts a fix stream wherever
the recording gaps out or the vehicle sits still; filtering removes noise trips
and users too sparse to model.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .geo import GeoPoint, haversine_distance, offset_point

__all__ = [
    "GpsFix",
    "Trip",
    "extract_trips",
    "merge_close_trips",
    "filter_corpus",
    "read_fixes_csv",
    "write_fixes_csv",
    "read_trips_csv",
    "write_trips_csv",
    "SynthSpec",
    "UserGroundTruth",
    "sample_ground_truth",
    "generate_synthetic",
    "write_ground_truth",
    "read_ground_truth",
]

# Stop detection and corpus filtering thresholds.
STOP_SPEED_KMH = 0.1
STOP_MIN_S = 600.0
TRIP_MERGE_GAP_S = 10.0
MIN_TRIP_DISTANCE_M = 100.0
MIN_TRIP_DURATION_S = 240.0
MIN_USER_SPAN_S = 30 * 86400.0
MIN_TRIPS_PER_DAY = 1.0
DEFAULT_FIX_GAP_S = 300.0

FIX_CSV_HEADER = ["user_id", "t", "lat", "lon", "speed_kmh"]
TRIP_CSV_HEADER = ["user_id", "t_start", "t_end", "src_lat", "src_lon",
                   "dst_lat", "dst_lon", "dist_m", "dur_s"]


@dataclass(frozen=True)
class GpsFix:
    user_id: str
    t: float
    pos: GeoPoint
    speed_kmh: float | None = None


@dataclass(frozen=True)
class Trip:
    """One trip: source position/time to destination position/time."""

    user_id: str
    t_start: float
    t_end: float
    source: GeoPoint
    dest: GeoPoint
    distance_m: float

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"trip must have t_end > t_start ({self.t_start} .. {self.t_end})")
        if self.distance_m < 0:
            raise ValueError("trip distance must be non-negative")

    @property
    def duration_s(self) -> float:
        return self.t_end - self.t_start


def _speed_kmh(prev: GpsFix, cur: GpsFix, gap_s: float) -> float:
    """Speed at cur: the reported field, else displacement rate vs prev.

    A non-positive time delta counts as moving (inf) so duplicate timestamps
    never fabricate a stop.
    """
    if cur.speed_kmh is not None:
        return cur.speed_kmh
    if gap_s <= 0:
        return math.inf
    return haversine_distance(prev.pos, cur.pos) / gap_s * 3.6


def _segment_to_trip(seg: list[GpsFix], distance_mode: str) -> Trip | None:
    if len(seg) < 2 or not seg[-1].t > seg[0].t:
        return None
    if distance_mode == "straight":
        dist = haversine_distance(seg[0].pos, seg[-1].pos)
    else:
        dist = sum(haversine_distance(a.pos, b.pos) for a, b in zip(seg, seg[1:]))
    return Trip(seg[0].user_id, seg[0].t, seg[-1].t, seg[0].pos, seg[-1].pos, dist)


def extract_trips(fixes: list[GpsFix], fix_gap: float = DEFAULT_FIX_GAP_S,
                  distance_mode: str = "polyline") -> list[Trip]:
    """Cut one user's fix stream into trips.

    A trip ends when the inter-fix gap exceeds fix_gap seconds, or when speed
    stays below STOP_SPEED_KMH for at least STOP_MIN_S (the trip then ends at
    the stop's first fix, and the next trip departs from the stop's last slow
    fix). Trips closer than TRIP_MERGE_GAP_S are merged afterwards. Fixes must
    belong to a single user and be sorted by non-decreasing t.
    """
    if not fixes:
        return []
    if any(f.user_id != fixes[0].user_id for f in fixes):
        raise ValueError("extract_trips expects fixes from a single user")
    for prev, cur in zip(fixes, fixes[1:]):
        if cur.t < prev.t:
            raise ValueError("fixes must be sorted by non-decreasing t")

    trips: list[Trip] = []
    n = len(fixes)
    i = 0
    while i < n:
        seg = [fixes[i]]
        slow_anchor: int | None = None  # index into seg of the stop's first fix
        next_start = n
        j = i + 1
        while j < n:
            prev = seg[-1]
            cur = fixes[j]
            gap = cur.t - prev.t
            if gap > fix_gap:
                next_start = j
                break
            speed = _speed_kmh(prev, cur, gap)
            seg.append(cur)
            if speed < STOP_SPEED_KMH:
                if slow_anchor is None:
                    slow_anchor = len(seg) - 1
                if seg[-1].t - seg[slow_anchor].t >= STOP_MIN_S:
                    # sustained stop: close the trip at the stop's first fix and
                    # consume the remaining contiguous slow fixes
                    last_slow = j
                    k = j + 1
                    while k < n:
                        g2 = fixes[k].t - fixes[last_slow].t
                        if g2 > fix_gap:
                            break
                        if _speed_kmh(fixes[last_slow], fixes[k], g2) >= STOP_SPEED_KMH:
                            break
                        last_slow = k
                        k += 1
                    seg = seg[:slow_anchor + 1]
                    next_start = last_slow
                    break
            else:
                slow_anchor = None
            j += 1
        trip = _segment_to_trip(seg, distance_mode)
        if trip is not None:
            trips.append(trip)
        if next_start <= i:  # single trailing fix; nothing further to scan
            break
        i = next_start
    return merge_close_trips(trips)


def merge_close_trips(trips: list[Trip], gap_s: float = TRIP_MERGE_GAP_S) -> list[Trip]:
    """Merge consecutive trips separated by less than gap_s seconds.

    The merged trip keeps the first trip's source and the second's destination;
    distance is the sum plus the connecting hop.
    """
    merged: list[Trip] = []
    for trip in trips:
        if merged and trip.t_start - merged[-1].t_end < gap_s:
            head = merged.pop()
            hop = haversine_distance(head.dest, trip.source)
            merged.append(Trip(head.user_id, head.t_start, trip.t_end, head.source,
                               trip.dest, head.distance_m + hop + trip.distance_m))
        else:
            merged.append(trip)
    return merged


def filter_corpus(trips: list[Trip]) -> list[Trip]:
    """Drop noise trips, then users too sparse to model.

    Trips shorter than MIN_TRIP_DISTANCE_M or quicker than MIN_TRIP_DURATION_S
    go first; then users whose remaining history spans less than
    MIN_USER_SPAN_S or averages fewer than MIN_TRIPS_PER_DAY trips per day are
    removed entirely. Idempotent.
    """
    kept = [t for t in trips
            if t.distance_m >= MIN_TRIP_DISTANCE_M and t.duration_s >= MIN_TRIP_DURATION_S]
    spans: dict[str, list[float]] = {}
    counts: dict[str, int] = {}
    for t in kept:
        lo, hi = spans.get(t.user_id, (math.inf, -math.inf))
        spans[t.user_id] = [min(lo, t.t_start), max(hi, t.t_end)]
        counts[t.user_id] = counts.get(t.user_id, 0) + 1
    good_users = set()
    for uid, (lo, hi) in spans.items():
        span = hi - lo
        if span >= MIN_USER_SPAN_S and counts[uid] / (span / 86400.0) >= MIN_TRIPS_PER_DAY:
            good_users.add(uid)
    return [t for t in kept if t.user_id in good_users]


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def read_fixes_csv(path) -> tuple[list[GpsFix], int]:
    """Read a raw fix file; returns (fixes, number of malformed rows skipped)."""
    fixes: list[GpsFix] = []
    skipped = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FIX_CSV_HEADER:
            raise ValueError(f"bad fix CSV header: {header!r}")
        for row in reader:
            if not row:
                continue
            try:
                if len(row) != 5:
                    raise ValueError("wrong column count")
                speed = float(row[4]) if row[4] != "" else None
                fixes.append(GpsFix(row[0], float(row[1]),
                                    GeoPoint(float(row[2]), float(row[3])), speed))
            except ValueError:
                skipped += 1
    return fixes, skipped


def write_fixes_csv(fixes: list[GpsFix], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIX_CSV_HEADER)
        for f in fixes:
            speed = "" if f.speed_kmh is None else f"{f.speed_kmh:.3f}"
            writer.writerow([f.user_id, f"{f.t:.3f}", f"{f.pos.lat:.7f}",
                             f"{f.pos.lon:.7f}", speed])


def write_trips_csv(trips: list[Trip], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIP_CSV_HEADER)
        for t in trips:
            writer.writerow([t.user_id, f"{t.t_start:.3f}", f"{t.t_end:.3f}",
                             f"{t.source.lat:.7f}", f"{t.source.lon:.7f}",
                             f"{t.dest.lat:.7f}", f"{t.dest.lon:.7f}",
                             f"{t.distance_m:.3f}", f"{t.duration_s:.3f}"])


def read_trips_csv(path) -> list[Trip]:
    trips: list[Trip] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRIP_CSV_HEADER:
            raise ValueError(f"bad trip CSV header: {header!r}")
        for row in reader:
            if not row:
                continue
            if len(row) != 9:
                raise ValueError(f"bad trip row: {row!r}")
            trips.append(Trip(row[0], float(row[1]), float(row[2]),
                              GeoPoint(float(row[3]), float(row[4])),
                              GeoPoint(float(row[5]), float(row[6])), float(row[7])))
    return trips


# ---------------------------------------------------------------------------
# synthetic corpora
# ---------------------------------------------------------------------------

@dataclass
class SynthSpec:
    """Corpus-level knobs for the synthetic generator (flat key=value file)."""

    users: int = 10
    k_true: int = 4
    noise_m: float = 30.0
    outlier_prob: float = 0.1
    trips_per_user: int = 200
    area_lat: float = 57.7
    area_lon: float = 11.97
    area_radius_km: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.users < 1 or self.trips_per_user < 1:
            raise ValueError("users and trips_per_user must be at least 1")
        if self.k_true < 1:
            raise ValueError("k_true must be at least 1")
        if not 0.0 <= self.outlier_prob <= 1.0:
            raise ValueError("outlier_prob must lie in [0, 1]")
        if self.noise_m < 0 or self.area_radius_km <= 0:
            raise ValueError("noise_m must be >= 0 and area_radius_km > 0")

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "SynthSpec":
        kwargs = {}
        casts = {"users": int, "k_true": int, "trips_per_user": int, "seed": int,
                 "noise_m": float, "outlier_prob": float, "area_lat": float,
                 "area_lon": float, "area_radius_km": float}
        for key, value in mapping.items():
            if key not in casts:
                raise ValueError(f"unknown synth key: {key}")
            kwargs[key] = casts[key](value)
        return cls(**kwargs)


@dataclass
class UserGroundTruth:
    """Planted structure for one synthetic user.

    transition rows must be non-negative and sum to 1 within 1e-9.
    """

    user_id: str
    locations: list[GeoPoint]
    transition: list[list[float]]
    noise_m: float
    outlier_prob: float
    n_trips: int

    def __post_init__(self):
        k = len(self.locations)
        if k < 1:
            raise ValueError("at least one ground-truth location is required")
        if len(self.transition) != k or any(len(row) != k for row in self.transition):
            raise ValueError("transition matrix must be square over the locations")
        for row in self.transition:
            if any(p < 0 for p in row):
                raise ValueError("transition probabilities must be non-negative")
            if abs(sum(row) - 1.0) > 1e-9:
                raise ValueError(f"transition row sums to {sum(row)}, not 1")


def _uniform_disc_point(center: GeoPoint, radius_m: float, rng) -> GeoPoint:
    r = radius_m * math.sqrt(rng.random())
    theta = rng.random() * 2.0 * math.pi
    return offset_point(center, r * math.cos(theta), r * math.sin(theta))


def sample_ground_truth(spec: SynthSpec, rng=None,
                        min_separation_m: float = 1000.0) -> list[UserGroundTruth]:
    """Draw per-user locations and transition matrices from corpus knobs.

    Locations are rejection-sampled to sit at least min_separation_m apart so
    planted clusters stay resolvable. Each transition row concentrates on a
    favorite next location with a random remainder, which keeps rows distinct
    from the marginal.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    center = GeoPoint(spec.area_lat, spec.area_lon)
    radius_m = spec.area_radius_km * 1000.0
    truths = []
    for u in range(spec.users):
        locations: list[GeoPoint] = []
        attempts = 0
        while len(locations) < spec.k_true:
            cand = _uniform_disc_point(center, radius_m, rng)
            attempts += 1
            if attempts > 10000:
                raise ValueError("cannot place locations this far apart in this area")
            if all(haversine_distance(cand, p) >= min_separation_m for p in locations):
                locations.append(cand)
        k = spec.k_true
        transition = []
        for j in range(k):
            row = 0.45 * rng.dirichlet(np.ones(k))
            row[(j + 1) % k] += 0.55
            row = row / row.sum()
            transition.append([float(p) for p in row])
        truths.append(UserGroundTruth(f"u{u:03d}", locations, transition,
                                      spec.noise_m, spec.outlier_prob,
                                      spec.trips_per_user))
    return truths


def generate_synthetic(truths: list[UserGroundTruth], seed: int,
                       area_center: GeoPoint | None = None,
                       area_radius_m: float = 5000.0,
                       t0: float = 0.0,
                       trip_interval_s: float = 14400.0,
                       ) -> tuple[list[Trip], dict[str, list[int]]]:
    """Emit chained trips per user plus per-trip true destination labels.

    Destinations are the planted locations under isotropic Gaussian noise;
    with probability outlier_prob a trip instead ends at a uniform point in
    the area (label -1) and the latent state is untouched. Each trip starts
    where the previous one ended. Deterministic given the same truths and
    seed.
    """
    rng = np.random.default_rng(seed)
    trips: list[Trip] = []
    labels: dict[str, list[int]] = {}
    for gt in truths:
        center = area_center if area_center is not None else gt.locations[0]
        user_labels: list[int] = []
        state = 0
        noisy = lambda loc: offset_point(loc, float(rng.normal(0.0, gt.noise_m)),
                                         float(rng.normal(0.0, gt.noise_m)))
        pos = noisy(gt.locations[0])
        for i in range(gt.n_trips):
            if rng.random() < gt.outlier_prob:
                dest = _uniform_disc_point(center, area_radius_m, rng)
                label = -1
            else:
                state = int(rng.choice(len(gt.locations), p=gt.transition[state]))
                dest = noisy(gt.locations[state])
                label = state
            t_start = t0 + i * trip_interval_s
            dist = haversine_distance(pos, dest)
            duration = max(300.0, dist / 11.0)
            trips.append(Trip(gt.user_id, t_start, t_start + duration, pos, dest, dist))
            user_labels.append(label)
            pos = dest
        labels[gt.user_id] = user_labels
    return trips, labels


def write_ground_truth(truths: list[UserGroundTruth],
                       labels: dict[str, list[int]], path) -> None:
    payload = {
        "users": {
            gt.user_id: {
                "locations": [[p.lat, p.lon] for p in gt.locations],
                "transition": gt.transition,
                "labels": labels[gt.user_id],
            }
            for gt in truths
        }
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_ground_truth(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
