"""Offline and online clustering behavior on hand-traced fixtures.

Positions are built on a local east/north tangent plane around a fixed origin
so distances in meters are known by construction.
"""

import json
import math

import pytest

from tripcast.clustering import (
    OUTLIER,
    ClusterParams,
    Merge,
    NewCluster,
    OfflineClusters,
    OnlineClustererV1,
    OnlineClustererV2,
    assign_source_label,
    label_from_distances,
    offline_dbscan,
)
from tripcast.geo import GeoPoint, haversine_distance, offset_point

ORIGIN = GeoPoint(57.70, 11.97)


def pt(east, north=0.0):
    return offset_point(ORIGIN, east, north)


PARAMS = ClusterParams(epsilon=100.0, min_pts=2, radii_fraction=0.5)


def test_cluster_params_validation():
    with pytest.raises(ValueError):
        ClusterParams(epsilon=0.0)
    with pytest.raises(ValueError):
        ClusterParams(min_pts=1)
    with pytest.raises(ValueError):
        ClusterParams(radii_fraction=1.5)
    with pytest.raises(ValueError):
        ClusterParams(delta=1.0)


def test_event_validation():
    with pytest.raises(ValueError):
        Merge((3, 1), 1)
    with pytest.raises(ValueError):
        Merge((1,), 1)
    with pytest.raises(ValueError):
        Merge((1, 3), 3)
    assert NewCluster(4).label == 4


# ---------------------------------------------------------------------------
# offline clustering
# ---------------------------------------------------------------------------

def test_offline_two_close_points_form_cluster():
    labels = offline_dbscan([pt(0.0), pt(10.0)], PARAMS)
    assert labels == [0, 0]


def test_offline_far_points_are_outliers():
    labels = offline_dbscan([pt(0.0), pt(1000.0), pt(2000.0)], PARAMS)
    assert labels == [OUTLIER] * 3


def test_offline_empty_input():
    assert offline_dbscan([], PARAMS) == []


def test_offline_two_blobs_and_noise():
    blob_a = [pt(e) for e in (0.0, 20.0, 40.0)]
    blob_b = [pt(e) for e in (2000.0, 2030.0)]
    noise = [pt(5000.0)]
    labels = offline_dbscan(blob_a + blob_b + noise, PARAMS)
    assert labels == [0, 0, 0, 1, 1, OUTLIER]


def test_offline_epsilon_boundary_is_strict():
    # millimeter margins around epsilon; the comparison is strict
    labels = offline_dbscan([pt(0.0), pt(100.001)], PARAMS)
    assert labels == [OUTLIER, OUTLIER]
    labels = offline_dbscan([pt(0.0), pt(99.999)], PARAMS)
    assert labels == [0, 0]


def border_tie_fixture():
    """Two four-point clusters with one non-core point within epsilon of both."""
    a = [pt(0.0, 0.0), pt(0.0, 60.0), pt(-60.0, 0.0), pt(-60.0, 60.0)]
    b = [pt(170.0, 0.0), pt(170.0, 60.0), pt(230.0, 0.0), pt(230.0, 60.0)]
    x = pt(85.0, 0.0)
    return a, b, x


def test_offline_border_tie_follows_input_order():
    a, b, x = border_tie_fixture()
    params = ClusterParams(epsilon=100.0, min_pts=4)
    labels = offline_dbscan(a + b + [x], params)
    assert labels[:4] == [0] * 4 and labels[4:8] == [1] * 4
    assert labels[8] == 0  # first core neighbor in input order is in cluster 0
    labels = offline_dbscan(b + a + [x], params)
    assert labels[8] == 0  # now cluster 0 is the b-side; the tie still goes first
    # and the b-side really is the winner: x sits with the first-listed blob
    assert labels[:4] == [0] * 4


def test_offline_deterministic_label_numbering():
    points = [pt(2000.0), pt(2010.0), pt(0.0), pt(10.0)]
    assert offline_dbscan(points, PARAMS) == [0, 0, 1, 1]


def test_offline_clusters_queries():
    points = [pt(0.0), pt(10.0), pt(2000.0), pt(2010.0), pt(5000.0)]
    oc = OfflineClusters.fit(points, PARAMS)
    assert oc.live_labels == [0, 1]
    dists = oc.distances_to_clusters(pt(100.0))
    assert dists[0] == pytest.approx(90.0, abs=0.01)
    assert dists[1] == pytest.approx(1900.0, abs=0.05)
    assert oc.assign_destination(pt(50.0)) == 0
    assert oc.assign_destination(pt(2080.0)) == 1
    assert oc.assign_destination(pt(3000.0)) == OUTLIER
    labs, mat = oc.distances_matrix([pt(100.0), pt(1990.0)])
    assert labs == [0, 1]
    assert mat[0, 0] == pytest.approx(90.0, abs=0.01)
    assert mat[1, 1] == pytest.approx(10.0, abs=0.01)


# ---------------------------------------------------------------------------
# source labeling
# ---------------------------------------------------------------------------

def test_label_from_distances_rules():
    assert label_from_distances({}, 2.0, 500.0) == OUTLIER
    assert label_from_distances({0: 100.0, 1: 300.0}, 2.0, 500.0) == 0
    assert label_from_distances({0: 100.0, 1: 150.0}, 2.0, 500.0) == OUTLIER
    assert label_from_distances({0: 600.0}, 2.0, 500.0) == OUTLIER
    assert label_from_distances({0: 400.0}, 2.0, 500.0) == 0
    # equal distances collapse the ratio to 1: never labeled
    assert label_from_distances({0: 100.0, 1: 100.0}, 2.0, 500.0) == OUTLIER
    # sitting exactly on a cluster wins regardless of the runner-up
    assert label_from_distances({0: 0.0, 1: 50.0}, 2.0, 500.0) == 0
    assert label_from_distances({0: 0.0, 1: 0.0}, 2.0, 500.0) == OUTLIER
    # nearest beyond d_max loses even with a clear ratio
    assert label_from_distances({0: 501.0, 1: 5000.0}, 2.0, 500.0) == OUTLIER


def test_assign_source_label_against_offline():
    oc = OfflineClusters.fit([pt(0.0), pt(10.0), pt(5000.0), pt(5010.0)], PARAMS)
    assert assign_source_label(pt(40.0), oc, PARAMS) == 0
    assert assign_source_label(pt(2500.0), oc, PARAMS) == OUTLIER


# ---------------------------------------------------------------------------
# online variant 1
# ---------------------------------------------------------------------------

def test_v1_two_point_cluster_formation():
    v1 = OnlineClustererV1(PARAMS)
    label, events = v1.observe(pt(0.0), 1.0)
    assert label == OUTLIER and events == []
    assert v1.pending_count == 1
    label, events = v1.observe(pt(10.0), 2.0)
    assert label == 0
    assert events == [NewCluster(0)]
    assert v1.pending_count == 0
    snap = v1.snapshot()
    assert snap["variant"] == "v1"
    assert len(snap["centroids"]) == 1
    assert snap["centroids"][0]["count"] == 2 and snap["centroids"][0]["label"] == 0


def test_v1_absorb_within_half_epsilon():
    v1 = OnlineClustererV1(PARAMS)
    v1.observe(pt(0.0), 1.0)
    v1.observe(pt(10.0), 2.0)
    label, events = v1.observe(pt(30.0), 3.0)  # 30 m from the centroid at 0
    assert label == 0 and events == []
    assert v1.snapshot()["centroids"][0]["count"] == 3


def test_v1_beyond_absorb_radius_becomes_sibling():
    v1 = OnlineClustererV1(PARAMS)
    v1.observe(pt(0.0), 1.0)
    v1.observe(pt(10.0), 2.0)
    # a millimeter past the absorb radius: promoted as a second centroid of
    # the same cluster rather than folded into the existing one
    label, events = v1.observe(pt(50.001), 3.0)
    assert label == 0 and events == []
    snap = v1.snapshot()
    assert len(snap["centroids"]) == 2
    assert all(c["label"] == 0 for c in snap["centroids"])


def test_v1_join_via_reach_makes_sibling_centroid():
    v1 = OnlineClustererV1(PARAMS)
    v1.observe(pt(0.0), 1.0)
    v1.observe(pt(10.0), 2.0)
    label, events = v1.observe(pt(120.0), 3.0)  # inside (r+1) * epsilon of the centroid
    assert label == 0 and events == []
    assert v1.live_labels == [0]
    assert len(v1.snapshot()["centroids"]) == 2


def test_v1_merge_two_clusters():
    v1 = OnlineClustererV1(PARAMS)
    v1.observe(pt(0.0), 1.0)
    v1.observe(pt(10.0), 2.0)       # cluster 0
    v1.observe(pt(280.0), 3.0)
    label, events = v1.observe(pt(290.0), 4.0)
    assert label == 1 and events == [NewCluster(1)]
    label, events = v1.observe(pt(140.0), 5.0)  # within reach of both centroids
    assert label == 0
    assert events == [Merge((0, 1), 0)]
    assert v1.live_labels == [0]
    assert v1.resolve_label(1) == 0
    # retired labels are never reused
    v1.observe(pt(5000.0), 6.0)
    label, events = v1.observe(pt(5010.0), 7.0)
    assert label == 2 and events == [NewCluster(2)]


def test_v1_distances_to_clusters():
    v1 = OnlineClustererV1(PARAMS)
    v1.observe(pt(0.0), 1.0)
    v1.observe(pt(10.0), 2.0)
    v1.observe(pt(80.0), 3.0)  # sibling centroid
    dists = v1.distances_to_clusters(pt(200.0))
    assert set(dists) == {0}
    assert dists[0] == pytest.approx(70.0, abs=0.01)  # 200 - 80 - 50
    assert v1.distances_to_clusters(pt(20.0))[0] == 0.0


def test_v1_pending_expiry():
    params = ClusterParams(epsilon=100.0, min_pts=2, expire=86400.0)
    v1 = OnlineClustererV1(params)
    v1.observe(pt(0.0), 0.0)
    assert v1.pending_count == 1
    v1.observe(pt(10000.0), 2 * 86400.0)
    assert v1.pending_count == 1  # only the newcomer remains
    assert v1.snapshot()["pending"][0]["t"] == 2 * 86400.0


def test_v1_expiry_never_removes_centroids():
    params = ClusterParams(epsilon=100.0, min_pts=2, expire=86400.0)
    v1 = OnlineClustererV1(params)
    v1.observe(pt(0.0), 0.0)
    v1.observe(pt(10.0), 1.0)
    v1.observe(pt(9000.0), 100 * 86400.0)
    assert v1.live_labels == [0]
    assert len(v1.snapshot()["centroids"]) == 1


def test_v1_rejects_decreasing_time():
    v1 = OnlineClustererV1(PARAMS)
    v1.observe(pt(0.0), 10.0)
    with pytest.raises(ValueError):
        v1.observe(pt(10.0), 9.0)


def test_v1_final_labels():
    v1 = OnlineClustererV1(PARAMS)
    stream = [pt(0.0), pt(10.0), pt(2000.0), pt(2010.0)]
    for i, p in enumerate(stream):
        v1.observe(p, float(i))
    labels = v1.final_labels(stream + [pt(60.0), pt(900.0)])
    assert labels == [0, 0, 1, 1, 0, OUTLIER]


def test_v1_deterministic_replay():
    stream = [pt(e) for e in (0.0, 10.0, 300.0, 310.0, 150.0, 40.0, 2000.0)]
    snaps = []
    for _ in range(2):
        v1 = OnlineClustererV1(PARAMS)
        for i, p in enumerate(stream):
            v1.observe(p, float(i))
        snaps.append(json.dumps(v1.snapshot(), sort_keys=True))
    assert snaps[0] == snaps[1]


# ---------------------------------------------------------------------------
# online variant 2
# ---------------------------------------------------------------------------

def test_v2_growth_and_absorb():
    v2 = OnlineClustererV2(PARAMS)
    label, events = v2.observe(pt(0.0), 1.0)
    assert label == OUTLIER and events == []
    label, events = v2.observe(pt(60.0), 2.0)
    # the first point is promoted to a zero-radius centroid, which then grows
    # to cover the newcomer
    assert label == 0 and events == [NewCluster(0)]
    snap = v2.snapshot()
    assert len(snap["centroids"]) == 1
    c = snap["centroids"][0]
    assert c["count"] == 2
    assert c["radius"] == pytest.approx(60.0, abs=0.01)
    # well inside the disc: absorbed with no structural change
    label, events = v2.observe(pt(30.0), 3.0)
    assert label == 0 and events == []
    assert v2.snapshot()["centroids"][0]["count"] == 3
    assert v2.snapshot()["centroids"][0]["radius"] == pytest.approx(60.0, abs=0.01)


def test_v2_disc_boundary_is_strict():
    """A point exactly on a disc edge is not absorbed, so it can still bridge
    a merge that an inclusive boundary would have swallowed.

    Cluster 0's radius is set by the point 150 m east of its center; the probe
    arrives 150 m west. East/west displacements of equal size produce
    bit-identical great-circle distances, so the probe's gap to the disc is
    exactly 0.0 -- on the boundary, not inside it.
    """
    v2 = OnlineClustererV2(PARAMS)
    v2.observe(pt(0.0), 1.0)
    v2.observe(pt(60.0), 2.0)       # cluster 0: center 0, radius 60
    v2.observe(pt(-250.0), 3.0)
    label, events = v2.observe(pt(-260.0), 4.0)
    assert label == 1 and events == [NewCluster(1)]  # center -250, radius 10
    v2.observe(pt(90.0), 5.0)       # grows cluster 0 to radius 90
    v2.observe(pt(150.0), 6.0)      # grows cluster 0 to radius 150
    snap = v2.snapshot()
    c0 = next(c for c in snap["centroids"] if c["label"] == 0)
    assert c0["radius"] == pytest.approx(150.0, abs=0.01)
    # gap to cluster 0 is exactly 0.0: not absorbed, and cluster 1 is within
    # epsilon, so the probe forces the merge instead
    label, events = v2.observe(pt(-150.0), 7.0)
    assert label == 0
    assert events == [Merge((0, 1), 0)]
    assert v2.live_labels == [0]
    assert len(v2.snapshot()["centroids"]) == 1


def test_v2_merge_covering_disc():
    v2 = OnlineClustererV2(PARAMS)
    v2.observe(pt(0.0), 1.0)
    v2.observe(pt(60.0), 2.0)
    v2.observe(pt(30.0), 3.0)       # cluster 0: center 0, radius 60, count 3
    v2.observe(pt(250.0), 4.0)
    v2.observe(pt(250.0, 10.0), 5.0)  # cluster 1: center 250, radius 10, count 2
    label, events = v2.observe(pt(155.0), 6.0)
    assert label == 0
    assert events == [Merge((0, 1), 0)]
    snap = v2.snapshot()
    assert len(snap["centroids"]) == 1
    c = snap["centroids"][0]
    assert c["count"] == 6
    center = GeoPoint(c["lat"], c["lon"])
    # count-weighted mean of (0 * 3, 250 * 2, 155 * 1) east
    assert haversine_distance(center, pt(655.0 / 6.0)) < 0.05
    assert c["radius"] == pytest.approx(655.0 / 6.0 + 60.0, abs=0.05)
    # covering property: the fused disc contains every member disc and the point
    for east, r in ((0.0, 60.0), (250.0, 10.0), (155.0, 0.0)):
        assert haversine_distance(center, pt(east)) + r <= c["radius"] + 1e-6


def test_v2_one_centroid_per_cluster():
    v2 = OnlineClustererV2(PARAMS)
    stream = [0.0, 60.0, 30.0, 250.0, 260.0, 155.0, 2000.0, 2010.0]
    for i, e in enumerate(stream):
        v2.observe(pt(e), float(i))
    snap = v2.snapshot()
    assert len(snap["centroids"]) == len(v2.live_labels)


def test_v2_distances_and_final_labels():
    v2 = OnlineClustererV2(PARAMS)
    v2.observe(pt(0.0), 1.0)
    v2.observe(pt(60.0), 2.0)
    dists = v2.distances_to_clusters(pt(200.0))
    assert dists[0] == pytest.approx(140.0, abs=0.01)
    assert v2.distances_to_clusters(pt(20.0))[0] == 0.0
    assert v2.final_labels([pt(30.0), pt(140.0), pt(600.0)]) == [0, 0, OUTLIER]


def test_v2_radii_never_shrink():
    v2 = OnlineClustererV2(PARAMS)
    radii = []
    for i, e in enumerate((0.0, 60.0, 30.0, 90.0, 140.0, 20.0)):
        v2.observe(pt(e), float(i))
        snap = v2.snapshot()
        if snap["centroids"]:
            radii.append(snap["centroids"][0]["radius"])
    assert all(b >= a - 1e-9 for a, b in zip(radii, radii[1:]))


def test_v2_rejects_decreasing_time():
    v2 = OnlineClustererV2(PARAMS)
    v2.observe(pt(0.0), 5.0)
    with pytest.raises(ValueError):
        v2.observe(pt(1.0), 4.0)
