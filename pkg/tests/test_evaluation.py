"""Agreement metrics, accuracy, state maps, and the Hellinger decomposition."""

import math

import numpy as np
import pytest

from tripcast.clustering import OUTLIER
from tripcast.evaluation import (
    StateMap,
    accuracy,
    build_state_map,
    clustering_agreement,
    hellinger_split,
    oracle_conditionals,
    orphan_mass,
    regret_curve,
)
from tripcast.predict import Prediction


# ---------------------------------------------------------------------------
# agreement
# ---------------------------------------------------------------------------

def test_agreement_identical_is_one():
    scores = clustering_agreement([0, 0, 1, 1, -1], [0, 0, 1, 1, -1])
    assert (scores.ami, scores.ari, scores.v_measure) == (1.0, 1.0, 1.0)


def test_agreement_permutation_invariant():
    truth = [0, 0, 1, 1, 2, 2]
    pred = [5, 5, 3, 3, 0, 0]
    scores = clustering_agreement(pred, truth)
    assert scores.ami == pytest.approx(1.0)
    assert scores.ari == pytest.approx(1.0)
    assert scores.v_measure == pytest.approx(1.0)


def test_agreement_independent_partition_frozen_values():
    # values frozen from a contingency-table evaluation of the textbook
    # formulas for this 2x2 case
    scores = clustering_agreement([0, 1, 0, 1], [0, 0, 1, 1])
    assert scores.ari == pytest.approx(-0.5, abs=1e-12)
    assert scores.ami == pytest.approx(-0.5, abs=1e-12)
    assert scores.v_measure == pytest.approx(0.0, abs=1e-12)


def test_agreement_relabeling_either_argument():
    truth = [0, 0, 1, 1, 2, -1]
    pred = [1, 1, 1, 2, 2, 2]
    base = clustering_agreement(pred, truth)
    relabel = {0: 7, 1: 3, 2: 9, -1: 4}

    def as_tuple(s):
        return (s.ami, s.ari, s.v_measure)

    again = clustering_agreement([relabel[p] for p in pred], truth)
    assert as_tuple(again) == pytest.approx(as_tuple(base))
    again = clustering_agreement(pred, [relabel[t] for t in truth])
    assert as_tuple(again) == pytest.approx(as_tuple(base))


def test_agreement_rejects_bad_input():
    with pytest.raises(ValueError):
        clustering_agreement([0, 1], [0])
    with pytest.raises(ValueError):
        clustering_agreement([], [])


# ---------------------------------------------------------------------------
# accuracy
# ---------------------------------------------------------------------------

def test_accuracy_counts():
    acc_all, acc_clustered = accuracy([0, 1, 2, 5], [0, 1, 2, -1])
    assert acc_all == 0.75
    assert acc_clustered == 1.0


def test_accuracy_abstain_is_incorrect():
    assert accuracy([-1, -1], [0, 1]) == (0.0, 0.0)
    # matching the outlier actual does not count either
    assert accuracy([-1], [-1]) == (0.0, None)


def test_accuracy_empty_cases():
    assert accuracy([], []) == (None, None)
    with pytest.raises(ValueError):
        accuracy([0], [])


def test_accuracy_accepts_predictions():
    preds = [Prediction(0, {0: 1.0}), Prediction(1, {1: 1.0})]
    assert accuracy(preds, [0, 0]) == (0.5, 0.5)


# ---------------------------------------------------------------------------
# state maps
# ---------------------------------------------------------------------------

def test_state_map_identity():
    smap = build_state_map([0, 0, 1, 1, -1], [0, 0, 1, 1, -1])
    assert smap.mapping == {-1: -1, 0: 0, 1: 1}
    assert smap.multiplicity(0) == 1
    assert smap.multiplicity(1) == 1


def test_state_map_two_into_one():
    smap = build_state_map([0, 0, 1, 1], [0, 0, 0, 0])
    assert smap.image(0) == 0 and smap.image(1) == 0
    assert smap.multiplicity(0) == 2
    assert smap.multiplicity(1) == 2


def test_state_map_outlier_plurality_unmaps():
    smap = build_state_map([0, 0, 0], [-1, -1, 3])
    assert smap.image(0) is None
    assert smap.multiplicity(0) == 0
    assert smap.mapping == {-1: -1}


def test_state_map_tie_takes_smaller_online_label():
    smap = build_state_map([0, 0, 0, 0], [1, 1, 2, 2])
    assert smap.image(0) == 1


def test_state_map_plurality_is_per_cluster():
    offline = [0, 0, 0, 1, 1]
    online = [4, 4, 7, 7, 7]
    smap = build_state_map(offline, online)
    assert smap.image(0) == 4
    assert smap.image(1) == 7


# ---------------------------------------------------------------------------
# hellinger decomposition
# ---------------------------------------------------------------------------

def test_hellinger_identity_is_zero():
    p = {-1: 0.2, 0: 0.5, 1: 0.3}
    smap = StateMap({-1: -1, 0: 0, 1: 1})
    assert hellinger_split(p, dict(p), smap) == (0.0, 0.0, 0.0)


def test_hellinger_even_split_is_exact_zero():
    smap = StateMap({0: 0, 1: 0})
    h2, h2_d, h2_s = hellinger_split({0: 0.5, 1: 0.5}, {0: 1.0}, smap)
    assert (h2, h2_d, h2_s) == (0.0, 0.0, 0.0)


def test_hellinger_uneven_split_frozen_value():
    smap = StateMap({0: 0, 1: 0})
    h2, h2_d, h2_s = hellinger_split({0: 0.8, 1: 0.2}, {0: 1.0}, smap)
    assert h2 == pytest.approx(0.051316701949486204, rel=1e-12)
    assert h2_d == 0.0
    assert h2_s == pytest.approx(h2, rel=1e-12)


def test_hellinger_unmapped_mass_is_state_space_error():
    smap = StateMap({0: 0})
    h2, h2_d, h2_s = hellinger_split({0: 0.7, 1: 0.3}, {0: 1.0}, smap)
    assert h2_d == pytest.approx(0.5 * (math.sqrt(0.7) - 1.0) ** 2, rel=1e-12)
    assert h2_s == pytest.approx(0.15, rel=1e-12)
    assert h2 == pytest.approx(h2_d + 0.15, rel=1e-12)


def test_hellinger_identity_map_reduces_to_classical():
    p = {0: 0.1, 1: 0.6, 2: 0.3}
    q = {0: 0.3, 1: 0.3, 2: 0.4}
    smap = StateMap({0: 0, 1: 1, 2: 2})
    h2, h2_d, h2_s = hellinger_split(p, q, smap)
    classical = 0.5 * sum((math.sqrt(p[k]) - math.sqrt(q[k])) ** 2 for k in p)
    assert h2 == pytest.approx(classical, rel=1e-12)
    assert h2_d == pytest.approx(classical, rel=1e-12)
    assert h2_s == 0.0


def test_hellinger_rejects_unnormalized():
    smap = StateMap({0: 0})
    with pytest.raises(ValueError):
        hellinger_split({0: 0.98}, {0: 1.0}, smap)
    with pytest.raises(ValueError):
        hellinger_split({0: 1.0}, {0: 1.02}, smap)


def test_hellinger_split_nonneg_property():
    rng = np.random.default_rng(17)
    for _ in range(2000):
        m = int(rng.integers(1, 9))
        offline = list(range(m))
        online_labels = list(range(int(rng.integers(1, 5))))
        mapping = {}
        for x in offline:
            if rng.random() < 0.15:
                continue  # unmapped
            mapping[x] = int(rng.choice(online_labels))
        p_star = rng.random(m) + 1e-9
        zeroed = rng.random(m) < 0.2
        if not zeroed.all():
            p_star[zeroed] = 0.0
        p_star /= p_star.sum()
        extra = int(rng.integers(0, 3))  # orphan online states
        support = online_labels + [100 + j for j in range(extra)]
        p_i = rng.random(len(support)) + 1e-9
        p_i /= p_i.sum()
        h2, h2_d, h2_s = hellinger_split(
            dict(zip(offline, p_star)),
            dict(zip(support, p_i)),
            StateMap(mapping),
        )
        assert h2_s >= 0.0
        assert abs(h2 - h2_d - h2_s) <= 1e-12
        assert -1e-12 <= h2 <= 1.0 + 1e-12
        assert -1e-12 <= h2_d <= 1.0 + 1e-12


def test_orphan_mass():
    smap = StateMap({-1: -1, 0: 0})
    assert orphan_mass({0: 0.6, 7: 0.4}, smap) == pytest.approx(0.4)
    assert orphan_mass({0: 1.0}, smap) == 0.0
    # orphan states contribute no term to the distance itself
    h2, _, _ = hellinger_split({0: 1.0}, {0: 0.6, 7: 0.4}, StateMap({0: 0}))
    assert h2 == pytest.approx(0.5 * (1.0 - math.sqrt(0.6)) ** 2, rel=1e-12)


# ---------------------------------------------------------------------------
# oracle conditionals and regret curves
# ---------------------------------------------------------------------------

def test_oracle_conditionals_mle():
    rows = oracle_conditionals([(0, 1), (0, 1), (1, 0)], states=(-1, 0, 1))
    assert rows[0] == {-1: 0.0, 0: 0.0, 1: 1.0}
    assert rows[1] == {-1: 0.0, 0: 1.0, 1: 0.0}
    assert -1 not in rows  # no trips from the outlier source
    with pytest.raises(ValueError):
        oracle_conditionals([(0, 9)], states=(-1, 0, 1))


def test_regret_curve_cumulative_sums():
    smap = StateMap({0: 0, 1: 0})
    uneven = ({0: 0.8, 1: 0.2}, {0: 1.0}, smap)
    flat = ({0: 0.5, 1: 0.5}, {0: 1.0}, smap)
    records = regret_curve([uneven, flat, uneven])
    h = 0.051316701949486204
    assert [r.step for r in records] == [1, 2, 3]
    assert [r.h2 for r in records] == pytest.approx([h, 0.0, h])
    assert [r.cum_regret for r in records] == pytest.approx([h, h, 2 * h])
    assert all(r.cum_regret == pytest.approx(r.cum_h2_d + r.cum_h2_s, abs=1e-12)
               for r in records)
    assert all(b.cum_regret >= a.cum_regret
               for a, b in zip(records, records[1:]))


def test_regret_curve_zero_stream():
    smap = StateMap({0: 0})
    records = regret_curve([({0: 1.0}, {0: 1.0}, smap)] * 4, steps=[3, 6, 9, 12])
    assert [r.cum_regret for r in records] == [0.0, 0.0, 0.0, 0.0]
    assert [r.step for r in records] == [3, 6, 9, 12]
