"""Evaluation of online clustering and prediction against an offline oracle.

The central object is the decomposed squared Hellinger distance between the
oracle's conditional destination distribution (over offline cluster states)
and a model's predicted distribution (over the online cluster states at some
step), connected by a state map from offline to online labels. The distance
splits into a distributional part and a state-space part; the split is
non-negative, which is checked at every evaluation.
"""

import math
from collections import Counter
from dataclasses import dataclass

from sklearn.metrics import (
    adjusted_mutual_info_score,
    adjusted_rand_score,
    v_measure_score,
)

from .clustering import OUTLIER

__all__ = [
    "AgreementScores",
    "clustering_agreement",
    "accuracy",
    "StateMap",
    "build_state_map",
    "hellinger_split",
    "orphan_mass",
    "oracle_conditionals",
    "RegretRecord",
    "regret_curve",
]


@dataclass(frozen=True)
class AgreementScores:
    """Partition agreement: adjusted mutual information, adjusted Rand,
    V-measure. All are 1 exactly for identical partitions."""

    ami: float
    ari: float
    v_measure: float


def clustering_agreement(pred: list[int], truth: list[int]) -> AgreementScores:
    """Agreement between two labelings of the same trips.

    The outlier label is an ordinary value here: disagreeing about what is
    noise costs agreement like any other disagreement.
    """
    if len(pred) != len(truth):
        raise ValueError("labelings must have equal length")
    if not pred:
        raise ValueError("labelings must be non-empty")
    return AgreementScores(
        ami=float(adjusted_mutual_info_score(truth, pred)),
        ari=float(adjusted_rand_score(truth, pred)),
        v_measure=float(v_measure_score(truth, pred)),
    )


def accuracy(choices, actuals) -> tuple[float | None, float | None]:
    """(accuracy over all trips, accuracy over trips with a clustered actual).

    choices may be committed labels or objects with a .choice attribute.
    Abstentions count as incorrect, as do trips whose actual destination is
    the outlier. Undefined ratios (no trips / no clustered trips) are None.
    """
    if len(choices) != len(actuals):
        raise ValueError("choices and actuals must have equal length")
    if not actuals:
        return None, None
    picked = [getattr(c, "choice", c) for c in choices]
    correct = sum(1 for c, a in zip(picked, actuals) if c != OUTLIER and c == a)
    clustered = sum(1 for a in actuals if a != OUTLIER)
    acc_all = correct / len(actuals)
    acc_clustered = (correct / clustered) if clustered else None
    return acc_all, acc_clustered


@dataclass(frozen=True)
class StateMap:
    """Single-valued map from offline cluster labels to online labels.

    Absence from the mapping means the offline state is unmapped: its true
    mass has no online counterpart. The outlier state always maps to the
    online outlier state.
    """

    mapping: dict[int, int]

    def image(self, x: int) -> int | None:
        return self.mapping.get(x)

    def multiplicity(self, x: int) -> int:
        """How many offline states share x's image (0 when unmapped)."""
        img = self.mapping.get(x)
        if img is None:
            return 0
        return sum(1 for v in self.mapping.values() if v == img)

    def images(self) -> set[int]:
        return set(self.mapping.values())


def build_state_map(offline_labels: list[int], online_labels: list[int]) -> StateMap:
    """Map each offline cluster to the online label holding the plurality of
    its member trips.

    Plurality ties break toward the smaller online label; a plurality of
    online outliers leaves the offline cluster unmapped. The outlier state is
    mapped to the online outlier unconditionally.
    """
    if len(offline_labels) != len(online_labels):
        raise ValueError("labelings must have equal length")
    votes: dict[int, Counter] = {}
    for x, y in zip(offline_labels, online_labels):
        if x == OUTLIER:
            continue
        votes.setdefault(x, Counter())[y] += 1
    mapping = {OUTLIER: OUTLIER}
    for x, ctr in sorted(votes.items()):
        top = max(ctr.values())
        winner = min(y for y, c in ctr.items() if c == top)
        if winner != OUTLIER:
            mapping[x] = winner
    return StateMap(mapping)


def _check_normalized(dist: dict[int, float], name: str) -> None:
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"{name} must sum to 1 (got {total!r})")


def hellinger_split(p_star: dict[int, float], p_i: dict[int, float],
                    state_map: StateMap) -> tuple[float, float, float]:
    """Decomposed squared Hellinger distance across the state map.

    p_star enumerates the full offline state space (zero-mass states
    included); p_i is the predicted distribution over online states. The
    predicted mass of an image is split equally among the offline states
    sharing it; true mass of unmapped offline states is lost outright.

    Returns (h2, h2_d, h2_s): the full distance, the distributional part
    (computed between the image-aggregated true masses and the prediction),
    and the state-space remainder, clamped at 0 after checking it is not
    meaningfully negative.
    """
    _check_normalized(p_star, "p_star")
    _check_normalized(p_i, "p_i")
    groups: dict[int, list[int]] = {}
    unmapped = 0.0
    for x in p_star:
        img = state_map.image(x)
        if img is None:
            unmapped += p_star[x]
        else:
            groups.setdefault(img, []).append(x)
    h2 = 0.5 * unmapped
    h2_d = 0.0
    for img, members in groups.items():
        q = p_i.get(img, 0.0)
        share = q / len(members)
        mass = 0.0
        for x in members:
            p = p_star[x]
            mass += p
            h2 += 0.5 * (math.sqrt(p) - math.sqrt(share)) ** 2
        h2_d += 0.5 * (math.sqrt(mass) - math.sqrt(q)) ** 2
    h2_s = h2 - h2_d
    assert h2_s >= -1e-12, f"state-space error negative: {h2_s}"
    return h2, h2_d, max(0.0, h2_s)


def orphan_mass(p_i: dict[int, float], state_map: StateMap) -> float:
    """Predicted mass on online states with no offline preimage.

    Such states contribute no term to the Hellinger sums; this reports how
    much prediction mass the comparison therefore never sees.
    """
    images = state_map.images()
    return sum(v for k, v in p_i.items() if k not in images)


def oracle_conditionals(transitions, states) -> dict[int, dict[int, float]]:
    """Zero-pseudocount conditional destination frequencies per source state.

    transitions are (source, dest) label pairs over the full history; states
    is the destination state space (missing destinations get mass 0). Sources
    with no trips have no row.
    """
    states = sorted(set(states))
    state_set = set(states)
    rows: dict[int, Counter] = {}
    for s, d in transitions:
        if d not in state_set:
            raise ValueError(f"destination {d} outside the state space")
        rows.setdefault(s, Counter())[d] += 1
    out: dict[int, dict[int, float]] = {}
    for s, ctr in sorted(rows.items()):
        total = sum(ctr.values())
        out[s] = {x: ctr.get(x, 0) / total for x in states}
    return out


@dataclass(frozen=True)
class RegretRecord:
    """One step of a per-source regret curve, with running totals."""

    step: int
    h2: float
    h2_d: float
    h2_s: float
    cum_regret: float
    cum_h2_d: float
    cum_h2_s: float


def regret_curve(per_step, steps=None) -> list[RegretRecord]:
    """Cumulative decomposed regret over an ordered stream.

    per_step yields (p_star, p_i, state_map) triples; steps optionally names
    the step index of each triple (1-based positions otherwise).
    """
    records = []
    cum = cum_d = cum_s = 0.0
    for i, (p_star, p_i, smap) in enumerate(per_step):
        h2, h2_d, h2_s = hellinger_split(p_star, p_i, smap)
        cum += h2
        cum_d += h2_d
        cum_s += h2_s
        step = steps[i] if steps is not None else i + 1
        records.append(RegretRecord(step, h2, h2_d, h2_s, cum, cum_d, cum_s))
    return records
