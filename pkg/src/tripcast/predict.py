"""Next-destination prediction over streaming cluster labels.

Models share a small protocol: predict(source) -> Prediction before the true
destination is revealed, then update(source, dest, events) with the structural
events the clusterer emitted for that destination. Events are applied first,
so label sets always track the live cluster set (plus OUTLIER).
"""

import math
import random
from collections import Counter
from dataclasses import dataclass

from .clustering import OUTLIER, Merge, NewCluster

__all__ = [
    "DirichletCategorical",
    "Prediction",
    "forward_label",
    "argmax_label",
    "BayesianModel",
    "UnconditionedModel",
    "GreedyModel",
    "ExpertPool",
    "ExpertModel",
    "ExpWeightsModel",
    "make_model",
]


def forward_label(label: int, events) -> int:
    """Map a pre-event label through this step's merges."""
    for ev in events:
        if isinstance(ev, Merge) and label in ev.sources:
            label = ev.survivor
    return label


def argmax_label(scores: dict[int, tuple[float, float]]) -> int:
    """Argmax over non-outlier labels; scores map label -> (score, evidence).

    Ties break toward larger score, then larger cumulative evidence, then
    smaller label, so runs are reproducible. Returns OUTLIER (abstain) when no
    non-outlier label is present.
    """
    best = OUTLIER
    best_key = None
    for k, (score, evidence) in scores.items():
        if k == OUTLIER:
            continue
        key = (score, evidence, -k)
        if best_key is None or key > best_key:
            best, best_key = k, key
    return best


@dataclass(frozen=True)
class Prediction:
    """A destination distribution plus the committed argmax choice.

    choice == OUTLIER means the model abstained.
    """

    choice: int
    distribution: dict[int, float]

    @property
    def abstained(self) -> bool:
        return self.choice == OUTLIER


class DirichletCategorical:
    """Pseudocount table over labels; event probability is count / total.

    Counts bundle prior mass and observations, so posterior updates are plain
    increments and cluster merges are plain additions.
    """

    __slots__ = ("counts",)

    def __init__(self, labels, prior: float):
        if prior < 0:
            raise ValueError("prior pseudocount must be non-negative")
        self.counts: dict[int, float] = {int(k): float(prior) for k in labels}
        if not self.counts:
            raise ValueError("at least one label is required")

    def observe(self, label: int, weight: float = 1.0) -> None:
        if label not in self.counts:
            raise ValueError(f"unknown label {label}")
        self.counts[label] += weight

    def extend(self, label: int, prior: float) -> None:
        if label in self.counts:
            raise ValueError(f"label {label} already present")
        self.counts[label] = float(prior)

    def merge(self, sources, survivor: int) -> None:
        if any(s not in self.counts for s in sources):
            raise ValueError(f"merge references unknown labels {sources}")
        self.counts[survivor] = sum(self.counts[s] for s in sources)
        for s in sources:
            if s != survivor:
                del self.counts[s]

    def total(self) -> float:
        return sum(self.counts.values())

    def distribution(self) -> dict[int, float]:
        z = self.total()
        if z <= 0:
            # zero-prior table with no data yet
            u = 1.0 / len(self.counts)
            return {k: u for k in self.counts}
        return {k: v / z for k, v in self.counts.items()}

    def mode(self) -> int:
        return argmax_label({k: (c, c) for k, c in self.counts.items()})


class BayesianModel:
    """Dirichlet-categorical destination model, global and source-conditioned.

    One global table estimates p(dest); one table per source label (outlier
    included) estimates p(dest | source). Prediction for an outlier or unknown
    source falls back to the global distribution.
    """

    kind = "bayes"

    def __init__(self, beta: float = 1.0, alpha: float = 1.0, labels=(OUTLIER,)):
        support = sorted(set(labels) | {OUTLIER})
        self.beta = float(beta)
        self.alpha = float(alpha)
        self.global_counts = DirichletCategorical(support, self.beta)
        self.conditional = {j: DirichletCategorical(support, self.alpha) for j in support}

    @property
    def labels(self) -> list[int]:
        return sorted(self.global_counts.counts)

    @classmethod
    def fit_offline(cls, transitions, labels, beta: float = 1.0,
                    alpha: float = 1.0) -> "BayesianModel":
        """Batch posterior: priors plus transition counts in one pass."""
        model = cls(beta, alpha, labels)
        for s, d in transitions:
            if d not in model.global_counts.counts or s not in model.conditional:
                raise ValueError(f"transition ({s}, {d}) outside the label set")
        for d, c in Counter(d for _, d in transitions).items():
            model.global_counts.counts[d] = model.beta + float(c)
        for (s, d), c in Counter((s, d) for s, d in transitions).items():
            model.conditional[s].counts[d] = model.alpha + float(c)
        return model

    def apply_events(self, events) -> None:
        for ev in events:
            if isinstance(ev, NewCluster):
                k = ev.label
                self.global_counts.extend(k, self.beta)
                for dc in self.conditional.values():
                    dc.extend(k, self.alpha)
                self.conditional[k] = DirichletCategorical(self.labels, self.alpha)
            elif isinstance(ev, Merge):
                self.global_counts.merge(ev.sources, ev.survivor)
                for dc in self.conditional.values():
                    dc.merge(ev.sources, ev.survivor)
                fused = self.conditional[ev.survivor]
                for s in ev.sources:
                    if s == ev.survivor:
                        continue
                    for k, v in self.conditional[s].counts.items():
                        fused.counts[k] += v
                    del self.conditional[s]
            else:
                raise ValueError(f"unknown event {ev!r}")

    def update(self, source: int, dest: int, events=()) -> None:
        self.apply_events(events)
        source = forward_label(source, events)
        if dest not in self.global_counts.counts:
            raise ValueError(f"unknown destination label {dest}")
        if source not in self.conditional:
            raise ValueError(f"unknown source label {source}")
        self.global_counts.observe(dest)
        self.conditional[source].observe(dest)

    def predict(self, source: int) -> Prediction:
        if source != OUTLIER and source in self.conditional:
            dc = self.conditional[source]
        else:
            dc = self.global_counts
        return Prediction(dc.mode(), dc.distribution())

    def snapshot(self) -> dict:
        return {
            "kind": self.kind,
            "beta": self.beta,
            "alpha": self.alpha,
            "global": {str(k): v for k, v in sorted(self.global_counts.counts.items())},
            "conditional": {
                str(j): {str(k): v for k, v in sorted(dc.counts.items())}
                for j, dc in sorted(self.conditional.items())
            },
        }


class UnconditionedModel:
    """Global-frequency baseline: one destination table, sources ignored."""

    kind = "unconditioned"

    def __init__(self, beta: float = 1.0, labels=(OUTLIER,)):
        self.beta = float(beta)
        self.global_counts = DirichletCategorical(sorted(set(labels) | {OUTLIER}), self.beta)

    def apply_events(self, events) -> None:
        for ev in events:
            if isinstance(ev, NewCluster):
                self.global_counts.extend(ev.label, self.beta)
            elif isinstance(ev, Merge):
                self.global_counts.merge(ev.sources, ev.survivor)
            else:
                raise ValueError(f"unknown event {ev!r}")

    def update(self, source: int, dest: int, events=()) -> None:
        self.apply_events(events)
        if dest not in self.global_counts.counts:
            raise ValueError(f"unknown destination label {dest}")
        self.global_counts.observe(dest)

    def predict(self, source: int) -> Prediction:
        return Prediction(self.global_counts.mode(), self.global_counts.distribution())

    def snapshot(self) -> dict:
        return {
            "kind": self.kind,
            "beta": self.beta,
            "global": {str(k): v for k, v in sorted(self.global_counts.counts.items())},
        }


class GreedyModel:
    """Bayesian argmax re-emitted as a point mass."""

    kind = "greedy"

    def __init__(self, beta: float = 1.0, alpha: float = 1.0, labels=(OUTLIER,)):
        self.base = BayesianModel(beta, alpha, labels)

    def apply_events(self, events) -> None:
        self.base.apply_events(events)

    def update(self, source: int, dest: int, events=()) -> None:
        self.base.update(source, dest, events)

    def predict(self, source: int) -> Prediction:
        p = self.base.predict(source)
        if p.abstained:
            return Prediction(OUTLIER, {OUTLIER: 1.0})
        return Prediction(p.choice, {p.choice: 1.0})

    def snapshot(self) -> dict:
        return {"kind": self.kind, "base": self.base.snapshot()}


class ExpertPool:
    """Follow-the-awake-leader tallies: one expert per label.

    z is the expert's cumulative 0/1 reward, n its awake-step count; the pool
    plays the awake expert with the best average reward. Merged experts keep
    z = sum, n = max: awake windows are nested suffixes of the stream (experts
    never sleep again), so summed rewards still fit inside the longer window
    and z <= n survives the merge.
    """

    __slots__ = ("z", "n")

    def __init__(self, labels=()):
        self.z: dict[int, float] = {int(k): 0.0 for k in labels}
        self.n: dict[int, int] = {int(k): 0 for k in labels}

    def add_expert(self, label: int) -> None:
        if label in self.z:
            raise ValueError(f"label {label} already present")
        self.z[label] = 0.0
        self.n[label] = 0

    def merge(self, sources, survivor: int) -> None:
        if any(s not in self.z for s in sources):
            raise ValueError(f"merge references unknown labels {sources}")
        self.z[survivor] = sum(self.z[s] for s in sources)
        self.n[survivor] = max(self.n[s] for s in sources)
        for s in sources:
            if s != survivor:
                del self.z[s]
                del self.n[s]

    def update(self, actual: int) -> None:
        if actual not in self.z:
            raise ValueError(f"unknown label {actual}")
        for k in self.n:
            self.n[k] += 1
        self.z[actual] += 1.0

    def choice(self) -> int:
        scores = {k: (self.z[k] / self.n[k], self.z[k])
                  for k in self.z if self.n[k] > 0}
        return argmax_label(scores)

    def distribution(self, kappa: float = 1.0) -> dict[int, float]:
        """Smoothed awake averages (z + kappa) / (n + kappa * pool size),
        normalized; smoothing keeps every label at nonzero mass."""
        m = len(self.z)
        raw = {k: (self.z[k] + kappa) / (self.n[k] + kappa * m) for k in self.z}
        s = sum(raw.values())
        return {k: v / s for k, v in raw.items()}


class ExpertModel:
    """Expert-advice destination model, global and source-conditioned.

    Mirrors the Bayesian layout: one pool over all trips plus one pool per
    source label. The outlier source keeps collecting rewards but predictions
    for it come from the global pool.
    """

    kind = "expert"

    def __init__(self, kappa: float = 1.0, labels=(OUTLIER,),
                 random_fallback: bool = False, seed: int = 0):
        support = sorted(set(labels) | {OUTLIER})
        self.kappa = float(kappa)
        self.global_pool = ExpertPool(support)
        self.pools = {j: ExpertPool(support) for j in support}
        self.random_fallback = bool(random_fallback)
        self._rng = random.Random(seed)

    def apply_events(self, events) -> None:
        for ev in events:
            if isinstance(ev, NewCluster):
                k = ev.label
                self.global_pool.add_expert(k)
                for pool in self.pools.values():
                    pool.add_expert(k)
                self.pools[k] = ExpertPool(sorted(self.global_pool.z))
            elif isinstance(ev, Merge):
                self.global_pool.merge(ev.sources, ev.survivor)
                for pool in self.pools.values():
                    pool.merge(ev.sources, ev.survivor)
                # fuse the per-source pools of the merged labels; their award
                # histories cover disjoint steps, so both z and n add
                fused = self.pools[ev.survivor]
                for s in ev.sources:
                    if s == ev.survivor:
                        continue
                    for k in fused.z:
                        fused.z[k] += self.pools[s].z[k]
                        fused.n[k] += self.pools[s].n[k]
                    del self.pools[s]
            else:
                raise ValueError(f"unknown event {ev!r}")

    def update(self, source: int, dest: int, events=()) -> None:
        self.apply_events(events)
        source = forward_label(source, events)
        if source not in self.pools:
            raise ValueError(f"unknown source label {source}")
        self.global_pool.update(dest)
        self.pools[source].update(dest)

    def predict(self, source: int) -> Prediction:
        if source != OUTLIER and source in self.pools:
            pool = self.pools[source]
        else:
            pool = self.global_pool
        choice = pool.choice()
        if choice == OUTLIER and self.random_fallback:
            candidates = sorted(k for k in pool.z if k != OUTLIER)
            if candidates:
                choice = self._rng.choice(candidates)
        return Prediction(choice, pool.distribution(self.kappa))

    def snapshot(self) -> dict:
        def dump(pool):
            return {str(k): {"z": pool.z[k], "n": pool.n[k]} for k in sorted(pool.z)}

        return {
            "kind": self.kind,
            "kappa": self.kappa,
            "global": dump(self.global_pool),
            "pools": {str(j): dump(p) for j, p in sorted(self.pools.items())},
        }


class ExpWeightsModel:
    """Exponential-weights baseline with per-source weight tables.

    Each destination label carries weight exp(eta * cumulative reward); the
    emitted distribution is the normalized weight vector.
    """

    kind = "expweights"

    def __init__(self, eta: float = 0.5, labels=(OUTLIER,)):
        support = sorted(set(labels) | {OUTLIER})
        self.eta = float(eta)
        self.global_z = {k: 0.0 for k in support}
        self.tables = {j: {k: 0.0 for k in support} for j in support}

    def _all_tables(self):
        yield self.global_z
        yield from self.tables.values()

    def apply_events(self, events) -> None:
        for ev in events:
            if isinstance(ev, NewCluster):
                k = ev.label
                if k in self.global_z:
                    raise ValueError(f"label {k} already present")
                for table in self._all_tables():
                    table[k] = 0.0
                self.tables[k] = {j: 0.0 for j in sorted(self.global_z)}
            elif isinstance(ev, Merge):
                if any(s not in self.global_z for s in ev.sources):
                    raise ValueError(f"merge references unknown labels {ev.sources}")
                for table in self._all_tables():
                    table[ev.survivor] = sum(table[s] for s in ev.sources)
                    for s in ev.sources:
                        if s != ev.survivor:
                            del table[s]
                fused = self.tables[ev.survivor]
                for s in ev.sources:
                    if s == ev.survivor:
                        continue
                    for k, v in self.tables[s].items():
                        fused[k] += v
                    del self.tables[s]
            else:
                raise ValueError(f"unknown event {ev!r}")

    def update(self, source: int, dest: int, events=()) -> None:
        self.apply_events(events)
        source = forward_label(source, events)
        if dest not in self.global_z:
            raise ValueError(f"unknown destination label {dest}")
        if source not in self.tables:
            raise ValueError(f"unknown source label {source}")
        self.global_z[dest] += 1.0
        self.tables[source][dest] += 1.0

    def _distribution(self, z: dict[int, float]) -> dict[int, float]:
        top = max(z.values())
        w = {k: math.exp(self.eta * (v - top)) for k, v in z.items()}
        s = sum(w.values())
        return {k: v / s for k, v in w.items()}

    def predict(self, source: int) -> Prediction:
        if source != OUTLIER and source in self.tables:
            z = self.tables[source]
        else:
            z = self.global_z
        choice = argmax_label({k: (v, v) for k, v in z.items()})
        return Prediction(choice, self._distribution(z))

    def snapshot(self) -> dict:
        return {
            "kind": self.kind,
            "eta": self.eta,
            "global": {str(k): v for k, v in sorted(self.global_z.items())},
            "tables": {str(j): {str(k): v for k, v in sorted(t.items())}
                       for j, t in sorted(self.tables.items())},
        }


def make_model(name: str, *, beta: float = 1.0, alpha: float = 1.0,
               eta: float = 0.5, kappa: float = 1.0, labels=(OUTLIER,),
               random_fallback: bool = False, seed: int = 0):
    if name == "bayes":
        return BayesianModel(beta, alpha, labels)
    if name == "unconditioned":
        return UnconditionedModel(beta, labels)
    if name == "greedy":
        return GreedyModel(beta, alpha, labels)
    if name == "expert":
        return ExpertModel(kappa, labels, random_fallback, seed)
    if name == "expweights":
        return ExpWeightsModel(eta, labels)
    raise ValueError(f"unknown model {name!r}")
