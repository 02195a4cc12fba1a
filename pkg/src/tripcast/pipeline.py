"""Per-user experiment drivers: stream trips, predict, and score.

The online driver feeds trips one at a time through a clusterer and a set of
prediction models, always predicting before observing. Evaluation compares
against an offline oracle fitted to the user's full history: per-trip regret
in Hellinger distance, periodic partition agreement, and held-out accuracy on
the chronological tail.
"""

from dataclasses import dataclass, field

from .clustering import (
    OUTLIER,
    ClusterParams,
    OfflineClusters,
    OnlineClustererV1,
    OnlineClustererV2,
    assign_source_label,
    label_from_distances,
)
from .config import RunConfig
from .evaluation import (
    AgreementScores,
    accuracy,
    build_state_map,
    clustering_agreement,
    hellinger_split,
    oracle_conditionals,
)
from .ingest import Trip
from .predict import BayesianModel, Prediction, forward_label, make_model

__all__ = [
    "OFFLINE_MODELS",
    "cluster_params",
    "make_clusterer",
    "OfflineOracle",
    "StepResult",
    "OnlineUserSession",
    "OnlineRunResult",
    "run_online_user",
    "OfflineRunResult",
    "run_offline_user",
]

OFFLINE_MODELS = ("bayes", "unconditioned", "greedy")


def cluster_params(config: RunConfig) -> ClusterParams:
    return ClusterParams(
        epsilon=config.epsilon,
        min_pts=config.min_pts,
        radii_fraction=config.radii_fraction,
        delta=config.delta,
        d_max=config.d_max,
        expire=config.expire,
    )


def make_clusterer(variant: str, params: ClusterParams):
    if variant == "v1":
        return OnlineClustererV1(params)
    if variant == "v2":
        return OnlineClustererV2(params)
    raise ValueError(f"no online clusterer for variant {variant!r}")


class OfflineOracle:
    """Offline clustering of a user's full history, with source labels and
    zero-pseudocount conditional destination frequencies per source state."""

    def __init__(self, trips: list[Trip], params: ClusterParams):
        self.params = params
        self.clusters = OfflineClusters.fit([t.dest for t in trips], params)
        self.dest_labels = list(self.clusters.labels)
        labs, mat = self.clusters.distances_matrix([t.source for t in trips])
        self.source_labels = [
            label_from_distances(dict(zip(labs, row)), params.delta, params.d_max)
            for row in mat
        ]
        self.states = sorted({OUTLIER, *self.clusters.live_labels})
        self.conditionals = oracle_conditionals(
            zip(self.source_labels, self.dest_labels), self.states)


@dataclass
class StepResult:
    """What one streamed trip produced: labels, events, model predictions."""

    step: int
    source_label: int
    dest_label: int
    events: list
    predictions: dict[str, Prediction]


class OnlineUserSession:
    """One user's streaming state: clusterer plus prediction models.

    The session never sees more than the trips fed to step(), so it cannot
    peek at the future; all oracle-relative evaluation happens outside.
    """

    def __init__(self, config: RunConfig, user_id: str = ""):
        self.config = config
        self.user_id = user_id
        self.params = cluster_params(config)
        self.clusterer = make_clusterer(config.variant, self.params)
        self.models = {
            name: make_model(
                name, beta=config.beta, alpha=config.alpha, eta=config.eta,
                kappa=config.kappa, random_fallback=config.expert_random_fallback,
                seed=config.seed)
            for name in config.model_list()
        }
        self.raw_dest_labels: list[int] = []
        self.step_index = 0

    def step(self, trip: Trip) -> StepResult:
        source_label = assign_source_label(trip.source, self.clusterer, self.params)
        predictions = {name: m.predict(source_label) for name, m in self.models.items()}
        dest_label, events = self.clusterer.observe(trip.dest, trip.t_end)
        for m in self.models.values():
            m.update(source_label, dest_label, events)
        self.raw_dest_labels.append(dest_label)
        self.step_index += 1
        return StepResult(self.step_index, source_label, dest_label,
                          list(events), predictions)

    def resolved_dest_labels(self) -> list[int]:
        """Observation-time labels forwarded through all merges so far."""
        return [self.clusterer.resolve_label(lab) for lab in self.raw_dest_labels]

    def snapshot(self) -> dict:
        return {
            "user_id": self.user_id,
            "variant": self.config.variant,
            "clusterer": self.clusterer.snapshot(),
            "models": {name: m.snapshot() for name, m in self.models.items()},
        }


@dataclass
class OnlineRunResult:
    user_id: str
    variant: str
    accuracy: dict[str, tuple[float | None, float | None]]
    agreement: list[tuple[int, AgreementScores]]
    agreement_final: AgreementScores | None
    regret: dict[str, list[dict]]
    predictions: list[dict]
    snapshot: dict = field(default_factory=dict)


def run_online_user(trips: list[Trip], config: RunConfig,
                    user_id: str | None = None) -> OnlineRunResult:
    """Stream one user's trips; score every model against the offline oracle.

    All trips are streamed (the models keep learning through the test tail);
    accuracy is scored only on the chronological tail after the split point.
    Regret rows are grouped by the oracle's source label, with cumulative
    sums per group; the state map from offline to online labels is rebuilt
    after every observation, so each step is scored with the map as of the
    previous step's end.
    """
    trips = sorted(trips, key=lambda t: (t.t_start, t.t_end))
    if user_id is None:
        user_id = trips[0].user_id if trips else ""
    params = cluster_params(config)
    oracle = OfflineOracle(trips, params)
    session = OnlineUserSession(config, user_id)
    split_idx = int(len(trips) * config.split)

    state_map = build_state_map([], [])
    regret_rows: dict[str, list[dict]] = {name: [] for name in session.models}
    cums: dict[str, dict[int, list[float]]] = {name: {} for name in session.models}
    agreement_rows: list[tuple[int, AgreementScores]] = []
    test_actuals: list[int] = []
    test_choices: dict[str, list[int]] = {name: [] for name in session.models}
    prediction_records: list[dict] = []

    for i, trip in enumerate(trips):
        oracle_source = oracle.source_labels[i]
        p_star = oracle.conditionals[oracle_source]
        result = session.step(trip)

        for name, pred in result.predictions.items():
            h2, h2_d, h2_s = hellinger_split(p_star, pred.distribution, state_map)
            cum = cums[name].setdefault(oracle_source, [0.0, 0.0, 0.0])
            cum[0] += h2
            cum[1] += h2_d
            cum[2] += h2_s
            regret_rows[name].append({
                "user_id": user_id,
                "source_label": oracle_source,
                "step": result.step,
                "h2": h2,
                "h2_d": h2_d,
                "h2_s": h2_s,
                "cum_regret": cum[0],
                "cum_h2_d": cum[1],
                "cum_h2_s": cum[2],
            })

        # rebuilt after every step so plurality votes keep sharpening; step
        # i+1's regret then uses a map whose online label space matches what
        # the models predicted over (no events have intervened in between)
        state_map = build_state_map(oracle.dest_labels[:i + 1],
                                    session.resolved_dest_labels())

        if config.agreement_every > 0 and result.step % config.agreement_every == 0:
            scores = clustering_agreement(session.resolved_dest_labels(),
                                          oracle.dest_labels[:i + 1])
            agreement_rows.append((result.step, scores))

        if i >= split_idx:
            test_actuals.append(result.dest_label)
            for name, pred in result.predictions.items():
                # a choice merged into the actual's cluster by this very
                # observation counts as that cluster
                test_choices[name].append(forward_label(pred.choice, result.events))

        for name, pred in result.predictions.items():
            prediction_records.append({
                "user": user_id,
                "model": name,
                "variant": config.variant,
                "step": result.step,
                "source": result.source_label,
                "actual": result.dest_label,
                "choice": pred.choice,
                "distribution": {str(k): v for k, v in sorted(pred.distribution.items())},
            })

    agreement_final = None
    if trips:
        agreement_final = clustering_agreement(session.resolved_dest_labels(),
                                               oracle.dest_labels)
    acc = {name: accuracy(test_choices[name], test_actuals) for name in session.models}
    return OnlineRunResult(
        user_id=user_id,
        variant=config.variant,
        accuracy=acc,
        agreement=agreement_rows,
        agreement_final=agreement_final,
        regret=regret_rows,
        predictions=prediction_records,
        snapshot=session.snapshot(),
    )


@dataclass
class OfflineRunResult:
    user_id: str
    variant: str
    accuracy: dict[str, tuple[float | None, float | None]]
    snapshot: dict = field(default_factory=dict)


def run_offline_user(trips: list[Trip], config: RunConfig,
                     user_id: str | None = None) -> OfflineRunResult:
    """Train-once evaluation: cluster and fit on the chronological head,
    score accuracy on the tail. Only the Bayesian family applies here; expert
    models are inherently sequential and are skipped in this mode."""
    trips = sorted(trips, key=lambda t: (t.t_start, t.t_end))
    if user_id is None:
        user_id = trips[0].user_id if trips else ""
    params = cluster_params(config)
    split_idx = int(len(trips) * config.split)
    train, test = trips[:split_idx], trips[split_idx:]

    clusters = OfflineClusters.fit([t.dest for t in train], params)
    states = sorted({OUTLIER, *clusters.live_labels})
    train_dest = list(clusters.labels)
    labs, mat = clusters.distances_matrix([t.source for t in train])
    train_src = [
        label_from_distances(dict(zip(labs, row)), params.delta, params.d_max)
        for row in mat
    ]
    bayes = BayesianModel.fit_offline(list(zip(train_src, train_dest)), states,
                                      beta=config.beta, alpha=config.alpha)

    test_actuals = [clusters.assign_destination(t.dest) for t in test]
    test_sources = [assign_source_label(t.source, clusters, params) for t in test]

    def choices_for(name: str) -> list[int]:
        if name == "unconditioned":
            return [bayes.global_counts.mode() for _ in test_sources]
        # bayes and greedy share the argmax; they differ only in the
        # emitted distribution, which accuracy ignores
        return [bayes.predict(s).choice for s in test_sources]

    requested = [n for n in config.model_list() if n in OFFLINE_MODELS]
    acc = {name: accuracy(choices_for(name), test_actuals) for name in requested}

    snapshot = {
        "user_id": user_id,
        "variant": "offline",
        "clusterer": {
            "variant": "offline",
            "clusters": [
                {"label": lab, "size": sum(1 for x in clusters.labels if x == lab)}
                for lab in clusters.live_labels
            ],
        },
        "models": {"bayes": bayes.snapshot()},
    }
    return OfflineRunResult(user_id=user_id, variant="offline",
                            accuracy=acc, snapshot=snapshot)
