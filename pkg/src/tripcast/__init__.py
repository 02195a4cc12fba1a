"""Streaming destination clustering and next-destination prediction.

Trips are clustered online as they arrive (two centroid-compression
variants), next destinations are predicted by sequential Bayesian and
expert-advice models, and the whole online pipeline is scored against an
offline clairvoyant baseline through a squared-Hellinger regret that splits
into distributional and state-space error.
"""

from .clustering import (
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
from .config import RunConfig, parse_kv_file, parse_kv_text
from .evaluation import (
    AgreementScores,
    StateMap,
    accuracy,
    build_state_map,
    clustering_agreement,
    hellinger_split,
    oracle_conditionals,
    orphan_mass,
    regret_curve,
)
from .geo import EARTH_RADIUS_M, GeoPoint, haversine_distance, offset_point
from .ingest import (
    GpsFix,
    SynthSpec,
    Trip,
    extract_trips,
    filter_corpus,
    generate_synthetic,
    merge_close_trips,
    read_fixes_csv,
    read_trips_csv,
    sample_ground_truth,
    write_trips_csv,
)
from .pipeline import (
    OfflineOracle,
    OnlineUserSession,
    run_offline_user,
    run_online_user,
)
from .predict import (
    BayesianModel,
    ExpertModel,
    ExpWeightsModel,
    GreedyModel,
    Prediction,
    UnconditionedModel,
    forward_label,
    make_model,
)

__all__ = [
    "OUTLIER",
    "EARTH_RADIUS_M",
    "GeoPoint",
    "haversine_distance",
    "offset_point",
    "GpsFix",
    "Trip",
    "SynthSpec",
    "extract_trips",
    "merge_close_trips",
    "filter_corpus",
    "generate_synthetic",
    "sample_ground_truth",
    "read_fixes_csv",
    "read_trips_csv",
    "write_trips_csv",
    "ClusterParams",
    "NewCluster",
    "Merge",
    "OfflineClusters",
    "OnlineClustererV1",
    "OnlineClustererV2",
    "offline_dbscan",
    "assign_source_label",
    "label_from_distances",
    "Prediction",
    "BayesianModel",
    "UnconditionedModel",
    "GreedyModel",
    "ExpertModel",
    "ExpWeightsModel",
    "make_model",
    "forward_label",
    "AgreementScores",
    "StateMap",
    "accuracy",
    "build_state_map",
    "clustering_agreement",
    "hellinger_split",
    "oracle_conditionals",
    "orphan_mass",
    "regret_curve",
    "RunConfig",
    "parse_kv_text",
    "parse_kv_file",
    "OfflineOracle",
    "OnlineUserSession",
    "run_online_user",
    "run_offline_user",
]
