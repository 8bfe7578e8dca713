"""Space-crossing community detection and social-aware routing on contact traces."""

from .community import (
    Community,
    CommunityKind,
    CommunityRegistry,
    ChangeEvent,
    ChangeKind,
    TriangleGrowthDetector,
    build_registry,
    shared_substructure,
    track_change,
)
from .errors import (
    ConfigurationError,
    SpacecrossError,
    TraceFormatError,
    TraceValidationError,
    TrackingStateError,
    WindowNotReadyError,
)
from .graph import (
    EncounterRatioTable,
    SnapshotGraph,
    build_ratio_table,
    build_snapshot,
    encounter_ratio_growing,
    encounter_ratio_sliding,
    median_social_edges,
)
from .metrics import ActivityVector, activity_vector, local_activity, pearson_similarity
from .routing import ROUTERS, Action, RouterDecision, betweenness_centrality
from .simulator import Metrics, SimConfig, run_simulation
from .trace import (
    APDesignation,
    ContactEvent,
    contacts_per_interval,
    designate_aps,
    load_ap_file,
    node_universe,
    parse_contact_trace,
    serialize_contact_trace,
    trace_span,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActivityVector",
    "APDesignation",
    "ChangeEvent",
    "ChangeKind",
    "Community",
    "CommunityKind",
    "CommunityRegistry",
    "ConfigurationError",
    "ContactEvent",
    "EncounterRatioTable",
    "Metrics",
    "ROUTERS",
    "RouterDecision",
    "SimConfig",
    "SnapshotGraph",
    "SpacecrossError",
    "TraceFormatError",
    "TraceValidationError",
    "TrackingStateError",
    "TriangleGrowthDetector",
    "WindowNotReadyError",
    "activity_vector",
    "betweenness_centrality",
    "build_ratio_table",
    "build_registry",
    "build_snapshot",
    "contacts_per_interval",
    "designate_aps",
    "encounter_ratio_growing",
    "encounter_ratio_sliding",
    "load_ap_file",
    "local_activity",
    "median_social_edges",
    "node_universe",
    "parse_contact_trace",
    "pearson_similarity",
    "run_simulation",
    "serialize_contact_trace",
    "shared_substructure",
    "track_change",
    "trace_span",
]
