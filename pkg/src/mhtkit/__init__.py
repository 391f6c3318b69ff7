"""Multiple-hypothesis information management.

The engine keeps alternative interpretations of uncertain observations in
per-cluster hypothesis trees, shares structure between hypotheses that
agree, and prunes or promotes branches as probability mass concentrates.
Domain logic lives entirely in application-supplied generator callbacks;
the :mod:`mhtkit.radar` subpackage is one such application.
"""

from .errors import (
    EmptyGenerationError,
    LastLeafError,
    MhtError,
    MismatchedClonesError,
    SingularCovarianceError,
    SizeGuardError,
    UnknownIdError,
    ZeroMassError,
)
from .hypgen import (
    GeneratedHypothesis,
    GenerationRecord,
    NewEvent,
    ProvidedEvent,
    ProvidedFact,
    hyp,
)
from .model import PROB_TOLERANCE, RULE1, RULE2, cluster_to_dot, validate_cluster
from .oracle import (
    FlatOracle,
    OracleHypothesis,
    content_key,
    cross_product,
    distribution_diffs,
    engine_distribution,
)
from .pruning import BestK, DepthLimit, RatioThreshold
from .world import (
    EVENT_ADDED,
    EVENT_CERTAIN,
    EVENT_REMOVED,
    FACT_ADDED,
    FACT_REMOVED,
    GenerateReport,
    Notification,
    World,
    default_payload_key,
)

__version__ = "0.1.0"

__all__ = [
    "BestK",
    "DepthLimit",
    "EmptyGenerationError",
    "EVENT_ADDED",
    "EVENT_CERTAIN",
    "EVENT_REMOVED",
    "FACT_ADDED",
    "FACT_REMOVED",
    "FlatOracle",
    "GeneratedHypothesis",
    "GenerateReport",
    "GenerationRecord",
    "LastLeafError",
    "MhtError",
    "MismatchedClonesError",
    "NewEvent",
    "Notification",
    "OracleHypothesis",
    "PROB_TOLERANCE",
    "ProvidedEvent",
    "ProvidedFact",
    "RatioThreshold",
    "RULE1",
    "RULE2",
    "SingularCovarianceError",
    "SizeGuardError",
    "UnknownIdError",
    "World",
    "ZeroMassError",
    "cluster_to_dot",
    "content_key",
    "cross_product",
    "default_payload_key",
    "distribution_diffs",
    "engine_distribution",
    "hyp",
    "validate_cluster",
    "__version__",
]
