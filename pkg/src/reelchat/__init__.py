"""reelchat: a sociable movie-recommendation dialog engine.

The public surface is re-exported here; module paths remain stable for
anything not listed.
"""

from .datapipe import (
    AnnotationError,
    CorpusDialog,
    CorpusError,
    CorpusTurn,
    RecommendationMark,
    RelationGraph,
    annotate,
    annotate_corpus,
    augment,
    build_relation_graph,
    dump_corpus,
    load_corpus,
    validate_augmentation,
)
from .delex import (
    DelexError,
    NoCandidateError,
    Placeholder,
    PlaceholderEntry,
    PlaceholderMap,
    delexicalize,
    find_placeholders,
    parse_placeholder,
    relexicalize,
)
from .engine import (
    DialogEngine,
    DialogSession,
    EngineConfig,
    EngineError,
    EngineInvariantError,
    RecommendationEvent,
    RecommendationStatus,
    Turn,
    session_from_json,
    session_from_payload,
    session_to_json,
    session_to_payload,
    truncate_context,
)
from .extract import (
    AttributeMention,
    GenrePatternSet,
    collect_side_attributes,
    default_patterns,
    extract_mentions,
)
from .generator import (
    GenerationInput,
    GeneratorBackendError,
    GeneratorError,
    Phase,
    RemoteGenerator,
    Response,
    ResponseGenerator,
    TemplateGenerator,
    generate,
    realized_attributes,
    verify_realization,
)
from .kb import (
    Attribute,
    KBError,
    KBParseError,
    KBValidationError,
    Kind,
    Movie,
    MovieKB,
    Predicate,
    Relation,
    canonicalize,
    dump_kb,
    load_kb,
    make_attribute,
    movie_to_record,
)
from .metrics import (
    CorpusScore,
    EmptyPredictor,
    ExampleTally,
    MetricReport,
    OraclePredictor,
    report_to_json,
    report_to_table,
    score_corpus,
    score_example,
)
from .predictor import (
    AttributeDelta,
    PolicyState,
    PredictedTracking,
    PredictorBackendError,
    PredictorError,
    PredictorInput,
    ReferencePolicy,
    RemotePredictor,
    SystemAttributePredictor,
    compute_delta,
    predict,
)
from .recommender import (
    KBRecommender,
    RecommendationQuery,
    Recommender,
    RecommenderBackendError,
    RemoteRecommender,
    ScoredCandidate,
    person_recommend,
    recommend,
)
from .service import (
    ServiceConfig,
    ServiceConfigError,
    create_app,
    default_kb,
    load_service_config,
)
from .tracking import (
    AttributeLabeler,
    AttributeTracking,
    Label,
    LabelerDecision,
    Rationale,
    RuleBasedLabeler,
    Side,
    TrackingEntry,
    TrackingError,
    label_flip_on_rejection,
    track,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationError",
    "Attribute",
    "AttributeDelta",
    "AttributeLabeler",
    "AttributeMention",
    "AttributeTracking",
    "CorpusDialog",
    "CorpusError",
    "CorpusScore",
    "CorpusTurn",
    "DelexError",
    "DialogEngine",
    "DialogSession",
    "EmptyPredictor",
    "EngineConfig",
    "EngineError",
    "EngineInvariantError",
    "ExampleTally",
    "GenerationInput",
    "GeneratorBackendError",
    "GeneratorError",
    "GenrePatternSet",
    "KBError",
    "KBParseError",
    "KBRecommender",
    "KBValidationError",
    "Kind",
    "Label",
    "LabelerDecision",
    "MetricReport",
    "Movie",
    "MovieKB",
    "NoCandidateError",
    "OraclePredictor",
    "Phase",
    "Placeholder",
    "PlaceholderEntry",
    "PlaceholderMap",
    "PolicyState",
    "PredictedTracking",
    "Predicate",
    "PredictorBackendError",
    "PredictorError",
    "PredictorInput",
    "Rationale",
    "RecommendationEvent",
    "RecommendationMark",
    "RecommendationQuery",
    "RecommendationStatus",
    "Recommender",
    "RecommenderBackendError",
    "ReferencePolicy",
    "Relation",
    "RelationGraph",
    "RemoteGenerator",
    "RemotePredictor",
    "RemoteRecommender",
    "Response",
    "ResponseGenerator",
    "RuleBasedLabeler",
    "ScoredCandidate",
    "ServiceConfig",
    "ServiceConfigError",
    "Side",
    "SystemAttributePredictor",
    "TemplateGenerator",
    "TrackingEntry",
    "TrackingError",
    "Turn",
    "annotate",
    "annotate_corpus",
    "augment",
    "build_relation_graph",
    "canonicalize",
    "collect_side_attributes",
    "compute_delta",
    "create_app",
    "default_kb",
    "default_patterns",
    "delexicalize",
    "dump_corpus",
    "dump_kb",
    "extract_mentions",
    "find_placeholders",
    "generate",
    "label_flip_on_rejection",
    "load_corpus",
    "load_kb",
    "load_service_config",
    "make_attribute",
    "movie_to_record",
    "parse_placeholder",
    "person_recommend",
    "predict",
    "realized_attributes",
    "recommend",
    "relexicalize",
    "report_to_json",
    "report_to_table",
    "score_corpus",
    "score_example",
    "session_from_json",
    "session_from_payload",
    "session_to_json",
    "session_to_payload",
    "track",
    "truncate_context",
    "verify_realization",
]
