"""Feature management engine for household energy ML.

Thin Python surface over the C++ core: synthetic corpus generation,
ingestion into the offline store, declarative feature registration with
point-in-time retrieval, GBRT training, ablation/cross-validation, and the
three-strategy pipeline benchmark.
"""

from ._featstore import (
    FeatstoreError,
    FeatureStore,
    Model,
    __version__,
    ablation,
    benchmark,
    cross_validate,
    format_time,
    generate_synthetic,
    ingest,
    parse_time,
    read_table,
    solar_position,
    train,
)

__all__ = [
    "FeatstoreError",
    "FeatureStore",
    "Model",
    "__version__",
    "ablation",
    "benchmark",
    "cross_validate",
    "format_time",
    "generate_synthetic",
    "ingest",
    "parse_time",
    "read_table",
    "solar_position",
    "train",
]
