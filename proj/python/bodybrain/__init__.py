"""Evolution of modular robot bodies, with and without lifetime brain learning."""

from ._core import (
    ArchiveTooSmall,
    BodyPlan,
    CpgNetwork,
    DimensionMismatch,
    Genotype,
    MissingBaseline,
    ParseError,
    SimConfig,
    crawl_step,
    crossover,
    decode,
    descriptors,
    evaluate,
    knn_predict,
    learn,
    max_limbs,
    mutate,
    revde_matrix,
    revde_triple,
    rewrite,
    run_experiment,
    simulate,
    summarize,
)

__all__ = [
    "ArchiveTooSmall",
    "BodyPlan",
    "CpgNetwork",
    "DimensionMismatch",
    "Genotype",
    "MissingBaseline",
    "ParseError",
    "SimConfig",
    "crawl_step",
    "crossover",
    "decode",
    "descriptors",
    "evaluate",
    "knn_predict",
    "learn",
    "max_limbs",
    "mutate",
    "revde_matrix",
    "revde_triple",
    "rewrite",
    "run_experiment",
    "simulate",
    "summarize",
]
