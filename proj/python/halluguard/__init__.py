"""Python bindings for the halluguard C++ library."""

from ._core import (
    Bundle,
    Generation,
    HalluGuardConfig,
    Components,
    all_detectors,
    auprc,
    auroc,
    bound_terms,
    build_gram,
    cholesky_log_det,
    components,
    read_bundle,
    score,
    score_detectors,
    spectral_summary,
    tpr_at_fpr,
    validate_bundle,
    write_bundle,
)

__all__ = [
    "Bundle",
    "Generation",
    "HalluGuardConfig",
    "Components",
    "all_detectors",
    "auprc",
    "auroc",
    "bound_terms",
    "build_gram",
    "cholesky_log_det",
    "components",
    "read_bundle",
    "score",
    "score_detectors",
    "spectral_summary",
    "tpr_at_fpr",
    "validate_bundle",
    "write_bundle",
]
