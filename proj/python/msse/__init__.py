"""Multi-scale squeeze-excitation damage classifier, C++ core."""

from msse._core import (  # noqa: F401
    MiniDenseNet,
    MsseHead,
    MsseHeadConfig,
    augment,
    average_precision,
    class_metrics,
    cohen_kappa,
    confusion,
    dedup,
    fit,
    hamming,
    phash64,
    render_overlay,
    roc_auc,
    similarity,
)

__all__ = [
    "MiniDenseNet",
    "MsseHead",
    "MsseHeadConfig",
    "augment",
    "average_precision",
    "class_metrics",
    "cohen_kappa",
    "confusion",
    "dedup",
    "fit",
    "hamming",
    "phash64",
    "render_overlay",
    "roc_auc",
    "similarity",
]
