"""Seeded generation of the eight point cloud corruptions."""
from cpccd.corrupt.ops import (
    APPLY,
    CorruptionResult,
    CorruptionStats,
    apply,
    apply_bif,
    apply_biw,
    apply_djt,
    apply_eoi,
    apply_is,
    apply_oboo,
    apply_rcc,
    apply_tr,
    corrupt,
)
from cpccd.corrupt.dataset import (
    SPLITS,
    DatasetManifest,
    ManifestEntry,
    build_dataset,
    expected_total,
)
from cpccd.corrupt.recipe import Recipe, load_recipe, parse_recipe
from cpccd.corrupt.spec import (
    ALL_KINDS,
    RCC_ORDER,
    CorruptionKind,
    CorruptionSpec,
    round_half_up,
    sample_params,
    validate,
)

__all__ = [
    "APPLY", "CorruptionResult", "CorruptionStats", "apply", "apply_bif", "apply_biw",
    "apply_djt", "apply_eoi", "apply_is", "apply_oboo", "apply_rcc", "apply_tr", "corrupt",
    "SPLITS", "DatasetManifest", "ManifestEntry", "build_dataset", "expected_total",
    "Recipe", "load_recipe", "parse_recipe",
    "ALL_KINDS", "RCC_ORDER", "CorruptionKind", "CorruptionSpec", "round_half_up",
    "sample_params", "validate",
]
