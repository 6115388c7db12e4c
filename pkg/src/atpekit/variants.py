"""Optimizer variants and what each one enables.

A variant fixes the filter-mode menu the controller may choose from, the
cutoff interpretation used for numeric blocking, whether categorical
blocking runs at all, and which surrogate atom pool its controller is
trained on.
"""
from __future__ import annotations

from dataclasses import dataclass

from .surrogate import BASE_POOL, EXTENDED_POOL

_CLASSIC_FILTERS = ("none", "random", "age", "loss")
_ALL_FILTERS = ("none", "random", "age", "loss", "clustering", "zscore")
_ZSCORE_FILTERS = ("none", "random", "age", "loss", "zscore")


@dataclass(frozen=True)
class VariantSpec:
    name: str
    adaptive: bool
    filter_menu: tuple[str, ...]
    cutoff_mode: str
    categorical_blocking: bool
    atom_pool: frozenset[str]


VARIANTS: dict[str, VariantSpec] = {
    v.name: v
    for v in (
        VariantSpec("tpe", False, (), "count_original", False, BASE_POOL),
        VariantSpec("atpe", True, _CLASSIC_FILTERS, "count_original", False, BASE_POOL),
        VariantSpec("atpe-r", True, _CLASSIC_FILTERS, "count_reversed", False, BASE_POOL),
        VariantSpec("atpe-f", True, _ALL_FILTERS, "count_original", False, BASE_POOL),
        VariantSpec("atpe-cf", True, _CLASSIC_FILTERS, "count_original", False, EXTENDED_POOL),
        VariantSpec("atpe-c", True, _CLASSIC_FILTERS, "count_reversed", True, BASE_POOL),
        VariantSpec("atpe-c-cf", True, _CLASSIC_FILTERS, "count_reversed", True, EXTENDED_POOL),
        VariantSpec("atpe-cf-zscore", True, _ZSCORE_FILTERS, "count_original", False, EXTENDED_POOL),
    )
}


def get_variant(name: str) -> VariantSpec:
    key = name.strip().lower().replace("_", "-")
    if key not in VARIANTS:
        valid = ", ".join(sorted(VARIANTS))
        raise ValueError(f"unknown variant {name!r}; valid variants: {valid}")
    return VARIANTS[key]
