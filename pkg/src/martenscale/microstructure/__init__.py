"""Piecewise-affine microstructures: laminates, star blocks and dyadic covers."""
from .complex import (
    CellComplex, ContinuityReport, EnergyBreakdown, PAField, check_continuity,
    elastic_per_cell, energies_from_csv, energies_to_csv, exact_energy, merge_fields,
    surface_energy,
)
from .cover import (
    CoverPlan, CoverResult, c_f, count_bound, cover_energy, cover_values, greedy_cover, internal_depth,
    materialize_cover, optimal_depth, plan_cover, star_energy_table,
)
from .laminate import laminate, laminate_gradient
from .star import canonical_ring, orientation_search, scale_ratio, star_block

__all__ = [
    "CellComplex", "ContinuityReport", "EnergyBreakdown", "PAField", "check_continuity",
    "elastic_per_cell", "energies_from_csv", "energies_to_csv", "exact_energy",
    "merge_fields", "surface_energy", "CoverPlan", "CoverResult", "c_f", "count_bound",
    "cover_energy", "cover_values", "greedy_cover", "internal_depth", "materialize_cover", "optimal_depth",
    "plan_cover", "star_energy_table", "laminate", "laminate_gradient", "canonical_ring",
    "orientation_search", "scale_ratio", "star_block",
]
