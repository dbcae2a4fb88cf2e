"""Taylor joint spectrum of commuting matrix pairs."""

from .koszul import (
    KoszulReport,
    check_commuting,
    diagonal_singular_values,
    joint_eigenvalues,
    koszul_ranks,
)
from .scan import (
    SpectrumScan,
    cell_centers,
    cell_radius,
    containment_gap,
    mask_hausdorff,
    matrices_hash,
    clark_pair,
    level_set_angles,
    reference_nodes,
    spectrum_budget,
    taylor_spectrum_on_torus,
)

__all__ = [
    "KoszulReport",
    "SpectrumScan",
    "cell_centers",
    "cell_radius",
    "check_commuting",
    "containment_gap",
    "diagonal_singular_values",
    "joint_eigenvalues",
    "koszul_ranks",
    "mask_hausdorff",
    "matrices_hash",
    "clark_pair",
    "level_set_angles",
    "reference_nodes",
    "spectrum_budget",
    "taylor_spectrum_on_torus",
]
