"""Bundled RIF profiles and tolerance profiles."""

from typing import Dict, List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, Field

from .schemas import BiPolySpec, RifSpec


# ============================================================================
# Tolerance Profiles
# ============================================================================

class Tolerances(BaseModel):
    """Thresholds for the named verification checks."""

    mass: float = Field(description="|total mass - (1-|phi(0)|^2)/|alpha-phi(0)|^2|")
    poisson: float
    disintegration: float
    isometry: float
    unitarity: float
    commutation: float
    intertwining: float
    v_form: float
    kernel_consistency: float
    necessity_min: float = Field(default=1e-3, description="Lower bound for the P_phi necessity value")
    box_ratio_min: float = Field(default=1e-3, description="Lower bound for box mass / eps")
    rank_tol: float = 1e-8
    enforce_refinement: bool = Field(description="Refinement sequences must be non-increasing")
    noise_floor: float = 1e-10


TOLERANCE_PROFILES: Dict[str, Tolerances] = {
    "strict": Tolerances(
        mass=1e-8,
        poisson=1e-6,
        disintegration=1e-6,
        isometry=1e-6,
        unitarity=1e-8,
        commutation=1e-8,
        intertwining=1e-6,
        v_form=1e-6,
        kernel_consistency=1e-4,
        enforce_refinement=True,
    ),
    # RIFs with boundary singularities: quadrature near the singular points converges slowly
    "singular": Tolerances(
        mass=1e-2,
        poisson=1e-2,
        disintegration=1e-3,
        isometry=1e-2,
        unitarity=1e-2,
        commutation=1e-2,
        intertwining=1e-2,
        v_form=1e-2,
        kernel_consistency=5e-2,
        rank_tol=1e-6,
        enforce_refinement=False,
    ),
}


def tolerances(name: str) -> Tolerances:
    if name not in TOLERANCE_PROFILES:
        raise KeyError(f"unknown tolerance profile '{name}' (choose from {sorted(TOLERANCE_PROFILES)})")
    return TOLERANCE_PROFILES[name]


# ============================================================================
# RIF Profiles
# ============================================================================

class RifProfile(BaseModel):
    name: str
    description: str
    rif: RifSpec
    alphas: List[float] = Field(description="Default alpha angles in radians")
    tol_profile: Literal["strict", "singular"]


def _spec(coeffs: List[List[complex]], monomial: Tuple[int, int] = (0, 0)) -> RifSpec:
    arr = np.array(coeffs, dtype=complex)
    flat = [(float(z.real), float(z.imag)) for z in arr.ravel()]
    p = BiPolySpec(bidegree=(arr.shape[0] - 1, arr.shape[1] - 1), coeffs=flat)
    return RifSpec(p=p, monomial=monomial)


PROFILES: Dict[str, RifProfile] = {
    "zw": RifProfile(
        name="zw",
        description="phi = z1 z2",
        rif=_spec([[1]], (1, 1)),
        alphas=[0.0, np.pi / 4, np.pi / 2, -np.pi / 4],
        tol_profile="strict",
    ),
    "fave": RifProfile(
        name="fave",
        description="phi = (2 z1 z2 - z1 - z2) / (2 - z1 - z2), singular at (1, 1)",
        rif=_spec([[2, -1], [-1, 0]]),
        alphas=[0.0, np.pi / 4, np.pi / 2, -np.pi / 2],
        tol_profile="singular",
    ),
    "blaschke2": RifProfile(
        name="blaschke2",
        description="phi = b(z1) b(z2) with b(z) = (z - 1/2) / (1 - z/2)",
        rif=_spec([[1, -0.5], [-0.5, 0.25]]),
        alphas=[np.pi / 2],
        tol_profile="strict",
    ),
}


def profile(name: str) -> RifProfile:
    if name not in PROFILES:
        raise KeyError(f"unknown profile '{name}' (choose from {sorted(PROFILES)})")
    return PROFILES[name]
