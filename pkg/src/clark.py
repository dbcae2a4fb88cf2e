"""Discretized Clark measures of rational inner functions.

sigma_alpha is carried by the branches of C_alpha over uniform nodes in
zeta1. Each node gets mass w/N with w = 1/|d phi/d z2| (trapezoidal rule in
zeta1 against normalized Lebesgue measure), so integrals over sigma_alpha
become branch-major node sums.
"""

from __future__ import annotations

import warnings
from typing import Callable, List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from . import torus
from .errors import DomainError
from .rif import (
    LevelSetBranches,
    Rif,
    derivative_moduli,
    eval_interior,
    is_exceptional,
    level_set_branches,
)


DEFAULT_EXCLUSION_RADIUS = 1e-4
BOX_EPSILONS = (0.4, 0.2, 0.1, 0.05)
REFINE_MASS_TOL = 1e-10
REFINE_MAX_NODES = 1 << 15
AREA_GRID = 256


class ExcludedNode(BaseModel):
    branch: int
    node: int
    reason: str


class ClarkMeasureQuad(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: complex
    branches: LevelSetBranches
    weights: np.ndarray  # (branches, N), NaN where excluded
    node_mass: np.ndarray  # (branches, N), 0 where excluded
    excluded: List[ExcludedNode] = Field(default_factory=list)
    mass_deficit_estimate: float = 0.0
    exclusion_radius: float = DEFAULT_EXCLUSION_RADIUS

    @property
    def n_nodes(self) -> int:
        return self.branches.n_nodes

    def support(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(zeta1, zeta2, mass) of the non-excluded nodes, branch-major."""
        keep = self.node_mass > 0
        z1 = np.broadcast_to(self.branches.nodes, self.node_mass.shape)[keep]
        return z1, self.branches.values[keep], self.node_mass[keep]

    def support_angles(self) -> np.ndarray:
        z1, z2, _ = self.support()
        return torus.angles(z1, z2)

    def total_mass(self) -> float:
        return float(np.sum(self.node_mass))


# ============================================================================
# Construction
# ============================================================================

def build_clark_measure(
    rif: Rif,
    alpha: complex,
    n: int,
    exclusion_radius: float = DEFAULT_EXCLUSION_RADIUS,
) -> ClarkMeasureQuad:
    """Quadrature for sigma_alpha on n nodes per branch."""
    branches = level_set_branches(rif, alpha, n)
    values = branches.values
    z1 = np.broadcast_to(branches.nodes, values.shape)

    finite = np.isfinite(values)
    safe_z2 = np.where(finite, values, 1.0)
    deriv = derivative_moduli(rif, z1, safe_z2, axis=2)
    with np.errstate(divide="ignore"):
        weights = 1.0 / deriv

    reasons = np.full(values.shape, "", dtype=object)
    reasons[~finite] = "missing root"
    reasons[finite & ~np.isfinite(weights)] = "vanishing derivative"
    reasons[finite & np.isnan(deriv)] = "denominator vanishes"
    if len(rif.singular):
        dist = torus.nearest(rif.singular.angles(), torus.angles(z1, safe_z2)).reshape(values.shape)
        reasons[finite & (dist < exclusion_radius)] = "near singular point"

    drop = reasons != ""
    weights = np.where(drop, np.nan, weights)
    node_mass = np.where(drop, 0.0, weights / n)

    excluded = [
        ExcludedNode(branch=int(j), node=int(i), reason=str(reasons[j, i]))
        for j, i in zip(*np.nonzero(drop))
    ]
    return ClarkMeasureQuad(
        alpha=complex(alpha),
        branches=branches,
        weights=weights,
        node_mass=node_mass,
        excluded=excluded,
        mass_deficit_estimate=_deficit(node_mass, drop),
        exclusion_radius=exclusion_radius,
    )


def _deficit(node_mass: np.ndarray, drop: np.ndarray) -> float:
    """Mass of excluded nodes estimated from their kept neighbours on the branch."""
    total = 0.0
    n = node_mass.shape[1]
    for j, i in zip(*np.nonzero(drop)):
        neighbours = [node_mass[j, (i - 1) % n], node_mass[j, (i + 1) % n]]
        kept = [m for m, k in zip(neighbours, [(i - 1) % n, (i + 1) % n]) if not drop[j, k]]
        if kept:
            total += float(np.mean(kept))
    return total


# ============================================================================
# Integration and identities
# ============================================================================

def integrate(mu: ClarkMeasureQuad, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> complex:
    """Branch-major node sum of f against the node masses."""
    z1, z2, mass = mu.support()
    values = np.asarray(f(z1, z2), dtype=complex) * np.ones_like(mass)
    return complex(np.sum(values * mass))


def expected_mass(rif: Rif, alpha: complex) -> float:
    phi0 = rif.phi0
    return (1 - abs(phi0) ** 2) / abs(alpha - phi0) ** 2


def mass_residual(mu: ClarkMeasureQuad, rif: Rif) -> float:
    return abs(mu.total_mass() - expected_mass(rif, mu.alpha))


def poisson_kernel(z: complex, zeta: np.ndarray) -> np.ndarray:
    return (1 - abs(z) ** 2) / np.abs(zeta - z) ** 2


def poisson_residual(mu: ClarkMeasureQuad, rif: Rif, z: Tuple[complex, complex]) -> float:
    """Gap between (1-|phi(z)|^2)/|alpha-phi(z)|^2 and the Poisson integral of sigma_alpha."""
    z1, z2 = complex(z[0]), complex(z[1])
    if abs(z1) >= 1 or abs(z2) >= 1:
        raise DomainError("the Poisson identity is checked at interior points only")
    phi = complex(eval_interior(rif, z1, z2))
    lhs = (1 - abs(phi) ** 2) / abs(mu.alpha - phi) ** 2
    rhs = integrate(mu, lambda a, b: poisson_kernel(z1, a) * poisson_kernel(z2, b))
    return abs(lhs - rhs.real) + abs(rhs.imag)


def refined_measure(
    rif: Rif,
    alpha: complex,
    n: int,
    mass_tol: float = REFINE_MASS_TOL,
    max_nodes: int = REFINE_MAX_NODES,
) -> ClarkMeasureQuad:
    """Clark quadrature with n doubled until the mass identity holds to mass_tol.

    Near alpha = phi at a boundary pole of the branch weights the trapezoidal
    rule needs many more nodes; doubling stops at max_nodes.
    """
    mu = build_clark_measure(rif, alpha, n)
    while mass_residual(mu, rif) > mass_tol and n < max_nodes:
        n *= 2
        mu = build_clark_measure(rif, alpha, n)
    return mu


def disintegration_residual(
    rif: Rif,
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n_alpha: int = 64,
    n: int = 256,
    mass_tol: float = REFINE_MASS_TOL,
    max_nodes: int = REFINE_MAX_NODES,
    area_grid: int = AREA_GRID,
) -> float:
    """Compare the alpha-average of the Clark integrals with the area integral on T^2.

    alpha runs over half-step-offset roots of unity; exceptional values are
    skipped and the average is taken over the remaining ones. Each alpha
    starts at n nodes and is refined on its own (see refined_measure).
    """
    alphas = np.exp(2j * np.pi * (np.arange(n_alpha) + 0.5) / n_alpha)
    total = 0.0 + 0.0j
    used = 0
    for alpha in alphas:
        if is_exceptional(rif, alpha):
            continue
        total += integrate(refined_measure(rif, alpha, n, mass_tol, max_nodes), f)
        used += 1
    grid = np.exp(2j * np.pi * np.arange(area_grid) / area_grid)
    g1, g2 = np.meshgrid(grid, grid, indexing="ij")
    area = complex(np.mean(np.asarray(f(g1, g2), dtype=complex) * np.ones(g1.shape)))
    return abs(total / max(used, 1) - area)


# ============================================================================
# Support geometry
# ============================================================================

def support_distance(mu1: ClarkMeasureQuad, mu2: ClarkMeasureQuad) -> float:
    """Smallest torus distance between the node sets of two measures."""
    return torus.min_distance(mu1.support_angles(), mu2.support_angles())


def epsilon_box_mass(mu: ClarkMeasureQuad, lam: Tuple[complex, complex], eps: float) -> float:
    """Mass of the box of side eps centred at lam, angles recentred around lam."""
    if eps > 2 * np.pi:
        return mu.total_mass()
    z1, z2, mass = mu.support()
    tau1, tau2 = np.angle(lam[0]), np.angle(lam[1])
    inside = (torus.circular_gap(np.angle(z1), tau1) < eps / 2) & (
        torus.circular_gap(np.angle(z2), tau2) < eps / 2
    )
    return float(np.sum(mass[inside]))


class BoxMassFit(BaseModel):
    theta1: float
    theta2: float
    slope: float
    r_squared: float
    min_ratio: float


def box_mass_fit(
    mu: ClarkMeasureQuad,
    points: Sequence[Tuple[complex, complex]],
    eps: Sequence[float] = BOX_EPSILONS,
) -> List[BoxMassFit]:
    """Fit box mass against eps at each point; slope > 0 and min ratio > 0 give the lower bound."""
    eps = np.asarray(eps, dtype=float)
    fits = []
    for lam in points:
        masses = np.array([epsilon_box_mass(mu, lam, e) for e in eps])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            reg = stats.linregress(eps, masses)
        r2 = float(reg.rvalue ** 2) if np.isfinite(reg.rvalue) else 0.0
        fits.append(
            BoxMassFit(
                theta1=float(np.angle(lam[0])),
                theta2=float(np.angle(lam[1])),
                slope=float(reg.slope),
                r_squared=r2,
                min_ratio=float(np.min(masses / eps)),
            )
        )
    return fits


def sample_level_points(
    mu: ClarkMeasureQuad,
    rif: Rif,
    count: int = 10,
    avoid: float = 0.3,
) -> List[Tuple[complex, complex]]:
    """Evenly spaced support nodes kept away from singular points."""
    z1, z2, _ = mu.support()
    ang = torus.angles(z1, z2)
    if len(rif.singular):
        far = torus.nearest(rif.singular.angles(), ang) > avoid
        z1, z2 = z1[far], z2[far]
    if z1.size == 0:
        return []
    idx = np.linspace(0, z1.size - 1, count).round().astype(int)
    return [(complex(z1[i]), complex(z2[i])) for i in idx]
