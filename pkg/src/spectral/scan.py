"""Torus grid scans of the Taylor spectrum of commuting unitary pairs."""

from __future__ import annotations

import hashlib
from typing import Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.spatial import cKDTree

from .. import torus
from ..errors import UnitarityError
from ..rif import LevelSetBranches
from .koszul import (
    COMMUTATION_RTOL,
    DEFAULT_TOL,
    check_commuting,
    joint_eigenvalues,
    koszul_ranks,
)


UNITARITY_TOL = 1e-6
DEFAULT_GRID = 256
NODE_FLOOR = 1e-8


class SpectrumScan(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid_n: int
    centers: np.ndarray  # cell-centre angles, shared by both axes
    mask: np.ndarray  # (grid_n, grid_n) bool, [theta1 index, theta2 index]
    tolerance: float
    threshold: float
    matrices_hash: str
    pairs: np.ndarray  # joint eigenvalue pairs as angles, (n, 2)
    commutation: float = 0.0
    unitarity: float = 0.0

    @property
    def step(self) -> float:
        return torus.TWO_PI / self.grid_n

    def points(self) -> np.ndarray:
        """Angles of the marked cells, (k, 2)."""
        i, j = np.nonzero(self.mask)
        return np.column_stack([self.centers[i], self.centers[j]])


def cell_centers(grid_n: int) -> np.ndarray:
    h = torus.TWO_PI / grid_n
    return -np.pi + (np.arange(grid_n) + 0.5) * h


def cell_radius(grid_n: int) -> float:
    """Chordal circumradius of a cell in the R^4 embedding of T^2."""
    return float(2 * np.sqrt(2) * np.sin(np.pi / (2 * grid_n)))


def matrices_hash(a: np.ndarray, b: np.ndarray) -> str:
    h = hashlib.sha256()
    for m in (a, b):
        h.update(np.ascontiguousarray(np.asarray(m, dtype=complex)).tobytes())
    return h.hexdigest()


def unitarity_gap(m: np.ndarray) -> float:
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), 2))


def _is_diagonal(m: np.ndarray) -> bool:
    return not np.count_nonzero(m - np.diag(np.diag(m)))


def _embed(z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    return np.column_stack([z1.real, z1.imag, z2.real, z2.imag])


def taylor_spectrum_on_torus(
    a: np.ndarray,
    b: np.ndarray,
    grid_n: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    commutation_rtol: float = COMMUTATION_RTOL,
    method: Literal["kdtree", "direct"] = "kdtree",
) -> SpectrumScan:
    """Mark the cells whose centre lambda makes the Koszul complex of (A, B) singular.

    Singular values below max(tol * sigma_max, cell circumradius) count as
    zero. The pair is unitarily diagonalized through its joint eigenvectors
    (diagonal pairs as given), where those singular values are distances in
    R^4; the kdtree method answers every cell with one nearest-neighbour
    query, the direct method runs the rank test per cell.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    gaps = (unitarity_gap(a), unitarity_gap(b))
    if max(gaps) > UNITARITY_TOL:
        raise UnitarityError(f"pair is not unitary (||A*A - I|| = {gaps[0]:.3g}, ||B*B - I|| = {gaps[1]:.3g})")
    commutation = check_commuting(a, b, commutation_rtol)

    if _is_diagonal(a) and _is_diagonal(b):
        d1, d2 = np.diag(a).copy(), np.diag(b).copy()
    else:
        pairs = joint_eigenvalues(a, b, tol, commutation_rtol)
        d1 = np.array([p[0] for p in pairs])
        d2 = np.array([p[1] for p in pairs])

    centers = cell_centers(grid_n)
    t1, t2 = np.meshgrid(centers, centers, indexing="ij")
    lam1, lam2 = np.exp(1j * t1).ravel(), np.exp(1j * t2).ravel()
    sigma_max = float(np.sqrt(np.max(np.abs(d1)) ** 2 + np.max(np.abs(d2)) ** 2)) + np.sqrt(2)
    threshold = max(tol * sigma_max, cell_radius(grid_n))

    if method == "kdtree":
        dist, _ = cKDTree(_embed(d1, d2)).query(_embed(lam1, lam2))
        mask = dist <= threshold
    else:
        diag_a, diag_b = np.diag(d1), np.diag(d2)
        mask = np.array(
            [
                koszul_ranks(diag_a, diag_b, (x, y), tol, commutation_rtol, threshold).singular
                for x, y in zip(lam1, lam2)
            ]
        )

    return SpectrumScan(
        grid_n=grid_n,
        centers=centers,
        mask=mask.reshape(grid_n, grid_n),
        tolerance=tol,
        threshold=threshold,
        matrices_hash=matrices_hash(a, b),
        pairs=torus.angles(d1, d2),
        commutation=commutation,
        unitarity=max(gaps),
    )


def clark_pair(
    j: np.ndarray,
    u1: np.ndarray,
    u2: np.ndarray,
    c1: np.ndarray,
    c2: np.ndarray,
    floor: float = NODE_FLOOR,
) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonal pair read off J U^a J* in the node basis of the quadrature.

    Row i of J U^a C_a against row i of J C_a is the value of U^a at node i,
    up to the intertwining residual on the columns C_a. Nodes whose rows
    carry less than ``floor`` of the largest row mass are dropped.
    """
    lam, mass = [], []
    for u, c in ((u1, c1), (u2, c2)):
        jc = j @ c
        num = np.sum((j @ u @ c) * np.conj(jc), axis=1)
        den = np.sum(np.abs(jc) ** 2, axis=1)
        lam.append(num)
        mass.append(den)
    keep = np.ones(j.shape[0], dtype=bool)
    for num, den in zip(lam, mass):
        keep &= (den > floor * den.max()) & (np.abs(num) > 0)
    if not keep.any():
        raise UnitarityError("no quadrature node carries mass on the resolved directions")
    d1, d2 = (num[keep] / np.abs(num[keep]) for num in lam)
    return np.diag(d1), np.diag(d2)


def level_set_angles(branches: LevelSetBranches) -> np.ndarray:
    """Angles of a level-set sample, (k, 2)."""
    z1, z2, _ = branches.points()
    return torus.angles(z1, z2)


def reference_nodes(grid_n: int) -> int:
    """Level-set sample size for comparing against a grid_n scan: a power of two >= max(64, 2 grid_n)."""
    return 1 << int(np.ceil(np.log2(max(64, 2 * grid_n))))


def spectrum_budget(step: float, intertwining: float) -> float:
    """Two cells plus ten times the intertwining residual."""
    return 2 * step + 10 * intertwining


def mask_hausdorff(scan: SpectrumScan, other: Union[SpectrumScan, np.ndarray]) -> float:
    """Torus Hausdorff distance from the marked cells to another scan or to an angle set."""
    target = other.points() if isinstance(other, SpectrumScan) else np.asarray(other)
    return torus.hausdorff(scan.points(), target)


def containment_gap(scan: SpectrumScan, a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance from a marked cell to sigma(A) x sigma(B)."""
    pts = scan.points()
    if not len(pts):
        return 0.0
    s1 = np.angle(np.linalg.eigvals(a))
    s2 = np.angle(np.linalg.eigvals(b))
    g1 = torus.circular_gap(pts[:, :1], s1[None, :]).min(axis=1)
    g2 = torus.circular_gap(pts[:, 1:], s2[None, :]).min(axis=1)
    return float(np.max(np.hypot(g1, g2)))
