"""Rational inner functions on the bidisk.

phi = e^{ia} z1^m1 z2^m2 p~/p with p stable. The numerator q (monomial and
phase folded in) is cached next to p, so the unimodular level set of alpha
is the torus zero set of ``q - alpha p``.
"""

from __future__ import annotations

import warnings
from typing import List, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import linear_sum_assignment, minimize_scalar

from . import torus
from .bipoly import (
    BiPoly,
    combine,
    evaluate,
    from_spec,
    multiply,
    partial,
    reflect,
    roots,
    shift_monomial,
    slice_poly,
    slice_root_sets,
    stability_report,
    swap_variables,
    to_spec,
)
from .errors import (
    DomainError,
    ExceptionalAlphaError,
    InnerUnimodularityError,
    NonUnimodularRootError,
    SingularPointError,
    StabilityError,
    VanishingDerivativeError,
    BranchCrossingWarning,
)
from .schemas import RifSpec


SINGULAR_RTOL = 1e-8
SINGULAR_SCAN = 512
UNIMODULAR_TOL = 1e-8
CROSSING_TOL = 1e-6
EXCEPTIONAL_GRID = 128
EXCEPTIONAL_TOL = 1e-6


# ============================================================================
# Types
# ============================================================================

class SingularSet(BaseModel):
    """Common torus zeros of p and p~, one row (zeta1, zeta2) per point."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray = Field(default_factory=lambda: np.zeros((0, 2), dtype=complex))
    tol: float = 0.0

    def __len__(self) -> int:
        return len(self.points)

    def angles(self) -> np.ndarray:
        if not len(self.points):
            return np.zeros((0, 2))
        return torus.angles(self.points[:, 0], self.points[:, 1])


class Rif(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p: BiPoly
    p_tilde: BiPoly
    numerator: BiPoly
    monomial: Tuple[int, int] = (0, 0)
    phase: float = 0.0
    singular: SingularSet = Field(default_factory=SingularSet)

    @property
    def bidegree(self) -> Tuple[int, int]:
        return self.p.bidegree

    @property
    def phi0(self) -> complex:
        return complex(self.numerator.coeffs[0, 0] / self.p.coeffs[0, 0])

    @property
    def is_singular(self) -> bool:
        return len(self.singular) > 0


class LevelSetBranches(BaseModel):
    """Level set C_alpha as branches over the uniform grid in zeta1."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: complex
    nodes: np.ndarray  # (N,)
    values: np.ndarray  # (branches, N), NaN where a root is missing
    continuity_residual: float
    crossings: List[int] = Field(default_factory=list)
    degenerate: List[int] = Field(default_factory=list)

    @property
    def n_branches(self) -> int:
        return self.values.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    def points(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Flattened (zeta1, zeta2, branch) in branch-major order, missing roots dropped."""
        z1 = np.broadcast_to(self.nodes, self.values.shape).ravel()
        z2 = self.values.ravel()
        branch = np.repeat(np.arange(self.n_branches), self.n_nodes)
        keep = np.isfinite(z2)
        return z1[keep], z2[keep], branch[keep]


# ============================================================================
# Construction
# ============================================================================

def make_rif(
    p: BiPoly,
    monomial: Tuple[int, int] = (0, 0),
    phase: float = 0.0,
    samples: int = 64,
) -> Rif:
    """Validate p and assemble phi = e^{ia} z^m p~/p."""
    report = stability_report(p, samples)
    if not report.stable:
        raise StabilityError(
            f"p has a sampled zero in the bidisk (min slice root modulus {report.min_root_modulus:.3g})"
        )
    p_tilde = reflect(p)
    numerator = shift_monomial(p_tilde, monomial[0], monomial[1], np.exp(1j * phase))
    rif = Rif(
        p=p,
        p_tilde=p_tilde,
        numerator=numerator,
        monomial=tuple(monomial),
        phase=float(phase),
        singular=_locate_singular(p),
    )
    _check_inner(rif)
    return rif


def _check_inner(rif: Rif, n: int = 24) -> None:
    r = np.linspace(0.0, 0.95, n)
    t = 2 * np.pi * np.arange(n) / n
    w = (r[:, None] * np.exp(1j * t)[None, :]).ravel()
    z1, z2 = np.meshgrid(w[::7], w[::5], indexing="ij")
    inside = np.abs(evaluate(rif.numerator, z1, z2) / evaluate(rif.p, z1, z2))
    if np.any(inside > 1 + 1e-9):
        raise InnerUnimodularityError(f"interior sample of modulus {inside.max():.12g}")

    e = np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    b1, b2 = np.meshgrid(e, e, indexing="ij")
    den = evaluate(rif.p, b1, b2)
    ok = np.abs(den) > 1e-6 * rif.p.scale
    boundary = np.abs(evaluate(rif.numerator, b1, b2)[ok] / den[ok])
    if boundary.size and np.max(np.abs(boundary - 1)) > 1e-9:
        raise InnerUnimodularityError("boundary values are not unimodular")


def swap_rif(rif: Rif) -> Rif:
    """The same function with z1 and z2 exchanged."""
    pts = rif.singular.points[:, ::-1].copy() if len(rif.singular) else rif.singular.points
    return Rif(
        p=swap_variables(rif.p),
        p_tilde=swap_variables(rif.p_tilde),
        numerator=swap_variables(rif.numerator),
        monomial=(rif.monomial[1], rif.monomial[0]),
        phase=rif.phase,
        singular=SingularSet(points=pts, tol=rif.singular.tol),
    )


def rif_from_spec(spec: RifSpec) -> Rif:
    return make_rif(from_spec(spec.p), spec.monomial, spec.phase)


def rif_to_spec(rif: Rif) -> RifSpec:
    return RifSpec(p=to_spec(rif.p), monomial=rif.monomial, phase=rif.phase)


# ============================================================================
# Evaluation
# ============================================================================

def eval_interior(rif: Rif, z1, z2):
    if np.any(np.abs(z1) >= 1) or np.any(np.abs(z2) >= 1):
        raise DomainError("interior evaluation needs |z1|, |z2| < 1")
    return evaluate(rif.numerator, z1, z2) / evaluate(rif.p, z1, z2)


def _near_singular(rif: Rif, z1, z2, radius: float) -> bool:
    if not len(rif.singular):
        return False
    here = torus.angles([z1], [z2])
    return torus.min_distance(rif.singular.angles(), here) < radius


def eval_boundary(rif: Rif, z1: complex, z2: complex) -> complex:
    den = complex(evaluate(rif.p, z1, z2))
    if _near_singular(rif, z1, z2, 1e-10) or den == 0:
        raise SingularPointError(f"({z1}, {z2}) is a singular point")
    return complex(evaluate(rif.numerator, z1, z2)) / den


def derivative_moduli(rif: Rif, z1, z2, axis: int = 2) -> np.ndarray:
    """|d phi / d z_axis| by the quotient rule; NaN where p vanishes."""
    q, p = rif.numerator, rif.p
    pv = evaluate(p, z1, z2)
    num = evaluate(partial(q, axis), z1, z2) * pv - evaluate(q, z1, z2) * evaluate(partial(p, axis), z1, z2)
    pv = np.asarray(pv)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.abs(np.asarray(num) / (pv * pv))
    out = np.where(np.abs(pv) <= 1e-10 * p.scale, np.nan, out)
    return out


def clark_weight_at(rif: Rif, z1: complex, z2: complex, axis: int = 2) -> float:
    """Density 1/|d phi / d z_axis| of the Clark measure along a level-set branch."""
    if _near_singular(rif, z1, z2, 1e-10):
        raise SingularPointError(f"({z1}, {z2}) is a singular point")
    d = float(derivative_moduli(rif, z1, z2, axis))
    if d != d:
        raise SingularPointError(f"p vanishes at ({z1}, {z2})")
    if d < 1e-12:
        raise VanishingDerivativeError(f"d phi / d z{axis} vanishes at ({z1}, {z2})")
    return 1.0 / d


def depends_on(rif: Rif, axis: int) -> bool:
    """Whether phi is nonconstant in z_axis."""
    q, p = rif.numerator, rif.p
    d = combine(multiply(partial(q, axis), p), multiply(q, partial(p, axis)), 1.0)
    return bool(np.abs(d.coeffs).max() > 1e-12 * q.scale * p.scale)


# ============================================================================
# Singular points
# ============================================================================

def _min_slice_modulus(p: BiPoly, axis: int, theta: float) -> float:
    s = slice_poly(p, axis, np.exp(1j * theta))
    if s.is_zero or s.degree == 0:
        return np.inf
    return float(np.abs(roots(s)).min()) - 1.0


def _locate_singular(p: BiPoly, scan: int = SINGULAR_SCAN) -> SingularSet:
    tol = SINGULAR_RTOL * p.scale
    n1, n2 = p.bidegree
    if n2 >= 1:
        axis = 1
    elif n1 >= 1:
        axis = 2
    else:
        return SingularSet(tol=tol)

    h = 2 * np.pi / scan
    thetas = h * np.arange(scan)
    gaps = np.full(scan, np.inf)
    for i, rs in enumerate(slice_root_sets(p, axis, np.exp(1j * thetas))):
        if rs is not None and rs.size:
            gaps[i] = np.abs(rs).min() - 1.0

    found: list = []
    for i in range(scan):
        g = gaps[i]
        if not (g < 0.05 and g <= gaps[i - 1] and g <= gaps[(i + 1) % scan]):
            continue
        res = minimize_scalar(
            lambda t: _min_slice_modulus(p, axis, t),
            bounds=(thetas[i] - h, thetas[i] + h),
            method="bounded",
            options={"xatol": 1e-13},
        )
        theta = float(res.x)
        xi = np.exp(1j * theta)
        for r in roots(slice_poly(p, axis, xi)):
            if abs(abs(r) - 1.0) > 1e-6:
                continue
            eta = r / abs(r)
            pt = (xi, eta) if axis == 1 else (eta, xi)
            value = abs(complex(evaluate(p, *pt)))
            if value < tol and not any(
                torus.geodesic(torus.angles([pt[0]], [pt[1]])[0], torus.angles([f[0]], [f[1]])[0]) < 1e-6
                for f in found
            ):
                found.append(pt)

    pts = np.array(found, dtype=complex).reshape(-1, 2)
    if len(pts):
        ang = torus.angles(pts[:, 0], pts[:, 1])
        pts = pts[np.lexsort((ang[:, 1], ang[:, 0]))]
    return SingularSet(points=pts, tol=tol)


def singular_points(rif: Rif) -> SingularSet:
    """Torus points where p and p~ vanish together (located at construction)."""
    return rif.singular


# ============================================================================
# Level sets
# ============================================================================

def level_polynomial(rif: Rif, alpha: complex) -> BiPoly:
    """q - alpha p, whose torus zeros form C_alpha."""
    return combine(rif.numerator, rif.p, alpha)


def _common_unimodular_roots(rows: np.ndarray, tol: float) -> list:
    """Unimodular eta at which every row polynomial vanishes."""
    nonzero = [r for r in rows if np.abs(r).max() > 0]
    if not nonzero:
        return []
    lead = min(nonzero, key=lambda r: np.nonzero(np.abs(r) > 0)[0][-1])
    deg = np.nonzero(np.abs(lead) > 0)[0][-1]
    if deg == 0:
        return []
    hits = []
    for eta in npoly.polyroots(lead[: deg + 1]):
        if abs(abs(eta) - 1.0) > 1e-6:
            continue
        eta = eta / abs(eta)
        if max(abs(npoly.polyval(eta, r)) for r in rows) < tol:
            hits.append(eta)
    return hits


def is_exceptional(
    rif: Rif,
    alpha: complex,
    grid_n: int = EXCEPTIONAL_GRID,
    tol: float = EXCEPTIONAL_TOL,
) -> bool:
    """Whether C_alpha contains a horizontal or vertical line.

    A grid test (phi* within tol of alpha along a full grid line) is combined
    with an algebraic test for lines between grid nodes: such a line sits
    at a common unimodular root of all coefficient polynomials of q - alpha p.
    """
    if grid_n < 128:
        raise ValueError("exceptional-value detection needs grid_n >= 128")
    e = np.exp(2j * np.pi * np.arange(grid_n) / grid_n)
    z1, z2 = np.meshgrid(e, e, indexing="ij")
    den = evaluate(rif.p, z1, z2)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.abs(evaluate(rif.numerator, z1, z2) / den - alpha)
    dev = np.where(np.abs(den) <= 1e-10 * rif.p.scale, np.nan, dev)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if np.any(np.nanmax(dev, axis=0) < tol) or np.any(np.nanmax(dev, axis=1) < tol):
            return True

    r = level_polynomial(rif, alpha)
    scale_tol = tol * r.scale
    if _common_unimodular_roots(r.coeffs, scale_tol):
        return True
    return bool(_common_unimodular_roots(r.coeffs.T, scale_tol))


def _slice_roots(r: BiPoly, xi: complex, node: int = -1) -> np.ndarray:
    s = slice_poly(r, 1, xi)
    if s.is_zero:
        raise ExceptionalAlphaError(f"level set contains the vertical line zeta1 = {xi}")
    found = roots(s)
    bad = np.abs(np.abs(found) - 1.0) > UNIMODULAR_TOL
    if np.any(bad):
        raise NonUnimodularRootError(
            f"root of modulus {np.abs(found[bad][0]):.12g} at node {node} (zeta1 = {xi})"
        )
    return found


def level_set_slice(rif: Rif, alpha: complex, xi: complex) -> np.ndarray:
    """zeta2 with (xi, zeta2) in C_alpha."""
    if is_exceptional(rif, alpha):
        raise ExceptionalAlphaError(f"alpha = {alpha} is exceptional")
    return _slice_roots(level_polynomial(rif, alpha), xi)


def level_set_branches(rif: Rif, alpha: complex, n: int) -> LevelSetBranches:
    """Trace C_alpha over n uniform nodes in zeta1.

    Branches start at zeta1 = 1 ordered by smallest nonnegative argument and
    are continued node to node by the assignment minimizing the total
    angular displacement.
    """
    if n < 64 or n & (n - 1):
        raise ValueError("the number of nodes must be a power of two >= 64")
    if is_exceptional(rif, alpha):
        raise ExceptionalAlphaError(f"alpha = {alpha} is exceptional")

    r = level_polynomial(rif, alpha)
    n_branches = r.bidegree[1]
    nodes = np.exp(2j * np.pi * np.arange(n) / n)
    values = np.full((n_branches, n), np.nan + 0j)
    crossings: List[int] = []
    degenerate: List[int] = []
    prev = None

    for i, xi in enumerate(nodes):
        found = _slice_roots(r, xi, i)
        if found.size != n_branches:
            degenerate.append(i)
        if found.size > 1:
            diffs = np.abs(found[:, None] - found[None, :]) + np.eye(found.size)
            if diffs.min() < CROSSING_TOL:
                crossings.append(i)
        if prev is None:
            order = np.argsort(np.mod(np.angle(found), 2 * np.pi), kind="stable")
            slots = np.arange(found.size)
            values[slots, i] = found[order]
        else:
            cost = torus.circular_gap(np.angle(prev)[:, None], np.angle(found)[None, :])
            cost = np.where(np.isfinite(cost), cost, 10.0)
            rows, cols = linear_sum_assignment(cost)
            values[rows, i] = found[cols]
        last = values[:, i]
        prev = last if prev is None else np.where(np.isfinite(last), last, prev)

    if crossings:
        warnings.warn(
            f"level-set roots collide at {len(crossings)} node(s), first at node {crossings[0]}",
            BranchCrossingWarning,
            stacklevel=2,
        )

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        steps = torus.circular_gap(np.angle(values[:, 1:]), np.angle(values[:, :-1]))
        residual = float(np.nanmax(steps)) if np.isfinite(steps).any() else 0.0

    return LevelSetBranches(
        alpha=complex(alpha),
        nodes=nodes,
        values=values,
        continuity_residual=residual,
        crossings=crossings,
        degenerate=degenerate,
    )


def check_atoral(rif: Rif, alpha: complex, n: int = 64) -> bool:
    """Spot check: no branch of C_alpha is constant in zeta1."""
    branches = level_set_branches(rif, alpha, n)
    for row in branches.values:
        ok = row[np.isfinite(row)]
        if ok.size and np.max(np.abs(ok - ok[0])) < 1e-9:
            return False
    return True
