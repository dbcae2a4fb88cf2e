"""Truncated model spaces K_phi and the Clark unitary pair acting on them.

Functions in H^2 of the bidisk are carried by their Taylor coefficients
a[k, l], 0 <= k, l <= D, flattened row-major (index k*(D+1) + l). The
retained eigenvectors q_j of P_D P_phi P_D lift to the orthonormal family
e_j = P_phi q_j / sqrt(lambda_j) in K_phi, and every operator below is the
exact Galerkin matrix <X e_i, e_j> in that family.

Since P_phi q = q - phi T_phi* q and T_phi* q = L^H q for a polynomial q
(L the truncated multiplication by phi), e_j is a rational function known
in closed form. On the level set C_alpha it has the boundary values of the
polynomial (I - alpha L^H) q_j / sqrt(lambda_j).
"""

from __future__ import annotations

import hashlib
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import linalg

from .bipoly import BiPoly, UniPoly, combine, evaluate, multiply, roots
from .clark import ClarkMeasureQuad
from .errors import (
    BasisMismatchError,
    CollocationError,
    ExceptionalAlphaError,
    HypothesisError,
)
from .rif import Rif, depends_on, eval_interior, is_exceptional, level_polynomial, make_rif


SPECTRAL_CUT = 0.5
INTERIOR_CUT = 1e-3
NULL_EIGENVALUE = 1e-10
DOMAIN_CUT = 1e-9
PSI_BOUND = 1e6
COLLOCATION_RADIUS = 0.5
COLLOCATION_COND_LIMIT = 1e12


# ============================================================================
# Types
# ============================================================================

class TruncatedHardy(BaseModel):
    """Polynomials of degree <= D in each variable, with a G x G boundary grid."""

    degree: int = Field(ge=1, description="Degree cutoff D per variable")
    grid: int = Field(description="Boundary grid size G, a power of two >= 2D+2")

    @model_validator(mode="after")
    def _grid_ok(self) -> "TruncatedHardy":
        g = self.grid
        if g < 2 * self.degree + 2 or g & (g - 1):
            raise ValueError(f"grid {g} must be a power of two >= {2 * self.degree + 2}")
        return self

    @classmethod
    def for_rif(cls, rif: Rif, degree: int, grid: Optional[int] = None) -> "TruncatedHardy":
        """Default grid max(2D+2, 64) rounded up to a power of two, doubled for singular RIFs."""
        if grid is None:
            grid = 1 << int(np.ceil(np.log2(max(2 * degree + 2, 64))))
            if rif.is_singular:
                grid *= 2
        return cls(degree=degree, grid=grid)

    @property
    def dimension(self) -> int:
        return (self.degree + 1) ** 2

    def indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """(k, l) of each flat coordinate."""
        k, l = np.divmod(np.arange(self.dimension), self.degree + 1)
        return k, l


class KphiBasis(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ref: str
    space: TruncatedHardy
    method: Literal["series", "sampled"]
    projector: np.ndarray  # P_D P_phi P_D in monomial coordinates
    taylor: np.ndarray  # Taylor coefficients of phi up to degree D+1
    vectors: np.ndarray  # eigenvectors q_j with eigenvalue > spectral_cut
    eigenvalues: np.ndarray
    rejected: np.ndarray  # eigenvectors with NULL_EIGENVALUE < eigenvalue <= spectral_cut
    rejected_eigenvalues: np.ndarray
    spectral_cut: float = SPECTRAL_CUT
    interior: np.ndarray  # basis-coordinate columns with negligible outer-band mass
    conditioning: Dict[str, float] = Field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def scale(self) -> np.ndarray:
        """1 / sqrt(lambda_j)."""
        return 1.0 / np.sqrt(self.eigenvalues)

    @property
    def toeplitz(self) -> np.ndarray:
        """L, the truncated multiplication by phi."""
        return lower_toeplitz(self.taylor, self.space.degree)

    @property
    def functions(self) -> np.ndarray:
        """Taylor coefficients up to degree D of the lifted basis functions e_j."""
        return self.vectors * np.sqrt(self.eigenvalues)


class TruncatedOperator(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    basis_ref: str
    residuals: Dict[str, float] = Field(default_factory=dict)
    axis: Optional[int] = None
    alpha: Optional[complex] = None
    domain: Optional[np.ndarray] = None  # columns the operator maps back into the basis span
    flags: List[str] = Field(default_factory=list)

    @field_validator("matrix")
    @classmethod
    def _square(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {v.shape}")
        return v

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


class PsiAlpha(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    axis: int
    alpha: complex
    coeffs: np.ndarray  # Taylor coefficients, (D+1, D+1)
    samples: np.ndarray  # values on the offset G x G grid
    max_modulus: float


class IntertwiningResidual(BaseModel):
    axis: int
    u_form: float = Field(description="|| J U - M_zeta J || on the resolved directions")
    v_form: float = Field(description="|| J* conj(M_zeta) J - V || on the resolved directions")

    @property
    def value(self) -> float:
        return self.u_form


class NecessityResult(BaseModel):
    value: float
    cross_case: bool = False


class CrossCaseSplit(BaseModel):
    max_angle: float
    decomposition_residual: float


# ============================================================================
# Coordinates
# ============================================================================

def _square(c: np.ndarray, degree: int) -> np.ndarray:
    out = np.zeros((degree + 1, degree + 1), dtype=complex)
    c = np.asarray(c, dtype=complex)
    k, l = min(c.shape[0], degree + 1), min(c.shape[1], degree + 1)
    out[:k, :l] = c[:k, :l]
    return out


def lower_toeplitz(c: np.ndarray, degree: int) -> np.ndarray:
    """Matrix of truncated multiplication by the series c."""
    cpad = _square(c, degree)
    k, l = np.divmod(np.arange((degree + 1) ** 2), degree + 1)
    dk = k[:, None] - k[None, :]
    dl = l[:, None] - l[None, :]
    valid = (dk >= 0) & (dl >= 0)
    return np.where(valid, cpad[np.clip(dk, 0, None), np.clip(dl, 0, None)], 0.0)


def series_divide(num: np.ndarray, den: np.ndarray, degree: int) -> np.ndarray:
    """Taylor coefficients of num/den up to degree D in each variable; den(0, 0) != 0."""
    rhs = _square(num, degree).ravel()
    sol = linalg.solve_triangular(lower_toeplitz(den, degree), rhs, lower=True)
    return sol.reshape(degree + 1, degree + 1)


def offset_grid(g: int) -> np.ndarray:
    return np.exp(2j * np.pi * (np.arange(g) + 0.5) / g)


def sampled_coefficients(samples: np.ndarray, degree: int) -> np.ndarray:
    """Nonnegative Fourier coefficients of offset-grid samples."""
    g = samples.shape[0]
    freq = np.fft.fft2(samples) / (g * g)
    m = np.arange(degree + 1)
    phase = np.exp(-1j * np.pi * (m[:, None] + m[None, :]) / g)
    return freq[: degree + 1, : degree + 1] * phase


def taylor_coefficients(
    rif: Rif,
    space: TruncatedHardy,
    method: Literal["series", "sampled"] = "series",
    degree: Optional[int] = None,
) -> np.ndarray:
    """Taylor coefficients of phi up to ``degree`` (default D) in each variable."""
    degree = space.degree if degree is None else degree
    if method == "series":
        return series_divide(rif.numerator.coeffs, rif.p.coeffs, degree)
    g1, g2 = np.meshgrid(offset_grid(space.grid), offset_grid(space.grid), indexing="ij")
    values = evaluate(rif.numerator, g1, g2) / evaluate(rif.p, g1, g2)
    return sampled_coefficients(values, degree)


def shift_matrix(degree: int, axis: int) -> np.ndarray:
    unit = np.zeros((2, 2), dtype=complex)
    unit[(1, 0) if axis == 1 else (0, 1)] = 1.0
    return lower_toeplitz(unit, degree)


def constant_mask(degree: int, axis: int) -> np.ndarray:
    """Diagonal projection onto functions independent of z_axis."""
    k, l = np.divmod(np.arange((degree + 1) ** 2), degree + 1)
    keep = (k == 0) if axis == 1 else (l == 0)
    return np.diag(keep.astype(complex))


def backward_shift(f: np.ndarray, axis: int) -> np.ndarray:
    """(f - f restricted to z_axis = 0) / z_axis on a coefficient array."""
    f = np.asarray(f, dtype=complex)
    out = np.zeros_like(f)
    if axis == 1:
        out[:-1, :] = f[1:, :]
    else:
        out[:, :-1] = f[:, 1:]
    return out


def kernel_coefficients(w: Tuple[complex, complex], degree: int) -> np.ndarray:
    """Truncated Szego kernel k_w as a flat coefficient vector."""
    e = np.arange(degree + 1)
    return np.outer(np.conj(w[0]) ** e, np.conj(w[1]) ** e).ravel()


# ============================================================================
# Model space
# ============================================================================

def _interior(vectors: np.ndarray, space: TruncatedHardy, cut: float) -> np.ndarray:
    k, l = space.indices()
    band = (k == space.degree) | (l == space.degree)
    _, s, vh = linalg.svd(vectors[band, :])
    keep = np.ones(vectors.shape[1], dtype=bool)
    keep[: s.size] = s <= cut
    return vh[keep].conj().T


def _basis_ref(rif: Rif, space: TruncatedHardy, method: str) -> str:
    h = hashlib.sha256()
    for arr in (rif.p.coeffs, rif.numerator.coeffs):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(f"{space.degree}:{space.grid}:{method}".encode())
    return "kphi:" + h.hexdigest()[:16]


def project_kphi(
    rif: Rif,
    space: TruncatedHardy,
    method: Literal["series", "sampled"] = "series",
    spectral_cut: float = SPECTRAL_CUT,
    interior_cut: float = INTERIOR_CUT,
) -> KphiBasis:
    """Compression of P_phi = I - T_phi T_phi* to the truncated space and its retained eigenspace."""
    taylor = taylor_coefficients(rif, space, method, space.degree + 1)
    lmat = lower_toeplitz(taylor, space.degree)
    raw = np.eye(space.dimension) - lmat @ lmat.conj().T
    projector = (raw + raw.conj().T) / 2

    evals, evecs = linalg.eigh(projector)
    keep = evals > spectral_cut
    middle = (evals > NULL_EIGENVALUE) & ~keep
    vectors = evecs[:, keep]
    interior = _interior(vectors, space, interior_cut)

    lifted = vectors / np.sqrt(evals[keep])
    conditioning = {
        "idempotency": _norm(lifted.conj().T @ projector @ lifted - np.eye(vectors.shape[1])),
        "self_adjointness": float(np.linalg.norm(raw - raw.conj().T, 2)),
        "gap": float(np.min(np.abs(evals - spectral_cut))),
        "boundary_directions": float(vectors.shape[1] - interior.shape[1]),
        "rejected": float(np.count_nonzero(middle)),
    }
    return KphiBasis(
        ref=_basis_ref(rif, space, method),
        space=space,
        method=method,
        projector=projector,
        taylor=taylor,
        vectors=vectors,
        eigenvalues=evals[keep],
        rejected=evecs[:, middle],
        rejected_eigenvalues=evals[middle],
        spectral_cut=spectral_cut,
        interior=interior,
        conditioning=conditioning,
    )


def _galerkin(basis: KphiBasis, images: np.ndarray) -> np.ndarray:
    """<X e_i, e_j> from the degree-D coefficients of X P_phi q_i, which must lie in K_phi."""
    s = basis.scale
    return s[:, None] * (basis.vectors.conj().T @ images) * s[None, :]


def compress(basis: KphiBasis, mono: np.ndarray) -> np.ndarray:
    """Monomial-coordinate operator -> matrix in the eigenvector coordinates q_j."""
    q = basis.vectors
    return q.conj().T @ mono @ q


def compressed_shift(rif: Rif, basis: KphiBasis, axis: int) -> TruncatedOperator:
    """S^axis = P_phi M_{z_axis} restricted to K_phi, as the adjoint of B_axis.

    B e = P_phi(B q) - (T_phi* q)|_{z_axis=0} B phi for e = P_phi q, both terms
    in K_phi, so the Galerkin matrix is exact.
    """
    d = basis.space.degree
    q = basis.vectors
    bphi = lower_toeplitz(backward_shift(basis.taylor, axis), d)
    images = (
        basis.projector @ shift_matrix(d, axis).T @ q
        - bphi @ constant_mask(d, axis) @ basis.toeplitz.conj().T @ q
    )
    flags = []
    boundary = basis.dim - basis.interior.shape[1]
    if boundary:
        flags.append(f"{boundary} basis direction(s) carry outer-band mass")
    return TruncatedOperator(
        matrix=_galerkin(basis, images).conj().T,
        basis_ref=basis.ref,
        axis=axis,
        flags=flags,
    )


# ============================================================================
# Level-set representatives
# ============================================================================

def level_lift(basis: KphiBasis, alpha: complex) -> np.ndarray:
    """I - alpha L^H: upper triangular in flat order, with diagonal 1 - alpha conj(phi(0))."""
    return np.eye(basis.space.dimension) - alpha * basis.toeplitz.conj().T


def level_representatives(basis: KphiBasis, alpha: complex) -> np.ndarray:
    """Polynomials with the boundary values of e_j on C_alpha, one column per basis function."""
    return level_lift(basis, alpha) @ basis.vectors * basis.scale


def vanishing_multiples(rif: Rif, alpha: complex, degree: int) -> np.ndarray:
    """Columns (q - alpha p) z^m spanning the polynomials of degree <= D that vanish on C_alpha."""
    r = level_polynomial(rif, alpha).coeffs
    k, l = np.divmod(np.arange((degree + 1) ** 2), degree + 1)
    cols = (k <= degree - (r.shape[0] - 1)) & (l <= degree - (r.shape[1] - 1))
    return lower_toeplitz(r, degree)[:, cols]


def _leak(rif: Rif, alpha: complex, basis: KphiBasis, axis: int) -> np.ndarray:
    """Linear map on basis coordinates whose kernel is mapped by U^axis into the span.

    U^axis e_c has the boundary values of z_axis t on C_alpha, for any
    representative t of e_c. When some t has no coefficient of degree D in
    z_axis, U^axis e_c = P_phi (I - alpha L^H)^{-1} z_axis t, which stays in the
    span exactly when it has no component along the rejected eigenvectors.
    Representatives differ by the vanishing multiples, which are projected out.
    """
    d = basis.space.degree
    lift = level_lift(basis, alpha)
    reps = lift @ basis.vectors * basis.scale
    vanish = vanishing_multiples(rif, alpha, d)
    k, l = basis.space.indices()
    band = (k if axis == 1 else l) == d

    moved, free = [reps[band]], [vanish[band]]
    if basis.rejected.shape[1]:
        pulled = linalg.solve_triangular(lift, shift_matrix(d, axis) @ np.hstack([reps, vanish]), lower=False)
        out = np.sqrt(basis.rejected_eigenvalues)[:, None] * (basis.rejected.conj().T @ pulled)
        moved.append(out[:, : basis.dim])
        free.append(out[:, basis.dim:])
    a, b = np.vstack(moved), np.vstack(free)
    if b.shape[1] and np.abs(b).max() > 0:
        o = linalg.orth(b)
        a = a - o @ (o.conj().T @ a)
    return a


def _null_directions(leak: np.ndarray, dim: int, cut: float) -> np.ndarray:
    if not leak.shape[0]:
        return np.eye(dim, dtype=complex)
    _, s, vh = linalg.svd(leak)
    keep = np.ones(dim, dtype=bool)
    keep[: s.size] = s <= cut
    return vh[keep].conj().T


def resolved_directions(
    rif: Rif,
    alpha: complex,
    basis: KphiBasis,
    axis: int,
    cut: float = DOMAIN_CUT,
) -> np.ndarray:
    """Orthonormal basis-coordinate columns that U^axis_alpha maps into the basis span."""
    return _null_directions(_leak(rif, alpha, basis, axis), basis.dim, cut)


def joint_directions(
    rif: Rif,
    alpha: complex,
    basis: KphiBasis,
    u1: TruncatedOperator,
    u2: TruncatedOperator,
    cut: float = DOMAIN_CUT,
) -> np.ndarray:
    """Columns on which both U^1 U^2 and U^2 U^1 are resolved."""
    if u1.basis_ref != u2.basis_ref or u1.basis_ref != basis.ref:
        raise BasisMismatchError(f"operators act on {u1.basis_ref} and {u2.basis_ref}, basis is {basis.ref}")
    f1 = _leak(rif, alpha, basis, 1)
    f2 = _leak(rif, alpha, basis, 2)
    return _null_directions(np.vstack([f1, f2, f1 @ u2.matrix, f2 @ u1.matrix]), basis.dim, cut)


def pushed_forward(rif: Rif, alpha: complex, basis: KphiBasis, axis: int, c: np.ndarray) -> np.ndarray:
    """Coordinates of U^axis e_c computed from the level-set representatives alone.

    Valid on the resolved directions; used to cross-check the psi-based matrix.
    """
    d = basis.space.degree
    lift = level_lift(basis, alpha)
    t = level_representatives(basis, alpha) @ c
    k, l = basis.space.indices()
    band = (k if axis == 1 else l) == d
    vanish = vanishing_multiples(rif, alpha, d)
    if vanish.shape[1]:
        s, *_ = linalg.lstsq(vanish[band], -t[band])
        t = t + vanish @ s
    g = linalg.solve_triangular(lift, shift_matrix(d, axis) @ t, lower=False)
    return np.sqrt(basis.eigenvalues)[:, None] * (basis.vectors.conj().T @ g)


# ============================================================================
# psi_alpha
# ============================================================================

def _row(p: BiPoly, axis: int) -> BiPoly:
    """Restriction to z_axis = 0, kept as a BiPoly."""
    c = p.coeffs[:1, :] if axis == 1 else p.coeffs[:, :1]
    return BiPoly.from_coeffs(c)


def psi_rational(rif: Rif, alpha: complex, axis: int = 1) -> Tuple[BiPoly, BiPoly]:
    """(numerator, denominator) of psi^axis_alpha = conj(alpha) (B_axis phi) / (1 - conj(alpha) phi|_{z_axis=0}).

    With q0, p0 the restrictions to z_axis = 0 and N = q p0 - q0 p, the
    numerator is conj(alpha) N / z_axis and the denominator p (p0 - conj(alpha) q0).
    """
    q, p = rif.numerator, rif.p
    q0, p0 = _row(q, axis), _row(p, axis)
    n = combine(multiply(q, p0), multiply(q0, p), 1.0).coeffs
    reduced = n[1:, :] if axis == 1 else n[:, 1:]
    if reduced.size == 0:
        reduced = np.zeros((1, 1), dtype=complex)
    num = BiPoly.from_coeffs(np.conj(alpha) * reduced)
    den = multiply(p, combine(p0, q0, np.conj(alpha)))
    return num, den


def psi_alpha(rif: Rif, alpha: complex, axis: int, space: TruncatedHardy) -> PsiAlpha:
    if is_exceptional(rif, alpha):
        raise ExceptionalAlphaError(f"alpha = {alpha} is exceptional")
    num, den = psi_rational(rif, alpha, axis)

    edge = UniPoly.from_coeffs(combine(_row(rif.p, axis), _row(rif.numerator, axis), np.conj(alpha)).coeffs.ravel())
    if edge.is_zero:
        raise ExceptionalAlphaError(f"phi restricted to z{axis} = 0 is identically {alpha}")
    if edge.degree >= 1:
        r = roots(edge)
        if np.any(np.abs(np.abs(r) - 1.0) < 1e-8):
            raise ExceptionalAlphaError(f"psi{axis} has an unbounded denominator at alpha = {alpha}")

    g1, g2 = np.meshgrid(offset_grid(space.grid), offset_grid(space.grid), indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        samples = evaluate(num, g1, g2) / evaluate(den, g1, g2)
    peak = float(np.nanmax(np.abs(samples))) if np.isfinite(samples).any() else np.inf
    if not np.isfinite(peak) or peak > PSI_BOUND:
        raise ExceptionalAlphaError(f"psi{axis} reaches modulus {peak:.3g} on the boundary grid")

    return PsiAlpha(
        axis=axis,
        alpha=complex(alpha),
        coeffs=series_divide(num.coeffs, den.coeffs, space.degree),
        samples=samples,
        max_modulus=peak,
    )


# ============================================================================
# Clark unitaries
# ============================================================================

def _norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def unitarity_residual(u: np.ndarray, directions: Optional[np.ndarray] = None) -> float:
    """max(||(U*U - I) C||, ||(UU* - I) UC||) over the columns C.

    U C is where the co-isometry is resolved: V U e = e for e in C.
    """
    eye = np.eye(u.shape[0])
    if directions is None:
        return max(_norm(u.conj().T @ u - eye), _norm(u @ u.conj().T - eye))
    if not directions.shape[1]:
        return 0.0
    image = linalg.orth(u @ directions)
    return max(_norm((u.conj().T @ u - eye) @ directions), _norm((u @ u.conj().T - eye) @ image))


def v_operator(psi: PsiAlpha, basis: KphiBasis) -> np.ndarray:
    """V f = B_axis f + psi f|_{z_axis=0} as the Galerkin matrix on the lifted basis.

    For e = P_phi q, V e = P_phi(B_axis q) + psi ((I - alpha L^H) q)|_{z_axis=0},
    which lies in K_phi.
    """
    d = basis.space.degree
    q = basis.vectors
    reps = level_lift(basis, psi.alpha) @ q
    images = (
        basis.projector @ shift_matrix(d, psi.axis).T @ q
        + lower_toeplitz(psi.coeffs, d) @ constant_mask(d, psi.axis) @ reps
    )
    return _galerkin(basis, images)


def clark_unitary(
    rif: Rif,
    alpha: complex,
    axis: int,
    basis: KphiBasis,
    space: Optional[TruncatedHardy] = None,
) -> TruncatedOperator:
    """U^axis_alpha = V*, compressed to the lifted basis.

    Equals compressed_shift + the compressed P_phi P_{H^2 without z_axis} M_{conj psi}.
    """
    space = space or basis.space
    psi = psi_alpha(rif, alpha, axis, space)
    u = v_operator(psi, basis).conj().T
    domain = resolved_directions(rif, alpha, basis, axis)
    flags = []
    if domain.shape[1] < basis.dim:
        flags.append(f"{basis.dim - domain.shape[1]} direction(s) leave the truncation under U^{axis}")
    return TruncatedOperator(
        matrix=u,
        basis_ref=basis.ref,
        residuals={"unitarity": unitarity_residual(u, domain)},
        axis=axis,
        alpha=complex(alpha),
        domain=domain,
        flags=flags,
    )


def commutation_residual(
    u1: TruncatedOperator,
    u2: TruncatedOperator,
    directions: Optional[np.ndarray] = None,
) -> float:
    if u1.basis_ref != u2.basis_ref:
        raise BasisMismatchError(f"operators act on {u1.basis_ref} and {u2.basis_ref}")
    a, b = u1.matrix, u2.matrix
    c = np.eye(a.shape[0]) if directions is None else directions
    return _norm((a @ b - b @ a) @ c)


# ============================================================================
# Clark embedding
# ============================================================================

def _node_powers(z1: np.ndarray, z2: np.ndarray, degree: int) -> np.ndarray:
    e = np.arange(degree + 1)
    return (z1[:, None, None] ** e[None, :, None] * z2[:, None, None] ** e[None, None, :]).reshape(z1.size, -1)


def embedding_j(rif: Rif, alpha: complex, basis: KphiBasis, mu: ClarkMeasureQuad) -> np.ndarray:
    """Basis coefficients -> boundary values at the nodes of mu, scaled by sqrt(node mass)."""
    z1, z2, mass = mu.support()
    values = _node_powers(z1, z2, basis.space.degree) @ level_representatives(basis, alpha)
    return np.sqrt(mass)[:, None] * values


def isometry_residual(j: np.ndarray, directions: Optional[np.ndarray] = None) -> float:
    gram = j.conj().T @ j - np.eye(j.shape[1])
    return _norm(gram if directions is None else gram @ directions)


def basis_values(rif: Rif, basis: KphiBasis, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """e_j(z) = (q_j(z) - phi(z) (L^H q_j)(z)) / sqrt(lambda_j) at interior points, one row per point."""
    z1, z2 = np.atleast_1d(z1), np.atleast_1d(z2)
    powers = _node_powers(z1, z2, basis.space.degree)
    q = basis.vectors
    phi = np.asarray(eval_interior(rif, z1, z2))
    return (powers @ q - phi[:, None] * (powers @ (basis.toeplitz.conj().T @ q))) * basis.scale


def collocation_points(basis: KphiBasis) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor grid of radius-0.5 roots of unity with at least D+1 points per variable."""
    s = max(basis.space.degree + 1, int(np.ceil(np.sqrt(basis.dim))))
    r = COLLOCATION_RADIUS * np.exp(2j * np.pi * np.arange(s) / s)
    a, b = np.meshgrid(r, r, indexing="ij")
    return a.ravel(), b.ravel()


def adjoint_j(rif: Rif, alpha: complex, basis: KphiBasis, mu: ClarkMeasureQuad, h: np.ndarray) -> np.ndarray:
    """J* h as basis coordinates, from the weighted Cauchy transform.

    (J* h)(z) = (1 - conj(alpha) phi(z)) sum_i m_i h_i k_{zeta_i}(z) is sampled at
    interior collocation points and fitted by least squares in the basis.
    ``h`` holds values at the support nodes of mu, in support order.
    """
    z1, z2, mass = mu.support()
    c1, c2 = collocation_points(basis)
    kern = 1.0 / ((1 - np.conj(z1)[None, :] * c1[:, None]) * (1 - np.conj(z2)[None, :] * c2[:, None]))
    cauchy = kern @ (mass * np.asarray(h, dtype=complex))
    target = (1 - np.conj(alpha) * eval_interior(rif, c1, c2)) * cauchy

    design = basis_values(rif, basis, c1, c2)
    cond = np.linalg.cond(design)
    if not np.isfinite(cond) or cond > COLLOCATION_COND_LIMIT:
        raise CollocationError(f"collocation matrix is ill-conditioned (cond {cond:.3g})")
    coeffs, *_ = linalg.lstsq(design, target)
    return coeffs


def intertwining_residual(
    rif: Rif,
    alpha: complex,
    axis: int,
    basis: KphiBasis,
    mu: ClarkMeasureQuad,
    unitary: Optional[TruncatedOperator] = None,
) -> IntertwiningResidual:
    """U-form ||J U - M J|| and V-form ||J* conj(M) J - V|| on the resolved directions."""
    psi = psi_alpha(rif, alpha, axis, basis.space)
    op = unitary if unitary is not None else clark_unitary(rif, alpha, axis, basis)
    c = op.domain if op.domain is not None else resolved_directions(rif, alpha, basis, axis)
    j = embedding_j(rif, alpha, basis, mu)
    z1, z2, _ = mu.support()
    zeta = z1 if axis == 1 else z2
    u_form = _norm((j @ op.matrix - zeta[:, None] * j) @ c)
    v_form = _norm((j.conj().T @ (np.conj(zeta)[:, None] * j) - v_operator(psi, basis)) @ c)
    return IntertwiningResidual(axis=axis, u_form=u_form, v_form=v_form)


def kernel_consistency_residual(
    rif: Rif,
    alpha: complex,
    basis: KphiBasis,
    mu: ClarkMeasureQuad,
    w: Tuple[complex, complex],
) -> float:
    """L^2(sigma_alpha) gap between J k^phi_w and (1 - alpha conj(phi(w))) k_w.

    The coordinates of k^phi_w are conj(e_j(w)); the gap is the part of
    k^phi_w outside the truncation.
    """
    coords = np.conj(basis_values(rif, basis, np.array([w[0]]), np.array([w[1]]))[0])
    lhs = embedding_j(rif, alpha, basis, mu) @ coords

    phi_w = complex(eval_interior(rif, w[0], w[1]))
    z1, z2, mass = mu.support()
    exact = (1 - alpha * np.conj(phi_w)) / ((1 - np.conj(w[0]) * z1) * (1 - np.conj(w[1]) * z2))
    return float(np.linalg.norm(lhs - np.sqrt(mass) * exact))


# ============================================================================
# Role of P_phi
# ============================================================================

def _vanishes_on_axis(rif: Rif) -> bool:
    """phi(0, z2) == 0 identically."""
    q = rif.numerator.coeffs
    return bool(np.abs(q[0, :]).max() <= 1e-12 * rif.numerator.scale)


def p_phi_necessity(rif: Rif, alpha: complex, basis: KphiBasis, space: Optional[TruncatedHardy] = None) -> NecessityResult:
    """Largest ||(I - P_phi) P_{H^2_2} M_{conj psi1} f|| over unit f in K_phi.

    A positive value shows the projection in the U^1 formula is not redundant.
    When phi(0, z2) == 0 the value is ~0 and is returned with the cross-case flag.
    """
    if not (depends_on(rif, 1) and depends_on(rif, 2)):
        raise HypothesisError("phi must depend on both variables")
    space = space or basis.space
    psi = psi_alpha(rif, alpha, 1, space)
    d = space.degree
    outside = np.eye(space.dimension) - basis.projector
    term = constant_mask(d, 1) @ lower_toeplitz(psi.coeffs, d).conj().T @ basis.functions
    return NecessityResult(value=_norm(outside @ term), cross_case=_vanishes_on_axis(rif))


def cross_case_split(rif: Rif, alpha: complex, basis: KphiBasis, space: Optional[TruncatedHardy] = None) -> CrossCaseSplit:
    """Check K_phi = K_psi + psi H^2_2 and U^1 f = z1 f1 + alpha f2 for phi = z1 psi."""
    if not _vanishes_on_axis(rif) or rif.monomial[0] < 1:
        raise HypothesisError("phi must carry a factor z1")
    space = space or basis.space
    d = space.degree
    inner = make_rif(rif.p, (rif.monomial[0] - 1, rif.monomial[1]), rif.phase)
    inner_basis = project_kphi(inner, space, basis.method)
    lpsi = lower_toeplitz(taylor_coefficients(inner, space, basis.method), d)
    k, _ = space.indices()
    along = lpsi[:, k == 0]

    u1 = clark_unitary(rif, alpha, 1, basis, space)
    mine = basis.functions @ u1.domain
    target = np.hstack([inner_basis.vectors, along])
    angles = linalg.subspace_angles(mine, target) if mine.size else np.zeros(1)

    split = shift_matrix(d, 1) @ inner_basis.projector + alpha * lpsi.conj().T @ (
        np.eye(space.dimension) - inner_basis.projector
    )
    resid = _norm(basis.functions @ u1.matrix @ u1.domain - split @ mine)
    return CrossCaseSplit(max_angle=float(np.max(angles)), decomposition_residual=resid)
