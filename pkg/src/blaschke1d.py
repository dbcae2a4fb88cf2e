"""One-variable oracle: finite Blaschke products, their model spaces and Clark data.

K_phi is finite dimensional here, so everything is exact up to rounding;
the two-variable machinery is tested against these results.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import linalg
from scipy.spatial.distance import directed_hausdorff

from .bipoly import UniPoly, roots
from .errors import Phi0Error, PointSelectionError
from .schemas import BlaschkeSpec, from_pair, to_pair


MAX_TRUNCATION = 4096
GRAM_COND_LIMIT = 1e12


class BlaschkeProduct(BaseModel):
    """e^{ia} z^m prod (|l|/l)(l - z)/(1 - conj(l) z) over nonzero zeros l."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    zeros: np.ndarray
    m: int = 0
    phase: float = 0.0

    @field_validator("zeros", mode="before")
    @classmethod
    def _in_disk(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=complex, ndmin=1, copy=True).ravel()
        if np.any(np.abs(arr) >= 1):
            raise ValueError("Blaschke zeros must lie in the open unit disk")
        arr.flags.writeable = False
        return arr

    @classmethod
    def build(cls, zeros=(), m: int = 0, phase: float = 0.0) -> "BlaschkeProduct":
        """Fold zeros at the origin into the monomial power."""
        arr = np.array(zeros, dtype=complex, ndmin=1).ravel()
        at_origin = int(np.sum(arr == 0))
        return cls(zeros=arr[arr != 0], m=m + at_origin, phase=phase)

    @property
    def degree(self) -> int:
        return self.m + self.zeros.size


class Clark1D(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: complex
    atoms: np.ndarray
    weights: np.ndarray

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


class ModelBasis1D(BaseModel):
    """Orthonormal basis of K_phi in monomial coordinates 0..truncation-1."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    vectors: np.ndarray  # (truncation, degree)
    points: np.ndarray
    gram: np.ndarray

    @property
    def truncation(self) -> int:
        return self.vectors.shape[0]


# ============================================================================
# Polynomial form
# ============================================================================

def polynomial_form(phi: BlaschkeProduct) -> Tuple[np.ndarray, np.ndarray]:
    """Ascending coefficients (q, p) with phi = q/p."""
    q = np.zeros(phi.m + 1, dtype=complex)
    q[phi.m] = np.exp(1j * phi.phase)
    p = np.ones(1, dtype=complex)
    for lam in phi.zeros:
        q = npoly.polymul(q, (abs(lam) / lam) * np.array([lam, -1.0]))
        p = npoly.polymul(p, np.array([1.0, -np.conj(lam)]))
    return q, p


def evaluate(phi: BlaschkeProduct, z):
    q, p = polynomial_form(phi)
    return npoly.polyval(z, q) / npoly.polyval(z, p)


def derivative(phi: BlaschkeProduct, z):
    q, p = polynomial_form(phi)
    pv = npoly.polyval(z, p)
    return (npoly.polyval(z, npoly.polyder(q)) * pv - npoly.polyval(z, q) * npoly.polyval(z, npoly.polyder(p))) / pv**2


def taylor_coefficients(phi: BlaschkeProduct, count: int) -> np.ndarray:
    """First ``count`` Taylor coefficients of phi by power-series division."""
    q, p = polynomial_form(phi)
    qq = np.zeros(count, dtype=complex)
    qq[: min(count, q.size)] = q[:count]
    col = np.zeros(count, dtype=complex)
    col[: min(count, p.size)] = p[:count]
    return linalg.solve_triangular(linalg.toeplitz(col, np.zeros(count)), qq, lower=True)


def truncation_degree(phi: BlaschkeProduct) -> int:
    """Degree past which the Taylor tails of K_phi elements fall below rounding."""
    if phi.zeros.size == 0:
        return max(phi.degree, 1)
    rho = float(np.max(np.abs(phi.zeros)))
    extra = int(np.ceil(np.log(1e-17) / np.log(rho)))
    return min(phi.degree + extra, MAX_TRUNCATION)


# ============================================================================
# Clark measure and model space
# ============================================================================

def clark_measure_1d(phi: BlaschkeProduct, alpha: complex) -> Clark1D:
    """Atoms at the solutions of phi = alpha with weights 1/|phi'|."""
    if phi.degree < 1:
        raise ValueError("a constant Blaschke product has no Clark atoms")
    q, p = polynomial_form(phi)
    r = np.zeros(max(q.size, p.size), dtype=complex)
    r[: q.size] += q
    r[: p.size] -= alpha * p
    atoms = roots(UniPoly.from_coeffs(r))
    weights = 1.0 / np.abs(derivative(phi, atoms))
    return Clark1D(alpha=complex(alpha), atoms=atoms, weights=weights)


def model_basis_1d(phi: BlaschkeProduct) -> ModelBasis1D:
    """Orthonormalized reproducing kernels of K_phi at the n-th roots of 0.5."""
    n = phi.degree
    if n < 1:
        raise ValueError("K_phi is trivial for a constant product")
    t = truncation_degree(phi)
    coeffs = taylor_coefficients(phi, t)
    points = 0.5 ** (1.0 / n) * np.exp(2j * np.pi * np.arange(n) / n)

    kernels = np.empty((t, n), dtype=complex)
    for j, w in enumerate(points):
        geometric = np.conj(w) ** np.arange(t)
        phi_w = npoly.polyval(w, coeffs)
        kernels[:, j] = geometric - np.conj(phi_w) * np.convolve(coeffs, geometric)[:t]

    gram = kernels.conj().T @ kernels
    if np.linalg.cond(gram) > GRAM_COND_LIMIT:
        raise PointSelectionError(f"kernel Gram matrix is ill-conditioned (cond {np.linalg.cond(gram):.3g})")
    q_mat, _ = linalg.qr(kernels, mode="economic")
    return ModelBasis1D(vectors=q_mat, points=points, gram=gram)


def compressed_shift_1d(phi: BlaschkeProduct, basis: ModelBasis1D) -> np.ndarray:
    t = basis.truncation
    shift = np.eye(t, k=-1)
    return basis.vectors.conj().T @ shift @ basis.vectors


def clark_unitary_1d(phi: BlaschkeProduct, alpha: complex, basis: ModelBasis1D = None) -> np.ndarray:
    """U f = S f + alpha <f, T*phi> 1 on K_phi, valid when phi(0) = 0."""
    basis = basis or model_basis_1d(phi)
    t = basis.truncation
    coeffs = taylor_coefficients(phi, t + 1)
    if abs(coeffs[0]) > 1e-12:
        raise Phi0Error(f"phi(0) = {coeffs[0]:.3g} is nonzero")
    q_mat = basis.vectors
    backward_phi = coeffs[1 : t + 1]
    one = np.zeros(t, dtype=complex)
    one[0] = 1.0
    rank_one = alpha * np.outer(q_mat.conj().T @ one, backward_phi.conj() @ q_mat)
    return compressed_shift_1d(phi, basis) + rank_one


def evaluation_embedding_1d(phi: BlaschkeProduct, clark: Clark1D, basis: ModelBasis1D) -> np.ndarray:
    """Basis coefficients -> sqrt(weight)-scaled values at the atoms."""
    powers = clark.atoms[:, None] ** np.arange(basis.truncation)[None, :]
    return np.sqrt(clark.weights)[:, None] * (powers @ basis.vectors)


def clark_unitary_1d_general(phi: BlaschkeProduct, alpha: complex, basis: ModelBasis1D = None) -> np.ndarray:
    """Clark unitary for any phi(0): multiplication by zeta on L^2(sigma_alpha) pulled back to K_phi."""
    basis = basis or model_basis_1d(phi)
    clark = clark_measure_1d(phi, alpha)
    j = evaluation_embedding_1d(phi, clark, basis)
    return j.conj().T @ np.diag(clark.atoms) @ j


def perturbation_rank(u: np.ndarray, s: np.ndarray, tol: float = 1e-8) -> int:
    diff = u - s
    return int(np.linalg.matrix_rank(diff, tol=tol * max(np.linalg.norm(u, 2), 1.0)))


def point_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between finite sets of complex numbers."""
    pa = np.column_stack([np.real(a), np.imag(a)])
    pb = np.column_stack([np.real(b), np.imag(b)])
    return float(max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0]))


# ============================================================================
# Interchange
# ============================================================================

def from_spec(spec: BlaschkeSpec) -> BlaschkeProduct:
    return BlaschkeProduct.build([from_pair(z) for z in spec.zeros], spec.m, spec.phase)


def to_spec(phi: BlaschkeProduct) -> BlaschkeSpec:
    return BlaschkeSpec(zeros=[to_pair(z) for z in phi.zeros], m=phi.m, phase=phi.phase)
