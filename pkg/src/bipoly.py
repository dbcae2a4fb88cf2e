"""Bivariate complex polynomials with explicit bidegree.

Coefficients are stored dense, ``coeffs[k, l]`` multiplying ``z1**k * z2**l``.
Values are immutable after construction: the coefficient array is flagged
read-only, and every operation returns a new polynomial.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import linalg, signal

from .errors import ZeroPolynomialError
from .schemas import BiPolySpec, from_pair, to_pair


# Trailing coefficients below this fraction of the largest one are trimmed.
TRIM_RTOL = 1e-12

DEFAULT_STABILITY_SAMPLES = 64
DEFAULT_STABILITY_TOL = 1e-9


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _trim2d(c: np.ndarray) -> np.ndarray:
    scale = np.abs(c).max() if c.size else 0.0
    if scale == 0.0:
        return np.zeros((1, 1), dtype=complex)
    mask = np.abs(c) > TRIM_RTOL * scale
    rows = np.nonzero(mask.any(axis=1))[0]
    cols = np.nonzero(mask.any(axis=0))[0]
    return c[: rows[-1] + 1, : cols[-1] + 1].copy()


def _trim1d(c: np.ndarray) -> np.ndarray:
    scale = np.abs(c).max() if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    idx = np.nonzero(np.abs(c) > TRIM_RTOL * scale)[0]
    return c[: idx[-1] + 1].copy()


# ============================================================================
# Types
# ============================================================================

class BiPoly(BaseModel):
    """Polynomial sum of ``coeffs[k, l] z1^k z2^l`` with bidegree ``coeffs.shape - 1``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coeffs: np.ndarray

    @field_validator("coeffs", mode="before")
    @classmethod
    def _as_complex_matrix(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=complex, ndmin=2, copy=True)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("coefficients must form a nonempty 2-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        return _readonly(arr)

    @model_validator(mode="after")
    def _no_trailing_zeros(self) -> "BiPoly":
        c = self.coeffs
        scale = np.abs(c).max()
        if scale == 0.0:
            if c.shape != (1, 1):
                raise ValueError("the zero polynomial has bidegree (0, 0)")
            return self
        thr = TRIM_RTOL * scale
        if np.all(np.abs(c[-1, :]) <= thr) or np.all(np.abs(c[:, -1]) <= thr):
            raise ValueError(f"trailing zero row/column for declared bidegree {self.bidegree}")
        return self

    @classmethod
    def from_coeffs(cls, coeffs) -> "BiPoly":
        """Build from any 2-D array, trimming trailing (near-)zero rows and columns."""
        return cls(coeffs=_trim2d(np.array(coeffs, dtype=complex, ndmin=2)))

    @classmethod
    def constant(cls, value: complex) -> "BiPoly":
        return cls.from_coeffs([[value]])

    @property
    def bidegree(self) -> Tuple[int, int]:
        return (self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1)

    @property
    def is_zero(self) -> bool:
        return bool(np.abs(self.coeffs).max() == 0.0)

    @property
    def scale(self) -> float:
        """Largest coefficient modulus."""
        return float(np.abs(self.coeffs).max())


class UniPoly(BaseModel):
    """One-variable polynomial, ascending coefficients."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coeffs: np.ndarray

    @field_validator("coeffs", mode="before")
    @classmethod
    def _as_complex_vector(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=complex, ndmin=1, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coefficients must form a nonempty 1-D array")
        return _readonly(arr)

    @model_validator(mode="after")
    def _leading_nonzero(self) -> "UniPoly":
        if self.coeffs.size > 1 and self.coeffs[-1] == 0:
            raise ValueError("leading coefficient must be nonzero")
        return self

    @classmethod
    def from_coeffs(cls, coeffs) -> "UniPoly":
        return cls(coeffs=_trim1d(np.array(coeffs, dtype=complex, ndmin=1)))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return bool(np.abs(self.coeffs).max() == 0.0)

    def __call__(self, z):
        return npoly.polyval(z, self.coeffs)


class StabilityReport(BaseModel):
    """Outcome of the sampled stability test; never a proof."""

    stable: bool
    sampled: bool = True
    samples: int
    tol: float
    min_root_modulus: float


# ============================================================================
# Evaluation and algebra
# ============================================================================

def evaluate(p: BiPoly, z1, z2):
    """Horner evaluation in each variable; broadcasts over array arguments."""
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    c = p.coeffs
    acc = np.zeros(np.broadcast(z1, z2).shape, dtype=complex)
    for k in range(c.shape[0] - 1, -1, -1):
        row = np.zeros_like(acc)
        for l in range(c.shape[1] - 1, -1, -1):
            row = row * z2 + c[k, l]
        acc = acc * z1 + row
    return acc[()] if acc.ndim == 0 else acc


def reflect(p: BiPoly) -> BiPoly:
    """Reflection z1^n1 z2^n2 conj(p(1/conj z1, 1/conj z2))."""
    if p.is_zero:
        raise ZeroPolynomialError("cannot reflect the zero polynomial")
    return BiPoly.from_coeffs(np.conj(p.coeffs[::-1, ::-1]))


def slice_poly(p: BiPoly, axis: int, xi: complex) -> UniPoly:
    """Restrict to a line: axis 1 fixes z1 = xi, axis 2 fixes z2 = xi."""
    if axis == 1:
        return UniPoly.from_coeffs(npoly.polyval(complex(xi), p.coeffs))
    if axis == 2:
        return UniPoly.from_coeffs(npoly.polyval(complex(xi), p.coeffs.T))
    raise ValueError(f"axis must be 1 or 2, got {axis}")


def roots(q: UniPoly) -> np.ndarray:
    """Companion-matrix roots, sorted by argument then modulus."""
    if q.is_zero:
        raise ZeroPolynomialError("the zero polynomial has no root set")
    if q.degree == 0:
        return np.zeros(0, dtype=complex)
    companion = linalg.companion(q.coeffs[::-1])
    r = np.linalg.eigvals(companion).astype(complex)
    order = np.lexsort((np.abs(r), np.angle(r)))
    return r[order]


def partial(p: BiPoly, axis: int) -> BiPoly:
    """Formal partial derivative in z_axis."""
    c = p.coeffs
    if axis == 1:
        if c.shape[0] == 1:
            return BiPoly.constant(0.0)
        return BiPoly.from_coeffs(c[1:, :] * np.arange(1, c.shape[0])[:, None])
    if axis == 2:
        if c.shape[1] == 1:
            return BiPoly.constant(0.0)
        return BiPoly.from_coeffs(c[:, 1:] * np.arange(1, c.shape[1])[None, :])
    raise ValueError(f"axis must be 1 or 2, got {axis}")


def multiply(p: BiPoly, q: BiPoly) -> BiPoly:
    return BiPoly.from_coeffs(signal.convolve2d(p.coeffs, q.coeffs))


def padded(p: BiPoly, shape: Tuple[int, int]) -> np.ndarray:
    """Coefficient array zero-padded at the high end to ``shape``."""
    out = np.zeros(shape, dtype=complex)
    n1, n2 = p.coeffs.shape
    out[:n1, :n2] = p.coeffs
    return out


def combine(q: BiPoly, p: BiPoly, alpha: complex) -> BiPoly:
    """The polynomial q - alpha p."""
    shape = (max(q.coeffs.shape[0], p.coeffs.shape[0]), max(q.coeffs.shape[1], p.coeffs.shape[1]))
    return BiPoly.from_coeffs(padded(q, shape) - alpha * padded(p, shape))


def shift_monomial(p: BiPoly, m1: int, m2: int, factor: complex = 1.0) -> BiPoly:
    """factor * z1^m1 z2^m2 * p."""
    n1, n2 = p.coeffs.shape
    out = np.zeros((n1 + m1, n2 + m2), dtype=complex)
    out[m1:, m2:] = factor * p.coeffs
    return BiPoly.from_coeffs(out)


def swap_variables(p: BiPoly) -> BiPoly:
    return BiPoly.from_coeffs(p.coeffs.T)


# ============================================================================
# Batched slice roots
# ============================================================================

def slice_root_sets(p: BiPoly, axis: int, points) -> list:
    """Roots of ``slice_poly(p, axis, w)`` for each w, batched by effective degree.

    Entries are ``None`` where the slice vanishes identically.
    """
    c = p.coeffs if axis == 1 else p.coeffs.T
    points = np.asarray(points, dtype=complex).ravel()
    slices = npoly.polyvander(points, c.shape[0] - 1) @ c
    scale = np.abs(slices).max(axis=1)
    live = np.abs(slices) > TRIM_RTOL * scale[:, None]
    degree = np.where(live.any(axis=1), c.shape[1] - 1 - np.argmax(live[:, ::-1], axis=1), 0)

    out: list = [None] * points.size
    for d in np.unique(degree):
        idx = np.nonzero(degree == d)[0]
        if d == 0:
            for i in idx:
                out[i] = None if scale[i] == 0.0 else np.zeros(0, dtype=complex)
            continue
        monic = slices[idx, :d] / slices[idx, d : d + 1]
        comp = np.zeros((idx.size, d, d), dtype=complex)
        comp[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        comp[:, :, -1] = -monic
        eig = np.linalg.eigvals(comp)
        for j, i in enumerate(idx):
            out[i] = eig[j]
    return out


def stability_report(
    p: BiPoly,
    samples: int = DEFAULT_STABILITY_SAMPLES,
    tol: float = DEFAULT_STABILITY_TOL,
) -> StabilityReport:
    """Sampled necessary-condition test for having no zeros in the open bidisk.

    Every slice through a point of a radial-angular grid of the disk of
    radius 1 - tol must keep its roots outside that disk. Both axes are
    scanned so zeros depending on one variable only are caught as well.
    """
    if samples < 16:
        raise ValueError("stability sampling needs at least 16 samples")
    radii = np.linspace(0.0, 1.0 - tol, samples)
    angles = 2 * np.pi * np.arange(samples) / samples
    grid = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()

    min_modulus = np.inf
    for axis in (1, 2):
        for rs in slice_root_sets(p, axis, grid):
            if rs is None:
                min_modulus = 0.0
                break
            if rs.size:
                min_modulus = min(min_modulus, float(np.abs(rs).min()))
    return StabilityReport(
        stable=bool(min_modulus >= 1.0 - tol),
        samples=samples,
        tol=tol,
        min_root_modulus=float(min_modulus) if np.isfinite(min_modulus) else 1e300,
    )


def is_stable(
    p: BiPoly,
    samples: int = DEFAULT_STABILITY_SAMPLES,
    tol: float = DEFAULT_STABILITY_TOL,
) -> bool:
    return stability_report(p, samples, tol).stable


# ============================================================================
# Interchange
# ============================================================================

def to_spec(p: BiPoly) -> BiPolySpec:
    return BiPolySpec(bidegree=p.bidegree, coeffs=[to_pair(c) for c in p.coeffs.ravel()])


def from_spec(spec: BiPolySpec) -> BiPoly:
    n1, n2 = spec.bidegree
    flat = np.array([from_pair(c) for c in spec.coeffs], dtype=complex)
    return BiPoly(coeffs=flat.reshape(n1 + 1, n2 + 1))
