"""Koszul-complex rank tests for commuting matrix pairs."""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import linalg

from ..errors import CommutationError, RefinementError


DEFAULT_TOL = 1e-8
COMMUTATION_RTOL = 1e-8


class KoszulReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda1: complex
    lambda2: complex
    n: int
    rank_delta1: int
    rank_delta2: int
    tolerance: float
    threshold: float
    singular: bool


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a @ b - b @ a, 2))


def check_commuting(a: np.ndarray, b: np.ndarray, rtol: float = COMMUTATION_RTOL) -> float:
    """Commutator norm; CommutationError above rtol * ||A|| ||B||."""
    c = commutator_norm(a, b)
    scale = float(np.linalg.norm(a, 2) * np.linalg.norm(b, 2))
    if c > rtol * max(scale, 1e-300):
        raise CommutationError(f"||AB - BA|| = {c:.3g} exceeds {rtol:.1e} * ||A|| ||B||")
    return c


def _rank(m: np.ndarray, tol: float, threshold: Optional[float]) -> Tuple[int, float]:
    s = linalg.svdvals(m)
    if s.size == 0 or s[0] == 0.0:
        return 0, 0.0 if threshold is None else threshold
    cut = tol * s[0] if threshold is None else threshold
    return int(np.sum(s > cut)), float(cut)


def koszul_ranks(
    a: np.ndarray,
    b: np.ndarray,
    lam: Tuple[complex, complex],
    tol: float = DEFAULT_TOL,
    commutation_rtol: float = COMMUTATION_RTOL,
    threshold: Optional[float] = None,
) -> KoszulReport:
    """Ranks of delta1 = (A - l1, B - l2) stacked and delta2 = (-(B - l2), A - l1) side by side.

    The complex is exact at lam iff both ranks equal n. Singular values count
    when above tol * sigma_max, or above ``threshold`` when one is given.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    check_commuting(a, b, commutation_rtol)
    n = a.shape[0]
    eye = np.eye(n)
    a_l = a - lam[0] * eye
    b_l = b - lam[1] * eye
    r1, cut1 = _rank(np.vstack([a_l, b_l]), tol, threshold)
    r2, cut2 = _rank(np.hstack([-b_l, a_l]), tol, threshold)
    return KoszulReport(
        lambda1=complex(lam[0]),
        lambda2=complex(lam[1]),
        n=n,
        rank_delta1=r1,
        rank_delta2=r2,
        tolerance=tol,
        threshold=max(cut1, cut2),
        singular=not (r1 == n and r2 == n),
    )


def diagonal_singular_values(a_diag: np.ndarray, b_diag: np.ndarray, lam: Tuple[complex, complex]) -> np.ndarray:
    """Singular values of delta1 (and of delta2) for a diagonal pair."""
    return np.sqrt(np.abs(a_diag - lam[0]) ** 2 + np.abs(b_diag - lam[1]) ** 2)


# ============================================================================
# Joint eigenvalues
# ============================================================================

def _eigenspace(m: np.ndarray, value: complex, tol: float) -> np.ndarray:
    n = m.shape[0]
    scale = max(float(np.linalg.norm(m, 2)), 1.0)
    _, s, vh = linalg.svd(m - value * np.eye(n))
    null = s <= tol * scale
    if np.any(null):
        return vh[null].conj().T
    if s[-1] <= np.sqrt(tol) * scale:
        return vh[-1:].conj().T
    raise RefinementError(
        f"no eigenvector found for eigenvalue {value:.6g} (smallest singular value {s[-1]:.3g}, tol {tol:.1e})"
    )


def joint_eigenvalues(
    a: np.ndarray,
    b: np.ndarray,
    tol: float = DEFAULT_TOL,
    commutation_rtol: float = COMMUTATION_RTOL,
) -> List[Tuple[complex, complex]]:
    """Diagonal pairs of a common Schur triangularization, with multiplicity.

    Each step takes an eigenvalue of A, a joint eigenvector inside its
    eigenspace, and deflates both matrices by a unitary whose first column
    is that eigenvector.
    """
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    check_commuting(a, b, commutation_rtol)
    pairs: List[Tuple[complex, complex]] = []
    while a.shape[0]:
        lam1 = linalg.eigvals(a)[0]
        v = _eigenspace(a, lam1, tol)
        _, y = linalg.eig(v.conj().T @ b @ v)
        x = v @ y[:, 0]
        x = x / np.linalg.norm(x)
        pairs.append((complex(x.conj() @ a @ x), complex(x.conj() @ b @ x)))
        w, _ = linalg.qr(np.column_stack([x, np.eye(a.shape[0])]))
        a = (w.conj().T @ a @ w)[1:, 1:]
        b = (w.conj().T @ b @ w)[1:, 1:]
    return pairs
