"""Angles and distances on the torus T^2."""

import numpy as np
from scipy.spatial import cKDTree

TWO_PI = 2 * np.pi


def wrap(theta):
    """Map angles into (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    out = np.mod(theta + np.pi, TWO_PI) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    return out[()] if out.ndim == 0 else out


def angles(z1, z2) -> np.ndarray:
    """Points of T^2 as an (n, 2) array of angles in (-pi, pi]."""
    return np.column_stack([wrap(np.angle(np.ravel(z1))), wrap(np.angle(np.ravel(z2)))])


def circular_gap(a, b):
    """Absolute angular difference in [0, pi]."""
    return np.abs(wrap(np.asarray(a) - np.asarray(b)))


def geodesic(p, q):
    """Flat-torus geodesic distance between angle pairs."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = circular_gap(p, q)
    return np.sqrt(np.sum(d * d, axis=-1))


def _box(points) -> np.ndarray:
    out = np.mod(np.asarray(points, dtype=float), TWO_PI)
    out[out >= TWO_PI] = 0.0
    return out


def _tree(points: np.ndarray) -> cKDTree:
    return cKDTree(_box(points), boxsize=TWO_PI)


def nearest(points: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Distance from each query to the closest of ``points``."""
    if len(points) == 0 or len(queries) == 0:
        return np.full(len(queries), np.inf)
    dist, _ = _tree(points).query(_box(queries))
    return dist


def min_distance(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) == 0 or len(b) == 0:
        return float("inf")
    return float(nearest(a, b).min())


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between finite sets of angle pairs."""
    if len(a) == 0 or len(b) == 0:
        return float("inf")
    return float(max(nearest(a, b).max(), nearest(b, a).max()))
