"""Tests for Koszul rank tests, joint eigenvalues and Taylor spectrum scans.

Run with: pytest tests/ -v
"""

import pytest
from pathlib import Path
import sys

import numpy as np

# Add parent to path
sys.path.insert(0, str(Path(__file__).parent.parent))


def random_unitary(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def commuting_unitaries(angles1, angles2, seed=0):
    """A pair diagonal in a random orthonormal basis."""
    u = random_unitary(len(angles1), seed)
    a = u @ np.diag(np.exp(1j * np.asarray(angles1))) @ u.conj().T
    b = u @ np.diag(np.exp(1j * np.asarray(angles2))) @ u.conj().T
    return a, b


# ============================================================================
# Koszul Tests
# ============================================================================

class TestKoszul:
    """Tests for the exactness test of the Koszul complex."""

    def test_scalar_pair(self):
        from src.spectral import koszul_ranks

        a, b = np.array([[2.0]]), np.array([[3.0]])
        assert koszul_ranks(a, b, (2, 3)).singular
        report = koszul_ranks(a, b, (1, 3))
        assert not report.singular
        assert (report.rank_delta1, report.rank_delta2) == (1, 1)

    def test_diagonal_pair(self):
        from src.spectral import koszul_ranks

        a = np.diag([1, 1j])
        b = np.diag([1, -1j])
        assert not koszul_ranks(a, b, (1, -1j)).singular
        report = koszul_ranks(a, b, (1j, -1j))
        assert report.singular
        assert report.rank_delta1 == 1

    def test_jordan_block(self):
        """The nilpotent Jordan block has joint spectrum {(0, 0)} with itself."""
        from src.spectral import joint_eigenvalues, koszul_ranks

        j = np.array([[0, 1], [0, 0]], dtype=complex)
        assert koszul_ranks(j, j, (0, 0)).singular
        assert not koszul_ranks(j, j, (0.5, 0)).singular
        pairs = joint_eigenvalues(j, j)
        assert len(pairs) == 2
        assert np.allclose(pairs, [(0, 0), (0, 0)], atol=1e-12)

    def test_absolute_threshold(self):
        """An absolute threshold marks points within that distance of a joint eigenvalue."""
        from src.spectral import koszul_ranks

        a, b = np.diag([1.0 + 0j]), np.diag([1.0 + 0j])
        near = (np.exp(0.01j), 1)
        assert not koszul_ranks(a, b, near).singular
        assert koszul_ranks(a, b, near, threshold=0.05).singular

    def test_diagonal_singular_values(self):
        from src.spectral import diagonal_singular_values, koszul_ranks

        d1 = np.array([1, 1j, -1])
        d2 = np.array([1j, 1, -1j])
        lam = (np.exp(0.3j), np.exp(-0.2j))
        s = diagonal_singular_values(d1, d2, lam)
        assert np.all(s > 0)
        report = koszul_ranks(np.diag(d1), np.diag(d2), lam, threshold=float(np.sort(s)[1]))
        assert report.rank_delta1 == 1

    def test_non_commuting_rejected(self):
        from src.errors import CommutationError
        from src.spectral import check_commuting, koszul_ranks

        a = np.array([[0, 1], [1, 0]], dtype=complex)
        b = np.array([[1, 0], [0, -1]], dtype=complex)
        with pytest.raises(CommutationError):
            check_commuting(a, b)
        with pytest.raises(CommutationError):
            koszul_ranks(a, b, (1, 1))


# ============================================================================
# Joint Eigenvalue Tests
# ============================================================================

class TestJointEigenvalues:
    """Tests for simultaneous triangularization of commuting pairs."""

    def test_random_normal_pair(self):
        from src.spectral import joint_eigenvalues

        rng = np.random.default_rng(7)
        t1 = rng.uniform(-np.pi, np.pi, 6)
        t2 = rng.uniform(-np.pi, np.pi, 6)
        a, b = commuting_unitaries(t1, t2, seed=1)
        pairs = joint_eigenvalues(a, b)
        got = sorted((round(np.angle(x), 8), round(np.angle(y), 8)) for x, y in pairs)
        expected = sorted((round(x, 8), round(y, 8)) for x, y in zip(t1, t2))
        assert np.allclose(got, expected, atol=1e-7)

    def test_rank_verdict_matches_joint_eigenvalues(self):
        """Koszul singularity holds exactly at joint eigenvalues of random normal pairs."""
        from src.spectral import koszul_ranks

        rng = np.random.default_rng(3)
        for trial in range(40):
            n = int(rng.integers(1, 8))
            t1 = rng.uniform(-np.pi, np.pi, n)
            t2 = rng.uniform(-np.pi, np.pi, n)
            a, b = commuting_unitaries(t1, t2, seed=trial)
            i = int(rng.integers(n))
            for tol in (1e-8, 1e-6):
                assert koszul_ranks(a, b, (np.exp(1j * t1[i]), np.exp(1j * t2[i])), tol).singular
                off = (np.exp(1j * t1[i]), np.exp(1j * (t2[i] + 0.5)))
                expected = bool(np.any(np.hypot(
                    np.abs(np.exp(1j * t1) - off[0]), np.abs(np.exp(1j * t2) - off[1])
                ) < 1e-6))
                assert koszul_ranks(a, b, off, tol).singular == expected

    def test_repeated_eigenvalue(self):
        """A repeated eigenvalue of A is split by B."""
        from src.spectral import joint_eigenvalues

        a, b = commuting_unitaries([0.5, 0.5, -1.0], [0.1, 2.0, 0.1], seed=3)
        pairs = joint_eigenvalues(a, b)
        angles = sorted((round(np.angle(x), 6), round(np.angle(y), 6)) for x, y in pairs)
        assert np.allclose(angles, [(-1.0, 0.1), (0.5, 0.1), (0.5, 2.0)], atol=1e-6)


# ============================================================================
# Scan Tests
# ============================================================================

class TestScan:
    """Tests for the torus grid scan."""

    def test_cell_geometry(self):
        from src.spectral import cell_centers, cell_radius

        assert np.allclose(cell_centers(4), [-3 * np.pi / 4, -np.pi / 4, np.pi / 4, 3 * np.pi / 4])
        assert cell_radius(64) == pytest.approx(2 * np.sqrt(2) * np.sin(np.pi / 128))

    def test_diagonal_pair_marks_its_cells(self):
        from src.spectral import cell_centers, taylor_spectrum_on_torus

        t = np.array([[0.3, -1.2], [2.0, 2.9]])
        a = np.diag(np.exp(1j * t[:, 0]))
        b = np.diag(np.exp(1j * t[:, 1]))
        scan = taylor_spectrum_on_torus(a, b, 32)
        centers = cell_centers(32)
        for t1, t2 in t:
            i = np.argmin(np.abs(centers - t1))
            j = np.argmin(np.abs(centers - t2))
            assert scan.mask[i, j]
        assert 2 <= scan.mask.sum() <= 8

    def test_kdtree_matches_direct(self):
        from src.spectral import taylor_spectrum_on_torus

        rng = np.random.default_rng(11)
        t1, t2 = rng.uniform(-np.pi, np.pi, 5), rng.uniform(-np.pi, np.pi, 5)
        a, b = np.diag(np.exp(1j * t1)), np.diag(np.exp(1j * t2))
        fast = taylor_spectrum_on_torus(a, b, 24, method="kdtree")
        slow = taylor_spectrum_on_torus(a, b, 24, method="direct")
        assert np.array_equal(fast.mask, slow.mask)

    def test_rotated_pair_matches_diagonal(self):
        """The scan depends only on the joint spectrum, not on the basis."""
        from src.spectral import taylor_spectrum_on_torus

        t1 = np.array([0.4, -2.0, 1.5, 2.8])
        t2 = np.array([1.0, 0.2, -0.7, -2.5])
        a, b = commuting_unitaries(t1, t2, seed=5)
        rotated = taylor_spectrum_on_torus(a, b, 32)
        diagonal = taylor_spectrum_on_torus(np.diag(np.exp(1j * t1)), np.diag(np.exp(1j * t2)), 32)
        assert np.array_equal(rotated.mask, diagonal.mask)
        assert rotated.commutation < 1e-10

    def test_containment(self):
        """Marked cells sit near sigma(A) x sigma(B)."""
        from src.spectral import containment_gap, taylor_spectrum_on_torus

        a, b = commuting_unitaries([0.1, 1.0, -2.0], [2.0, -0.5, 0.3], seed=2)
        scan = taylor_spectrum_on_torus(a, b, 64)
        assert containment_gap(scan, a, b) <= scan.step

    def test_non_unitary_rejected(self):
        from src.errors import UnitarityError
        from src.spectral import taylor_spectrum_on_torus

        with pytest.raises(UnitarityError):
            taylor_spectrum_on_torus(np.diag([2.0, 1.0]), np.eye(2), 16)

    def test_hash_is_stable(self):
        from src.spectral import matrices_hash

        a, b = np.eye(2), np.diag([1, -1])
        assert matrices_hash(a, b) == matrices_hash(a.copy(), b.copy())
        assert matrices_hash(a, b) != matrices_hash(b, a)

    def test_budget(self):
        from src.spectral import reference_nodes, spectrum_budget

        assert spectrum_budget(0.1, 1e-3) == pytest.approx(0.21)
        assert reference_nodes(16) == 64
        assert reference_nodes(64) == 128
        assert reference_nodes(100) == 256


# ============================================================================
# Clark Pair Tests
# ============================================================================

def _clark_scan(coeffs, monomial, alpha, degree, nodes, grid_n, wrong=False):
    from src.bipoly import BiPoly
    from src.clark import build_clark_measure
    from src.modelspace import TruncatedHardy, clark_unitary, embedding_j, project_kphi
    from src.rif import level_set_branches, make_rif
    from src.spectral import clark_pair, level_set_angles, mask_hausdorff, reference_nodes, taylor_spectrum_on_torus

    phi = make_rif(BiPoly(coeffs=coeffs), monomial)
    basis = project_kphi(phi, TruncatedHardy.for_rif(phi, degree))
    mu = build_clark_measure(phi, alpha, nodes)
    u1 = clark_unitary(phi, alpha, 1, basis)
    u2 = clark_unitary(phi, alpha, 2, basis)
    m1 = np.eye(basis.dim) if wrong else u1.matrix
    j = embedding_j(phi, alpha, basis, mu)
    a, b = clark_pair(j, m1, u2.matrix, u1.domain, u2.domain)
    scan = taylor_spectrum_on_torus(a, b, grid_n)
    reference = level_set_angles(level_set_branches(phi, alpha, reference_nodes(grid_n)))
    return scan, mask_hausdorff(scan, reference)


class TestClarkPair:
    """Tests for the diagonal pair read off J U J* and its scan against the level set."""

    def test_zw_tracks_level_set(self):
        """For z1 z2 the scan of the pair recovers C_alpha within two cells."""
        scan, distance = _clark_scan([[1]], (1, 1), np.exp(0.6j), 8, 256, 64)
        assert distance <= 2 * scan.step

    def test_fave_tracks_level_set(self):
        scan, distance = _clark_scan([[2, -1], [-1, 0]], (0, 0), 1j, 8, 1024, 64)
        assert distance <= 2 * scan.step + 0.1

    def test_wrong_unitary_is_far(self):
        """Replacing U^1 by the identity pins theta1 to 0 and misses most of C_alpha."""
        scan, distance = _clark_scan([[1]], (1, 1), np.exp(0.6j), 8, 256, 64, wrong=True)
        assert distance > 10 * scan.step

    def test_unitary_values(self):
        """For z1 z2 the pair is exactly diag(zeta1), diag(zeta2) at the nodes."""
        from src.bipoly import BiPoly
        from src.clark import build_clark_measure
        from src.modelspace import TruncatedHardy, clark_unitary, embedding_j, project_kphi
        from src.rif import make_rif
        from src.spectral import clark_pair

        phi = make_rif(BiPoly(coeffs=[[1]]), (1, 1))
        basis = project_kphi(phi, TruncatedHardy.for_rif(phi, 6))
        u1 = clark_unitary(phi, 1j, 1, basis)
        u2 = clark_unitary(phi, 1j, 2, basis)
        mu = build_clark_measure(phi, 1j, 64)
        a, b = clark_pair(embedding_j(phi, 1j, basis, mu), u1.matrix, u2.matrix, u1.domain, u2.domain)
        z1, z2, _ = mu.support()
        assert np.allclose(np.diag(a), z1, atol=1e-8)
        assert np.allclose(np.diag(b), z2, atol=1e-8)

    def test_empty_domain_rejected(self):
        from src.errors import UnitarityError
        from src.spectral import clark_pair

        j = np.ones((4, 2), dtype=complex)
        empty = np.zeros((2, 0), dtype=complex)
        with pytest.raises(UnitarityError):
            clark_pair(j, np.eye(2), np.eye(2), empty, empty)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
