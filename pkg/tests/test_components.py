"""Unit tests for polynomials, rational inner functions, the Blaschke oracle and config.

Run with: pytest tests/ -v
"""

import pytest
from pathlib import Path
import sys

import numpy as np

# Add parent to path
sys.path.insert(0, str(Path(__file__).parent.parent))


FAVE = [[2, -1], [-1, 0]]


def fave_level(alpha, xi):
    """zeta2 on C_alpha over zeta1 = xi for the fave example."""
    return (2 * alpha - alpha * xi + xi) / (2 * xi - 1 + alpha)


# ============================================================================
# Polynomial Tests
# ============================================================================

class TestBiPoly:
    """Tests for bivariate polynomial algebra."""

    def test_evaluate(self):
        """Horner evaluation at a few points."""
        from src.bipoly import BiPoly, evaluate

        p = BiPoly(coeffs=FAVE)
        assert abs(evaluate(p, 1, 1)) < 1e-15
        assert evaluate(p, 0, 0) == 2
        zw = BiPoly(coeffs=[[0, 0], [0, 1]])
        assert abs(evaluate(zw, 1j, 1j) + 1) < 1e-15

    def test_trailing_zero_rejected(self):
        """Declared bidegree must match the coefficient extents."""
        from src.bipoly import BiPoly

        with pytest.raises(ValueError):
            BiPoly(coeffs=[[1, 0], [0, 0]])
        assert BiPoly.from_coeffs([[1, 0], [0, 0]]).bidegree == (0, 0)

    def test_reflect(self):
        """Reflection flips and conjugates the coefficient array."""
        from src.bipoly import BiPoly, reflect

        assert np.allclose(reflect(BiPoly(coeffs=FAVE)).coeffs, [[0, -1], [-1, 2]])
        assert np.allclose(reflect(BiPoly(coeffs=[[1]])).coeffs, [[1]])
        assert np.allclose(reflect(BiPoly(coeffs=[[2], [-1]])).coeffs, [[-1], [2]])

    def test_reflect_is_involution(self):
        from src.bipoly import BiPoly, reflect

        rng = np.random.default_rng(0)
        for _ in range(100):
            n1, n2 = rng.integers(0, 5, size=2)
            c = rng.normal(size=(n1 + 1, n2 + 1)) + 1j * rng.normal(size=(n1 + 1, n2 + 1))
            p = BiPoly(coeffs=c)
            assert np.allclose(reflect(reflect(p)).coeffs, p.coeffs, atol=1e-14)

    def test_reflect_zero_raises(self):
        from src.bipoly import BiPoly, reflect
        from src.errors import ZeroPolynomialError

        with pytest.raises(ZeroPolynomialError):
            reflect(BiPoly(coeffs=[[0]]))

    def test_slice(self):
        """Fixing one variable gives the expected one-variable polynomial."""
        from src.bipoly import BiPoly, slice_poly

        assert np.allclose(slice_poly(BiPoly(coeffs=FAVE), 1, 1).coeffs, [1, -1])
        assert slice_poly(BiPoly(coeffs=[[0, 0], [0, 1]]), 1, 0).is_zero
        num = BiPoly(coeffs=[[0, -1], [-1, 2]])
        assert np.allclose(slice_poly(num, 2, 1j).coeffs, [-1j, 2j - 1])

    def test_roots(self):
        from src.bipoly import UniPoly, roots
        from src.errors import ZeroPolynomialError

        assert np.allclose(roots(UniPoly.from_coeffs([1, -1])), [1])
        r = roots(UniPoly.from_coeffs([1, 0, 1]))
        assert np.allclose(sorted(r, key=lambda z: z.imag), [-1j, 1j])
        assert roots(UniPoly.from_coeffs([3])).size == 0
        with pytest.raises(ZeroPolynomialError):
            roots(UniPoly.from_coeffs([0]))

    def test_stability(self):
        """Sampled stability test on standard examples."""
        from src.bipoly import BiPoly, is_stable, stability_report

        assert is_stable(BiPoly(coeffs=FAVE))
        assert is_stable(BiPoly(coeffs=[[1]]))
        report = stability_report(BiPoly(coeffs=[[1], [-2]]))
        assert report.stable is False
        assert report.min_root_modulus == pytest.approx(0.5)

    def test_partial(self):
        from src.bipoly import BiPoly, partial

        assert np.allclose(partial(BiPoly(coeffs=[[0, 0], [0, 1]]), 2).coeffs, [[0], [1]])
        assert np.allclose(partial(BiPoly(coeffs=FAVE), 1).coeffs, [[-1]])
        assert np.allclose(partial(BiPoly(coeffs=[[0, -1], [-1, 2]]), 2).coeffs, [[-1], [2]])

    def test_json_round_trip(self):
        """JSON interchange keeps coefficients and bidegree."""
        from src.bipoly import BiPoly, from_spec, to_spec
        from src.schemas import BiPolySpec

        p = BiPoly(coeffs=[[1, -0.5], [-0.5j, 0.25]])
        spec = BiPolySpec.model_validate_json(to_spec(p).model_dump_json())
        assert np.array_equal(from_spec(spec).coeffs, p.coeffs)

    def test_extent_mismatch(self):
        from pydantic import ValidationError
        from src.schemas import BiPolySpec

        with pytest.raises(ValidationError):
            BiPolySpec(bidegree=(1, 1), coeffs=[(1.0, 0.0)] * 3)


# ============================================================================
# Rational Inner Function Tests
# ============================================================================

class TestRif:
    """Tests for construction and evaluation of rational inner functions."""

    def test_zw(self):
        from src.bipoly import BiPoly
        from src.rif import eval_boundary, eval_interior, make_rif

        phi = make_rif(BiPoly(coeffs=[[1]]), (1, 1))
        assert eval_interior(phi, 0.5, 0.5j) == pytest.approx(0.25j)
        assert eval_boundary(phi, 1, -1) == pytest.approx(-1)
        assert len(phi.singular) == 0

    def test_fave(self):
        from src.bipoly import BiPoly
        from src.rif import eval_boundary, eval_interior, make_rif

        phi = make_rif(BiPoly(coeffs=FAVE))
        assert abs(eval_interior(phi, 0, 0)) < 1e-15
        assert eval_interior(phi, 0.5, 0) == pytest.approx(-1 / 3)
        for t in (0.5, 2.0, -1.0):
            assert eval_boundary(phi, 1, np.exp(1j * t)) == pytest.approx(-1)

    def test_unstable_rejected(self):
        from src.bipoly import BiPoly
        from src.errors import StabilityError
        from src.rif import make_rif

        with pytest.raises(StabilityError):
            make_rif(BiPoly(coeffs=[[1], [-2]]))

    def test_interior_domain(self):
        from src.bipoly import BiPoly
        from src.errors import DomainError
        from src.rif import eval_interior, make_rif

        with pytest.raises(DomainError):
            eval_interior(make_rif(BiPoly(coeffs=FAVE)), 1.0, 0.0)

    def test_singular_points(self):
        """fave is singular exactly at (1, 1); 3 - z1 - z2 never vanishes on T^2."""
        from src.bipoly import BiPoly
        from src.errors import SingularPointError
        from src.rif import eval_boundary, make_rif, singular_points

        phi = make_rif(BiPoly(coeffs=FAVE))
        pts = singular_points(phi).points
        assert pts.shape == (1, 2)
        assert np.allclose(pts[0], [1, 1], atol=1e-6)
        with pytest.raises(SingularPointError):
            eval_boundary(phi, 1, 1)
        assert len(singular_points(make_rif(BiPoly(coeffs=[[3, -1], [-1, 0]])))) == 0

    def test_level_set_slice(self):
        from src.bipoly import BiPoly
        from src.rif import level_set_slice, make_rif

        zw = make_rif(BiPoly(coeffs=[[1]]), (1, 1))
        assert np.allclose(level_set_slice(zw, 1, 1j), [-1j])

        fave = make_rif(BiPoly(coeffs=FAVE))
        assert np.allclose(level_set_slice(fave, 1j, 1), [1])
        assert np.allclose(level_set_slice(fave, 1j, -1), [(3j - 1) / (1j - 3)])

    def test_level_set_branches_zw(self):
        """A single rigid branch g(xi) = alpha conj(xi)."""
        from src.bipoly import BiPoly
        from src.rif import level_set_branches, make_rif

        phi = make_rif(BiPoly(coeffs=[[1]]), (1, 1))
        alpha = np.exp(1j * np.pi / 4)
        b = level_set_branches(phi, alpha, 256)
        assert b.n_branches == 1
        assert np.allclose(b.values[0], alpha * np.conj(b.nodes))
        assert b.continuity_residual <= 2 * np.pi / 256 + 1e-8

    def test_level_set_branches_fave(self):
        """The fave branch follows its rational parameterization and stays unimodular."""
        from src.bipoly import BiPoly
        from src.rif import level_set_branches, make_rif

        phi = make_rif(BiPoly(coeffs=FAVE))
        b = level_set_branches(phi, 1j, 256)
        assert b.n_branches == 1
        assert np.allclose(np.abs(b.values[0]), 1, atol=1e-8)
        assert np.allclose(b.values[0], fave_level(1j, b.nodes), atol=1e-8)

    def test_nodes_must_be_power_of_two(self):
        from src.bipoly import BiPoly
        from src.rif import level_set_branches, make_rif

        with pytest.raises(ValueError):
            level_set_branches(make_rif(BiPoly(coeffs=FAVE)), 1j, 100)

    def test_exceptional(self):
        from src.bipoly import BiPoly
        from src.errors import ExceptionalAlphaError
        from src.rif import is_exceptional, level_set_branches, make_rif

        fave = make_rif(BiPoly(coeffs=FAVE))
        assert is_exceptional(fave, -1)
        assert not is_exceptional(fave, 1)
        assert not is_exceptional(make_rif(BiPoly(coeffs=[[1]]), (1, 1)), 1j)
        with pytest.raises(ExceptionalAlphaError):
            level_set_branches(fave, -1, 64)

    def test_one_variable_is_always_exceptional(self):
        """phi depending on z2 alone contains a horizontal line for every alpha."""
        from src.bipoly import BiPoly
        from src.rif import is_exceptional, make_rif

        phi = make_rif(BiPoly(coeffs=[[2, -1]]))
        for t in (0.0, 1.0, 2.5):
            assert is_exceptional(phi, np.exp(1j * t))

    def test_clark_weight(self):
        """Weights 1 for zw and 2|xi-1|^2/|2xi-1+alpha|^2 for fave."""
        from src.bipoly import BiPoly
        from src.errors import SingularPointError
        from src.rif import clark_weight_at, make_rif

        zw = make_rif(BiPoly(coeffs=[[1]]), (1, 1))
        assert clark_weight_at(zw, 1j, -1j) == pytest.approx(1)

        fave = make_rif(BiPoly(coeffs=FAVE))
        alpha = 1j
        for t in (0.7, 2.0, -2.5):
            xi = np.exp(1j * t)
            expected = 2 * abs(xi - 1) ** 2 / abs(2 * xi - 1 + alpha) ** 2
            assert clark_weight_at(fave, xi, fave_level(alpha, xi)) == pytest.approx(expected, rel=1e-9)
        with pytest.raises(SingularPointError):
            clark_weight_at(fave, 1, 1)

    def test_atoral(self):
        from src.bipoly import BiPoly
        from src.rif import check_atoral, make_rif

        assert check_atoral(make_rif(BiPoly(coeffs=FAVE)), 1j)

    def test_depends_on(self):
        from src.bipoly import BiPoly
        from src.rif import depends_on, make_rif

        phi = make_rif(BiPoly(coeffs=[[2, -1]]))
        assert depends_on(phi, 2)
        assert not depends_on(phi, 1)


# ============================================================================
# One-variable Oracle Tests
# ============================================================================

class TestBlaschke1D:
    """Tests for finite Blaschke products and their Clark data."""

    def test_atoms(self):
        from src.blaschke1d import BlaschkeProduct, clark_measure_1d

        sigma = clark_measure_1d(BlaschkeProduct.build(m=1), 1j)
        assert np.allclose(sigma.atoms, [1j])
        assert np.allclose(sigma.weights, [1])

        sigma = clark_measure_1d(BlaschkeProduct.build(m=2), 1)
        assert np.allclose(sorted(sigma.atoms.real), [-1, 1])
        assert np.allclose(sigma.weights, [0.5, 0.5])

    def test_mass_identity(self):
        """Total weight (1-|phi(0)|^2)/|alpha-phi(0)|^2."""
        from src.blaschke1d import BlaschkeProduct, clark_measure_1d, evaluate

        phi = BlaschkeProduct.build([0.5], m=1)
        sigma = clark_measure_1d(phi, 1)
        assert sigma.atoms.size == 2
        assert sigma.total_weight == pytest.approx(1)

        phi = BlaschkeProduct.build([0.3 + 0.2j, -0.5j], phase=0.4)
        alpha = np.exp(0.9j)
        phi0 = evaluate(phi, 0)
        sigma = clark_measure_1d(phi, alpha)
        assert np.allclose(np.abs(sigma.atoms), 1)
        assert sigma.total_weight == pytest.approx((1 - abs(phi0) ** 2) / abs(alpha - phi0) ** 2)

    def test_model_basis_orthonormal(self):
        from src.blaschke1d import BlaschkeProduct, model_basis_1d

        basis = model_basis_1d(BlaschkeProduct.build([0.5, -0.3j, 0.2], m=1))
        q = basis.vectors
        assert q.shape[1] == 4
        assert np.allclose(q.conj().T @ q, np.eye(4), atol=1e-10)

    def test_unitary_spectrum_is_atoms(self):
        """U_alpha is unitary with eigenvalues at the Clark atoms."""
        from src.blaschke1d import (
            BlaschkeProduct,
            clark_measure_1d,
            clark_unitary_1d,
            point_hausdorff,
        )

        phi = BlaschkeProduct.build([0.5, 0.3 + 0.4j], m=1)
        alpha = np.exp(0.3j)
        u = clark_unitary_1d(phi, alpha)
        assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-10)
        atoms = clark_measure_1d(phi, alpha).atoms
        assert point_hausdorff(np.linalg.eigvals(u), atoms) < 1e-8

    def test_rank_one_perturbation(self):
        from src.blaschke1d import (
            BlaschkeProduct,
            clark_unitary_1d,
            compressed_shift_1d,
            model_basis_1d,
            perturbation_rank,
        )

        phi = BlaschkeProduct.build([0.4, -0.6], m=2)
        basis = model_basis_1d(phi)
        u = clark_unitary_1d(phi, 1j, basis)
        assert perturbation_rank(u, compressed_shift_1d(phi, basis)) == 1

    def test_phi0_required(self):
        from src.blaschke1d import BlaschkeProduct, clark_unitary_1d
        from src.errors import Phi0Error

        with pytest.raises(Phi0Error):
            clark_unitary_1d(BlaschkeProduct.build([0.5]), 1)

    def test_general_unitary(self):
        """With phi(0) != 0 the spectral route still gives a unitary with the atoms as spectrum."""
        from src.blaschke1d import (
            BlaschkeProduct,
            clark_measure_1d,
            clark_unitary_1d_general,
            point_hausdorff,
        )

        phi = BlaschkeProduct.build([0.5, -0.25 + 0.25j])
        u = clark_unitary_1d_general(phi, -1j)
        assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-10)
        assert point_hausdorff(np.linalg.eigvals(u), clark_measure_1d(phi, -1j).atoms) < 1e-8

    def test_general_matches_rank_one_form(self):
        from src.blaschke1d import BlaschkeProduct, clark_unitary_1d, clark_unitary_1d_general, model_basis_1d

        phi = BlaschkeProduct.build([0.5], m=1)
        basis = model_basis_1d(phi)
        assert np.allclose(clark_unitary_1d(phi, 1, basis), clark_unitary_1d_general(phi, 1, basis), atol=1e-10)

    def test_random_products(self):
        """Eigenvalues of U_alpha match the atoms for random products with phi(0) = 0."""
        from src.blaschke1d import (
            BlaschkeProduct,
            clark_measure_1d,
            clark_unitary_1d,
            point_hausdorff,
        )

        rng = np.random.default_rng(42)
        for _ in range(20):
            k = int(rng.integers(0, 6))
            zeros = rng.uniform(0.05, 0.8, k) * np.exp(2j * np.pi * rng.uniform(size=k))
            phi = BlaschkeProduct.build(zeros, m=1, phase=float(rng.uniform(0, 2 * np.pi)))
            alpha = np.exp(2j * np.pi * rng.uniform())
            u = clark_unitary_1d(phi, alpha)
            atoms = clark_measure_1d(phi, alpha).atoms
            assert point_hausdorff(np.linalg.eigvals(u), atoms) < 1e-8

    def test_zero_outside_disk_rejected(self):
        from pydantic import ValidationError
        from src.blaschke1d import BlaschkeProduct

        with pytest.raises(ValidationError):
            BlaschkeProduct.build([1.2])


# ============================================================================
# Configuration Tests
# ============================================================================

class TestConfig:
    """Tests for run configuration and hashing."""

    def test_profile_config(self):
        from src.config import build_config

        cfg = build_config({"rif": "zw"})
        assert cfg.profile == "zw"
        assert len(cfg.alpha) == 4

    def test_flags_override(self):
        from src.config import build_config

        cfg = build_config({"rif": "fave", "alpha": "1.5707963,0.5", "nodes": 128})
        assert cfg.alpha == [1.5707963, 0.5]
        assert cfg.nodes == 128

    def test_toml_layer(self, tmp_path):
        from src.config import build_config

        path = tmp_path / "run.toml"
        path.write_text('rif = "fave"\nalpha = [0.25]\nnodes = 256\n')
        cfg = build_config({"nodes": 512}, str(path))
        assert cfg.alpha == [0.25]
        assert cfg.nodes == 512

    def test_invalid_values(self):
        from src.config import build_config
        from src.errors import ConfigError

        with pytest.raises(ConfigError):
            build_config({"rif": "zw", "nodes": 100})
        with pytest.raises(ConfigError):
            build_config({"rif": "zw", "degree": 8, "grid": 16})
        with pytest.raises(ConfigError):
            build_config({"rif": '{"p": {"bidegree": [1, 1], "coeffs": [[1, 0]]}}'})
        with pytest.raises(ConfigError):
            build_config({"rif": "{not json"})

    def test_unstable_rif_is_config_error(self):
        from src.config import build_config
        from src.errors import ConfigError

        rif = '{"p": {"bidegree": [1, 0], "coeffs": [[1, 0], [-2, 0]]}}'
        with pytest.raises(ConfigError):
            build_config({"rif": rif})

    def test_hash_is_stable(self):
        from src.config import build_config, config_hash

        a = config_hash(build_config({"rif": "zw", "alpha": "0.5"}))
        b = config_hash(build_config({"rif": "zw", "alpha": "0.5"}))
        c = config_hash(build_config({"rif": "zw", "alpha": "0.6"}))
        assert a == b
        assert a != c
        assert len(a) == 64


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
