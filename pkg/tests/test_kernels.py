import numpy as np
import pytest

from nlreg.errors import DiagonalPoint, NoZeroLimit
from nlreg.geometry import FlatteningMap
from nlreg.kernels import (AnisotropyDensity, KernelSpec, drift_field,
                           eval_kernel, polar_even_part, polar_extension,
                           polar_odd_part, verify_kernel_class)

CONST1 = lambda th: np.ones(np.shape(th)[:-1] or ())


def parabola_shear(rho=0.5, cutoff=True):
    return FlatteningMap(rho=rho, phi=lambda t: 0.5 * np.asarray(t) ** 2,
                         dphi=lambda t: np.asarray(t), cutoff=cutoff)


def kernel_ok2(x, y):
    # 1D symmetric kernel with a bounded coefficient bump, order s = 0.75
    x = np.asarray(x)
    y = np.asarray(y)
    r = np.abs(x[..., 0] - y[..., 0])
    return (1.0 + 0.1 * np.minimum(1.0, np.abs(x[..., 0]) + np.abs(y[..., 0]))) \
        * r ** (-1.0 - 1.5)


class TestEval:
    def test_unit_separation(self):
        K = KernelSpec.mu(0.5, 1)
        assert eval_kernel(K, 0.0, 1.0) == pytest.approx(1.0)

    def test_half_separation(self):
        K = KernelSpec.mu(0.5, 1)
        assert eval_kernel(K, 0.0, 0.5) == pytest.approx(4.0)

    def test_diffeo_identity_equals_mu(self):
        ident = lambda p: np.asarray(p, dtype=float)
        jac = lambda p: np.tile(np.eye(1), (np.asarray(p).shape[0], 1, 1))
        K = KernelSpec.diffeo(KernelSpec.mu(0.5, 1), ident, jac)
        K0 = KernelSpec.mu(0.5, 1)
        rng = np.random.default_rng(3)
        xs = rng.uniform(-2, 2, size=(50, 1))
        ys = rng.uniform(-2, 2, size=(50, 1))
        keep = np.abs(xs - ys)[:, 0] > 1e-6
        np.testing.assert_allclose(K.eval(xs[keep], ys[keep]),
                                   K0.eval(xs[keep], ys[keep]))

    def test_swap_symmetry_all_variants(self):
        rng = np.random.default_rng(4)
        fm = parabola_shear()
        variants = [
            KernelSpec.mu(0.6, 2, density=lambda th: 1.0 + 0.3 * th[..., 0] ** 2),
            KernelSpec.diffeo(KernelSpec.mu(0.5, 2), fm, fm.jacobian),
        ]
        xs = rng.uniform(-1, 1, size=(64, 2))
        ys = rng.uniform(-1, 1, size=(64, 2))
        keep = np.linalg.norm(xs - ys, axis=1) > 1e-6
        for K in variants:
            np.testing.assert_allclose(K.eval(xs[keep], ys[keep]),
                                       K.eval(ys[keep], xs[keep]), rtol=1e-14)

    def test_diagonal_rejected(self):
        K = KernelSpec.mu(0.5, 1)
        with pytest.raises(DiagonalPoint):
            eval_kernel(K, 0.3, 0.3)

    def test_anisotropy_evenness_check(self):
        dens = AnisotropyDensity(lambda th: 1.0 + 0.4 * th[..., 0] ** 2, 0.5)
        dens.check()
        odd = AnisotropyDensity(lambda th: 1.0 + 0.1 * th[..., 0], 0.5)
        with pytest.raises(ValueError):
            odd.check()


class TestPolarExtension:
    def test_mu_is_density(self):
        dens = lambda th: 1.0 + 0.3 * np.asarray(th)[..., 0] ** 2
        K = KernelSpec.mu(0.6, 2, density=dens)
        th = np.array([0.6, 0.8])
        for r in (0.0, 0.1, 3.0):
            assert polar_extension(K, np.array([0.2, -0.4]), r, th) \
                == pytest.approx(1.0 + 0.3 * 0.36)

    def test_scaling_map_zero_radius(self):
        two = lambda p: 2.0 * np.asarray(p, dtype=float)
        jac = lambda p: np.tile(2.0 * np.eye(1), (np.asarray(p).shape[0], 1, 1))
        K = KernelSpec.diffeo(KernelSpec.mu(0.5, 1), two, jac)
        assert polar_extension(K, np.array([0.3]), 0.0, np.array([1.0])) \
            == pytest.approx(0.25)

    def test_chord_integral_reference(self):
        # reference from composite-trapezoid refinement of the chord integral
        fm = parabola_shear(rho=0.5)
        K = KernelSpec.diffeo(KernelSpec.mu(0.5, 2), fm, fm.jacobian)
        v = polar_extension(K, np.array([0.1, 0.1]), 0.05, np.array([1.0, 0.0]))
        assert v == pytest.approx(0.977012063225765, abs=1e-10)

    def test_general_has_no_zero_limit(self):
        K = KernelSpec.general(0.75, 1, kernel_ok2)
        with pytest.raises(NoZeroLimit):
            polar_extension(K, np.array([0.3]), 0.0, np.array([1.0]))

    def test_even_plus_odd_reconstructs(self):
        K = KernelSpec.general(0.75, 1, kernel_ok2)
        x, r, th = np.array([0.3]), 0.2, np.array([1.0])
        total = polar_extension(K, x, r, th)
        assert polar_even_part(K, x, r, th) + polar_odd_part(K, x, r, th) \
            == pytest.approx(total, rel=1e-14)

    def test_scaling_covariance(self):
        K = KernelSpec.general(0.75, 1, kernel_ok2)
        Kz = K.rescaled(0.25, np.array([0.1]))
        x, r, th = np.array([0.4]), 0.3, np.array([1.0])
        lhs = polar_extension(Kz, x, r, th)
        rhs = polar_extension(K, 0.25 * x + 0.1, 0.25 * r, th)
        assert lhs == pytest.approx(rhs, rel=1e-13)

    def test_zero_limit_even_for_c1_maps(self):
        fm = parabola_shear(cutoff=False)
        K = KernelSpec.diffeo(KernelSpec.mu(0.5, 2), fm, fm.jacobian)
        rng = np.random.default_rng(5)
        for _ in range(16):
            x = rng.uniform(-0.5, 0.5, size=2)
            a = rng.uniform(0, np.pi)
            th = np.array([np.cos(a), np.sin(a)])
            assert polar_extension(K, x, 0.0, th) \
                == polar_extension(K, x, 0.0, -th)


class TestDriftField:
    def test_gate_below_half(self):
        K = KernelSpec.mu(0.4, 1)
        np.testing.assert_array_equal(drift_field(K, np.array([0.3])),
                                      np.zeros(1))

    def test_translation_invariant_even_kernel(self):
        K = KernelSpec.mu(0.75, 1)
        v = drift_field(K, np.array([0.3]))
        assert abs(v[0]) < 1e-14

    def test_variable_coefficient_reference(self):
        # reference from adaptive quadrature with kink breakpoints (tol 1e-6)
        K = KernelSpec.general(0.75, 1, kernel_ok2)
        v = drift_field(K, np.array([0.3]), tol=1e-10)
        assert v[0] == pytest.approx(0.2911602588176584, abs=1e-5)


class TestVerifyKernelClass:
    def test_exact_match_has_zero_deviation(self):
        K = KernelSpec.mu(0.5, 1)
        out = verify_kernel_class(K, CONST1, np.array([0.0]), 0.5)
        assert out["lam_sup"] == 0.0
        assert out["kappa_fit"] == pytest.approx(1.0)

    def test_constant_perturbation(self):
        K = KernelSpec.mu(0.5, 1, density=1.05)
        out = verify_kernel_class(K, CONST1, np.array([0.0]), 0.5)
        assert out["lam_sup"] == pytest.approx(0.05, abs=1e-12)

    def test_requires_enough_samples(self):
        K = KernelSpec.mu(0.5, 1)
        with pytest.raises(ValueError):
            verify_kernel_class(K, CONST1, np.array([0.0]), 0.5, n_samples=10)

    def test_deterministic_per_seed(self):
        fm = parabola_shear(cutoff=False)
        K = KernelSpec.diffeo(KernelSpec.mu(0.5, 2), fm, fm.jacobian)
        J0 = fm.jacobian(np.zeros(2))
        frozen = lambda th: np.linalg.norm(
            np.asarray(th) @ J0.T, axis=-1) ** (-3.0)
        a = verify_kernel_class(K, frozen, np.zeros(2), 0.1, seed=7)
        b = verify_kernel_class(K, frozen, np.zeros(2), 0.1, seed=7)
        assert a == b
