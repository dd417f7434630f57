import numpy as np
import pytest

from nlreg.errors import BadExponent, DivergentTail, FitIllConditioned
from nlreg.funcspace import (Cutoff, DiscreteField, FarField, Grid,
                             ScalarClassTag, classify, eta_scaling_check,
                             fit_holder, fit_second_difference, hs_seminorm,
                             kato_modulus, l1s_norm, morrey_norm)

ONES = lambda p: np.ones(np.asarray(p).shape[0])
ABS_HALF = lambda p: np.abs(np.asarray(p)[:, 0]) ** -0.5


class TestGridField:
    def test_node_count(self):
        g = Grid.make([-1.0], [1.0], 0.25)
        assert g.n_nodes() == 9
        g2 = Grid.make([0.0, 0.0], [1.0, 2.0], 0.5)
        assert g2.shape == (3, 5)

    def test_interpolation_and_exterior(self):
        g = Grid.make([-1.0], [1.0], 0.5)
        u = DiscreteField.from_callable(g, lambda p: np.asarray(p)[:, 0])
        assert u(np.array([0.25])) == pytest.approx(0.25)
        assert u(np.array([5.0])) == 0.0

    def test_power_far_field_per_side(self):
        g = Grid.make([-4.0], [4.0], 0.5)
        u = DiscreteField.from_callable(
            g, lambda p: np.maximum(np.asarray(p)[:, 0], 0.0) ** 0.5,
            FarField("power", 0.5))
        assert u(np.array([16.0])) == pytest.approx(4.0)
        assert u(np.array([-16.0])) == pytest.approx(0.0)

    def test_shape_mismatch_rejected(self):
        g = Grid.make([-1.0], [1.0], 0.5)
        with pytest.raises(ValueError):
            DiscreteField(g, np.zeros(3))


class TestMorrey:
    def test_constant(self):
        assert morrey_norm(ONES, 0.5, s=0.5, dim=1) == pytest.approx(2.0)

    def test_power_singularity(self):
        # closed form: sup at the singular center gives 2/(1-beta) = 4
        v = morrey_norm(ABS_HALF, 0.5, s=0.5, dim=1,
                        centers=np.array([[0.0], [0.3], [-0.7]]),
                        singularities=[0.0])
        assert v == pytest.approx(4.0, rel=1e-6)

    def test_lp_embedding(self):
        # Hoelder gives morrey_norm(f, 1/p) <= 2^(1-1/p) ||f||_p for f
        # supported on the unit ball
        rng = np.random.default_rng(0x5EED)
        p = 2.0
        xs = np.linspace(-1, 1, 2001)
        for _ in range(5):
            coef = rng.uniform(-1, 1, size=4)

            def f(q, c=coef):
                x = np.asarray(q)[:, 0]
                return np.polyval(c, x) * (np.abs(x) <= 1.0)

            lp = (np.trapezoid(np.abs(np.polyval(coef, xs)) ** p, xs)) ** (1 / p)
            m = morrey_norm(f, 1.0 / p, s=0.5, dim=1, window=((-1.0,), (1.0,)))
            assert m <= 2.0 ** (1 - 1 / p) * lp * (1 + 1e-6)

    def test_homogeneity(self):
        f = lambda q: np.abs(np.asarray(q)[:, 0]) ** -0.3
        a = morrey_norm(f, 0.4, s=0.5, dim=1, singularities=[0.0])
        b = morrey_norm(lambda q: 3.0 * f(q), 0.4, s=0.5, dim=1,
                        singularities=[0.0])
        assert b == pytest.approx(3.0 * a, rel=1e-12)

    def test_bad_exponent(self):
        with pytest.raises(BadExponent):
            morrey_norm(ONES, 1.2, s=0.5)


class TestKato:
    def test_zero_potential(self):
        assert kato_modulus(lambda p: np.zeros(np.asarray(p).shape[0]),
                            0.5, s=0.5) == 0.0

    def test_constant_above_dimension(self):
        # 2s > N makes the weight trivial: eta(r) = 2r
        assert kato_modulus(ONES, 0.25, s=0.75) == pytest.approx(0.5, rel=1e-9)

    def test_power_potential_reference(self):
        # closed form at the singular center: 2 r^{0.3} / 0.3 (s = 0.4)
        for r in (0.125, 0.25, 0.5):
            v = kato_modulus(ABS_HALF, r, s=0.4, singularities=[0.0])
            assert v == pytest.approx(2.0 * r ** 0.3 / 0.3, rel=1e-7)

    def test_monotone_in_radius(self):
        vals = [kato_modulus(ABS_HALF, r, s=0.4, singularities=[0.0])
                for r in (0.125, 0.25, 0.5, 1.0)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


class TestEtaScaling:
    def test_constant_data(self):
        out = eta_scaling_check(ONES, 0.0, 0.5, np.array([0.0]),
                                [2.0 ** -k for k in range(8)])
        assert out["slope"] == pytest.approx(1.0, abs=0.05)

    def test_homogeneous_data(self):
        f = lambda p: np.abs(np.asarray(p)[:, 0]) ** -0.3
        out = eta_scaling_check(f, 0.3, 0.5, np.array([0.0]),
                                [2.0 ** -k for k in range(8)],
                                singularities=[0.0])
        assert out["slope"] == pytest.approx(0.7, abs=0.05)

    def test_off_center_is_one_sided(self):
        # away from the singularity the modulus can only decay faster
        f = lambda p: np.abs(np.asarray(p)[:, 0]) ** -0.3
        out = eta_scaling_check(f, 0.3, 0.5, np.array([4.0]),
                                [2.0 ** -k for k in range(8)],
                                singularities=[0.0])
        assert out["slope"] >= 0.7 - 0.05

    def test_too_few_radii(self):
        with pytest.raises(FitIllConditioned):
            eta_scaling_check(ONES, 0.0, 0.5, np.array([0.0]), [1.0, 0.5])


class TestL1s:
    def test_zero(self):
        g = Grid.make([-2.0], [2.0], 0.25)
        assert l1s_norm(DiscreteField.zeros(g), 0.5) == 0.0

    def test_arctangent_mass(self):
        g = Grid.make([-8.0], [8.0], 1.0 / 64)
        u = DiscreteField.from_callable(g, ONES, FarField("power", 0.0))
        assert l1s_norm(u, 0.5) == pytest.approx(np.pi, rel=1e-6)

    def test_halfline_root_reference(self):
        # reference 1.3213063961880175 from adaptive quadrature of
        # x^(1/2) / (1 + x^(5/2)) over the half line
        g = Grid.make([-32.0], [32.0], 1.0 / 64)
        u = DiscreteField.from_callable(
            g, lambda p: np.maximum(np.asarray(p)[:, 0], 0.0) ** 0.5,
            FarField("power", 0.5))
        assert l1s_norm(u, 0.75) == pytest.approx(1.3213063961880175, rel=1e-3)

    def test_divergent_tail_rejected(self):
        g = Grid.make([-2.0], [2.0], 0.25)
        u = DiscreteField.from_callable(g, ONES, FarField("power", 0.8))
        with pytest.raises(DivergentTail):
            l1s_norm(u, 0.25)


class TestHsSeminorm:
    def test_constant_is_zero(self):
        g = Grid.make([0.0], [1.0], 1.0 / 64)
        u = DiscreteField.from_callable(g, ONES)
        assert hs_seminorm(u, ("box", [0.0], [1.0]), 0.25) \
            == pytest.approx(0.0, abs=1e-12)

    def test_linear_reference(self):
        # exact value sqrt(8/15) for u = x on (0,1) with s = 1/4
        g = Grid.make([0.0], [1.0], 1.0 / 512)
        u = DiscreteField.from_callable(g, lambda p: np.asarray(p)[:, 0])
        v = hs_seminorm(u, ("box", [0.0], [1.0]), 0.25)
        assert v == pytest.approx(np.sqrt(8.0 / 15.0), rel=5e-4)

    def test_boundary_profile_stable_under_refinement(self):
        # dist^s on the unit interval stays in H^s near the boundary: the
        # discrete seminorm converges (successive-refinement ratio -> 1)
        def profile(p):
            x = np.asarray(p)[:, 0]
            return np.maximum(np.minimum(1.0 + x, 1.0 - x), 0.0) ** 0.5

        vals = []
        for h in (1.0 / 128, 1.0 / 256, 1.0 / 512):
            g = Grid.make([-1.0], [1.0], h)
            u = DiscreteField.from_callable(g, profile)
            vals.append(hs_seminorm(u, ("ball", [-1.0], 0.25), 0.5))
        assert vals[-1] > 0
        assert abs(vals[2] / vals[1] - 1.0) < 0.05

    def test_region_monotone(self):
        g = Grid.make([-1.0], [1.0], 1.0 / 128)
        u = DiscreteField.from_callable(g, lambda p: np.sin(np.asarray(p)[:, 0]))
        big = hs_seminorm(u, ("box", [-1.0], [1.0]), 0.5)
        small = hs_seminorm(u, ("box", [-0.5], [0.5]), 0.5)
        assert small <= big


class TestHolderFit:
    def test_square_root_cusp(self):
        g = Grid.make([-1.0], [1.0], 1.0 / 1024)
        u = DiscreteField.from_callable(
            g, lambda p: np.abs(np.asarray(p)[:, 0]) ** 0.5)
        fit = fit_holder(u, ("box", [-0.5], [0.5]),
                         [k / 1024 for k in (4, 8, 16, 32, 64)])
        assert fit.exponent == pytest.approx(0.5, abs=0.03)

    def test_affine_reports_lipschitz_or_better(self):
        g = Grid.make([-1.0], [1.0], 1.0 / 256)
        u = DiscreteField.from_callable(
            g, lambda p: 1.0 + 2.0 * np.asarray(p)[:, 0])
        fit = fit_holder(u, ("box", [-0.5], [0.5]),
                         [k / 256 for k in (4, 8, 16, 32)])
        assert fit.exponent >= 0.99
        assert fit.capped
        assert "C^{0,1}" in fit.label

    def test_too_few_scales(self):
        g = Grid.make([-1.0], [1.0], 1.0 / 64)
        u = DiscreteField.from_callable(g, ONES)
        with pytest.raises(FitIllConditioned):
            fit_holder(u, ("box", [-0.5], [0.5]), [0.1, 0.2])

    def test_second_difference_slope_of_smooth_field(self):
        g = Grid.make([-1.0], [1.0], 1.0 / 512)
        u = DiscreteField.from_callable(g, lambda p: np.cos(np.asarray(p)[:, 0]))
        slope, _ = fit_second_difference(u, ("box", [-0.5], [0.5]),
                                         [k / 512 for k in (4, 8, 16, 32)])
        assert slope == pytest.approx(2.0, abs=0.1)


class TestCutoffAndTags:
    def test_cutoff_plateau_and_support(self):
        phi = Cutoff(0.5)
        assert phi(np.array([0.3])) == 1.0
        assert phi(np.array([1.2])) == 0.0
        mid = phi(np.array([0.75]))
        assert 0.0 < mid < 1.0

    def test_tag_validation(self):
        with pytest.raises(BadExponent):
            ScalarClassTag(beta=1.1, s=0.5, morrey=1.0)
        with pytest.raises(ValueError):
            ScalarClassTag(beta=0.2, s=0.5, morrey=1.0,
                           eta_samples={0.25: 2.0, 0.5: 1.0})

    def test_classify_roundtrip(self):
        tag = classify(ABS_HALF, 0.5, 0.5, singularities=[0.0],
                       eta_radii=(0.25, 0.5))
        assert tag.morrey == pytest.approx(4.0, rel=1e-5)
        assert tag.eta_samples[0.25] <= tag.eta_samples[0.5]
