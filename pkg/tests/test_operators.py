import numpy as np
import pytest
from scipy import integrate, special

from nlreg.bump import radial_cutoff
from nlreg.errors import InsufficientRegularity, OriginPoint, SupportEscape
from nlreg.funcspace import Cutoff, DiscreteField, Grid, fit_loglog, hs_seminorm
from nlreg.geometry import Domain
from nlreg.kernels import KernelSpec, drift_field
from nlreg.operators import (PVConfig, action_on_ds, apply_point,
                             bessel_potential, bilinear_form, decay_envelope,
                             riesz_potential, spherical_coercivity)

HALFSPACE = Domain.halfspace(1)
ONES = lambda p: np.ones(np.asarray(p).shape[0])


def halfspace_profile(s):
    return lambda p: np.maximum(np.asarray(p)[..., -1], 0.0) ** s


def kernel_ok2(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    r = np.abs(x[..., 0] - y[..., 0])
    return (1.0 + 0.1 * np.minimum(1.0, np.abs(x[..., 0]) + np.abs(y[..., 0]))) \
        * r ** (-1.0 - 1.5)


class TestApplyPoint:
    def test_constants_killed_exactly(self):
        K = KernelSpec.mu(0.75, 1)
        assert apply_point(K, ONES, np.array([0.3])) == 0.0

    def test_constant_shift_invariance(self):
        K = KernelSpec.mu(0.5, 1)
        u = lambda p: np.exp(-np.asarray(p)[:, 0] ** 2)
        uc = lambda p: u(p) + 7.0
        a = apply_point(K, u, np.array([0.2]))
        b = apply_point(K, uc, np.array([0.2]))
        assert b == pytest.approx(a, abs=1e-12)

    def test_affine_killed_by_even_kernel(self):
        K = KernelSpec.mu(0.75, 1)
        u = lambda p: 2.0 * np.asarray(p)[:, 0]
        assert abs(apply_point(K, u, np.array([0.3]))) < 1e-14

    def test_halfspace_profile_harmonic(self):
        for s in (0.25, 0.5, 0.75):
            K = KernelSpec.mu(s, 1)
            v = apply_point(K, halfspace_profile(s), np.array([0.4]),
                            domain=HALFSPACE)
            assert abs(v) <= 1e-3

    def test_linearity(self):
        K = KernelSpec.mu(0.5, 1)
        u = lambda p: np.exp(-np.asarray(p)[:, 0] ** 2)
        v = lambda p: np.exp(-((np.asarray(p)[:, 0] - 0.3) / 0.7) ** 2)
        w = lambda p: 2.0 * u(p) - 0.5 * v(p)
        x = np.array([0.1])
        got = apply_point(K, w, x)
        want = 2.0 * apply_point(K, u, x) - 0.5 * apply_point(K, v, x)
        assert got == pytest.approx(want, rel=1e-8)

    def test_odd_part_matches_drift_on_affine(self):
        # for affine u the even part vanishes and the odd PV reduces to the
        # drift contraction: L u = -T . j_o / (2 (2s-1))
        K = KernelSpec.general(0.75, 1, kernel_ok2)
        T = 1.7
        u = lambda p: T * np.asarray(p)[:, 0]
        x = np.array([0.3])
        got = apply_point(K, u, x, cfg=PVConfig(pv_tol=1e-10))
        jo = drift_field(K, x, tol=1e-10)[0]
        want = -T * jo / (2.0 * (2 * 0.75 - 1.0))
        assert got == pytest.approx(want, rel=1e-4)

    def test_insufficient_regularity_raises(self):
        # a 0.3-Hoelder cusp at the evaluation point cannot carry order 1.5
        K = KernelSpec.mu(0.75, 1)
        u = lambda p: np.abs(np.asarray(p)[:, 0] - 0.3) ** 0.3
        with pytest.raises(InsufficientRegularity):
            apply_point(K, u, np.array([0.3]))

    def test_pvconfig_validation(self):
        with pytest.raises(ValueError):
            PVConfig(eps=1e-2, delta_sd=1e-3)


class TestBilinearForm:
    def setup_method(self):
        self.grid = Grid.make([-8.0], [8.0], 1.0 / 128)
        self.K = KernelSpec.mu(0.5, 1)

    def test_constant_field_zero(self):
        # globally constant u (power decay 0) pairs to zero with every psi
        from nlreg.funcspace import FarField
        u = DiscreteField.from_callable(self.grid, ONES, FarField("power", 0.0))
        psi = DiscreteField.from_callable(self.grid, lambda p: Cutoff(0.5)(p))
        assert bilinear_form(self.K, u, psi).value == pytest.approx(0.0, abs=1e-10)

    def test_ellipticity_lower_bound(self):
        psi = DiscreteField.from_callable(self.grid, lambda p: Cutoff(0.5)(p))
        E = bilinear_form(self.K, psi, psi).value
        semi = hs_seminorm(psi, ("box", [-8.0], [8.0]), 0.5) ** 2
        assert E >= 0.5 * semi  # kappa = 1; box part underestimates [psi]^2

    def test_weak_strong_consistency(self):
        # agreement with the pointwise route for a smooth field (tol 1e-4)
        gauss = lambda p: np.exp(-np.asarray(p)[:, 0] ** 2)
        u = DiscreteField.from_callable(self.grid, gauss)
        psi = DiscreteField.from_callable(self.grid, lambda p: Cutoff(0.5)(p))
        E = bilinear_form(self.K, u, psi).value
        lu = lambda x: apply_point(self.K, gauss, np.array([x]))
        oracle, _ = integrate.quad(
            lambda x: float(Cutoff(0.5)(np.array([x]))) * lu(x), -1, 1,
            limit=60)
        assert E == pytest.approx(oracle, rel=1e-4)

    def test_support_escape(self):
        psi = DiscreteField.from_callable(self.grid, ONES)
        with pytest.raises(SupportEscape):
            bilinear_form(self.K, psi, psi)

    def test_symmetry(self):
        u = DiscreteField.from_callable(
            self.grid, lambda p: np.exp(-np.asarray(p)[:, 0] ** 2))
        psi = DiscreteField.from_callable(self.grid, lambda p: Cutoff(0.5)(p))
        uc = DiscreteField.from_callable(
            self.grid, lambda p: np.exp(-np.asarray(p)[:, 0] ** 2)
            * (np.abs(np.asarray(p)[:, 0]) <= 6.0))
        a = bilinear_form(self.K, uc, psi).value
        b = bilinear_form(self.K, psi, uc).value
        assert a == pytest.approx(b, rel=1e-12)


class TestActionOnProfile:
    def test_halfspace_bare_profile_vanishes(self):
        for s in (0.25, 0.5, 0.75):
            v = action_on_ds(KernelSpec.mu(s, 1), HALFSPACE, np.array([0.3]))
            assert abs(v) <= 1e-3

    def test_cutoff_commutator_reference(self):
        # reference 1.49679504 from direct quadrature of the cutoff
        # difference term at x = 0.9, s = 0.5
        v = action_on_ds(KernelSpec.mu(0.5, 1), HALFSPACE, np.array([0.9]),
                         cutoff_radius=2.0)
        assert v == pytest.approx(1.49679504, abs=1e-6)

    def test_smooth_boundary_action_bounded(self):
        # gamma > s: the action on the bare profile stays bounded with a
        # converging limit at the boundary (exponent (gamma-s)_+ = 0 branch
        # of the max(d^(gamma-s), 1) envelope)
        dom = Domain.interval(-1.0, 1.0)
        K = KernelSpec.mu(0.5, 1)
        vals = [abs(action_on_ds(K, dom, np.array([-1.0 + d])))
                for d in (0.1, 0.05, 0.025)]
        assert max(vals) / min(vals) < 1.1
        assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])

    @pytest.mark.slow
    def test_rough_boundary_blowup_rate(self):
        # gamma < s: the weighted values |g| d^(s-gamma) stay bounded
        gam, s = 0.3, 0.75
        phi = lambda t: 0.5 * np.abs(np.asarray(t)) ** (1 + gam)
        dphi = lambda t: 0.5 * (1 + gam) * np.sign(np.asarray(t)) \
            * np.abs(np.asarray(t)) ** gam
        dom = Domain.graph(phi, gamma=gam, dphi=dphi)
        K = KernelSpec.mu(s, 2)
        cfg = PVConfig(n_theta=24, quad_epsrel=1e-5, quad_epsabs=1e-5)
        weighted = []
        for d in (0.1, 0.05):
            v = abs(action_on_ds(K, dom, np.array([0.0, d]), cfg=cfg))
            weighted.append(v * d ** (s - gam))
        assert weighted[1] <= weighted[0] * 1.1


class TestPotentials:
    def test_riesz_power(self):
        assert riesz_potential(0.25, 1, np.array([2.0])) \
            == pytest.approx(2.0 ** -0.5)

    def test_riesz_origin(self):
        with pytest.raises(OriginPoint):
            riesz_potential(0.25, 1, np.array([0.0]))

    def test_bessel_matches_macdonald_oracle(self):
        # independent closed form through the Macdonald function
        for s, dim in ((0.3, 1), (0.5, 1), (0.75, 2)):
            beta = s - 0.5 * dim
            for q in (1e-3, 0.1, 1.0, 5.0, 10.0):
                exact = ((4 * np.pi) ** (-0.5 * dim) / special.gamma(s)
                         * (0.5 * q) ** beta * 2.0 * special.kv(beta, q))
                x = np.zeros(dim)
                x[0] = q
                assert bessel_potential(s, x, dim=dim) \
                    == pytest.approx(exact, rel=1e-6)

    def test_bessel_riesz_shape_near_origin(self):
        s, dim = 0.3, 1
        qs = np.geomspace(1e-3, 0.5, 12)
        ratios = [bessel_potential(s, np.array([q]), dim)
                  / q ** (2 * s - dim) for q in qs]
        assert max(ratios) < np.inf and max(ratios) / min(ratios) < 20.0

    def test_bessel_exponential_tail(self):
        s, dim = 0.3, 1
        qs = np.linspace(0.5, 10.0, 12)
        vals = [bessel_potential(s, np.array([q]), dim)
                * q ** (dim + 1 - s) * np.exp(q / 2) for q in qs]
        assert max(vals) < np.inf
        assert max(vals) / min(vals) < 50.0

    def test_bessel_rescaling(self):
        s = 0.4
        a = bessel_potential(s, np.array([0.3]), 1, r_scale=2.0)
        b = bessel_potential(s, np.array([0.15]), 1, r_scale=1.0)
        assert a == pytest.approx(b, rel=1e-12)


class TestSphericalCoercivity:
    def test_elliptic_lower_bound(self):
        # int |eta.theta|^(2s) b >= Lambda int |e1.theta|^(2s) for all eta
        s, lam = 0.6, 0.5
        dens = lambda th: lam + (1.0 / lam - lam) * np.asarray(th)[..., 0] ** 2
        ref = spherical_coercivity(lambda th: np.full(np.shape(th)[:-1], 1.0),
                                   s, 2, np.array([1.0, 0.0]))
        rng = np.random.default_rng(6)
        for _ in range(10):
            a = rng.uniform(0, 2 * np.pi)
            eta = np.array([np.cos(a), np.sin(a)])
            assert spherical_coercivity(dens, s, 2, eta) >= lam * ref - 1e-12


class TestDecayEnvelope:
    def test_tight_band(self):
        psi = lambda p: radial_cutoff(np.asarray(p), 1.0)
        xs = [np.array([x]) for x in np.geomspace(2.0, 32.0, 7)]
        env = decay_envelope(KernelSpec.mu(0.5, 1), psi, xs)
        assert env.max() / env.min() <= 10.0
        # far field approaches the mass of the bump
        mass, _ = integrate.quad(
            lambda t: float(radial_cutoff(np.array([t]), 1.0)), -2, 2)
        assert env[-1] == pytest.approx(mass, rel=0.05)
