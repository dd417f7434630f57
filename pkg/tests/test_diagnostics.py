import numpy as np
import pytest

from nlreg.errors import (DegenerateDenominator, EmptyField,
                          RadiusEscapesDomain, StripTooThin)
from nlreg.diagnostics import (boundary_growth, coercivity_check,
                               interior_growth, liouville_distance,
                               project_affine, project_ds, q_curve,
                               quotient_regularity)
from nlreg.funcspace import DiscreteField, Grid
from nlreg.geometry import Domain

HALFSPACE = Domain.halfspace(1)
INTERVAL = Domain.interval(-1.0, 1.0)
GRID = Grid.make([-1.0], [1.0], 1.0 / 512)
ONES = lambda p: np.ones(np.asarray(p).shape[0])


def field_of(f, grid=GRID):
    return DiscreteField.from_callable(grid, f)


class TestGrowthProbes:
    def test_affine_with_affine_projection_hits_cap(self):
        u = field_of(lambda p: 0.3 + 1.1 * np.asarray(p)[:, 0])
        probe = interior_growth(u, [[0.0]], [4 / 512 * 2 ** k for k in range(6)],
                                projection="affine", s=0.75, predicted=1.0)
        assert probe.verdict == "PASS"
        assert probe.fitted_alpha == np.inf  # reported as at-cap

    def test_synthetic_homogeneous_exponent(self):
        # |x|^q probed at its own center has oscillation exponent q
        q = 0.6
        u = field_of(lambda p: np.abs(np.asarray(p)[:, 0]) ** q)
        probe = interior_growth(u, [[0.0]], [4 / 512 * 2 ** k for k in range(6)],
                                domain=INTERVAL, s=0.5, predicted=q)
        assert probe.fitted_alpha == pytest.approx(q, abs=0.05)

    def test_radius_escape(self):
        u = field_of(ONES)
        with pytest.raises(RadiusEscapesDomain):
            interior_growth(u, [[0.9]], [0.25], domain=INTERVAL)

    def test_boundary_profile_exponent(self):
        u = field_of(lambda p: np.atleast_1d(INTERVAL.dist(p)) ** 0.5)
        probe = boundary_growth(u, INTERVAL, [[-1.0], [1.0]],
                                [4 / 512 * 2 ** k for k in range(6)],
                                predicted=0.5)
        assert probe.verdict == "PASS"
        assert probe.fitted_alpha == pytest.approx(0.5, abs=0.03)

    def test_zero_field_is_degenerate(self):
        u = DiscreteField.zeros(GRID)
        probe = boundary_growth(u, INTERVAL, [[-1.0]],
                                [4 / 512 * 2 ** k for k in range(6)])
        assert probe.verdict == "INCONCLUSIVE"
        assert "vanishes" in probe.note

    def test_short_window_is_inconclusive(self):
        u = field_of(lambda p: np.abs(np.asarray(p)[:, 0]) ** 0.4)
        probe = interior_growth(u, [[0.0]], [0.01, 0.02, 0.04, 0.08],
                                domain=INTERVAL, s=0.5, predicted=0.4)
        assert probe.verdict == "INCONCLUSIVE"


class TestProfileProjection:
    def test_profile_itself_gives_unit_coefficient(self):
        u = field_of(lambda p: np.atleast_1d(HALFSPACE.dist(p)) ** 0.5)
        bp = project_ds(u, HALFSPACE, [0.0], 0.25, 0.5)
        assert bp.coefficient == pytest.approx(1.0, abs=1e-3)
        assert bp.orthogonality_residual <= 1e-8

    def test_zero_field(self):
        bp = project_ds(DiscreteField.zeros(GRID), HALFSPACE, [0.0], 0.25, 0.5)
        assert bp.coefficient == 0.0

    def test_linear_data_moment_ratio(self):
        # closed moment integrals give Q(r) = (4/5) sqrt(r) at s = 1/2
        u = field_of(lambda p: np.maximum(np.asarray(p)[:, 0], 0.0))
        bp = project_ds(u, HALFSPACE, [0.0], 0.25, 0.5)
        assert bp.coefficient == pytest.approx(0.4, abs=2e-4)

    def test_degenerate_ball(self):
        u = field_of(ONES)
        with pytest.raises(DegenerateDenominator):
            project_ds(u, Domain.interval(-1.0, 1.0), [-3.0], 0.25, 0.5)

    def test_q_curve_power_slope(self):
        a = 0.4
        u = field_of(lambda p: np.maximum(np.asarray(p)[:, 0], 0.0) ** (0.5 + a))
        out = q_curve(u, HALFSPACE, [0.0], [0.02, 0.04, 0.08, 0.16, 0.32], 0.5)
        assert out["value_slope"] == pytest.approx(a, abs=0.05)
        assert out["cauchy_slope"] == pytest.approx(a, abs=0.1)


class TestAffineProjection:
    GR = Grid.make([-1.0], [1.0], 1.0 / 256)

    def test_even_square(self):
        u = DiscreteField.from_callable(self.GR, lambda p: np.asarray(p)[:, 0] ** 2)
        pa = project_affine(u, [0.0], 1.0, 0.75)
        assert pa.constant == pytest.approx(1.0 / 3.0, abs=1e-4)
        assert pa.linear[0] == pytest.approx(0.0, abs=1e-12)

    def test_odd_cube(self):
        u = DiscreteField.from_callable(self.GR, lambda p: np.asarray(p)[:, 0] ** 3)
        pa = project_affine(u, [0.0], 1.0, 0.75)
        assert pa.constant == pytest.approx(0.0, abs=1e-12)
        assert pa.linear[0] == pytest.approx(0.6, abs=1e-4)

    def test_planted_recovery_is_exact(self):
        u = DiscreteField.from_callable(
            self.GR, lambda p: 0.7 + 1.3 * np.asarray(p)[:, 0])
        pa = project_affine(u, [0.1], 0.5, 0.75)
        assert pa.constant == pytest.approx(0.7 + 1.3 * 0.1, abs=1e-12)
        assert pa.linear[0] == pytest.approx(1.3, abs=1e-12)

    def test_gate_closed_below_half(self):
        u = DiscreteField.from_callable(
            self.GR, lambda p: 0.7 + 1.3 * np.asarray(p)[:, 0])
        pa = project_affine(u, [0.0], 0.5, 0.4)
        assert not pa.gate_open
        assert pa.linear[0] == 0.0

    def test_residual_orthogonality(self):
        u = DiscreteField.from_callable(self.GR, lambda p: np.sin(
            2.0 * np.asarray(p)[:, 0]))
        z, r = np.array([0.0]), 0.5
        pa = project_affine(u, z, r, 0.75)
        xs = np.linspace(-r, r, 20001)
        resid = u(xs.reshape(-1, 1)) - pa.as_callable()(xs.reshape(-1, 1) + z)
        m0 = np.trapezoid(resid, xs)
        m1 = np.trapezoid(resid * xs, xs)
        scale = np.trapezoid(np.abs(u(xs.reshape(-1, 1))), xs)
        assert abs(m0) <= 1e-8 * scale
        assert abs(m1) <= 1e-8 * scale


class TestQuotientRegularity:
    def test_profile_quotient_is_constant(self):
        u = field_of(lambda p: np.atleast_1d(INTERVAL.dist(p)) ** 0.5)
        out = quotient_regularity(u, INTERVAL, 0.5, strip_width=0.5)
        for v in out["psi"].values():
            assert v == pytest.approx(1.0, abs=5e-3)
        assert out["holder"].exponent >= 0.99 or out["holder"].capped

    def test_squared_profile_quotient(self):
        # u = d^(2s): the quotient is d^s; closed forms predict exactly what
        # the probe measures, including the collar bias of the oscillation
        # fit and the sqrt(r) residue of the rate-1 extrapolation of
        # Q(r) = (4/5) sqrt(r)
        from nlreg.funcspace import fit_loglog

        u = field_of(lambda p: np.atleast_1d(INTERVAL.dist(p)) ** 1.0)
        width = 0.5
        out = quotient_regularity(u, INTERVAL, 0.5, strip_width=width)
        radii = [width * 0.5 ** k for k in range(4)]
        psi_pred = 2 * 0.8 * np.sqrt(radii[-1]) - 0.8 * np.sqrt(radii[-2])
        for v in out["psi"].values():
            assert v == pytest.approx(psi_pred, abs=0.02)
        h = GRID.h
        collar = 2 * h
        scales = [4 * h * 2 ** k for k in range(5)]
        osc_pred = [np.sqrt(t + collar) - np.sqrt(collar) for t in scales]
        slope_pred, _ = fit_loglog(scales, osc_pred)
        assert out["holder"].exponent == pytest.approx(slope_pred, abs=0.05)

    def test_strip_too_thin(self):
        u = field_of(ONES)
        with pytest.raises(StripTooThin):
            quotient_regularity(u, INTERVAL, 0.5, strip_width=4.0 / 512)


class TestCoercivity:
    def test_zero_potential_trivial(self):
        rep = coercivity_check(lambda p: np.zeros(np.asarray(p).shape[0]),
                               0.75, [0.5, 0.25])
        for r in rep.values():
            assert r["verdict"] == "PASS"
            assert r["c"] == 0.0

    def test_constant_potential_trend(self):
        rep = coercivity_check(ONES, 0.75, [0.5, 0.25, 0.125])
        deltas = sorted(rep, reverse=True)
        assert all(rep[d]["verdict"] == "PASS" for d in deltas)
        # eta(r) = 2r above the dimension threshold
        for d in deltas:
            assert rep[d]["eta"] == pytest.approx(2 * d, rel=1e-6)
        # constants c_delta are nonincreasing in delta
        cds = [rep[d]["c_delta"] for d in deltas]
        assert all(b >= a - 1e-12 for a, b in zip(cds, cds[1:]))

    def test_singular_morrey_potential(self):
        rep = coercivity_check(
            lambda p: np.abs(np.asarray(p)[:, 0]) ** -0.5, 0.5, [0.5, 0.25],
            singularities=[0.0])
        for r in rep.values():
            assert r["verdict"] == "PASS"
            assert np.isfinite(r["c"]) and r["c"] > 0


class TestLiouvilleDistance:
    GR = Grid.make([-4.0], [4.0], 1.0 / 64)

    def test_affine_is_zero(self):
        u = DiscreteField.from_callable(
            self.GR, lambda p: 1.0 + 2.0 * np.asarray(p)[:, 0])
        assert liouville_distance(u, "affine") <= 1e-12

    def test_profile_multiple_is_zero(self):
        u = DiscreteField.from_callable(
            self.GR, lambda p: 3.0 * np.maximum(np.asarray(p)[:, 0], 0.0) ** 0.5)
        assert liouville_distance(u, "halfspace", s=0.5) <= 1e-12

    def test_non_member_has_positive_distance(self):
        u = DiscreteField.from_callable(
            self.GR, lambda p: np.asarray(p)[:, 0] ** 2)
        assert liouville_distance(u, "affine") > 0.1

    def test_empty_field(self):
        with pytest.raises(EmptyField):
            liouville_distance(DiscreteField.zeros(self.GR), "affine")
