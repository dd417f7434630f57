"""Empirical verification of growth, boundary behavior, and rigidity.

Probes measure L2 masses over balls, project onto the boundary profile
dist^s or onto affine functions, fit exponents on dyadic scales, and compare
against predicted rates with a fixed slack.  Verdicts are PASS, FAIL, or
INCONCLUSIVE; a fit is only judged when its scale window spans at least 1.5
decades, and probes whose residual sits at the noise floor report "at cap"
rather than an invented exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .bump import radial_cutoff
from .errors import (DegenerateDenominator, EmptyField, RadiusEscapesDomain,
                     StripTooThin)
from .funcspace import (DiscreteField, Grid, fit_holder, fit_loglog,
                        hs_seminorm, kato_modulus, HolderFit)
from .geometry import Domain

DEFAULT_SEED = 0x5EED
FIT_SLACK = 0.1
MIN_DECADES = 1.5
NOISE_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# exact piecewise-linear ball integrals (1D workhorses)
# ---------------------------------------------------------------------------

def _interval_nodes(u: DiscreteField, a: float, b: float):
    """Clip [a, b] to the box and return sample points including cell cuts."""
    g = u.grid
    a = max(a, g.lo[0])
    b = min(b, g.hi[0])
    if b <= a:
        return None
    i0 = int(math.ceil((a - g.lo[0]) / g.h - 1e-12))
    i1 = int(math.floor((b - g.lo[0]) / g.h + 1e-12))
    inner = g.lo[0] + g.h * np.arange(i0, i1 + 1)
    xs = np.concatenate([[a], inner, [b]])
    xs = np.unique(xs)
    return xs


def l2_mass_1d(u: DiscreteField, z: float, r: float,
               shift: Optional[Callable] = None) -> float:
    """L2 norm of (u - shift) over B_r(z); exact for the PL interpolant
    against affine shifts (piecewise-quadratic integrand, Simpson per cell)."""
    xs = _interval_nodes(u, z - r, z + r)
    if xs is None:
        return 0.0
    mids = 0.5 * (xs[:-1] + xs[1:])
    pts = np.concatenate([xs, mids])
    vals = u(pts.reshape(-1, 1))
    if shift is not None:
        vals = vals - np.asarray(shift(pts.reshape(-1, 1)), dtype=float)
    ve = vals[: xs.size]
    vm = vals[xs.size:]
    widths = np.diff(xs)
    # Simpson on each cell is exact for the quadratic (u - affine)^2
    cell = widths / 6.0 * (ve[:-1] ** 2 + 4.0 * vm ** 2 + ve[1:] ** 2)
    return math.sqrt(max(float(np.sum(cell)), 0.0))


def weighted_integral_1d(u: DiscreteField, z: float, r: float,
                         weight: Callable, n_gauss: int = 8) -> float:
    """integral over B_r(z) of u(x) weight(x) dx with per-cell Gauss nodes."""
    xs = _interval_nodes(u, z - r, z + r)
    if xs is None:
        return 0.0
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    a = xs[:-1]
    widths = np.diff(xs)
    pts = a[:, None] + 0.5 * widths[:, None] * (gx[None, :] + 1.0)
    wts = 0.5 * widths[:, None] * gw[None, :]
    flat = pts.reshape(-1, 1)
    vals = u(flat) * np.asarray(weight(flat), dtype=float)
    return float(np.sum(vals.reshape(pts.shape) * wts))


def _ball_mass_2d(u: DiscreteField, z: np.ndarray, r: float,
                  subtract_mean: bool) -> float:
    g = u.grid
    nodes = g.nodes()
    w = u.node_weights().ravel()
    mask = np.linalg.norm(nodes - z, axis=1) <= r
    vals = u.values.ravel()[mask]
    ww = w[mask]
    if subtract_mean and ww.sum() > 0:
        vals = vals - np.sum(vals * ww) / np.sum(ww)
    return math.sqrt(max(float(np.sum(vals * vals * ww)), 0.0))


# ---------------------------------------------------------------------------
# growth probes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthProbe:
    kind: str
    centers: np.ndarray
    radii: np.ndarray
    sup_masses: np.ndarray
    fitted_alpha: float
    predicted_alpha: Optional[float]
    residual: float
    verdict: str
    note: str = ""

    def curve(self):
        return list(zip(self.radii.tolist(), self.sup_masses.tolist()))


def _window_decades(radii) -> float:
    return math.log10(max(radii) / min(radii))


def _growth_verdict(alpha: float, predicted: Optional[float], radii,
                    at_cap: bool) -> tuple:
    if _window_decades(radii) < MIN_DECADES:
        return "INCONCLUSIVE", "scale window below 1.5 decades"
    if at_cap:
        return ("PASS" if predicted is not None else "INCONCLUSIVE",
                "residual at noise floor; exponent >= cap")
    if predicted is None:
        return "INCONCLUSIVE", "no predicted exponent supplied"
    if alpha >= predicted - FIT_SLACK:
        return "PASS", ""
    return "FAIL", f"fitted {alpha:.4f} < predicted {predicted:.4f} - {FIT_SLACK}"


def interior_growth(u: DiscreteField, centers, radii,
                    predicted: Optional[float] = None,
                    domain: Optional[Domain] = None,
                    projection: str = "mean", s: float = 0.5) -> GrowthProbe:
    """Sup over centers of the L2 mean-oscillation mass, fit against r^(N/2+alpha).

    projection "mean" subtracts the ball average; "affine" subtracts the
    affine projection (useful above order one, i.e. 2s > 1).
    """
    g = u.grid
    centers = np.asarray(centers, dtype=float).reshape(-1, g.dim)
    radii = np.asarray(sorted(radii), dtype=float)
    if domain is not None:
        d = np.atleast_1d(domain.dist(centers))
        if np.any(d < radii.max() - 1e-12):
            raise RadiusEscapesDomain(
                "an interior probe ball reaches the boundary")
    sup = np.zeros(radii.size)
    for c in centers:
        for i, r in enumerate(radii):
            if g.dim == 1:
                if projection == "affine":
                    proj = project_affine(u, c, r, s)
                    m = l2_mass_1d(u, c[0], r, shift=proj.as_callable())
                else:
                    mean = weighted_integral_1d(u, c[0], r,
                                                lambda p: np.ones(p.shape[0]))
                    mean /= 2.0 * r
                    m = l2_mass_1d(u, c[0], r, shift=lambda p, mv=mean:
                                   np.full(p.shape[0], mv))
            else:
                m = _ball_mass_2d(u, c, r, subtract_mean=True)
            sup[i] = max(sup[i], m)
    umag = float(np.max(np.abs(u.values))) or 1.0
    at_cap = bool(np.max(sup) <= NOISE_FLOOR * umag)
    if at_cap:
        alpha, resid = float("inf"), 0.0
    else:
        slope, resid = fit_loglog(radii, sup)
        alpha = slope - 0.5 * g.dim
    verdict, note = _growth_verdict(alpha, predicted, radii, at_cap)
    return GrowthProbe(kind="interior", centers=centers, radii=radii,
                       sup_masses=sup, fitted_alpha=alpha,
                       predicted_alpha=predicted, residual=resid,
                       verdict=verdict, note=note)


def boundary_growth(u: DiscreteField, domain: Domain, points, radii,
                    predicted: Optional[float] = None) -> GrowthProbe:
    """Sup over boundary points of the plain L2 mass (projection = 0)."""
    g = u.grid
    points = np.asarray(points, dtype=float).reshape(-1, g.dim)
    radii = np.asarray(sorted(radii), dtype=float)
    sup = np.zeros(radii.size)
    for z in points:
        for i, r in enumerate(radii):
            if g.dim == 1:
                m = l2_mass_1d(u, z[0], r)
            else:
                m = _ball_mass_2d(u, z, r, subtract_mean=False)
            sup[i] = max(sup[i], m)
    umag = float(np.max(np.abs(u.values))) or 1.0
    at_cap = bool(np.max(sup) <= NOISE_FLOOR * umag)
    if at_cap:
        alpha, resid = float("inf"), 0.0
        verdict, note = "INCONCLUSIVE", "field vanishes on all probe balls"
    else:
        slope, resid = fit_loglog(radii, sup)
        alpha = slope - 0.5 * g.dim
        verdict, note = _growth_verdict(alpha, predicted, radii, False)
    return GrowthProbe(kind="boundary", centers=points, radii=radii,
                       sup_masses=sup, fitted_alpha=alpha,
                       predicted_alpha=predicted, residual=resid,
                       verdict=verdict, note=note)


# ---------------------------------------------------------------------------
# projections onto the boundary profile and onto affine functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryProjection:
    z: np.ndarray
    r: float
    coefficient: float          # Q_{u,z}(r)
    denominator: float
    orthogonality_residual: float

    def profile_value(self, domain: Domain, s: float, pts):
        d = np.atleast_1d(domain.dist(pts))
        return self.coefficient * d ** s * radial_cutoff(pts, 2.0)


def project_ds(u: DiscreteField, domain: Domain, z, r: float, s: float
               ) -> BoundaryProjection:
    """L2(B_r(z)) projection of u onto the span of the cut profile dist^s."""
    g = u.grid
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if g.dim != 1:
        raise NotImplementedError("profile projection implemented in 1D")

    def prof(pts):
        d = np.atleast_1d(domain.dist(pts))
        return d ** s * radial_cutoff(pts, 2.0)

    num = weighted_integral_1d(u, z[0], r, prof)
    den = _profile_mass(u.grid, domain, z[0], r, s)
    if den < 1e-14:
        raise DegenerateDenominator(
            f"profile mass {den:.3g} on B_{r}({z[0]}); ball misses the domain")
    q = num / den
    resid = (num - q * den) / max(abs(num), 1e-300)
    return BoundaryProjection(z=z, r=r, coefficient=q, denominator=den,
                              orthogonality_residual=abs(resid))


def _profile_mass(grid: Grid, domain: Domain, z: float, r: float, s: float
                  ) -> float:
    xs = np.linspace(max(z - r, grid.lo[0] - 2.0), z + r, 4097)
    d = np.atleast_1d(domain.dist(xs.reshape(-1, 1)))
    w = (d ** s * radial_cutoff(xs.reshape(-1, 1), 2.0)) ** 2
    return float(np.trapezoid(w, xs))


def q_curve(u: DiscreteField, domain: Domain, z, radii, s: float) -> dict:
    """Q_{u,z}(r) samples plus fitted value slope and dyadic-difference decay."""
    radii = np.asarray(sorted(radii), dtype=float)
    qs = np.array([project_ds(u, domain, z, r, s).coefficient for r in radii])
    slope, resid = fit_loglog(radii, np.abs(qs) + 1e-300)
    diffs = np.abs(np.diff(qs))
    cauchy_slope, _ = fit_loglog(radii[1:], diffs + 1e-300) if diffs.size >= 2 \
        else (float("nan"), 0.0)
    return {"radii": radii, "q_values": qs, "value_slope": slope,
            "value_residual": resid, "cauchy_slope": cauchy_slope}


@dataclass(frozen=True)
class AffineProjection:
    z: np.ndarray
    r: float
    constant: float             # t
    linear: np.ndarray          # T (zero when 2s <= 1)
    gate_open: bool

    def as_callable(self) -> Callable:
        def f(pts):
            pts = np.asarray(pts, dtype=float)
            out = np.full(pts.shape[0], self.constant)
            if self.gate_open:
                out = out + (pts - self.z) @ self.linear
            return out
        return f


def project_affine(u: DiscreteField, z, r: float, s: float) -> AffineProjection:
    """L2(B_r(z)) projection onto {t + T.x} (T present only for 2s > 1).

    The ball moments are symmetric, so the normal equations decouple: t is the
    ball mean and each T component a first-moment ratio.
    """
    g = u.grid
    z = np.atleast_1d(np.asarray(z, dtype=float))
    gate = 2.0 * s > 1.0
    if g.dim == 1:
        m0 = weighted_integral_1d(u, z[0], r, lambda p: np.ones(p.shape[0]))
        t = m0 / (2.0 * r)
        T = np.zeros(1)
        if gate:
            m1 = weighted_integral_1d(u, z[0], r,
                                      lambda p: p[:, 0] - z[0])
            T[0] = m1 / (2.0 * r ** 3 / 3.0)
        return AffineProjection(z=z, r=r, constant=t, linear=T, gate_open=gate)
    nodes = g.nodes()
    w = u.node_weights().ravel()
    mask = np.linalg.norm(nodes - z, axis=1) <= r
    vals = u.values.ravel()[mask]
    ww = w[mask]
    t = float(np.sum(vals * ww) / np.sum(ww))
    T = np.zeros(g.dim)
    if gate:
        for k in range(g.dim):
            xk = (nodes[mask, k] - z[k])
            T[k] = float(np.sum(vals * xk * ww) / np.sum(xk * xk * ww))
    return AffineProjection(z=z, r=r, constant=t, linear=T, gate_open=gate)


# ---------------------------------------------------------------------------
# boundary quotient regularity
# ---------------------------------------------------------------------------

def quotient_regularity(u: DiscreteField, domain: Domain, s: float,
                        strip_width: float, boundary_points=None,
                        collar_cells: int = 2,
                        fit_scales: Optional[Sequence[float]] = None) -> dict:
    """Boundary coefficient psi(z) and a Hoelder fit of u/dist^s on the strip.

    psi(z) extrapolates Q_z(r) from the two finest dyadic radii (first-order
    Richardson).  Cells with dist < collar_cells * h are excluded from the
    quotient fit (the boundary exclusion collar, default 2h); the quotient is
    quadrature-noise dominated there.  Widen the collar and start the fit
    scales above ~16h when the field comes from a discrete solve, so the
    interpolation error plateau does not masquerade as roughness.
    """
    g = u.grid
    h = g.h
    if strip_width < 8.0 * h:
        raise StripTooThin(f"strip width {strip_width} < 8h = {8 * h}")
    if g.dim != 1:
        raise NotImplementedError("quotient fits implemented in 1D")
    if boundary_points is None:
        if domain.variant == "interval":
            boundary_points = [np.array([domain.a]), np.array([domain.b])]
        else:
            raise ValueError("boundary points required for this domain")
    radii = [strip_width * 0.5 ** k for k in range(4)]
    radii = [r for r in radii if r >= 4.0 * h]
    psi = {}
    for z in boundary_points:
        q1 = project_ds(u, domain, z, radii[-1], s).coefficient
        q2 = project_ds(u, domain, z, radii[-2], s).coefficient
        psi[float(z[0])] = 2.0 * q1 - q2
    # quotient field on the strip, collar excluded
    collar = collar_cells * h
    nodes = g.nodes()
    d = np.atleast_1d(domain.dist(nodes))
    qvals = np.zeros(g.n_nodes())
    ok = d >= collar - 1e-12
    qvals[ok] = u.values.ravel()[ok] / np.where(ok, d, 1.0)[ok] ** s
    qfield = DiscreteField(g, qvals.reshape(g.shape), u.far_field)
    if fit_scales is None:
        fit_scales = [4 * h * 2 ** k for k in range(5)
                      if 4 * h * 2 ** k <= strip_width / 2.0]
        while len(fit_scales) < 4:
            fit_scales.append(fit_scales[-1] * 2.0)
    fits = []
    for z in boundary_points:
        zx = float(z[0])
        sign = 1.0 if domain.dist(np.array([zx + 4.0 * h])) > 0 else -1.0
        lo = min(zx + sign * collar, zx + sign * strip_width)
        hi = max(zx + sign * collar, zx + sign * strip_width)
        fits.append(fit_holder(qfield, ("box", [lo], [hi]), fit_scales))
    exponent = min(f.exponent for f in fits)
    rep = next((f for f in fits if f.exponent == exponent), fits[0])
    return {"psi": psi, "quotient": qfield, "holder": rep,
            "holder_all": fits, "collar": collar}


# ---------------------------------------------------------------------------
# Kato-class coercivity harness
# ---------------------------------------------------------------------------

def _random_smooth_fields(grid: Grid, n: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    xs = grid.nodes()[:, 0]
    span = grid.hi[0] - grid.lo[0]
    out = []
    for _ in range(n):
        k = rng.integers(2, 5)
        vals = np.zeros_like(xs)
        for _ in range(k):
            c = rng.uniform(grid.lo[0] + 0.2 * span, grid.hi[0] - 0.2 * span)
            width = rng.uniform(0.05, 0.2) * span
            amp = rng.uniform(-1.0, 1.0)
            vals += amp * np.exp(-((xs - c) / width) ** 2)
        out.append(DiscreteField(grid, vals))
    return out


def _hs_seminorm_global_sq(u: DiscreteField, s: float) -> float:
    """[u]^2 over the whole space for a zero-far-field 1D field."""
    g = u.grid
    box = hs_seminorm(u, ("box", g.lo, g.hi), s) ** 2
    nodes = g.nodes()[:, 0]
    w = u.node_weights().ravel()
    v = u.values.ravel()
    tail = ((nodes - g.lo[0] + g.h) ** (-2.0 * s)
            + (g.hi[0] - nodes + g.h) ** (-2.0 * s)) / (2.0 * s)
    return box + 2.0 * float(np.sum(v * v * tail * w))


def coercivity_check(V: Callable, s: float, deltas: Sequence[float],
                     n_fields: int = 20, dim: int = 1,
                     grid: Optional[Grid] = None,
                     singularities: Sequence[float] = (),
                     seed: int = DEFAULT_SEED) -> dict:
    """Empirical constants (c, c_delta) in the Kato-class form bound.

    For each delta, c is the smallest constant with
      int |V| u^2 <= eta_V(delta) (c [u]^2 + c_delta ||u||^2),
    measured over seeded random smooth fields with the proof-shaped split
    c_delta = c (2/delta)^(2s).  PASS needs finiteness and <= 50% movement
    under doubling the test set.
    """
    if n_fields < 20:
        raise ValueError("need at least 20 test fields")
    if grid is None:
        grid = Grid.make([-2.0], [2.0], 1.0 / 128)
    fields = _random_smooth_fields(grid, 2 * n_fields, seed)
    nodes = grid.nodes()
    w0 = np.ones(grid.shape).ravel() * grid.h

    def weighted_l2(u):
        # singular potentials need adaptive quadrature, node sums otherwise
        if singularities:
            from scipy import integrate as _int
            fn = lambda x: float(np.abs(np.asarray(
                V(np.array([[x]])))[0])) * float(u(np.array([x]))) ** 2
            val, _ = _int.quad(fn, grid.lo[0], grid.hi[0],
                               points=list(singularities), limit=200)
            return val
        vv = np.abs(np.asarray(V(nodes), dtype=float))
        return float(np.sum(vv * u.values.ravel() ** 2 * w0))

    report = {}
    for delta in deltas:
        eta = kato_modulus(V, delta, s, dim, singularities=singularities,
                           seed=seed)
        ratios = []
        for u in fields:
            uu = u.values.ravel()
            lhs = weighted_l2(u)
            semi = _hs_seminorm_global_sq(u, s)
            l2 = float(np.sum(uu * uu * w0))
            denom = eta * (semi + (2.0 / delta) ** (2.0 * s) * l2)
            ratios.append(lhs / denom if denom > 0 else 0.0)
        c_half = max(ratios[:n_fields])
        c_full = max(ratios)
        stable = (c_full <= 1.5 * c_half + 1e-300) if c_half > 0 else True
        report[float(delta)] = {
            "eta": eta,
            "c": c_full,
            "c_delta": c_full * (2.0 / delta) ** (2.0 * s),
            "stable": bool(stable),
            "verdict": "PASS" if (np.isfinite(c_full) and stable) else "FAIL",
        }
    return report


# ---------------------------------------------------------------------------
# Liouville distance
# ---------------------------------------------------------------------------

def liouville_distance(u: DiscreteField, target: str, s: float = 0.5,
                       region=None) -> float:
    """Relative L2 distance from u to the best element of the rigid family.

    target "affine": span{1, x}; target "halfspace": span{max(x_N, 0)^s}.
    """
    g = u.grid
    nodes = g.nodes()
    w = u.node_weights().ravel()
    vals = u.values.ravel()
    if region is not None:
        from .funcspace import _region_mask
        mask = _region_mask(g, region)
        nodes, w, vals = nodes[mask], w[mask], vals[mask]
    norm2 = float(np.sum(vals * vals * w))
    if norm2 <= 1e-300:
        raise EmptyField("field is identically zero on the comparison region")
    if target == "affine":
        basis = [np.ones(nodes.shape[0])] + [nodes[:, k]
                                             for k in range(g.dim)]
    elif target == "halfspace":
        basis = [np.maximum(nodes[:, -1], 0.0) ** s]
    else:
        raise ValueError(f"unknown rigid family {target!r}")
    B = np.stack(basis, axis=1)
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(B * sw[:, None], vals * sw, rcond=None)
    resid = vals - B @ coef
    return math.sqrt(float(np.sum(resid * resid * w)) / norm2)
