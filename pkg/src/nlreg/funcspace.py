"""Grids, discrete fields, cutoffs, and the norm/modulus zoo.

Conventions shared by every routine here:

  * point arrays have shape (..., N);
  * suprema (Morrey, Kato) are sampled over declared center sets plus 64
    seeded random centers, never claimed exact;
  * all exponent fits are ordinary least squares over log-log data on dyadic
    scales, reporting the max residual deviation as the uncertainty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .bump import radial_cutoff
from .errors import (BadExponent, DivergentTail, FitIllConditioned)

DEFAULT_SEED = 0x5EED


# ---------------------------------------------------------------------------
# grid and fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian lattice: box [lo, hi]^N with spacing h on every axis."""

    lo: np.ndarray
    hi: np.ndarray
    h: float

    def __post_init__(self):
        object.__setattr__(self, "lo", np.atleast_1d(np.asarray(self.lo, dtype=float)))
        object.__setattr__(self, "hi", np.atleast_1d(np.asarray(self.hi, dtype=float)))
        counts = (self.hi - self.lo) / self.h
        if np.any(np.abs(counts - np.round(counts)) > 1e-9 * np.maximum(1.0, counts)):
            raise ValueError("box side lengths must be integer multiples of h")

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def shape(self) -> tuple:
        return tuple(int(round((b - a) / self.h)) + 1
                     for a, b in zip(self.lo, self.hi))

    def axis(self, k: int) -> np.ndarray:
        n = self.shape[k]
        return self.lo[k] + self.h * np.arange(n)

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (prod(shape), N)."""
        axes = [self.axis(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @staticmethod
    def make(lo, hi, h: float) -> "Grid":
        return Grid(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float), float(h))


@dataclass(frozen=True)
class FarField:
    """Declared decay model outside the grid box.

    kind "zero": the field vanishes outside the box.
    kind "power": |u(x)| ~ A |x|^exponent with per-direction amplitudes
    calibrated from the box-edge samples at evaluation time.
    """

    kind: str = "zero"
    exponent: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "power"):
            raise ValueError(f"unknown far-field kind {self.kind!r}")


class DiscreteField:
    """Grid samples of a scalar field plus a far-field decay model.

    Immutable by convention after construction; evaluation interpolates
    multilinearly inside the box and follows the far-field model outside.
    """

    def __init__(self, grid: Grid, values: np.ndarray,
                 far_field: FarField = FarField()):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"values shape {values.shape} != grid shape {grid.shape}")
        if far_field.kind == "power" and far_field.exponent <= -grid.dim:
            raise ValueError("far-field exponent must exceed -N")
        self.grid = grid
        self.values = values
        self.far_field = far_field
        self._edge_amp = None

    @staticmethod
    def from_callable(grid: Grid, f: Callable, far_field: FarField = FarField()
                      ) -> "DiscreteField":
        vals = np.asarray(f(grid.nodes()), dtype=float).reshape(grid.shape)
        return DiscreteField(grid, vals, far_field)

    @staticmethod
    def zeros(grid: Grid, far_field: FarField = FarField()) -> "DiscreteField":
        return DiscreteField(grid, np.zeros(grid.shape), far_field)

    # -- evaluation ---------------------------------------------------------

    def _edge_amplitudes(self):
        """Per-side power-law amplitudes (A_minus, A_plus) in 1D, mean in 2D."""
        if self._edge_amp is not None:
            return self._edge_amp
        p = self.far_field.exponent
        if self.grid.dim == 1:
            lo, hi = self.grid.lo[0], self.grid.hi[0]
            a_minus = abs(self.values[0]) / max(abs(lo), 1e-300) ** p
            a_plus = abs(self.values[-1]) / max(abs(hi), 1e-300) ** p
            self._edge_amp = (float(a_minus), float(a_plus))
        else:
            edge = np.concatenate([self.values[0, :], self.values[-1, :],
                                   self.values[:, 0], self.values[:, -1]])
            rad = max(float(np.max(np.abs(self.grid.lo))),
                      float(np.max(np.abs(self.grid.hi))))
            amp = float(np.mean(np.abs(edge))) / max(rad, 1e-300) ** p
            self._edge_amp = (amp, amp)
        return self._edge_amp

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        scalar_in = pts.ndim <= 1
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            pts = pts.reshape(1, -1) if pts.size == self.grid.dim else pts.reshape(-1, 1)
            scalar_in = pts.shape[0] == 1
        inside = np.all((pts >= self.grid.lo - 1e-12) &
                        (pts <= self.grid.hi + 1e-12), axis=1)
        out = np.zeros(pts.shape[0])
        if np.any(inside):
            out[inside] = self._interp(pts[inside])
        if self.far_field.kind == "power" and np.any(~inside):
            p = self.far_field.exponent
            ext = pts[~inside]
            r = np.sqrt(np.sum(ext * ext, axis=1))
            if self.grid.dim == 1:
                am, ap = self._edge_amplitudes()
                amp = np.where(ext[:, 0] < 0, am, ap)
            else:
                amp = self._edge_amplitudes()[0]
            out[~inside] = amp * r ** p
        return float(out[0]) if scalar_in else out

    def _interp(self, pts):
        g = self.grid
        t = (pts - g.lo) / g.h
        t = np.clip(t, 0.0, np.asarray(g.shape, dtype=float) - 1.0)
        i0 = np.minimum(t.astype(int), np.asarray(g.shape) - 2)
        frac = t - i0
        if g.dim == 1:
            v0 = self.values[i0[:, 0]]
            v1 = self.values[i0[:, 0] + 1]
            return v0 * (1 - frac[:, 0]) + v1 * frac[:, 0]
        if g.dim == 2:
            fx, fy = frac[:, 0], frac[:, 1]
            v00 = self.values[i0[:, 0], i0[:, 1]]
            v10 = self.values[i0[:, 0] + 1, i0[:, 1]]
            v01 = self.values[i0[:, 0], i0[:, 1] + 1]
            v11 = self.values[i0[:, 0] + 1, i0[:, 1] + 1]
            return (v00 * (1 - fx) * (1 - fy) + v10 * fx * (1 - fy)
                    + v01 * (1 - fx) * fy + v11 * fx * fy)
        raise ValueError("fields support dimensions 1 and 2")

    def node_weights(self) -> np.ndarray:
        """Trapezoid weights per node (h^N interior, halved on faces)."""
        g = self.grid
        w = np.ones(g.shape)
        for ax in range(g.dim):
            sl = [slice(None)] * g.dim
            sl[ax] = 0
            w[tuple(sl)] *= 0.5
            sl[ax] = -1
            w[tuple(sl)] *= 0.5
        return w * g.h ** g.dim


@dataclass(frozen=True)
class Cutoff:
    """phi_R: 1 on B_R, 0 outside B_{2R}, quintic in between."""

    radius: float

    def __call__(self, x):
        return radial_cutoff(x, self.radius)


# ---------------------------------------------------------------------------
# center sampling for sampled suprema
# ---------------------------------------------------------------------------

def sup_centers(dim: int, window, n_scan: int = 65, n_random: int = 64,
                seed: int = DEFAULT_SEED, extra=None) -> np.ndarray:
    """Deterministic scan plus seeded random centers inside the window."""
    lo = np.atleast_1d(np.asarray(window[0], dtype=float))
    hi = np.atleast_1d(np.asarray(window[1], dtype=float))
    rng = np.random.default_rng(seed)
    if dim == 1:
        scan = np.linspace(lo[0], hi[0], n_scan).reshape(-1, 1)
    else:
        k = int(math.isqrt(n_scan))
        ax = [np.linspace(lo[i], hi[i], k) for i in range(dim)]
        mesh = np.meshgrid(*ax, indexing="ij")
        scan = np.stack([m.ravel() for m in mesh], axis=-1)
    rand = lo + (hi - lo) * rng.uniform(size=(n_random, dim))
    parts = [scan, rand]
    if extra is not None:
        parts.append(np.asarray(extra, dtype=float).reshape(-1, dim))
    return np.concatenate(parts, axis=0)


def _abs_eval(f, pts):
    if isinstance(f, DiscreteField):
        return np.abs(f(pts))
    return np.abs(np.asarray(f(pts), dtype=float))


def _ball_integral_abs(f, center: np.ndarray, r: float, dim: int,
                       weight: Optional[Callable] = None,
                       singularities: Sequence[float] = (),
                       quad_limit: int = 200) -> float:
    """integral over B_r(center) of |f(y)| w(|y-center|) dy."""
    if dim == 1:
        c = center[0]

        def g(t):
            w = weight(abs(t - c)) if weight is not None else 1.0
            return float(_abs_eval(f, np.array([[t]]))[0]) * w

        pts = sorted({c} | {s for s in singularities if c - r < s < c + r})
        val, _ = integrate.quad(g, c - r, c + r, points=pts, limit=quad_limit)
        return val
    # 2D: midpoint in angle, Gauss in radius (log-graded toward the center
    # so radial weights t^{2s-N} are resolved)
    n_theta, n_rad = 48, 64
    ang = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    ts, ws = np.polynomial.legendre.leggauss(n_rad)
    # substitution t = r * u^2 clusters nodes at the center
    u = 0.5 * (ts + 1.0)
    t = r * u * u
    dt = r * (ts + 1.0) * 0.5 * ws  # dt/du = 2 r u
    pts = center[None, None, :] + t[None, :, None] * dirs[:, None, :]
    vals = _abs_eval(f, pts.reshape(-1, 2)).reshape(n_theta, n_rad)
    w = weight(t) if weight is not None else np.ones_like(t)
    return float(np.sum(vals @ (w * t * dt)) * (2.0 * np.pi / n_theta))


# ---------------------------------------------------------------------------
# Morrey norm
# ---------------------------------------------------------------------------

def morrey_norm(f, beta: float, s: float, dim: int = 1,
                centers=None, window=((-1.0,), (1.0,)),
                radii: Optional[Sequence[float]] = None, r_min: float = 1.0 / 256,
                singularities: Sequence[float] = (),
                seed: int = DEFAULT_SEED) -> float:
    """Sampled sup over centers and dyadic radii of r^(beta-N) |f|(B_r(x)).

    Monotone nondecreasing under sample refinement; the true norm is an upper
    bound for the returned value.
    """
    if not 0.0 <= beta < 2.0 * s:
        raise BadExponent(f"beta = {beta} outside [0, 2s) with s = {s}")
    if centers is None:
        centers = sup_centers(dim, window, seed=seed)
    centers = np.asarray(centers, dtype=float).reshape(-1, dim)
    if radii is None:
        radii = []
        r = 1.0
        while r >= r_min * 0.999:
            radii.append(r)
            r *= 0.5
    best = 0.0
    for c in centers:
        for r in radii:
            mass = _ball_integral_abs(f, c, r, dim, singularities=singularities)
            best = max(best, r ** (beta - dim) * mass)
    return best


# ---------------------------------------------------------------------------
# Kato modulus
# ---------------------------------------------------------------------------

def omega_s(t, s: float, dim: int):
    """Riesz-kernel shape entering the Kato class: t^(2s-N), log at N = 2s, 1 if N < 2s."""
    t = np.asarray(t, dtype=float)
    if dim > 2.0 * s:
        return t ** (2.0 * s - dim)
    if dim == 2.0 * s:
        return np.maximum(-np.log(np.minimum(t, 1.0)), 1.0)
    return np.ones_like(t)


def kato_modulus(V, r: float, s: float, dim: int = 1,
                 centers=None, window=((-2.0,), (2.0,)),
                 singularities: Sequence[float] = (),
                 seed: int = DEFAULT_SEED) -> float:
    """eta_V(r): sampled sup over x of the weighted mass of |V| on B_r(x)."""
    if not 0.0 < r:
        raise ValueError("radius must be positive")
    if centers is None:
        centers = sup_centers(dim, window, seed=seed)
    centers = np.asarray(centers, dtype=float).reshape(-1, dim)
    w = lambda t: omega_s(t, s, dim)
    best = 0.0
    for c in centers:
        best = max(best, _ball_integral_abs(V, c, r, dim, weight=w,
                                            singularities=singularities))
    return best


def eta_scaling_check(f, beta: float, s: float, x0, radii: Sequence[float],
                      dim: int = 1, centers=None,
                      singularities: Sequence[float] = (),
                      seed: int = DEFAULT_SEED) -> dict:
    """Slope of log eta_{f_{r,x0}}(1) against log r for f_{r,x0} = r^{2s} f(r . + x0).

    For f in the Morrey class of order beta the slope is bounded below by
    2s - beta; for homogeneous f it equals 2s - beta exactly.
    """
    radii = np.asarray(list(radii), dtype=float)
    if radii.size < 4:
        raise FitIllConditioned("need at least 4 radii for the eta scaling fit")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    vals = []
    for r in radii:
        def scaled(pts, _r=r):
            pts = np.asarray(pts, dtype=float)
            return _r ** (2.0 * s) * np.asarray(
                f(_r * pts + x0), dtype=float)
        sing = [(sg - x0[0]) / r for sg in singularities] if dim == 1 else []
        vals.append(kato_modulus(scaled, 1.0, s, dim, centers=centers,
                                 singularities=sing, seed=seed))
    slope, resid = fit_loglog(radii, np.asarray(vals))
    return {"slope": slope, "residual": resid,
            "radii": radii, "eta_values": np.asarray(vals)}


# ---------------------------------------------------------------------------
# L^1_s norm
# ---------------------------------------------------------------------------

def l1s_norm(u: DiscreteField, s: float) -> float:
    """Weighted norm int |u(x)| / (1 + |x|^(N+2s)) dx with analytic tail."""
    g = u.grid
    p = g.dim + 2.0 * s
    if u.far_field.kind == "power" and u.far_field.exponent >= 2.0 * s:
        raise DivergentTail(
            f"far-field exponent {u.far_field.exponent} >= 2s = {2 * s}")
    nodes = g.nodes()
    r = np.sqrt(np.sum(nodes * nodes, axis=1))
    integrand = np.abs(u.values).ravel() / (1.0 + r ** p)
    box = float(np.sum(integrand * u.node_weights().ravel()))
    tail = 0.0
    if u.far_field.kind == "power":
        q = u.far_field.exponent
        if g.dim == 1:
            am, ap = u._edge_amplitudes()
            lo, hi = abs(g.lo[0]), abs(g.hi[0])
            tl, _ = integrate.quad(lambda t: t ** q / (1.0 + t ** p), lo, np.inf)
            tr, _ = integrate.quad(lambda t: t ** q / (1.0 + t ** p), hi, np.inf)
            tail = am * tl + ap * tr
        else:
            amp = u._edge_amplitudes()[0]
            rad = min(float(np.min(np.abs(g.lo))), float(np.min(np.abs(g.hi))))
            tl, _ = integrate.quad(
                lambda t: 2.0 * np.pi * t ** (q + 1) / (1.0 + t ** p), rad, np.inf)
            tail = amp * tl
    return box + tail


# ---------------------------------------------------------------------------
# H^s seminorm
# ---------------------------------------------------------------------------

def _region_mask(grid: Grid, region) -> np.ndarray:
    nodes = grid.nodes()
    kind = region[0]
    if kind == "box":
        lo = np.atleast_1d(np.asarray(region[1], dtype=float))
        hi = np.atleast_1d(np.asarray(region[2], dtype=float))
        return np.all((nodes >= lo - 1e-12) & (nodes <= hi + 1e-12), axis=1)
    if kind == "ball":
        c = np.atleast_1d(np.asarray(region[1], dtype=float))
        r = float(region[2])
        return np.linalg.norm(nodes - c, axis=1) <= r + 1e-12
    raise ValueError(f"unknown region kind {kind!r}")


def hs_seminorm(u: DiscreteField, region, s: float, block: int = 1024) -> float:
    """Gagliardo seminorm over region x region, diagonal cells handled analytically.

    Pairs closer than 2h contribute through the local difference quotient
    times the exact integral of |z|^(2-N-2s) over the excluded strip; this
    keeps the singular mass without evaluating the integrand at the diagonal.
    """
    g = u.grid
    h = g.h
    dim = g.dim
    mask = _region_mask(g, region)
    nodes = g.nodes()[mask]
    vals = u.values.ravel()[mask]
    w = u.node_weights().ravel()[mask]
    m = nodes.shape[0]
    p = dim + 2.0 * s
    cut = 2.0 * h
    total = 0.0
    for i0 in range(0, m, block):
        i1 = min(i0 + block, m)
        diff = nodes[i0:i1, None, :] - nodes[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        far = dist >= cut - 1e-12
        dv = vals[i0:i1, None] - vals[None, :]
        contrib = np.where(far, dv * dv * np.where(far, dist, 1.0) ** (-p), 0.0)
        total += float(np.sum(contrib * w[i0:i1, None] * w[None, :]))
    # diagonal strip: local slope squared times the analytic singular integral
    grad2 = _local_slope_sq(u, mask)
    if dim == 1:
        strip = 2.0 * cut ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    else:
        strip = 2.0 * np.pi * cut ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    total += float(np.sum(grad2 * w) * strip)
    return math.sqrt(max(total, 0.0))


def _local_slope_sq(u: DiscreteField, mask: np.ndarray) -> np.ndarray:
    g = u.grid
    grads = np.gradient(u.values, g.h) if g.dim > 1 else [np.gradient(u.values, g.h)]
    if g.dim == 1:
        g2 = grads[0] ** 2
    else:
        g2 = sum(gr ** 2 for gr in grads)
    # direction-averaged square of the projected slope: |grad u . z/|z||^2
    # averaged over the sphere gives |grad u|^2 / N
    return g2.ravel()[mask] / g.dim


# ---------------------------------------------------------------------------
# exponent fitting
# ---------------------------------------------------------------------------

def fit_loglog(scales, values) -> tuple:
    """OLS slope of log(values) vs log(scales); returns (slope, max residual)."""
    scales = np.asarray(scales, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0.0
    if np.sum(keep) < 2:
        return float("nan"), float("inf")
    lx = np.log(scales[keep])
    ly = np.log(values[keep])
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.max(np.abs(A @ coef - ly))) if lx.size > 2 else 0.0
    return float(coef[0]), resid


@dataclass(frozen=True)
class HolderFit:
    exponent: float
    seminorm: float
    residual: float
    capped: bool = False
    label: str = ""


def fit_holder(u: DiscreteField, region, scales: Sequence[float],
               noise_floor: float = 1e-12) -> HolderFit:
    """Hoelder exponent from log-log max oscillation over dyadic scales.

    If the zeroth-order fit saturates at slope >= 0.99 the fit is repeated on
    first differences and reported on the C^{1,alpha-1} convention.  When the
    oscillation is below the noise floor the probe reports "at cap" instead of
    inventing an exponent.
    """
    scales = sorted(set(float(t) for t in scales))
    if len(scales) < 4:
        raise FitIllConditioned("need at least 4 scales for a Hoelder fit")
    g = u.grid
    mask = _region_mask(g, region).reshape(g.shape)
    osc = [_max_oscillation(u.values, mask, g.h, t) for t in scales]
    osc = np.asarray(osc)
    umag = float(np.max(np.abs(u.values))) or 1.0
    if np.max(osc) <= noise_floor * umag:
        return HolderFit(exponent=float("inf"), seminorm=0.0, residual=0.0,
                         capped=True, label="oscillation at noise floor")
    alpha, resid = fit_loglog(scales, osc)
    if alpha < 0.99:
        semi = float(osc[0] / scales[0] ** alpha)
        return HolderFit(alpha, semi, resid)
    # saturated: fit first differences
    dvals = np.diff(u.values, axis=0) / g.h
    dmask = mask[1:] if g.dim == 1 else mask[1:, :]
    osc1 = np.asarray([_max_oscillation(dvals, dmask, g.h, t) for t in scales])
    if np.max(osc1) <= noise_floor * max(float(np.max(np.abs(dvals))), 1.0):
        return HolderFit(exponent=1.0, seminorm=float(np.max(np.abs(dvals))),
                         residual=0.0, capped=True, label=">=1, C^{0,1} or better")
    a1, r1 = fit_loglog(scales, osc1)
    a1 = min(max(a1, 0.0), 1.0)
    semi = float(osc1[0] / scales[0] ** a1)
    return HolderFit(1.0 + a1, semi, r1, label="C^{1,alpha-1} convention")


def fit_second_difference(u: DiscreteField, region, scales: Sequence[float]
                          ) -> tuple:
    """Slope of log max |u(x+t) - 2u(x) + u(x-t)| against log t (advisory).

    Slopes near 2 indicate C^2 bulk smoothness; the fit saturates at 2 by the
    stencil order.
    """
    scales = sorted(set(float(t) for t in scales))
    if len(scales) < 4:
        raise FitIllConditioned("need at least 4 scales")
    g = u.grid
    if g.dim != 1:
        raise NotImplementedError("second-difference fits implemented in 1D")
    mask = _region_mask(g, region).reshape(g.shape)
    vals = u.values
    osc = []
    for t in scales:
        k = max(int(round(t / g.h)), 1)
        if 2 * k >= vals.size:
            osc.append(0.0)
            continue
        d2 = vals[2 * k:] - 2.0 * vals[k:-k] + vals[:-2 * k]
        mm = mask[2 * k:] & mask[k:-k] & mask[:-2 * k]
        osc.append(float(np.max(np.abs(d2[mm]))) if np.any(mm) else 0.0)
    return fit_loglog(scales, np.asarray(osc))


def _max_oscillation(values: np.ndarray, mask: np.ndarray, h: float,
                     scale: float) -> float:
    """Max |u(x) - u(y)| over node pairs offset by ~scale along grid axes."""
    k = max(int(round(scale / h)), 1)
    best = 0.0
    nd = values.ndim
    for ax in range(nd):
        n = values.shape[ax]
        if k >= n:
            continue
        sl_a = [slice(None)] * nd
        sl_b = [slice(None)] * nd
        sl_a[ax] = slice(0, n - k)
        sl_b[ax] = slice(k, n)
        va = values[tuple(sl_a)]
        vb = values[tuple(sl_b)]
        mm = mask[tuple(sl_a)] & mask[tuple(sl_b)]
        if np.any(mm):
            best = max(best, float(np.max(np.abs(va - vb)[mm])))
    return best


# ---------------------------------------------------------------------------
# class tags
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarClassTag:
    """Membership record: Morrey exponent, measured norm, Kato modulus samples."""

    beta: float
    s: float
    morrey: float
    eta_samples: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.beta < 2.0 * self.s:
            raise BadExponent(f"beta = {self.beta} outside [0, 2s)")
        rs = sorted(self.eta_samples)
        vals = [self.eta_samples[r] for r in rs]
        if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
            raise ValueError("Kato modulus samples must be nondecreasing in r")


def classify(f, beta: float, s: float, dim: int = 1,
             eta_radii: Sequence[float] = (0.125, 0.25, 0.5, 1.0),
             singularities: Sequence[float] = (), seed: int = DEFAULT_SEED
             ) -> ScalarClassTag:
    norm = morrey_norm(f, beta, s, dim, singularities=singularities, seed=seed)
    etas = {float(r): kato_modulus(f, r, s, dim, singularities=singularities,
                                   seed=seed)
            for r in eta_radii}
    return ScalarClassTag(beta=beta, s=s, morrey=norm, eta_samples=etas)
