"""Jump kernels comparable to |x-y|^(-N-2s) and their polar extensions.

A kernel is evaluated through KernelSpec, which carries the order s, the
ellipticity constant kappa, and one of four variants:

  * mu(b):        mu_b(x,y) = |x-y|^(-N-2s) b((x-y)/|x-y|), translation invariant
  * perturbed:    mu_a(x,y) + lam(x,y) mu_1(x,y) for a bounded perturbation lam
  * diffeo:       pullback K(x,y) = K_base(Phi(x), Phi(y)) under a C^1 map
  * general:      arbitrary symmetric callable with a declared tail exponent

The polar extension lam~(x, r, theta) = r^(N+2s) K(x, x + r theta) encodes the
frozen coefficients of the operator; its r -> 0 limit exists analytically for
mu and diffeo variants.  For a diffeo of mu(1),

    lam~(x, r, theta) = |A(x,r,theta)|^(-N-2s),
    A(x,r,theta) = integral_0^1 DPhi(x + r tau theta) theta dtau,

evaluated with a fixed 32-node composite Gauss rule in tau.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DiagonalPoint, NoZeroLimit, NonconvergentPV
from .geometry import as_points

DIAGONAL_TOL = 1e-14

# fixed tau rule for the chord integral: 8 panels x 4-point Gauss = 32 nodes
_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)
_TAU_NODES = np.concatenate(
    [(k + 0.5 * (_GL4_X + 1.0)) / 8.0 for k in range(8)])
_TAU_WEIGHTS = np.concatenate([0.5 * _GL4_W / 8.0 for _ in range(8)])


@dataclass(frozen=True)
class AnisotropyDensity:
    """Even density a(theta) on the sphere with Lambda <= a <= 1/Lambda."""

    func: Callable
    ellipticity: float  # Lambda

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.asarray(self.func(theta), dtype=float)

    def check(self, n_sample: int = 256, dim: int = 2) -> None:
        thetas = unit_directions(n_sample, dim)
        va = self(thetas)
        vb = self(-thetas)
        if not np.allclose(va, vb, rtol=0.0, atol=1e-12):
            raise ValueError("anisotropy density is not even")
        lam = self.ellipticity
        if np.any(va < lam - 1e-12) or np.any(va > 1.0 / lam + 1e-12):
            raise ValueError("anisotropy density violates the ellipticity bounds")

    @staticmethod
    def constant(value: float = 1.0, ellipticity: Optional[float] = None
                 ) -> "AnisotropyDensity":
        lam = ellipticity if ellipticity is not None else min(value, 1.0 / value)
        return AnisotropyDensity(func=lambda th: np.full(np.shape(th)[:-1] or (), value),
                                 ellipticity=lam)


def unit_directions(n: int, dim: int) -> np.ndarray:
    """Deterministic spread of n unit vectors; midpoint angles in 2D."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    ang = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric jump kernel of order s with ellipticity constant kappa."""

    variant: str
    s: float
    dim: int
    kappa: float = 1.0
    density: Optional[Callable] = None          # mu: b(theta), vectorized
    base: Optional["KernelSpec"] = None         # diffeo
    map_forward: Optional[Callable] = None      # diffeo: Phi(points)
    map_jacobian: Optional[Callable] = None     # diffeo: DPhi(points)
    perturbation: Optional[Callable] = None     # perturbed: lam(x, y)
    anisotropy: Optional[AnisotropyDensity] = None  # perturbed: a
    func: Optional[Callable] = None             # general: K(x, y)
    tail_exponent: float = 0.0                  # general: K <= C |x-y|^(-N-2s-tail)

    # -- constructors --------------------------------------------------------

    @staticmethod
    def mu(s: float, dim: int, density=None, kappa: Optional[float] = None
           ) -> "KernelSpec":
        """mu_b kernel; density is a callable b(theta) or a constant."""
        if density is None:
            density = 1.0
        if np.isscalar(density):
            val = float(density)
            dens = lambda th: np.full(np.shape(th)[:-1] or (), val)
            k = kappa if kappa is not None else min(val, 1.0 / val)
        else:
            dens = density
            k = kappa if kappa is not None else 1.0
        return KernelSpec(variant="mu", s=s, dim=dim, kappa=k, density=dens)

    @staticmethod
    def perturbed(s: float, dim: int, anisotropy: AnisotropyDensity,
                  perturbation: Callable, kappa: float = 1.0) -> "KernelSpec":
        return KernelSpec(variant="perturbed", s=s, dim=dim, kappa=kappa,
                          anisotropy=anisotropy, perturbation=perturbation,
                          density=anisotropy.func)

    @staticmethod
    def diffeo(base: "KernelSpec", map_forward: Callable,
               map_jacobian: Callable) -> "KernelSpec":
        return KernelSpec(variant="diffeo", s=base.s, dim=base.dim,
                          kappa=base.kappa, base=base,
                          map_forward=map_forward, map_jacobian=map_jacobian)

    @staticmethod
    def general(s: float, dim: int, func: Callable, kappa: float = 1.0,
                tail_exponent: float = 0.0) -> "KernelSpec":
        return KernelSpec(variant="general", s=s, dim=dim, kappa=kappa,
                          func=func, tail_exponent=tail_exponent)

    def rescaled(self, rho: float, x0) -> "KernelSpec":
        """Zoomed kernel rho^(N+2s) K(rho x + x0, rho y + x0)."""
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        parent = self
        fac = rho ** (parent.dim + 2.0 * parent.s)

        def zoomed(x, y):
            return fac * parent.eval(rho * np.asarray(x) + x0,
                                     rho * np.asarray(y) + x0)

        return KernelSpec.general(s=parent.s, dim=parent.dim, func=zoomed,
                                  kappa=parent.kappa,
                                  tail_exponent=parent.tail_exponent)

    # -- evaluation ----------------------------------------------------------

    def eval(self, x, y) -> np.ndarray:
        """K(x, y); x and y broadcastable point arrays of shape (..., N)."""
        px = np.asarray(x, dtype=float)
        py = np.asarray(y, dtype=float)
        if px.ndim == 0:
            px = px.reshape(1)
        if py.ndim == 0:
            py = py.reshape(1)
        diff = px - py
        r = np.sqrt(np.sum(diff * diff, axis=-1))
        if np.any(r < DIAGONAL_TOL):
            raise DiagonalPoint("kernel evaluated on the diagonal")
        p = self.dim + 2.0 * self.s
        if self.variant == "mu":
            theta = diff / r[..., None]
            return self.density(theta) * r ** (-p)
        if self.variant == "perturbed":
            theta = diff / r[..., None]
            mu_a = self.anisotropy(theta) * r ** (-p)
            return mu_a + self.perturbation(px, py) * r ** (-p)
        if self.variant == "diffeo":
            return self.base.eval(self.map_forward(px), self.map_forward(py))
        if self.variant == "general":
            return np.asarray(self.func(px, py), dtype=float)
        raise ValueError(self.variant)


def eval_kernel(kernel: KernelSpec, x, y) -> float:
    v = kernel.eval(as_points(x, kernel.dim), as_points(y, kernel.dim))
    return float(np.asarray(v).reshape(-1)[0])


def _chord_average(kernel: KernelSpec, x: np.ndarray, r: float,
                   theta: np.ndarray) -> np.ndarray:
    """A(x, r, theta) = mean of DPhi along the segment, fixed 32-node rule."""
    pts = x[None, :] + (r * _TAU_NODES)[:, None] * theta[None, :]
    J = np.asarray(kernel.map_jacobian(pts), dtype=float)  # (32, N, N)
    return np.einsum("k,kij,j->i", _TAU_WEIGHTS, J, theta)


def polar_extension(kernel: KernelSpec, x, r: float, theta) -> float:
    """lam~(x, r, theta) = r^(N+2s) K(x, x + r theta); analytic limit at r = 0."""
    x = as_points(x, kernel.dim)[0]
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = kernel.dim + 2.0 * kernel.s
    if r < 0.0:
        raise ValueError("radius must be nonnegative")
    if r == 0.0:
        if kernel.variant == "mu":
            return float(kernel.density(theta))
        if kernel.variant == "diffeo" and kernel.base.variant == "mu":
            J = np.asarray(kernel.map_jacobian(x.reshape(1, -1)), dtype=float)
            v = J.reshape(kernel.dim, kernel.dim) @ theta
            nv = float(np.linalg.norm(v))
            return float(kernel.base.density(v / nv)) * nv ** (-p)
        raise NoZeroLimit(f"variant {kernel.variant!r} has no analytic r=0 limit")
    if kernel.variant == "diffeo" and kernel.base.variant == "mu":
        a = _chord_average(kernel, x, r, theta)
        na = float(np.linalg.norm(a))
        return float(kernel.base.density(a / na)) * na ** (-p)
    y = x + r * theta
    kv = np.asarray(kernel.eval(x.reshape(1, -1), y.reshape(1, -1)))
    return float(r ** p * kv.reshape(-1)[0])


def polar_even_part(kernel: KernelSpec, x, r: float, theta) -> float:
    lp = polar_extension(kernel, x, r, theta)
    lm = polar_extension(kernel, x, r, -np.asarray(theta, dtype=float))
    return 0.5 * (lp + lm)


def polar_odd_part(kernel: KernelSpec, x, r: float, theta) -> float:
    lp = polar_extension(kernel, x, r, theta)
    lm = polar_extension(kernel, x, r, -np.asarray(theta, dtype=float))
    return 0.5 * (lp - lm)


def dyadic_pv_sweep(annulus: Callable, tol: float, outward: bool,
                    r_start: float = 1.0, max_steps: int = 48,
                    what: str = "PV") -> np.ndarray:
    """Sum annulus(a, b) over dyadic annuli with Aitken tail acceleration.

    Sweeps outward over [r, 2r] or inward over [r/2, r].  Near-geometric tails
    (power-law odd parts produce them exactly) are resummed by componentwise
    Aitken extrapolation of the partial sums; the sweep stops when either the
    raw increment or the change between successive extrapolants drops below
    tol.  Raises NonconvergentPV when neither happens within max_steps.
    """
    sums = []
    prev_aitken = None
    total = None
    r = r_start
    for _ in range(max_steps):
        inc = np.atleast_1d(np.asarray(
            annulus(r, 2.0 * r) if outward else annulus(0.5 * r, r), dtype=float))
        total = inc.copy() if total is None else total + inc
        sums.append(total.copy())
        if float(np.linalg.norm(inc)) <= tol:
            return total
        if len(sums) >= 3:
            s0, s1, s2 = sums[-3], sums[-2], sums[-1]
            den = s2 - 2.0 * s1 + s0
            num = (s2 - s1) ** 2
            safe = np.abs(den) > 1e-300
            aitken = np.where(safe, s2 - np.divide(num, den, where=safe,
                                                   out=np.zeros_like(num)), s2)
            if prev_aitken is not None and \
                    float(np.linalg.norm(aitken - prev_aitken)) <= tol:
                return aitken
            prev_aitken = aitken
        r = 2.0 * r if outward else 0.5 * r
    raise NonconvergentPV(f"{what} annulus sums did not settle below tolerance")


def drift_field(kernel: KernelSpec, x, tol: float = 1e-8, n_theta: int = 64,
                nodes_per_octave: int = 48) -> np.ndarray:
    """Drift vector (2s-1)_+ PV int y {K(x,x+y) - K(x,x-y)} dy.

    The PV is realized as matched symmetric annuli in polar coordinates; each
    (r theta, -r theta) pair shares one kernel evaluation, so the even part of
    the kernel cancels exactly in floating point.  Dyadic annuli are summed
    from r ~ 1 outward and inward; geometric tails are extrapolated.
    """
    x = as_points(x, kernel.dim)[0]
    gate = max(2.0 * kernel.s - 1.0, 0.0)
    if gate == 0.0:
        return np.zeros(kernel.dim)

    if kernel.dim == 1:
        dirs = np.array([[1.0]])
        dir_weight = np.array([1.0])
    else:
        half = n_theta // 2
        ang = np.pi * (np.arange(half) + 0.5) / half
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        dir_weight = np.full(half, np.pi / half)

    def annulus(a: float, b: float) -> np.ndarray:
        """integral over {a < |y| < b} of 4 theta r^(-2s) lam_odd, half-sphere."""
        m = max(int(np.ceil(np.log2(b / a) * nodes_per_octave)), 4)
        ts, ws = np.polynomial.legendre.leggauss(m)
        # log substitution r = exp(u)
        ua, ub = np.log(a), np.log(b)
        us = 0.5 * (ub - ua) * ts + 0.5 * (ua + ub)
        wr = 0.5 * (ub - ua) * ws
        rs = np.exp(us)
        total = np.zeros(kernel.dim)
        for th, wt in zip(dirs, dir_weight):
            vals = np.array([polar_odd_part(kernel, x, r, th) for r in rs])
            radial = np.sum(wr * rs ** (1.0 - 2.0 * kernel.s) * vals)
            total += 4.0 * wt * th * radial
        return total

    total = dyadic_pv_sweep(annulus, tol, outward=True, what="drift outer")
    total = total + dyadic_pv_sweep(annulus, tol, outward=False, what="drift inner")
    return gate * total


def verify_kernel_class(kernel: KernelSpec, anisotropy, region_center,
                        region_radius: float, n_samples: int = 400,
                        seed: int = 0x5EED) -> dict:
    """Empirical ellipticity and perturbation size against a target density.

    Samples symmetric pairs (x, y) in the ball around region_center and
    reports kappa_fit (largest constant with kappa mu_1 <= K <= mu_1/kappa on
    the sample) and lam_sup = sup |K - mu_a| / mu_1.  Deterministic per seed.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 sample pairs")
    rng = np.random.default_rng(seed)
    c = np.atleast_1d(np.asarray(region_center, dtype=float))
    dim = kernel.dim
    p = dim + 2.0 * kernel.s

    def draw(n):
        pts = rng.normal(size=(n, dim))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        rad = region_radius * rng.uniform(size=(n, 1)) ** (1.0 / dim)
        return c + rad * pts

    xs = draw(n_samples)
    ys = draw(n_samples)
    keep = np.linalg.norm(xs - ys, axis=1) > 1e-9
    xs, ys = xs[keep], ys[keep]
    diff = xs - ys
    r = np.linalg.norm(diff, axis=1)
    mu1 = r ** (-p)
    theta = diff / r[:, None]
    if isinstance(anisotropy, AnisotropyDensity):
        a_vals = anisotropy(theta)
    else:
        a_vals = np.asarray(anisotropy(theta), dtype=float)
    kv = kernel.eval(xs, ys)
    ratio = kv / mu1
    kappa_fit = float(min(np.min(ratio), np.min(1.0 / ratio)))
    lam_sup = float(np.max(np.abs(kv - a_vals * mu1) / mu1))
    return {"kappa_fit": kappa_fit, "lam_sup": lam_sup, "n_pairs": int(xs.shape[0])}
