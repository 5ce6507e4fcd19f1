"""Velocity kernels in the meridian half plane.

Points are written in shifted coordinates ``x = (z, r - r0)``. The planar
kernel is the two dimensional Biot-Savart law,

    K(x) = (-x2, x1) / (2 pi |x|^2),

and ``G(x, y)`` is the exact axisymmetric kernel obtained by integrating the
three dimensional Biot-Savart law over the azimuth. Two evaluation routes for
``G`` are provided: adaptive quadrature of the azimuthal integrals, and a
closed form in complete elliptic integrals. They are algebraically independent
and are cross checked in the tests.

Every function accepts broadcastable arrays whose last axis has length 2.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import elliptic
from .errors import ConfigError, DomainError, SingularInputError
from .quadrature import integrate_panels

TWO_PI = 2.0 * math.pi


class KernelMode(str, enum.Enum):
    PLANAR = "planar"
    QUADRATURE = "quadrature"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class KernelConfig:
    r0: float = 1.0
    quad_rel_tol: float = 1e-10
    delta: float = 0.0
    mode: KernelMode = KernelMode.ELLIPTIC

    def __post_init__(self):
        object.__setattr__(self, "mode", KernelMode(self.mode))
        if self.mode is not KernelMode.PLANAR and not self.r0 > 0:
            raise ConfigError(f"r0 must be positive for {self.mode.value} kernels, got {self.r0}")
        if not 0 < self.quad_rel_tol <= 1e-3:
            raise ConfigError(f"quad_rel_tol must lie in (0, 1e-3], got {self.quad_rel_tol}")
        if not self.delta >= 0:
            raise ConfigError(f"delta must be non-negative, got {self.delta}")

    @property
    def axisymmetric(self):
        return self.mode is not KernelMode.PLANAR


def _split(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 2:
        raise ValueError(f"points need a trailing axis of length 2, got shape {p.shape}")
    return p[..., 0], p[..., 1]


# --------------------------------------------------------------------------
# planar kernel

def planar_kernel(x):
    x1, x2 = _split(x)
    r2 = x1 * x1 + x2 * x2
    if np.any(r2 == 0):
        raise SingularInputError("planar kernel evaluated at the origin")
    return np.stack([-x2, x1], axis=-1) / (TWO_PI * r2)[..., None]


def planar_kernel_regularized(x, delta):
    """Desingularised planar kernel ``(-x2, x1) / (2 pi (|x|^2 + delta^2))``.

    Total for ``delta > 0``. With ``delta == 0`` it is the plain kernel and the
    origin maps to zero (the self term of a particle sum).
    """
    if delta < 0:
        raise ConfigError("delta must be non-negative")
    x1, x2 = _split(x)
    den = x1 * x1 + x2 * x2 + delta * delta
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(den > 0, 1.0 / (TWO_PI * np.where(den > 0, den, 1.0)), 0.0)
    return np.stack([-x2 * inv, x1 * inv], axis=-1)


def lipschitz_constant_planar(r_min):
    """Operator-norm bound for the Jacobian of ``K`` on ``{|x| >= r_min}``.

    In polar form the Jacobian is ``[[sin 2p, -cos 2p], [-cos 2p, -sin 2p]]``
    divided by ``2 pi |x|^2``: a symmetric matrix with eigenvalues ``+-1``, so
    the norm factor is exactly one and the bound is ``1 / (2 pi r_min^2)``.
    """
    if not r_min > 0:
        raise DomainError(f"r_min must be positive, got {r_min}")
    return 1.0 / (TWO_PI * r_min * r_min)


# --------------------------------------------------------------------------
# axisymmetric kernel: shared geometry

def _geometry(x, y, r0):
    x1, x2 = _split(x)
    y1, y2 = _split(y)
    x1, x2, y1, y2 = np.broadcast_arrays(x1, x2, y1, y2)
    r = r0 + x2
    rp = r0 + y2
    if np.any(r <= 0) or np.any(rp <= 0):
        raise DomainError("axisymmetric kernel requires r0 + x2 > 0 and r0 + y2 > 0")
    dz = x1 - y1
    dr = y2 - x2
    a2 = dz * dz + dr * dr
    if np.any(a2 == 0):
        raise SingularInputError("axisymmetric kernel evaluated at coincident points")
    return r, rp, dz, dr, a2


def _elliptic_parts(r, rp, a2):
    rho2 = a2 + 4.0 * r * rp
    rho = np.sqrt(rho2)
    m = 4.0 * r * rp / rho2
    m1 = a2 / rho2
    if np.any(m1 <= 0):
        raise SingularInputError("elliptic modulus reached 1 (coincident points)")
    kk, ee = elliptic.ellipke(m, m1)
    return rho, m, m1, kk, ee


def _elliptic_g(r, rp, dz, dr, a2):
    rho, m, m1, kk, ee = _elliptic_parts(r, rp, a2)
    kme = elliptic.k_minus_e(m, kk, ee)
    g1 = (rp * dr * ee / a2 + 0.5 * kme) / (math.pi * rho)
    g2 = rp * dz * elliptic.cos_moment(m, m1, kk, ee) / (math.pi * rho ** 3)
    return g1, g2


def _elliptic_d(r, rp, dz, dr, a2):
    """``G - K`` rearranged so that no O(1) terms cancel as ``r0 -> inf``."""
    rho, m, m1, kk, ee = _elliptic_parts(r, rp, a2)
    kme = elliptic.k_minus_e(m, kk, ee)
    em1 = elliptic.e_minus_one(m1, ee)
    two_rp = 2.0 * rp

    # rp E / rho - 1/2
    c1 = (two_rp * em1 + (4.0 * rp * dr - a2) / (two_rp + rho)) / (2.0 * rho)
    d1 = dr * c1 / (math.pi * a2) + kme / (TWO_PI * rho)

    s = a2 + 2.0 * r * rp
    num = a2 * (a2 + 4.0 * r * rp - r * r) + 4.0 * r * r * rp * dr
    bracket = (em1 * s + num / (s + r * rho)) / (r * rho * a2) - kk / (r * rho)
    d2 = dz * bracket / TWO_PI

    small = m < elliptic.SERIES_CUTOFF
    if np.any(small):
        g1, g2 = _elliptic_g(r[small], rp[small], dz[small], dr[small], a2[small])
        d1 = np.where(small, 0.0, d1)
        d2 = np.where(small, 0.0, d2)
        d1[small] = g1 - dr[small] / (TWO_PI * a2[small])
        d2[small] = g2 - dz[small] / (TWO_PI * a2[small])
    return d1, d2


def axisym_kernel_elliptic(x, y, cfg):
    """``G(x, y)`` from complete elliptic integrals of parameter
    ``m = 4 r r' / (|x - y|^2 + 4 r r')``."""
    r, rp, dz, dr, a2 = _geometry(x, y, cfg.r0)
    g1, g2 = _elliptic_g(r, rp, dz, dr, a2)
    return np.stack([g1, g2], axis=-1)


# --------------------------------------------------------------------------
# axisymmetric kernel: quadrature route

_S_MAX = math.sin(math.pi / 4)
# Geometric breakpoints (in units of the peak width) for the near-axis panel.
_GRADING = 4.0 ** np.arange(-2, 40)


def _initial_panels(r, rp, a2):
    """Panels in a combined variable ``t``.

    ``t in [0, sin(pi/4)]`` is ``s = sin(theta/2)`` (covers theta <= pi/2),
    ``t in [1, 1 + pi/2]`` is ``theta - pi/2 + 1``. In ``s`` the denominator
    is ``|x-y|^2 + 4 r r' s^2`` so its peak has width ``|x-y| / (2 sqrt(r r'))``;
    panels are graded geometrically from that width.
    """
    n = r.size
    width = np.sqrt(a2 / (4.0 * r * rp))
    bps = width[:, None] * _GRADING[None, :]
    valid = bps < _S_MAX
    counts = valid.sum(axis=1)
    lo_s = np.concatenate([np.zeros((n, 1)), bps], axis=1)
    hi_s = np.concatenate([bps, np.full((n, 1), _S_MAX)], axis=1)
    keep = np.concatenate([np.ones((n, 1), bool), valid], axis=1)
    # the last kept breakpoint ends at _S_MAX
    hi_s[np.arange(n), counts] = _S_MAX
    owner_s = np.broadcast_to(np.arange(n)[:, None], keep.shape)
    lo = np.concatenate([lo_s[keep], np.ones(n)])
    hi = np.concatenate([hi_s[keep], np.full(n, 1.0 + 0.5 * math.pi)])
    owner = np.concatenate([owner_s[keep], np.arange(n)])
    return lo, hi, owner


def _make_integrand(r, rp, dz, dr, a2, subtract_planar):
    lam2 = r * rp
    norm_k = np.sqrt(a2 + lam2 * math.pi ** 2) / math.pi

    def f(t, owner):
        rr = r[owner][:, None]
        rrp = rp[owner][:, None]
        ddz = dz[owner][:, None]
        ddr = dr[owner][:, None]
        aa = a2[owner][:, None]
        near = t < 1.0
        s = np.where(near, t, 0.0)
        theta_far = 0.5 * math.pi + (t - 1.0)
        theta = np.where(near, 2.0 * np.arcsin(s), theta_far)
        jac = np.where(near, 2.0 / np.sqrt(1.0 - s * s), 1.0)
        omc = np.where(near, 2.0 * s * s, 1.0 - np.cos(theta_far))
        cos = np.where(near, 1.0 - 2.0 * s * s, np.cos(theta_far))
        den = (aa + 2.0 * rr * rrp * omc) ** 1.5
        w = jac / TWO_PI
        g1 = rrp * (ddr + rr * omc) / den * w
        g2 = rrp * ddz * cos / den * w
        if subtract_planar:
            kb = norm_k[owner][:, None] / (aa + lam2[owner][:, None] * theta * theta) ** 1.5 * w
            mag = np.hypot(g1, g2) + kb * np.sqrt(aa)
            g1 = g1 - kb * ddr
            g2 = g2 - kb * ddz
            return np.stack([g1, g2], axis=-1), mag
        return np.stack([g1, g2], axis=-1)

    return f


def _quadrature(x, y, cfg, subtract_planar):
    r, rp, dz, dr, a2 = _geometry(x, y, cfg.r0)
    shape = r.shape
    r, rp, dz, dr, a2 = (np.ravel(v) for v in (r, rp, dz, dr, a2))
    lo, hi, owner = _initial_panels(r, rp, a2)
    f = _make_integrand(r, rp, dz, dr, a2, subtract_planar)
    val, _ = integrate_panels(f, lo, hi, owner, r.size, cfg.quad_rel_tol, abs_tol=1e-300)
    return val.reshape(shape + (2,))


def axisym_kernel_quadrature(x, y, cfg):
    """``G(x, y)`` by adaptive Gauss-Kronrod quadrature of the azimuthal
    integrals, to relative tolerance ``cfg.quad_rel_tol`` on ``|G|``."""
    return _quadrature(x, y, cfg, subtract_planar=False)


def axisym_kernel(x, y, cfg):
    """Dispatch on ``cfg.mode``; the planar mode returns ``K(x - y)``."""
    if cfg.mode is KernelMode.PLANAR:
        return planar_kernel(np.asarray(x, float) - np.asarray(y, float))
    if cfg.mode is KernelMode.QUADRATURE:
        return axisym_kernel_quadrature(x, y, cfg)
    return axisym_kernel_elliptic(x, y, cfg)


def kernel_difference(x, y, cfg):
    """``D(x, y) = G(x, y) - K(x - y)`` without subtracting large numbers.

    Quadrature mode integrates the difference of ``G``'s integrand and a
    model integrand whose integral over ``[0, pi]`` is exactly ``K``, so the
    tolerance applies to ``D`` itself. Elliptic mode uses an algebraic
    rearrangement of the closed form.
    """
    if cfg.mode is KernelMode.PLANAR:
        raise ConfigError("kernel_difference needs an axisymmetric kernel mode")
    if cfg.mode is KernelMode.QUADRATURE:
        return _quadrature(x, y, cfg, subtract_planar=True)
    r, rp, dz, dr, a2 = _geometry(x, y, cfg.r0)
    shape = r.shape
    d1, d2 = _elliptic_d(*(np.atleast_1d(v) for v in (r, rp, dz, dr, a2)))
    return np.stack([d1.reshape(shape), d2.reshape(shape)], axis=-1)


# --------------------------------------------------------------------------
# pair matrices for particle sums

def velocity_matrix(targets, sources, cfg, exclude_coincident=True):
    """Kernel values for every (target, source) pair, shape ``(T, S, 2)``.

    Coincident pairs contribute zero: in planar mode through the regularised
    kernel, in the axisymmetric modes by exclusion.
    """
    t = np.asarray(targets, dtype=float)[:, None, :]
    s = np.asarray(sources, dtype=float)[None, :, :]
    if cfg.mode is KernelMode.PLANAR:
        return planar_kernel_regularized(t - s, cfg.delta)

    tx1, tx2 = t[..., 0], t[..., 1]
    sy1, sy2 = s[..., 0], s[..., 1]
    r = cfg.r0 + tx2
    rp = cfg.r0 + sy2
    if np.any(r <= 0) or np.any(rp <= 0):
        raise DomainError("axisymmetric kernel requires r0 + x2 > 0")
    dz = tx1 - sy1
    dr = sy2 - tx2
    a2 = dz * dz + dr * dr
    r, rp, dz, dr, a2 = np.broadcast_arrays(r, rp, dz, dr, a2)
    coincident = a2 == 0
    if not exclude_coincident and np.any(coincident):
        raise SingularInputError("coincident target and source")
    out = np.zeros(a2.shape + (2,))
    ok = ~coincident
    if cfg.mode is KernelMode.ELLIPTIC:
        g1, g2 = _elliptic_g(r[ok], rp[ok], dz[ok], dr[ok], a2[ok])
        out[ok, 0] = g1
        out[ok, 1] = g2
    else:
        pts_t = np.stack([np.broadcast_to(tx1, a2.shape)[ok], np.broadcast_to(tx2, a2.shape)[ok]], -1)
        pts_s = np.stack([np.broadcast_to(sy1, a2.shape)[ok], np.broadcast_to(sy2, a2.shape)[ok]], -1)
        out[ok] = axisym_kernel_quadrature(pts_t, pts_s, cfg)
    return out


def difference_matrix(targets, sources, cfg):
    """``G - K`` for all pairs; coincident pairs give zero."""
    t = np.asarray(targets, dtype=float)[:, None, :]
    s = np.asarray(sources, dtype=float)[None, :, :]
    tt, ss = np.broadcast_arrays(t, s)
    diff = tt - ss
    ok = np.any(diff != 0, axis=-1)
    out = np.zeros(tt.shape)
    if np.any(ok):
        out[ok] = kernel_difference(tt[ok], ss[ok], cfg)
    return out
