"""Moments, mass tails and containment measures computed from snapshots.

The centre of vorticity uses signed weights normalised by the blob
circulation; moment of inertia and mass tails use absolute weights. Within
one blob all weights share a sign, so the two conventions agree up to that
sign, but the asymmetry is kept deliberately.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, VortexError
from .kernels import (KernelMode, difference_matrix, lipschitz_constant_planar,
                      planar_kernel_regularized)

HORIZON_SENTINEL = math.inf

# maxima of s'(u) = 30 u^2 (1-u)^2 and |s''(u)| = |60 u (1-u)(1-2u)| on [0, 1]
SMOOTHSTEP_MAX_SLOPE = 15.0 / 8.0
SMOOTHSTEP_MAX_CURVATURE = 10.0 / math.sqrt(3.0)


def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def smoothstep_slope(u):
    u = np.clip(u, 0.0, 1.0)
    return 30.0 * u * u * (1.0 - u) ** 2


def smoothstep_curvature(u):
    u = np.clip(u, 0.0, 1.0)
    return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)


@dataclass(frozen=True)
class Mollifier:
    """Radial cutoff equal to 1 on ``|x| <= R`` and 0 on ``|x| >= R + h``."""

    R: float
    h: float
    profile: str = "quintic_smoothstep"

    def __post_init__(self):
        if not (self.h > 0 and self.R >= 2 * self.h):
            raise ConfigError(f"mollifier needs R >= 2h > 0, got R={self.R}, h={self.h}")
        if self.profile != "quintic_smoothstep":
            raise ConfigError(f"unknown mollifier profile {self.profile!r}")

    @property
    def C_W(self):
        return max(SMOOTHSTEP_MAX_SLOPE, SMOOTHSTEP_MAX_CURVATURE)

    def value(self, x):
        return mollifier_eval(self, x)[0]


def mollifier_eval(mol, x):
    """``W_{R,h}(x)`` and its gradient; ``x`` has shape ``(..., 2)``."""
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    u = (r - mol.R) / mol.h
    w = 1.0 - smoothstep(u)
    slope = -smoothstep_slope(u) / mol.h
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[..., None] > 0, x / np.where(r > 0, r, 1.0)[..., None], 0.0)
    return w, slope[..., None] * unit


# --------------------------------------------------------------------------
# per-blob moments

def _blob(cloud, blob):
    idx = cloud.members(blob)
    if idx.size == 0:
        raise VortexError(f"blob {blob} has no particles")
    return cloud.positions[idx], cloud.weights[idx]


def center_of_vorticity(cloud, blob):
    """``B = (1/a) sum_p w_p x_p``.

    Summed as offsets from the first member, which is exact for a single
    particle and avoids losing digits when the blob is far from the origin.
    """
    x, w = _blob(cloud, blob)
    a = cloud.intensities[blob]
    if a == 0:
        raise VortexError("zero circulation blob has no centre of vorticity")
    ref = x[0]
    d = x - ref
    return ref + np.array([math.fsum(w * d[:, 0]) / a, math.fsum(w * d[:, 1]) / a])


def _radii(cloud, blob):
    x, w = _blob(cloud, blob)
    b = center_of_vorticity(cloud, blob)
    d = x - b
    return np.hypot(d[:, 0], d[:, 1]), np.abs(w), d


def moment_of_inertia(cloud, blob):
    """``I = sum_p |w_p| |x_p - B|^2``."""
    _, aw, d = _radii(cloud, blob)
    return math.fsum(aw * (d[:, 0] ** 2 + d[:, 1] ** 2))


def support_radius(cloud, blob):
    r, _, _ = _radii(cloud, blob)
    return float(r.max())


def mass_tail(cloud, blob, R):
    """``m(R) = sum_{|x_p - B| > R} |w_p|``."""
    if not R > 0:
        raise ConfigError("mass_tail needs R > 0")
    r, aw, _ = _radii(cloud, blob)
    return math.fsum(aw[r > R])


def mollified_mass(cloud, blob, mol):
    """``mu(R, h) = sum_p (1 - W_{R,h}(x_p - B)) |w_p|``."""
    r, aw, _ = _radii(cloud, blob)
    return math.fsum(smoothstep((r - mol.R) / mol.h) * aw)


def mollified_mass_at(cloud, blob, R, h):
    """``mu(R, h)`` for any ``R >= 0, h > 0``, without the ``R >= 2h``
    restriction of ``Mollifier`` (the upper sandwich bound uses ``R - h``)."""
    if not (h > 0 and R >= 0):
        raise ConfigError("need h > 0 and R >= 0")
    r, aw, _ = _radii(cloud, blob)
    return math.fsum(smoothstep((r - R) / h) * aw)


# --------------------------------------------------------------------------
# comparison with the point-vortex trajectory

def _aligned_states(snapshots, pv):
    states = []
    for snap in snapshots:
        k = int(np.argmin(np.abs(pv.times - snap.t)))
        if abs(pv.times[k] - snap.t) > 1e-9 * max(1.0, abs(snap.t)):
            raise ConfigError(f"snapshot time {snap.t} has no point-vortex counterpart")
        states.append(pv.states[k])
    return states


def containment_time(snapshots, pv, beta, epsilon):
    """First snapshot time at which a particle of blob ``i`` is farther than
    ``|log eps|^-beta`` from ``z_i(t)``; ``HORIZON_SENTINEL`` if none is."""
    radius = abs(math.log(epsilon)) ** (-beta)
    for snap, z in zip(snapshots, _aligned_states(snapshots, pv)):
        c = snap.cloud
        d = c.positions - z[c.blob_of]
        if np.any(np.hypot(d[:, 0], d[:, 1]) > radius):
            return snap.t
    return HORIZON_SENTINEL


def pv_deviation(snapshots, pv):
    """``Delta(t) = sum_i |B_i - z_i|^2`` and the per-blob distances."""
    states = _aligned_states(snapshots, pv)
    times = np.array([s.t for s in snapshots])
    dist = np.empty((len(snapshots), pv.states.shape[1]))
    for k, (snap, z) in enumerate(zip(snapshots, states)):
        if snap.cloud.n_blobs != z.shape[0]:
            raise ConfigError("blob count differs from vortex count")
        for i in range(snap.cloud.n_blobs):
            dist[k, i] = np.linalg.norm(center_of_vorticity(snap.cloud, i) - z[i])
    return times, np.sum(dist ** 2, axis=1), dist


# --------------------------------------------------------------------------
# external field

@dataclass
class FieldSplitReport:
    F1: np.ndarray  # planar part at the sample points, (M, 2)
    F2: np.ndarray  # (G - K) part, (M, 2)
    sup_F1: float
    lipschitz_F1: float
    sup_F2: float


def external_field_probe(cloud, cfg, blob, points):
    """Split the field of the other blobs at ``points`` into the planar part
    ``F1 = sum w K`` and the correction ``F2 = sum w (G - K)``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    idx = np.flatnonzero(cloud.blob_of != blob)
    F1 = np.zeros_like(pts)
    F2 = np.zeros_like(pts)
    if idx.size:
        src = cloud.positions[idx]
        w = cloud.weights[idx]
        F1 = np.sum(planar_kernel_regularized(pts[:, None, :] - src[None], 0.0) * w[None, :, None], axis=1)
        if cfg.kernel.mode is not KernelMode.PLANAR:
            F2 = np.sum(difference_matrix(pts, src, cfg.kernel) * w[None, :, None], axis=1)
    sup1 = float(np.max(np.hypot(F1[:, 0], F1[:, 1]))) if len(pts) else 0.0
    sup2 = float(np.max(np.hypot(F2[:, 0], F2[:, 1]))) if len(pts) else 0.0
    lip = 0.0
    if len(pts) > 1:
        i, j = np.triu_indices(len(pts), k=1)
        dx = np.linalg.norm(pts[i] - pts[j], axis=1)
        dF = np.linalg.norm(F1[i] - F1[j], axis=1)
        ok = dx > 0
        if np.any(ok):
            lip = float(np.max(dF[ok] / dx[ok]))
    return FieldSplitReport(F1, F2, sup1, lip, sup2)


def separation_constant(pv_cfg, R_m):
    """``D = 2 L max_j |a_j|`` with ``L`` the Lipschitz bound of ``K`` beyond ``R_m / 2``."""
    return 2.0 * lipschitz_constant_planar(R_m / 2.0) * float(np.max(np.abs(pv_cfg.intensities)))


# --------------------------------------------------------------------------
# tabulation

@dataclass
class BlobDiagnostics:
    t: float
    blob: int
    B: np.ndarray
    I: float
    R_t: float
    m: dict
    mu: dict
    dist_to_pv: float = math.nan


def default_radii(epsilon, beta):
    """Radii tied to ``|log eps|``: 1/8, 1/4 and 1/2 of the containment
    radius ``|log eps|^-beta``."""
    base = abs(math.log(epsilon)) ** (-beta)
    return [base / 8.0, base / 4.0, base / 2.0]


def default_mollifiers(radii):
    return [(R, R / 4.0) for R in radii]


def blob_diagnostics(snapshot, blob, radii, mollifiers, z=None):
    c = snapshot.cloud
    B = center_of_vorticity(c, blob)
    rec = BlobDiagnostics(
        t=snapshot.t,
        blob=blob,
        B=B,
        I=moment_of_inertia(c, blob),
        R_t=support_radius(c, blob),
        m={R: mass_tail(c, blob, R) for R in radii},
        mu={(R, h): mollified_mass(c, blob, Mollifier(R, h)) for R, h in mollifiers},
    )
    if z is not None:
        rec.dist_to_pv = float(np.linalg.norm(B - z))
    return rec
