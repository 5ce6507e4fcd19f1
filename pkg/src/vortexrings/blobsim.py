"""Lagrangian vortex-blob discretisation of axisymmetric swirl-free Euler flow.

Each particle carries two conserved numbers:

* ``w_p`` -- its share of circulation, ``omega * dA`` at ``t = 0``. Because
  ``omega / r`` is transported and the flow preserves ``r dA``, ``w_p`` is
  constant in time, so every blob keeps its total circulation exactly.
* ``gamma_p = omega_p(0) / (r0 + x2_p(0))`` -- the transported ratio, from
  which the pointwise vorticity ``gamma_p * (r0 + x2_p(t))`` is rebuilt.

Velocities are direct sums ``u(x) = sum_q w_q G(x, x_q)`` over particles, with
the coincident pair dropped in the axisymmetric modes and regularised in the
planar mode. Sums are grouped per blob so the split into self-induced and
external fields is exact.
"""

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (ConfigError, DomainExitError, KernelEvaluationError,
                     NumericError, ResolutionError, VortexError)
from .kernels import KernelConfig, KernelMode, velocity_matrix
from .pointvortex import rk4_step, step_count

THREADS_ENV = "VORTEXRINGS_THREADS"
DEFAULT_PARTICLES_PER_DIAMETER = 24
_TARGET_BLOCK = 256
_SOURCE_BLOCK = 2048


class Interaction(str, enum.Enum):
    FULL = "full"
    SELF = "self"
    EXTERNAL = "external"


class Scheme(str, enum.Enum):
    # every particle follows the local velocity (RK4)
    PARTICLE = "particle"
    # each blob is translated rigidly by its circulation-weighted mean velocity
    RIGID = "rigid"


class Profile(str, enum.Enum):
    UNIFORM_DISK = "uniform_disk"


def ring_radius(epsilon, alpha):
    """``r0 = |log eps|^alpha``."""
    return abs(math.log(epsilon)) ** alpha


@dataclass(frozen=True)
class BlobInitSpec:
    center: tuple
    intensity: float
    epsilon: float
    profile: Profile = Profile.UNIFORM_DISK
    particles_per_diameter: int = DEFAULT_PARTICLES_PER_DIAMETER

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "profile", Profile(self.profile))
        if len(self.center) != 2:
            raise ConfigError("blob center needs two coordinates")
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.intensity == 0:
            raise ConfigError("blob intensity must be nonzero")
        if int(self.particles_per_diameter) < 1:
            raise ResolutionError("particles_per_diameter must be at least 1")

    @property
    def amplitude(self):
        """Uniform vorticity value ``a / (pi eps^2)``."""
        return self.intensity / (math.pi * self.epsilon ** 2)

    @property
    def vorticity_bound_constant(self):
        """``M`` in ``|omega| <= M eps^-2``; the uniform disk attains it."""
        return abs(self.intensity) / math.pi


@dataclass(frozen=True)
class SimConfig:
    epsilon: float
    alpha: float
    dt: float
    horizon: float
    kernel: KernelConfig = field(default_factory=KernelConfig)
    interaction: Interaction = Interaction.FULL
    scheme: Scheme = Scheme.PARTICLE
    threads: int = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.horizon < 0:
            raise ConfigError("horizon must be non-negative")
        object.__setattr__(self, "interaction", Interaction(self.interaction))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        # r0 is derived, never configured independently
        object.__setattr__(self, "kernel", replace(self.kernel, r0=ring_radius(self.epsilon, self.alpha)))
        if self.threads is None:
            object.__setattr__(self, "threads", int(os.environ.get(THREADS_ENV, "1")))

    @property
    def r0(self):
        return self.kernel.r0

    @property
    def n_steps(self):
        return step_count(self.dt, self.horizon)


@dataclass(frozen=True)
class ParticleCloud:
    positions: np.ndarray  # (P, 2) in (z, r - r0)
    weights: np.ndarray  # (P,)
    gammas: np.ndarray  # (P,)
    blob_of: np.ndarray  # (P,) int
    intensities: np.ndarray  # (N,) circulation a_i of each blob
    r0: float

    @property
    def n_particles(self):
        return self.positions.shape[0]

    @property
    def n_blobs(self):
        return self.intensities.size

    def members(self, blob):
        return np.flatnonzero(self.blob_of == blob)

    def with_positions(self, positions):
        return replace(self, positions=positions)


@dataclass(frozen=True)
class Snapshot:
    t: float
    step: int
    cloud: ParticleCloud


@dataclass
class RunOutput:
    snapshots: list
    halt_reason: str = None
    halt_time: float = None


# --------------------------------------------------------------------------
# initialisation

def lattice_spacing(epsilon, ppd):
    """``ppd`` lattice sites across the blob diameter ``2 eps``."""
    return 2.0 * epsilon / ppd


def _lattice_offsets(epsilon, ppd):
    h = lattice_spacing(epsilon, ppd)
    n = int(math.ceil(ppd / 2)) + 1
    c = (np.arange(-n, n) + 0.5) * h
    gx, gy = np.meshgrid(c, c, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
    inside = np.hypot(pts[:, 0], pts[:, 1]) < epsilon
    return pts[inside], h


def _exact_split(total, raw):
    """Rescale ``raw`` so that ``math.fsum`` of the result equals ``total``."""
    w = raw * (total / math.fsum(raw))
    if w.size == 1:
        return np.array([total])
    w[-1] = total - math.fsum(w[:-1])
    for _ in range(8):
        s = math.fsum(w)
        if s == total:
            break
        w[-1] = np.nextafter(w[-1], np.inf if s < total else -np.inf)
    if math.fsum(w) != total:
        raise NumericError("could not normalise blob weights exactly")
    return w


def init_blobs(specs, cfg):
    """Sample each uniform disk on a square lattice of spacing ``2 eps / ppd``.

    Sites are cell centres symmetric about the blob centre; a site is kept
    when it lies strictly inside the disk of radius ``eps``.
    """
    specs = list(specs)
    if not specs:
        raise ConfigError("need at least one blob")
    r0 = cfg.r0
    for i, s in enumerate(specs):
        if r0 + s.center[1] - s.epsilon <= 0:
            raise ConfigError(f"blob {i} support leaves the half plane r > 0")
        for j in range(i):
            o = specs[j]
            gap = math.hypot(s.center[0] - o.center[0], s.center[1] - o.center[1])
            if gap < s.epsilon + o.epsilon:
                raise ConfigError(f"blobs {j} and {i} overlap")

    pos, w, g, owner = [], [], [], []
    for i, s in enumerate(specs):
        offsets, h = _lattice_offsets(s.epsilon, int(s.particles_per_diameter))
        if offsets.shape[0] == 0:
            raise ResolutionError(f"blob {i} received no particles")
        x = np.asarray(s.center) + offsets
        weights = _exact_split(s.intensity, np.full(x.shape[0], s.amplitude * h * h))
        pos.append(x)
        w.append(weights)
        g.append(np.full(x.shape[0], s.amplitude) / (r0 + x[:, 1]))
        owner.append(np.full(x.shape[0], i))
    return ParticleCloud(
        positions=np.concatenate(pos),
        weights=np.concatenate(w),
        gammas=np.concatenate(g),
        blob_of=np.concatenate(owner),
        intensities=np.array([s.intensity for s in specs], dtype=float),
        r0=r0,
    )


def particle_intensity(cloud, p):
    """Pointwise vorticity carried by particle ``p``: ``gamma_p (r0 + x2_p)``."""
    return cloud.gammas[p] * (cloud.r0 + cloud.positions[p, 1])


# --------------------------------------------------------------------------
# velocity sums

def _neumaier(parts):
    """Compensated sum of a list of equally shaped arrays, in list order."""
    s = np.zeros_like(parts[0])
    c = np.zeros_like(parts[0])
    for p in parts:
        t = s + p
        big = np.abs(s) >= np.abs(p)
        c += np.where(big, (s - t) + p, (p - t) + s)
        s = t
    return s + c


def _blob_field(targets, sources, weights, kcfg):
    """``sum_q w_q G(x, x_q)`` over one blob's particles for every target."""
    parts = []
    for s0 in range(0, sources.shape[0], _SOURCE_BLOCK):
        src = sources[s0:s0 + _SOURCE_BLOCK]
        mat = velocity_matrix(targets, src, kcfg)
        parts.append(np.sum(mat * weights[s0:s0 + _SOURCE_BLOCK, None], axis=1))
    if not parts:
        return np.zeros((targets.shape[0], 2))
    return _neumaier(parts)


def blob_fields(points, cloud, kcfg, threads=1):
    """Per-blob partial fields, shape ``(N, M, 2)``."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    members = [cloud.members(j) for j in range(cloud.n_blobs)]

    def block(t0):
        tgt = points[t0:t0 + _TARGET_BLOCK]
        out = np.empty((cloud.n_blobs, tgt.shape[0], 2))
        for j, idx in enumerate(members):
            try:
                out[j] = _blob_field(tgt, cloud.positions[idx], cloud.weights[idx], kcfg)
            except VortexError as exc:
                raise KernelEvaluationError(f"kernel failure summing blob {j}: {exc}",
                                            particle=int(idx[0]) if idx.size else None) from exc
        return out

    starts = range(0, points.shape[0], _TARGET_BLOCK)
    if threads and threads > 1 and points.shape[0] > _TARGET_BLOCK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(block, starts))
    else:
        blocks = [block(s) for s in starts]
    if not blocks:
        return np.zeros((cloud.n_blobs, 0, 2))
    return np.concatenate(blocks, axis=1)


def split_fields(partials, target_blob):
    """Combine per-blob partials into ``(self, external)`` for each point.

    ``target_blob`` is an int or an array giving the tagged blob per point.
    """
    n_blobs, m, _ = partials.shape
    tb = np.broadcast_to(np.asarray(target_blob), (m,))
    rows = np.arange(m)
    own = partials[tb, rows]
    others = [np.where((tb == j)[:, None], 0.0, partials[j]) for j in range(n_blobs)]
    ext = _neumaier(others) if n_blobs > 1 else np.zeros_like(own)
    return own, ext


def eval_velocity(points, cloud, cfg, target_blob=None, interaction=None):
    """Velocity at ``points`` from the particles selected by ``interaction``.

    ``full`` sums every particle; ``self`` only those of ``target_blob``;
    ``external`` all the others. For a tagged blob the full field is formed
    as ``self + external`` so the partition holds bit for bit.
    """
    interaction = Interaction(interaction or cfg.interaction)
    points = np.asarray(points, dtype=float)
    single = points.ndim == 1
    pts = points.reshape(-1, 2)
    partials = blob_fields(pts, cloud, cfg.kernel, cfg.threads)
    if target_blob is None:
        if interaction is not Interaction.FULL:
            raise ConfigError(f"interaction '{interaction.value}' needs a target blob")
        out = _neumaier(list(partials))
    else:
        own, ext = split_fields(partials, target_blob)
        out = {Interaction.FULL: own + ext, Interaction.SELF: own, Interaction.EXTERNAL: ext}[interaction]
    return out[0] if single else out


def particle_velocities(positions, cloud, cfg, interaction=None):
    """Velocity of every particle when the cloud sits at ``positions``."""
    moved = cloud.with_positions(positions)
    return eval_velocity(positions, moved, cfg, target_blob=cloud.blob_of, interaction=interaction)


# --------------------------------------------------------------------------
# time stepping

def blob_mean_velocity(velocities, cloud):
    """``(1/a_i) sum_p w_p u_p`` per blob: the exact rate of change of the
    centre of vorticity."""
    out = np.empty((cloud.n_blobs, 2))
    for i in range(cloud.n_blobs):
        idx = cloud.members(i)
        w = cloud.weights[idx]
        for c in range(2):
            out[i, c] = math.fsum(w * velocities[idx, c]) / cloud.intensities[i]
    return out


def _check(cloud, positions):
    if not np.all(np.isfinite(positions)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(positions), axis=1))[0])
        raise NumericError(f"non-finite position for particle {bad}")
    outside = cloud.r0 + positions[:, 1] <= 0
    if np.any(outside):
        p = int(np.flatnonzero(outside)[0])
        raise DomainExitError(f"particle {p} left the half plane r > 0", particle=p)


def step(cloud, cfg, dt=None):
    """Advance one RK4 step (``dt`` overrides ``cfg.dt``; negative runs backwards)."""
    dt = cfg.dt if dt is None else dt
    if cfg.scheme is Scheme.PARTICLE:
        rhs = lambda x: particle_velocities(x, cloud, cfg)
        new = rk4_step(rhs, cloud.positions, dt)
    else:
        base = cloud.positions

        def rhs(offsets):
            x = base + offsets[cloud.blob_of]
            return blob_mean_velocity(particle_velocities(x, cloud, cfg), cloud)

        shift = rk4_step(rhs, np.zeros((cloud.n_blobs, 2)), dt)
        new = base + shift[cloud.blob_of]
    _check(cloud, new)
    return cloud.with_positions(new)


def run(specs, cfg, cadence=1, recorder=None, halt=None):
    """Initialise and integrate to ``cfg.horizon``.

    Snapshots are kept every ``cadence`` steps and at the final step.
    ``recorder(snapshot)`` is called for each kept snapshot; ``halt(snapshot)``
    may return a reason string to stop early.
    """
    if cadence < 1:
        raise ConfigError("cadence must be a positive integer")
    cloud = specs if isinstance(specs, ParticleCloud) else init_blobs(specs, cfg)
    n = cfg.n_steps
    out = RunOutput(snapshots=[])

    def keep(k, c):
        snap = Snapshot(t=k * cfg.dt, step=k, cloud=c)
        out.snapshots.append(snap)
        if recorder is not None:
            recorder(snap)
        if halt is not None:
            reason = halt(snap)
            if reason:
                out.halt_reason = reason
                out.halt_time = snap.t
                return True
        return False

    if keep(0, cloud):
        return out
    for k in range(1, n + 1):
        cloud = step(cloud, cfg)
        if k % cadence == 0 or k == n:
            if keep(k, cloud):
                break
    return out
