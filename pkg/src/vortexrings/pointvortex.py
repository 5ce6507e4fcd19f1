"""Point-vortex ODEs and a fixed-step RK4 integrator.

Two systems are available. ``classical`` is the Helmholtz-Kirchhoff model,
each vortex advected by the planar field of the others. ``drifted`` adds a
self-induced translation ``a_i * (1, 0)`` per vortex (rings of radius
comparable to ``|log eps|``). Times in the drifted system are model times;
no correspondence to the PDE clock is claimed.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CollapseError, ConfigError, NumericError
from .kernels import TWO_PI

DEFAULT_COLLAPSE_FLOOR = 1e-8


class System(str, enum.Enum):
    CLASSICAL = "classical"
    DRIFTED = "drifted"


@dataclass(frozen=True)
class VortexConfig:
    positions: np.ndarray
    intensities: np.ndarray
    system: System = System.CLASSICAL

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        a = np.array(self.intensities, dtype=float).reshape(-1)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "intensities", a)
        object.__setattr__(self, "system", System(self.system))
        if pos.shape[0] == 0:
            raise ConfigError("need at least one vortex")
        if pos.shape[0] != a.size:
            raise ConfigError("positions and intensities differ in length")
        if np.any(a == 0):
            raise ConfigError("vortex intensities must be nonzero")
        if not np.all(np.isfinite(pos)):
            raise ConfigError("vortex positions must be finite")
        if pos.shape[0] > 1 and pair_distances(pos).min() == 0:
            raise ConfigError("initial vortex positions must be pairwise distinct")

    @property
    def n(self):
        return self.positions.shape[0]


@dataclass
class PVTrajectory:
    times: np.ndarray
    states: np.ndarray  # (T, N, 2)
    min_pair_distance: np.ndarray
    collapse: tuple = field(default=None)  # (time, (i, j)) if integration halted

    def state_at(self, t, tol=1e-9):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol * max(1.0, abs(t)):
            raise ConfigError(f"no point-vortex state stored at t={t}")
        return self.states[k]


def pair_distances(state):
    """Condensed vector of |z_i - z_j| for i < j (empty for one vortex)."""
    i, j = np.triu_indices(state.shape[0], k=1)
    d = state[i] - state[j]
    return np.hypot(d[:, 0], d[:, 1])


def _closest_pair(state):
    i, j = np.triu_indices(state.shape[0], k=1)
    k = int(np.argmin(pair_distances(state)))
    return int(i[k]), int(j[k])


def pv_rhs(state, cfg):
    """Velocities ``sum_{j != i} a_j K(z_i - z_j)`` (+ drift if requested)."""
    state = np.asarray(state, dtype=float)
    a = cfg.intensities
    diff = state[:, None, :] - state[None, :, :]
    r2 = np.sum(diff * diff, axis=-1)
    off = ~np.eye(state.shape[0], dtype=bool)
    if np.any(r2[off] == 0):
        raise CollapseError("coincident point vortices", _closest_pair(state))
    inv = np.zeros_like(r2)
    inv[off] = 1.0 / (TWO_PI * r2[off])
    vel = np.stack([
        -(inv * diff[..., 1]) @ a,
        (inv * diff[..., 0]) @ a,
    ], axis=-1)
    if cfg.system is System.DRIFTED:
        vel[:, 0] += a
    return vel


def rk4_step(rhs, state, dt):
    k1 = rhs(state)
    k2 = rhs(state + 0.5 * dt * k1)
    k3 = rhs(state + 0.5 * dt * k2)
    k4 = rhs(state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_count(dt, horizon):
    """Number of fixed steps of size ``dt`` covering ``[0, horizon]``.

    ``horizon`` must be an integer multiple of ``dt`` (to 1e-9 relative) so
    that every consumer of the time grid sees identical sample times.
    """
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if horizon < 0:
        raise ConfigError(f"horizon must be non-negative, got {horizon}")
    n = int(round(horizon / dt))
    if abs(n * dt - horizon) > 1e-9 * max(horizon, dt):
        raise ConfigError(f"horizon {horizon} is not a multiple of dt {dt}")
    return n


def integrate(cfg, dt, horizon, collapse_floor=DEFAULT_COLLAPSE_FLOOR):
    """Fixed-step RK4 from ``t = 0`` to ``horizon``.

    Stops early (recording ``collapse``) when some pair comes closer than
    ``collapse_floor``; this is a reported event, not an exception.
    """
    if horizon < dt:
        raise ConfigError("horizon must be at least one step")
    n = step_count(dt, horizon)
    rhs = lambda s: pv_rhs(s, cfg)
    state = cfg.positions.copy()
    states = [state]
    times = [0.0]
    dmin = [_min_distance(state)]
    collapse = None
    for k in range(1, n + 1):
        try:
            state = rk4_step(rhs, state, dt)
        except CollapseError as exc:
            collapse = (times[-1], exc.indices)
            break
        if not np.all(np.isfinite(state)):
            raise NumericError(f"non-finite point-vortex state at step {k}")
        d = _min_distance(state)
        states.append(state)
        times.append(k * dt)
        dmin.append(d)
        if d < collapse_floor:
            collapse = (k * dt, _closest_pair(state))
            break
    return PVTrajectory(np.array(times), np.array(states), np.array(dmin), collapse)


def _min_distance(state):
    if state.shape[0] < 2:
        return math.inf
    return float(pair_distances(state).min())


def min_distance_over_horizon(traj):
    """Discrete ``R_m``: smallest pair distance over the stored times."""
    if len(traj.times) == 0:
        raise ConfigError("empty trajectory")
    return float(np.min(traj.min_pair_distance))
