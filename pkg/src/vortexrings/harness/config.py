"""JSON run configuration.

A configuration file is one JSON object. Keys (defaults in brackets)::

    epsilon            single run: blob radius in (0, 1)
    epsilons           sweep: strictly decreasing list [1e-3, 1e-4, 1e-5, 1e-6]
    alpha              ring exponent, r0 = |log eps|^alpha, must exceed 1 [2.0]
    beta               containment exponent in (0, (alpha - 1)/4) [0.2]
    dt                 time step [0.01]
    horizon            final time; omitted or null means min(1, eta log|log eps|)
                       rounded down to a multiple of dt
    eta                horizon factor [0.2]
    cadence            snapshot stride in steps [1]
    particles_per_diameter                 [24]
    resolution_doubling  also run every point at 2x particles and dt/2 [false]
    blobs              list of {"center": [z, x2], "intensity": a}
    kernel             {"mode": planar|quadrature|elliptic, "quad_rel_tol", "delta"}
    interaction        full | self | external [full]
    scheme             particle | rigid [particle]
    pv                 {"system": classical|drifted, "collapse_floor": 1e-8};
                       positions and intensities default to the blob data
    halt_on_breach     stop a run at the first containment breach [true]
    workers            concurrent sweep points [1]
    output_dir         where CSV files go ["out"]
    kernel_check       {"r0": [...], "x2_fractions": [...], "separations": [...],
                        "angles": n, "mode": ...}
"""

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..blobsim import BlobInitSpec, Interaction, Scheme, SimConfig
from ..errors import ConfigError
from ..kernels import KernelConfig, KernelMode
from ..pointvortex import DEFAULT_COLLAPSE_FLOOR, System, VortexConfig

DEFAULT_EPSILONS = (1e-3, 1e-4, 1e-5, 1e-6)
DEFAULT_ETA = 0.2

_KNOWN = {
    "epsilon", "epsilons", "alpha", "beta", "dt", "horizon", "eta", "cadence",
    "particles_per_diameter", "resolution_doubling", "blobs", "kernel",
    "interaction", "scheme", "pv", "halt_on_breach", "workers", "output_dir",
    "kernel_check", "threads",
}


def check_exponents(alpha, beta):
    if not alpha > 1:
        raise ConfigError(f"alpha must be > 1 (got {alpha}); the point-vortex limit needs r0 to outgrow |log eps|")
    upper = (alpha - 1) / 4
    if not 0 < beta < upper:
        raise ConfigError(f"beta must lie in (0, (alpha-1)/4) = (0, {upper:g}); got {beta}")


def default_horizon(epsilon, dt, eta=DEFAULT_ETA):
    """``min(1, eta log|log eps|)`` snapped down onto the ``dt`` grid."""
    h = min(1.0, eta * math.log(abs(math.log(epsilon))))
    n = int(math.floor(h / dt + 1e-9))
    if n < 1:
        raise ConfigError(f"default horizon {h:g} is shorter than one step of {dt:g}")
    return n * dt


@dataclass(frozen=True)
class RunSpec:
    """Everything needed for one (epsilon, alpha, beta) point."""

    sim: SimConfig
    blobs: tuple
    pv: VortexConfig
    beta: float
    cadence: int = 1
    halt_on_breach: bool = True
    collapse_floor: float = DEFAULT_COLLAPSE_FLOOR

    @property
    def epsilon(self):
        return self.sim.epsilon

    def refined(self):
        """Twice the particles per diameter, half the step, same snapshot times."""
        blobs = tuple(replace(b, particles_per_diameter=2 * b.particles_per_diameter) for b in self.blobs)
        return replace(self, sim=replace(self.sim, dt=self.sim.dt / 2), blobs=blobs,
                       cadence=2 * self.cadence)


@dataclass(frozen=True)
class SweepConfig:
    epsilons: tuple
    alpha: float
    beta: float
    base: dict  # raw template for everything that is not the epsilon grid
    pv: VortexConfig
    cadence: int = 1
    output_dir: str = "out"
    eta: float = DEFAULT_ETA
    resolution_doubling: bool = False
    workers: int = 1

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        object.__setattr__(self, "epsilons", eps)
        if not eps:
            raise ConfigError("epsilons must not be empty")
        if any(not 0 < e < 1 for e in eps):
            raise ConfigError("every epsilon must lie in (0, 1)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilons must be strictly decreasing")
        check_exponents(self.alpha, self.beta)
        if int(self.cadence) < 1:
            raise ConfigError("cadence must be a positive integer")
        if int(self.workers) < 1:
            raise ConfigError("workers must be a positive integer")

    def point(self, epsilon):
        return build_run_spec(dict(self.base, epsilon=epsilon, alpha=self.alpha, beta=self.beta,
                                   cadence=self.cadence, eta=self.eta))


def _kernel_config(raw):
    raw = dict(raw or {})
    unknown = set(raw) - {"mode", "quad_rel_tol", "delta"}
    if unknown:
        raise ConfigError(f"unknown kernel keys: {sorted(unknown)}")
    try:
        mode = KernelMode(raw.get("mode", "elliptic"))
    except ValueError:
        raise ConfigError(f"kernel.mode must be one of {[m.value for m in KernelMode]}") from None
    return KernelConfig(mode=mode, quad_rel_tol=float(raw.get("quad_rel_tol", 1e-10)),
                        delta=float(raw.get("delta", 0.0)))


def _enum(cls, value, key):
    try:
        return cls(value)
    except ValueError:
        raise ConfigError(f"{key} must be one of {[m.value for m in cls]}, got {value!r}") from None


def _blobs(raw, epsilon, ppd):
    if not raw:
        raise ConfigError("config needs a non-empty 'blobs' list")
    out = []
    for k, b in enumerate(raw):
        if "center" not in b or "intensity" not in b:
            raise ConfigError(f"blob {k} needs 'center' and 'intensity'")
        out.append(BlobInitSpec(center=tuple(b["center"]), intensity=float(b["intensity"]),
                                epsilon=epsilon, particles_per_diameter=int(b.get("particles_per_diameter", ppd))))
    return tuple(out)


def pv_config(raw):
    """Point-vortex data: explicit ``pv.positions`` or the blob centres."""
    pv = dict(raw.get("pv") or {})
    blobs = raw.get("blobs") or []
    positions = pv.get("positions", [b.get("center") for b in blobs])
    intensities = pv.get("intensities", [b.get("intensity") for b in blobs])
    if not positions or any(p is None for p in positions):
        raise ConfigError("point-vortex positions missing (give 'pv.positions' or 'blobs')")
    return VortexConfig(np.array(positions, dtype=float), np.array(intensities, dtype=float),
                        _enum(System, pv.get("system", "classical"), "pv.system"))


def build_run_spec(raw):
    if "epsilon" not in raw:
        raise ConfigError("config needs 'epsilon'")
    eps = float(raw["epsilon"])
    alpha = float(raw.get("alpha", 2.0))
    beta = float(raw.get("beta", 0.2))
    check_exponents(alpha, beta)
    dt = float(raw.get("dt", 0.01))
    if not dt > 0:
        raise ConfigError("dt must be positive")
    horizon = raw.get("horizon")
    horizon = default_horizon(eps, dt, float(raw.get("eta", DEFAULT_ETA))) if horizon is None else float(horizon)
    sim = SimConfig(
        epsilon=eps, alpha=alpha, dt=dt, horizon=horizon,
        kernel=_kernel_config(raw.get("kernel")),
        interaction=_enum(Interaction, raw.get("interaction", "full"), "interaction"),
        scheme=_enum(Scheme, raw.get("scheme", "particle"), "scheme"),
        threads=raw.get("threads"),
    )
    sim.n_steps  # validates horizon against dt
    blobs = _blobs(raw.get("blobs"), eps, int(raw.get("particles_per_diameter", 24)))
    pv = pv_config(raw)
    if pv.n != len(blobs):
        raise ConfigError(f"{len(blobs)} blobs but {pv.n} point vortices")
    cadence = int(raw.get("cadence", 1))
    if cadence < 1:
        raise ConfigError("cadence must be a positive integer")
    floor = float((raw.get("pv") or {}).get("collapse_floor", DEFAULT_COLLAPSE_FLOOR))
    return RunSpec(sim=sim, blobs=blobs, pv=pv, beta=beta, cadence=cadence,
                   halt_on_breach=bool(raw.get("halt_on_breach", True)), collapse_floor=floor)


def sweep_config(raw):
    base = {k: v for k, v in raw.items() if k not in ("epsilon", "epsilons", "alpha", "beta", "cadence",
                                                      "output_dir", "eta", "resolution_doubling", "workers")}
    return SweepConfig(
        epsilons=tuple(raw.get("epsilons", DEFAULT_EPSILONS)),
        alpha=float(raw.get("alpha", 2.0)),
        beta=float(raw.get("beta", 0.2)),
        base=base,
        pv=pv_config(raw),
        cadence=int(raw.get("cadence", 1)),
        output_dir=str(raw.get("output_dir", "out")),
        eta=float(raw.get("eta", DEFAULT_ETA)),
        resolution_doubling=bool(raw.get("resolution_doubling", False)),
        workers=int(raw.get("workers", 1)),
    )


def load_config(path):
    """Read and lightly validate a JSON configuration file into a dict."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(raw) - _KNOWN
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return raw
