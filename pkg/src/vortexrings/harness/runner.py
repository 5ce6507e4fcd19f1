"""Single runs and epsilon sweeps: blob simulation, point-vortex reference,
diagnostics, CSV output."""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .. import blobsim
from .. import diagnostics as dg
from .. import pointvortex as pvm
from ..errors import CollapseError, VortexError

SNAPSHOT_COLUMNS = ["t", "blob", "particle", "x1", "x2", "w", "gamma"]
PV_COLUMNS = ["t", "i", "z1", "z2", "min_pair_dist"]

HALT_CONTAINMENT = "containment"
HALT_COLLAPSE = "collapse"


@dataclass
class RunRecord:
    epsilon: float
    alpha: float
    beta: float
    r0: float
    horizon: float
    dt: float
    particles: int
    sup_dist_to_pv: float
    sup_I: float
    T_containment: float
    halted: str = ""
    halt_time: float = math.nan

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        return [getattr(self, c) for c in self.columns()]

    @classmethod
    def from_row(cls, row):
        kw = {}
        for f in fields(cls):
            v = row[f.name]
            kw[f.name] = v if f.type in ("str", str) else (int(v) if f.name == "particles" else float(v))
        return cls(**kw)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_records(path):
    with Path(path).open(newline="") as fh:
        return [RunRecord.from_row(r) for r in csv.DictReader(fh)]


def pv_reference(pv_cfg, dt, horizon, collapse_floor=pvm.DEFAULT_COLLAPSE_FLOOR):
    """Point-vortex trajectory on the simulation time grid (also for ``horizon == 0``)."""
    if horizon == 0:
        z = pv_cfg.positions.copy()
        return pvm.PVTrajectory(np.array([0.0]), z[None], np.array([pvm._min_distance(z)]))
    return pvm.integrate(pv_cfg, dt, horizon, collapse_floor)


def pv_rows(traj):
    rows = []
    for t, z, d in zip(traj.times, traj.states, traj.min_pair_distance):
        for i, (z1, z2) in enumerate(z):
            rows.append([float(t), i, float(z1), float(z2), float(d)])
    return rows


def _snapshot_rows(snap):
    c = snap.cloud
    rows = []
    local = np.zeros(c.n_blobs, dtype=int)
    for p in range(c.n_particles):
        b = int(c.blob_of[p])
        rows.append([snap.t, b, int(local[b]), float(c.positions[p, 0]), float(c.positions[p, 1]),
                     float(c.weights[p]), float(c.gammas[p])])
        local[b] += 1
    return rows


def diagnostics_columns(radii, mollifiers):
    return (["t", "blob", "B1", "B2", "I", "R_t"]
            + [f"m_at_{R!r}" for R in radii]
            + [f"mu_at_{R!r}_{h!r}" for R, h in mollifiers]
            + ["dist_to_pv", "Delta"])


def run_single(spec, out_dir=None, radii=None, mollifiers=None):
    """Run one configuration. Returns ``(RunRecord, snapshots, pv_trajectory)``.

    Kernel, domain and numeric failures end the run early; they are reported
    in ``RunRecord.halted`` with the snapshots produced so far.
    """
    sim = spec.sim
    eps = sim.epsilon
    radii = list(radii or dg.default_radii(eps, spec.beta))
    mollifiers = list(mollifiers or dg.default_mollifiers(radii))
    traj = pv_reference(spec.pv, sim.dt, sim.horizon, spec.collapse_floor)
    t_end_pv = traj.times[-1]
    cont_radius = abs(math.log(eps)) ** (-spec.beta)
    snaps = []

    def halt(snap):
        if traj.collapse is not None and snap.t > t_end_pv + 0.5 * sim.dt:
            return HALT_COLLAPSE
        if spec.halt_on_breach:
            z = traj.state_at(snap.t)
            c = snap.cloud
            d = c.positions - z[c.blob_of]
            if np.any(np.hypot(d[:, 0], d[:, 1]) > cont_radius):
                return HALT_CONTAINMENT
        return None

    halted, halt_time = "", math.nan
    try:
        out = blobsim.run(spec.blobs, sim, cadence=spec.cadence, recorder=snaps.append, halt=halt)
        if out.halt_reason:
            halted, halt_time = out.halt_reason, out.halt_time
    except (VortexError, CollapseError) as exc:
        if not snaps:
            raise
        halted = f"{type(exc).__name__}: {exc}"
        halt_time = snaps[-1].t
    if traj.collapse is not None and not halted:
        halted, halt_time = HALT_COLLAPSE, traj.collapse[0]

    # diagnostics only on snapshots that have a point-vortex counterpart
    usable = [s for s in snaps if s.t <= t_end_pv + 0.5 * sim.dt]
    times, delta, dist = dg.pv_deviation(usable, traj)
    diag_rows = []
    sup_I = 0.0
    for k, snap in enumerate(usable):
        z = traj.state_at(snap.t)
        for i in range(snap.cloud.n_blobs):
            rec = dg.blob_diagnostics(snap, i, radii, mollifiers, z[i])
            sup_I = max(sup_I, rec.I)
            diag_rows.append([snap.t, i, float(rec.B[0]), float(rec.B[1]), rec.I, rec.R_t]
                             + [rec.m[R] for R in radii] + [rec.mu[m] for m in mollifiers]
                             + [rec.dist_to_pv, float(delta[k])])

    record = RunRecord(
        epsilon=eps, alpha=sim.alpha, beta=spec.beta, r0=sim.r0, horizon=sim.horizon, dt=sim.dt,
        particles=int(snaps[0].cloud.n_particles),
        sup_dist_to_pv=float(dist.max()) if dist.size else math.nan,
        sup_I=sup_I,
        T_containment=dg.containment_time(usable, traj, spec.beta, eps),
        halted=halted, halt_time=halt_time,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        rows = []
        for s in snaps:
            rows.extend(_snapshot_rows(s))
        write_csv(out_dir / "snapshots.csv", SNAPSHOT_COLUMNS, rows)
        write_csv(out_dir / "diagnostics.csv", diagnostics_columns(radii, mollifiers), diag_rows)
        write_csv(out_dir / "pv.csv", PV_COLUMNS, pv_rows(traj))
        write_csv(out_dir / "record.csv", RunRecord.columns(), [record.row()])
    return record, snaps, traj


def _failed(spec, exc):
    sim = spec.sim
    return RunRecord(epsilon=sim.epsilon, alpha=sim.alpha, beta=spec.beta, r0=sim.r0,
                     horizon=sim.horizon, dt=sim.dt, particles=0, sup_dist_to_pv=math.nan,
                     sup_I=math.nan, T_containment=math.nan,
                     halted=f"{type(exc).__name__}: {exc}", halt_time=0.0)


def point_dir(root, epsilon):
    return Path(root) / f"eps_{epsilon:.3e}"


def _sweep_point(args):
    spec, out = args
    try:
        return run_single(spec, out)[0]
    except VortexError as exc:
        return _failed(spec, exc)


def run_sweep(sweep, out_dir=None):
    """Run every epsilon of the sweep; records come back ordered by epsilon
    descending. Failed points become records whose ``halted`` names the error.

    With ``resolution_doubling`` a second list (2x particles, dt/2) is returned
    alongside; otherwise the second element is ``None``.
    """
    root = Path(out_dir or sweep.output_dir)
    specs = [sweep.point(e) for e in sweep.epsilons]
    jobs = [(s, point_dir(root, s.epsilon)) for s in specs]
    if sweep.resolution_doubling:
        jobs += [(s.refined(), point_dir(root, s.epsilon) / "refined") for s in specs]
    if sweep.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=sweep.workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    n = len(specs)
    order = lambda recs: sorted(recs, key=lambda r: -r.epsilon)
    base, refined = order(results[:n]), (order(results[n:]) if sweep.resolution_doubling else None)
    write_csv(root / "summary.csv", RunRecord.columns(), [r.row() for r in base])
    if refined is not None:
        write_csv(root / "summary_refined.csv", RunRecord.columns(), [r.row() for r in refined])
    return base, refined


def record_dict(record):
    return asdict(record)
