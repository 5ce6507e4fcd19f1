import json
import math

import numpy as np
import pytest

from vortexrings.errors import ConfigError
from vortexrings.harness import cli
from vortexrings.harness.config import (build_run_spec, check_exponents, default_horizon,
                                        load_config, sweep_config)
from vortexrings.harness.fitting import FitError, fit_power_law, fit_scaling
from vortexrings.harness.kernelcheck import kernel_check
from vortexrings.harness.runner import RunRecord, read_records, run_single, run_sweep

TWO_BLOBS = [{"center": [0.0, 0.5], "intensity": 1.0}, {"center": [0.0, -0.5], "intensity": 1.0}]


def small(**kw):
    raw = {"epsilon": 0.05, "alpha": 2.0, "beta": 0.2, "dt": 0.01, "horizon": 0.04,
           "blobs": TWO_BLOBS, "particles_per_diameter": 6, "scheme": "rigid"}
    raw.update(kw)
    return raw


def write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


@pytest.mark.parametrize("alpha, beta", [(1.0, 0.1), (2.0, 0.0), (2.0, 0.25), (3.0, 0.6)])
def test_exponent_validation(alpha, beta):
    with pytest.raises(ConfigError, match="alpha|beta"):
        check_exponents(alpha, beta)


def test_default_horizon_on_grid():
    h = default_horizon(1e-3, 0.01)
    assert h == pytest.approx(0.38)
    assert default_horizon(1e-300, 0.01) == pytest.approx(1.0)
    spec = build_run_spec(small(horizon=None))
    assert spec.sim.n_steps * spec.sim.dt == pytest.approx(spec.sim.horizon)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError, match="unknown"):
        load_config(write(tmp_path, {"epsilon": 0.1, "typo": 1}))
    with pytest.raises(ConfigError):
        sweep_config(small(epsilons=[1e-3, 1e-2]))


def test_run_single_outputs(tmp_path):
    rec, snaps, traj = run_single(build_run_spec(small()), tmp_path)
    assert rec.T_containment == math.inf and rec.halted == ""
    assert rec.sup_dist_to_pv >= 0 and rec.sup_I > 0
    for name in ("snapshots.csv", "diagnostics.csv", "pv.csv", "record.csv"):
        assert (tmp_path / name).exists()
    head = (tmp_path / "snapshots.csv").read_text().splitlines()[0]
    assert head == "t,blob,particle,x1,x2,w,gamma"
    assert (tmp_path / "pv.csv").read_text().splitlines()[0] == "t,i,z1,z2,min_pair_dist"
    diag = (tmp_path / "diagnostics.csv").read_text().splitlines()[0].split(",")
    assert diag[:6] == ["t", "blob", "B1", "B2", "I", "R_t"] and diag[-2:] == ["dist_to_pv", "Delta"]


def test_zero_horizon_run():
    rec, snaps, _ = run_single(build_run_spec(small(horizon=0.0)))
    assert len(snaps) == 1
    assert rec.sup_dist_to_pv <= 0.05


def test_single_blob_self_planar_stays_put():
    raw = small(blobs=TWO_BLOBS[:1], interaction="self", kernel={"mode": "planar"},
                scheme="particle", particles_per_diameter=8, dt=0.005, horizon=0.05)
    rec, _, _ = run_single(build_run_spec(raw))
    assert rec.sup_dist_to_pv < 1e-14


def test_containment_halt(tmp_path):
    # the reference vortex sits far from the blob, so the first snapshot breaches
    raw = small(blobs=TWO_BLOBS[:1], pv={"positions": [[3.0, 0.0]], "intensities": [1.0]})
    rec, snaps, _ = run_single(build_run_spec(raw))
    assert rec.halted == "containment" and rec.T_containment == 0.0 and len(snaps) == 1
    rc = cli.main(["simulate", str(write(tmp_path, raw)), "--out", str(tmp_path / "o")])
    assert rc == 4
    rec, snaps, _ = run_single(build_run_spec(dict(raw, halt_on_breach=False)))
    assert rec.halted == "" and rec.T_containment == 0.0 and len(snaps) == 5


def test_sweep_ordering_and_determinism(tmp_path):
    raw = small(epsilons=[0.05, 0.02, 0.01], output_dir=str(tmp_path / "a"))
    recs, _ = run_sweep(sweep_config(raw))
    assert [r.epsilon for r in recs] == [0.05, 0.02, 0.01]
    again, _ = run_sweep(sweep_config(dict(raw, output_dir=str(tmp_path / "b"))))
    a = (tmp_path / "a" / "summary.csv").read_bytes()
    b = (tmp_path / "b" / "summary.csv").read_bytes()
    assert a == b
    assert repr(read_records(tmp_path / "a" / "summary.csv")[1]) == repr(recs[1])


def test_sweep_failure_becomes_row(tmp_path):
    # eps = 0.3 blobs overlap at the given centres; the sweep must continue
    raw = small(epsilons=[0.6, 0.05], output_dir=str(tmp_path))
    recs, _ = run_sweep(sweep_config(raw))
    assert len(recs) == 2
    assert recs[0].halted.startswith("ConfigError") and recs[1].halted == ""


def test_singleton_sweep_matches_single(tmp_path):
    raw = small(epsilons=[0.05], output_dir=str(tmp_path))
    recs, _ = run_sweep(sweep_config(raw))
    rec, _, _ = run_single(build_run_spec(small()))
    assert repr(recs[0]) == repr(rec)


def test_resolution_doubling(tmp_path):
    raw = small(epsilons=[0.05], output_dir=str(tmp_path), resolution_doubling=True)
    base, refined = run_sweep(sweep_config(raw))
    assert refined[0].particles > base[0].particles and refined[0].dt == base[0].dt / 2
    assert (tmp_path / "summary_refined.csv").exists()


def test_fit_exact_power_law():
    eps = np.array([1e-3, 1e-4, 1e-5, 1e-6])
    x = np.log(-np.log(eps))
    f = fit_power_law(x, (-np.log(eps)) ** -1.0, "d", -1.0)
    assert f.slope == pytest.approx(-1.0, abs=1e-12) and f.within_band
    f = fit_power_law(x, np.full(4, 3.0), "d", -1.0)
    assert f.slope == pytest.approx(0.0, abs=1e-12) and not f.within_band
    with pytest.raises(FitError):
        fit_power_law(x[:2], [1, 2], "d", -1)
    with pytest.raises(FitError):
        fit_power_law(np.ones(4), [1, 2, 3, 4], "d", -1)


def test_fit_scaling_records():
    recs = [RunRecord(e, 3.0, 0.2, 1.0, 1.0, 0.1, 1, (-math.log(e)) ** -2.0, (-math.log(e)) ** -4.0, math.inf)
            for e in (1e-2, 1e-3, 1e-4)]
    d, i = fit_scaling(recs)
    assert d.slope == pytest.approx(-2.0) and i.slope == pytest.approx(-4.0)
    assert d.within_band and i.within_band


def test_kernel_check_symmetric_point_and_bound():
    res = kernel_check(r0_list=(1e2,), separations=(0.5,), angles=4)
    for row in res.rows:
        if row[1] == row[3]:
            assert row[7] == 0.0
    assert res.max_ratio[1e2] > 0


def test_cli_exit_codes(tmp_path):
    assert cli.main(["simulate", str(tmp_path / "none.json")]) == 2
    bad = write(tmp_path, small(beta=0.5), "bad.json")
    assert cli.main(["simulate", str(bad)]) == 2
    assert cli.main(["report", str(tmp_path)]) == 2
    # point vortices driven into each other: collapse halt
    pv = write(tmp_path, {"dt": 0.01, "horizon": 2.0, "output_dir": str(tmp_path / "pv"),
                          "pv": {"positions": [[-1, 0], [0, 0]], "intensities": [1.0, 1e-9],
                                 "system": "drifted", "collapse_floor": 0.5}}, "pv.json")
    assert cli.main(["pv", str(pv)]) == 4
    ok = write(tmp_path, {"dt": 0.01, "horizon": 0.1, "output_dir": str(tmp_path / "pv2"),
                          "blobs": TWO_BLOBS}, "pv2.json")
    assert cli.main(["pv", str(ok)]) == 0
    assert (tmp_path / "pv2" / "pv.csv").exists()


def test_cli_kernel_check_and_report(tmp_path):
    cfg = write(tmp_path, {"output_dir": str(tmp_path / "kc"),
                           "kernel_check": {"r0": [100, 1000], "separations": [0.01, 1.0], "angles": 4}})
    assert cli.main(["kernel-check", str(cfg)]) == 0
    head = (tmp_path / "kc" / "kernel_check.csv").read_text().splitlines()[0]
    assert head == "r0,x1,x2,y1,y2,sep,D1,D2,bound_ratio"
    sweep = write(tmp_path, small(epsilons=[0.05, 0.02, 0.01], output_dir=str(tmp_path / "sw")), "sw.json")
    assert cli.main(["sweep", str(sweep)]) == 0
    assert cli.main(["report", str(tmp_path / "sw")]) == 0
    assert (tmp_path / "sw" / "fits.csv").exists()
