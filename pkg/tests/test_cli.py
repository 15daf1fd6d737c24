from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from infoflow import derive_params, log_entropy, second_moment, information
from infoflow.cli import (
    expand_sweep,
    load_json,
    main,
    make_initial,
    parse_run_config,
    run,
    sweep,
)
from infoflow.errors import ConfigParse, InfoFlowError, UnknownKind
from infoflow.diagnostics import LEDGER_COLUMNS


def _doc(tmp_path, **over):
    doc = {
        "model": {"alpha": 0.75, "lambda": 1.0, "dim": 1},
        "discretization": {"n_points": 40, "eulerian_grid": 200},
        "time": {"schedule": "uniform", "tau": 1e-3, "steps": 5},
        "initial": {"kind": "double_bump"},
        "functional": "fourth_order",
        "inner": {"grad_tol": 1e-8, "max_iter": 200},
        "output": {"directory": str(tmp_path / "out"), "snapshot_every": 2},
    }
    for k, v in over.items():
        doc[k] = v
    return doc


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# ---------------------------------------------------------------------------
# config parsing


def test_parse_valid(tmp_path):
    cfg = parse_run_config(_doc(tmp_path))
    assert cfg.alpha == 0.75 and cfg.n_points == 40 and cfg.steps == 5
    assert cfg.partition.steps == 5
    assert cfg.jko_config.snapshot_every == 2


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["model"].update(beta=2),
    lambda d: d["initial"].update(radius=1),
    lambda d: d["time"].update(steps=0),
    lambda d: d["discretization"].update(n_points=7),
    lambda d: d["model"].update(dim=2),
    lambda d: d.update(functional="sixth_order"),
    lambda d: d["time"].update(schedule="adaptive"),
    lambda d: d["time"].update(tau=-1.0),
    lambda d: d.pop("model"),
])
def test_parse_rejects(tmp_path, mutate):
    doc = _doc(tmp_path)
    mutate(doc)
    with pytest.raises(InfoFlowError):
        parse_run_config(doc)


def test_parse_range_gate(tmp_path):
    doc = _doc(tmp_path)
    doc["model"]["alpha"] = 1.2
    with pytest.raises(InfoFlowError):
        parse_run_config(doc)
    assert main(["run", _write(tmp_path, "bad.json", doc)]) != 0


def test_unknown_initial_kind(tmp_path):
    with pytest.raises(UnknownKind):
        parse_run_config(_doc(tmp_path, initial={"kind": "triangle"}))
    with pytest.raises(UnknownKind):
        make_initial({"kind": "triangle"}, 20, derive_params(1.0, 1.0))


def test_geometric_schedule(tmp_path):
    cfg = parse_run_config(_doc(tmp_path, time={"schedule": "geometric", "tau0": 1e-3, "ratio": 1.1, "steps": 4}))
    np.testing.assert_allclose(cfg.partition.taus, 1e-3 * 1.1 ** np.arange(4))
    with pytest.raises(ConfigParse):
        parse_run_config(_doc(tmp_path, time={"schedule": "geometric", "tau0": 1e-3, "steps": 4}))


def test_load_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigParse):
        load_json(bad)
    assert main(["run", str(bad)]) == 2
    assert main(["run", str(tmp_path / "missing.json")]) == 2


# ---------------------------------------------------------------------------
# initial states


def test_uniform_initial():
    a = make_initial({"kind": "uniform", "lo": 0.0, "hi": 1.0}, 50, derive_params(1.0, 1.0))
    np.testing.assert_allclose(np.diff(a.positions), 1 / 50, rtol=1e-12)


def test_double_bump_initial():
    p = derive_params(0.75, 1.0)
    a = make_initial({"kind": "double_bump", "centers": [-1.0, 1.0], "widths": 0.3}, 200, p)
    assert a.total_mass == 1.0
    assert math.isfinite(log_entropy(a)) and math.isfinite(information(a, p))
    gaps = np.diff(a.positions)
    # bimodal: the widest gaps sit in the valley between the bumps
    assert abs(a.positions[np.argmax(gaps)]) < 0.3
    assert second_moment(a) == pytest.approx(1.0 + 0.09, rel=0.02)


def test_perturbed_barenblatt_is_deterministic():
    p = derive_params(1.0, 1.0)
    spec = {"kind": "perturbed_barenblatt", "amplitude": 0.1, "seed": 17}
    a, b = make_initial(spec, 100, p), make_initial(spec, 100, p)
    assert a.positions.tobytes() == b.positions.tobytes()
    c = make_initial(dict(spec, seed=18), 100, p)
    assert c != a


def test_gaussian_and_barenblatt_initial():
    p = derive_params(0.5, 1.0)
    g = make_initial({"kind": "gaussian", "mean": 0.5, "variance": 2.0}, 400, p)
    assert g.mean() == pytest.approx(0.5, abs=1e-12)
    b = make_initial({"kind": "barenblatt"}, 50, p)
    e = make_initial({"kind": "barenblatt", "exact_profile": True}, 50, p)
    assert b.n_points == e.n_points == 50
    # unconfined runs start from the lam = 1 profile
    assert make_initial({"kind": "barenblatt"}, 50, derive_params(0.5, 0.0)) == b


# ---------------------------------------------------------------------------
# run


def test_run_outputs(tmp_path):
    res = run(parse_run_config(_doc(tmp_path)))
    assert res.exit_code == 0
    out = res.directory
    rows = list(csv.reader((out / "ledger.csv").open()))
    assert rows[0] == LEDGER_COLUMNS and len(rows) == 6
    snaps = sorted(p.name for p in (out / "snapshots").iterdir())
    assert snaps == ["state_000000.csv", "state_000002.csv", "state_000004.csv", "state_000005.csv"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["failed_checks"] == []
    assert summary["config"]["alpha"] == 0.75


def test_stationary_smoke(tmp_path):
    doc = _doc(tmp_path, initial={"kind": "barenblatt"}, time={"schedule": "uniform", "tau": 1e-3, "steps": 50})
    doc["model"]["alpha"] = 1.0
    res = run(parse_run_config(doc))
    assert res.exit_code == 0
    assert res.summary["max_W2_drift"] <= 10 * 1e-8


def test_run_is_bit_reproducible(tmp_path):
    doc = _doc(tmp_path, initial={"kind": "perturbed_barenblatt", "amplitude": 0.1, "seed": 3})
    r1 = run(parse_run_config(doc), tmp_path / "a")
    r2 = run(parse_run_config(doc), tmp_path / "b")
    for name in ("ledger.csv", "snapshots/state_000005.csv"):
        assert (r1.directory / name).read_bytes() == (r2.directory / name).read_bytes()


def test_step_failure_exit_code(tmp_path):
    doc = _doc(tmp_path, inner={"grad_tol": 1e-30, "max_iter": 50})
    path = _write(tmp_path, "fail.json", doc)
    assert main(["run", path]) == 3
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["error"]["step"] == 1


def test_main_run(tmp_path, capsys):
    path = _write(tmp_path, "cfg.json", _doc(tmp_path))
    assert main(["run", path]) == 0
    assert capsys.readouterr().out.strip().endswith("out")


# ---------------------------------------------------------------------------
# sweep


def test_expand_sweep(tmp_path):
    raw = {"base": _doc(tmp_path), "grid": {"model.alpha": [0.75, 1.0], "time.tau": [1e-3, 2e-3]}}
    cells = expand_sweep(raw)
    assert len(cells) == 4
    assert {(c["model"]["alpha"], c["time"]["tau"]) for c in cells} == {(0.75, 1e-3), (0.75, 2e-3), (1.0, 1e-3), (1.0, 2e-3)}
    assert expand_sweep({"base": _doc(tmp_path), "grid": {}}) == []
    with pytest.raises(ConfigParse):
        expand_sweep({"base": {}, "grid": {}, "extra": 1})


def test_sweep_two_by_two(tmp_path):
    raw = {"base": _doc(tmp_path), "grid": {"model.alpha": [0.75, 1.0], "time.tau": [1e-3, 2e-3]}}
    root, rows = sweep(raw, threads=2, directory=tmp_path / "sw")
    assert len(rows) == 4
    lines = list(csv.reader((root / "sweep.csv").open()))
    assert lines[0][0] == "cell" and len(lines) == 5
    assert all(r[6] == "ok" for r in rows)


def test_sweep_empty_grid(tmp_path):
    path = _write(tmp_path, "sw.json", {"base": _doc(tmp_path), "grid": {}, "directory": str(tmp_path / "sw")})
    assert main(["sweep", path]) == 0
    assert (tmp_path / "sw" / "sweep.csv").read_text().splitlines()[1:] == []


def test_sweep_eq84_tracks_tolerance(tmp_path):
    raw = {"base": _doc(tmp_path, time={"schedule": "uniform", "tau": 1e-2, "steps": 3}),
           "grid": {"inner.grad_tol": [1e-2, 1e-4, 1e-6]}}
    _, rows = sweep(raw, directory=tmp_path / "sw")
    res = [float(r[10]) for r in rows]
    assert res[0] >= res[1] >= res[2]
    assert res[0] > res[2]


def test_sweep_reports_failed_cells(tmp_path):
    raw = {"base": _doc(tmp_path), "grid": {"model.alpha": [0.75, 1.5]}}
    _, rows = sweep(raw, directory=tmp_path / "sw")
    assert rows[0][6] == "ok"
    assert rows[1][6].startswith("failed")


# ---------------------------------------------------------------------------
# other subcommands


def test_validate_findim(tmp_path, capsys):
    path = _write(tmp_path, "fd.json", {"m": 1, "kappa": 1.0, "theta": 2.0, "u0": [1.0], "horizon": 1.0, "dt": 1e-4})
    assert main(["validate-findim", path]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["rate_V"] == pytest.approx(8.0, rel=0.01)


def test_rescale_check(tmp_path, capsys):
    path = _write(tmp_path, "rs.json", {"model": {"alpha": 0.75}, "n_points": 60, "tau": 1e-3, "steps": 20,
                                        "output": str(tmp_path / "rs")})
    assert main(["rescale-check", path]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["max_deviation"] <= 5e-3
    assert (tmp_path / "rs" / "rescale.csv").exists()


def test_profile_command(capsys):
    assert main(["profile", "1.0", "1.0", "1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["support_radius"] == pytest.approx((45 / 2) ** 0.2)
    assert main(["profile", "0.75", "0.0", "1"]) == 2
