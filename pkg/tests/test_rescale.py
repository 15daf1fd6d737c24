from __future__ import annotations

import math

import numpy as np
import pytest

from infoflow import (
    Functional,
    JkoConfig,
    Partition,
    derive_params,
    dilate,
    discrete_equilibrium,
    jko_step,
    run_trajectory,
    wasserstein_distance,
)
from infoflow.cli import make_initial
from infoflow.errors import NegativeStep
from infoflow.rescale import (
    _with_lambda,
    build_schedule,
    continuous_time_map,
    correspondence_run,
    intermediate_asymptotics_report,
    minimizer_rescaling_check,
    rescaled_parameters,
    write_asymptotics_csv,
)


def test_schedule_small_example():
    p = derive_params(1.0, 1.0)
    sch = build_schedule(Partition.uniform(0.1, 2), p)
    assert sch.S[2] == pytest.approx(1.21, rel=1e-15)
    assert sch.etas[1] == pytest.approx(0.1 * 1.1 * 1.21 ** 4, rel=1e-14)
    assert sch.etas[1] == pytest.approx(0.235795, abs=1e-6)


def test_schedule_invariants():
    p = derive_params(0.75, 1.0)
    tau = 1e-2
    sch = build_schedule(Partition.uniform(tau, 300), p)
    assert np.all(np.diff(sch.S) > 0) and np.all(sch.etas > 0)
    np.testing.assert_allclose(sch.S, (1 + tau) ** np.arange(301), rtol=1e-13)
    ts = np.linspace(0, sch.t_times[-1], 1001)
    assert np.all(np.diff(sch.L(ts)) > 0)
    np.testing.assert_allclose(sch.L(sch.t_times), sch.s_times)
    assert sch.partition.steps == 300


def test_schedule_continuous_limit():
    p = derive_params(1.0, 1.0)
    s_err, l_err = [], []
    for tau in (1e-1, 1e-2, 1e-3):
        steps = int(round(1.0 / tau))
        sch = build_schedule(Partition.uniform(tau, steps), p)
        s_err.append(np.max(np.abs(sch.S - np.exp(sch.t_times))))
        l_err.append(abs(sch.s_times[-1] / continuous_time_map(1.0, p.delta) - 1))
    assert s_err[0] > s_err[1] > s_err[2]
    assert l_err[0] > l_err[1] > l_err[2]
    assert l_err[2] < 1e-2


def test_rescaled_parameters_cases():
    tau, lam, delta = 1e-2, 1.0, 3.0
    tau_t, lam_t = rescaled_parameters(tau, lam, 1.0, 1 + lam * tau, delta)
    assert lam_t == 0.0
    assert tau_t == pytest.approx(tau * (1 + lam * tau) ** (delta + 1))
    S = 1.3
    tau_t, lam_t = rescaled_parameters(tau, lam, S, S, delta)
    assert tau_t == pytest.approx(tau * S ** (delta + 2))
    assert lam_t == pytest.approx((S * (1 + lam * tau) - S) / (tau * S ** (delta + 2) * S))
    assert lam_t == pytest.approx(lam / S ** (delta + 2))
    with pytest.raises(NegativeStep):
        rescaled_parameters(-1e-3, lam, 1.0, 1.0, delta)


@pytest.mark.parametrize("alpha", [0.75, 1.0])
@pytest.mark.parametrize("S,R", [(1.0, 1.001), (1.2, 1.3)])
def test_minimizer_rescaling(alpha, S, R):
    p = derive_params(alpha, 1.0)
    cfg = JkoConfig()
    prev = make_initial({"kind": "perturbed_barenblatt", "amplitude": 0.1, "seed": 3}, 100, p)
    assert minimizer_rescaling_check(prev, 1e-3, S, R, p, cfg) <= 10 * cfg.inner_grad_tol


def test_rescaling_residual_is_equivariant():
    p = derive_params(0.75, 1.0)
    prev = make_initial({"kind": "perturbed_barenblatt", "amplitude": 0.1, "seed": 4}, 80, p)
    tau, S, R = 1e-3, 1.1, 1.25
    tau_t, lam_t = rescaled_parameters(tau, p.lam, S, R, p.delta)
    m, _ = jko_step(prev, tau, Functional.FOURTH_ORDER, p)
    mt, _ = jko_step(dilate(prev, S), tau_t, Functional.FOURTH_ORDER, _with_lambda(p, lam_t))
    forward = wasserstein_distance(dilate(m, R), mt)
    backward = wasserstein_distance(m, dilate(mt, 1 / R))
    assert forward == pytest.approx(R * backward, rel=1e-6, abs=1e-15)
    assert mt.total_mass == 1.0


def test_correspondence_requires_unit_confinement():
    with pytest.raises(ValueError):
        correspondence_run(discrete_equilibrium(derive_params(1.0, 2.0), 20), Partition.uniform(1e-3, 1),
                           derive_params(1.0, 2.0))


def test_correspondence_empty():
    p = derive_params(0.75, 1.0)
    res = correspondence_run(discrete_equilibrium(p, 20), Partition.uniform(1e-3, 0), p)
    assert res.max_deviation == 0.0


def test_correspondence_short_run(tmp_path):
    p = derive_params(0.75, 1.0)
    initial = make_initial({"kind": "double_bump"}, 100, p)
    res = correspondence_run(initial, Partition.uniform(1e-3, 50), p)
    assert res.max_deviation <= 5e-3
    path = tmp_path / "corr.csv"
    res.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,t,s,S,W2_deviation" and len(lines) == 52


def test_correspondence_tracks_inner_tolerance():
    p = derive_params(0.75, 1.0)
    initial = make_initial({"kind": "double_bump"}, 200, p)
    part = Partition.uniform(1e-3, 50)
    tols = (1e-3, 5e-4, 2.5e-4)
    devs = [correspondence_run(initial, part, p, JkoConfig(inner_grad_tol=tol)).max_deviation for tol in tols]
    assert devs[0] > devs[1] > devs[2]
    assert all(d <= part.steps * tol for d, tol in zip(devs, tols))


def test_correspondence_decreases_across_decades():
    p = derive_params(0.75, 1.0)
    initial = make_initial({"kind": "double_bump"}, 100, p)
    part = Partition.uniform(1e-3, 50)
    devs = [correspondence_run(initial, part, p, JkoConfig(inner_grad_tol=tol)).max_deviation
            for tol in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(a > b for a, b in zip(devs, devs[1:]))


@pytest.mark.parametrize("alpha", [0.75, 1.0])
def test_self_similar_start_tracks_profile(alpha, tmp_path):
    p = derive_params(alpha, 0.0)
    initial = discrete_equilibrium(derive_params(alpha, 1.0), 100)
    traj = run_trajectory(initial, Partition.uniform(1e-3, 200), "fourth_order", p, JkoConfig(snapshot_every=50))
    rows = intermediate_asymptotics_report(traj, p)
    assert [r.t for r in rows] == pytest.approx([0.0, 0.05, 0.1, 0.15, 0.2])
    assert max(r.scaled_gap for r in rows) <= 5e-2
    assert rows[-1].R == pytest.approx((1 + (p.delta + 2) * 0.2) ** (1 / (p.delta + 2)))
    if alpha == 1.0:
        assert all(r.w12_gap is not None for r in rows)
    path = tmp_path / "asym.csv"
    write_asymptotics_csv(rows, path)
    head = path.read_text().splitlines()[0].split(",")
    assert head[:4] == ["t", "R", "l1_gap", "scaled_gap"]
    assert ("w12_gap" in head) == (alpha == 1.0)


def test_asymptotics_rejects_confined_runs():
    p = derive_params(0.75, 1.0)
    traj = run_trajectory(discrete_equilibrium(p, 20), Partition.uniform(1e-3, 1), "fourth_order", p)
    with pytest.raises(ValueError):
        intermediate_asymptotics_report(traj, p)


def test_time_map_closed_form():
    assert continuous_time_map(0.0, 3.0) == 0.0
    assert continuous_time_map(1.0, 3.0) == pytest.approx((math.exp(5) - 1) / 5)
