"""Acceptance criteria, one test (and one report line) per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the collected PASS/FAIL
lines are printed in the "acceptance criteria" section of the summary.
Lines tagged INFO compare the other controller on the same check and are
not asserted.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from fosmc_gyro.cli_io import main, read_telemetry_csv
from fosmc_gyro.cli_io.config import PRESETS, dumps_config, load_preset, loads_config
from fosmc_gyro.frac_calc import SampledHistory, differint, gl_weights
from fosmc_gyro.plant import PAPER_PHYSICAL, nondimensionalize
from fosmc_gyro.sim import DisturbanceSpec, compute_metrics, reference, run

DT = 1e-3
BAND = 0.05


def test_c1_nondimensionalization(acceptance_report):
    p = nondimensionalize(PAPER_PHYSICAL)
    table = {"wx2": 355.3, "wy2": 532.9, "wxy": 70.99, "d_xx": 0.01, "d_yy": 0.01, "d_xy": 0.002, "omega_z": 0.1}
    rel = {k: abs(getattr(p, k) - v) / v for k, v in table.items()}
    worst = max(rel, key=rel.get)
    ok = all(r <= 1e-3 for r in rel.values())
    acceptance_report("1 nondimensionalization", ok, f"worst {worst} rel err {rel[worst]:.2e} (tol 1e-3)")
    assert ok


def _ramp_power(p, dt):
    n = int(round(1 / dt)) + 1
    h = SampledHistory(dt, n)
    for v in np.linspace(0, 1, n) ** p:
        h.append(v)
    return h


def test_c2_gl_oracles(acceptance_report):
    t0 = time.perf_counter()
    h1 = _ramp_power(1.0, 1e-4)
    h2 = _ramp_power(2.0, 1e-4)
    d05 = differint(h1, gl_weights(0.5, len(h1)))
    d15 = differint(h2, gl_weights(1.5, len(h2)))
    e05 = abs(d05 - 2 / math.sqrt(math.pi)) / (2 / math.sqrt(math.pi))
    e15 = abs(d15 - math.gamma(3) / math.gamma(1.5)) / (math.gamma(3) / math.gamma(1.5))
    rng = np.random.default_rng(2024)
    dt = 2.0**-8
    f = rng.integers(-1000, 1000, 16).astype(float)
    h = SampledHistory(dt, 16)
    for v in f:
        h.append(v)
    bd_ok = (
        differint(h, gl_weights(1.0, 16)) == (f[-1] - f[-2]) / dt
        and differint(h, gl_weights(2.0, 16)) == (f[-1] - 2 * f[-2] + f[-3]) / dt**2
        and gl_weights(1.0, 5).weights.tolist() == [1, -1, 0, 0, 0]
        and gl_weights(2.0, 5).weights.tolist() == [1, -2, 1, 0, 0]
    )
    secs = time.perf_counter() - t0
    ok = e05 < 0.01 and e15 < 0.02 and bd_ok
    acceptance_report(
        "2 GL oracles",
        ok,
        f"D^0.5 t rel err {e05:.2e} (tol 1e-2), D^1.5 t^2 rel err {e15:.2e} (tol 2e-2), "
        f"integer orders exact={bd_ok}, {secs:.2f} s (budget 5 s)",
    )
    assert ok


@pytest.fixture(scope="module")
def stc_pair(paper_runs):
    a, b = paper_runs.get(("paper_fosmc_stc", DT, {}), ("paper_fosmc_stc", DT / 2, {}))
    secs = paper_runs.seconds("paper_fosmc_stc", DT) + paper_runs.seconds("paper_fosmc_stc", DT / 2)
    return a, b, secs


def test_c3a_tracking_band(stc_pair, acceptance_report):
    tel, _, _ = stc_pair
    m = compute_metrics(tel, BAND)
    ok = bool(np.all(m.settled) and np.all(m.settling_time <= 10.0))
    acceptance_report(
        "3a band entry within 10 (paper_fosmc_stc)",
        ok,
        f"settling time x={m.settling_time[0]:.3f}, y={m.settling_time[1]:.3f} "
        f"(band +-{BAND}, limit 10); final-third max|e| = {np.abs(tel.e[2 * len(tel) // 3:]).max(axis=0).round(4).tolist()}",
    )
    assert ok


def test_c3b_self_convergence(stc_pair, acceptance_report):
    a, b, secs = stc_pair
    assert len(b) == 2 * len(a)
    np.testing.assert_allclose(b.t[::2], a.t, rtol=0, atol=1e-9)
    rel = {}
    for name in ("q", "qdot", "e"):
        x, y = getattr(a, name), getattr(b, name)[::2]
        rel[name] = float(np.sqrt(np.mean((x - y) ** 2)) / np.sqrt(np.mean(x**2)))
    # final-time state against the run's RMS state size
    xa = np.concatenate([a.q[-1], a.qdot[-1]])
    xb = np.concatenate([b.q[-1], b.qdot[-1]])
    scale = np.sqrt(np.mean(np.concatenate([a.q, a.qdot], axis=1) ** 2))
    rel["final state"] = float(np.linalg.norm(xa - xb) / math.sqrt(4) / scale)
    ok = all(v < 0.05 for v in rel.values())
    detail = ", ".join(f"{k} {v:.2e}" for k, v in rel.items())
    acceptance_report("3b dt vs dt/2 telemetry", ok, f"RMS rel diff {detail} (tol 5e-2); both runs {secs:.1f} s (budget 30 s)")
    assert ok


def test_c3b_self_convergence_breakdown_info(stc_pair, acceptance_report):
    a, b, _ = stc_pair
    late = a.t >= 5.0

    def rel(x, y, mask=slice(None)):
        return float(np.sqrt(np.mean((x[mask] - y[mask]) ** 2)) / np.sqrt(np.mean(x[mask] ** 2)))

    # mean velocity over each coarse step, exact on both grids
    va = np.diff(a.q, axis=0) / DT
    vb = np.diff(b.q[::2], axis=0) / DT
    detail = (
        f"qdot t>=5 {rel(a.qdot, b.qdot[::2], late):.2e}, u_total all {rel(a.u_total, b.u_total[::2]):.2e}, "
        f"u_total t>=5 {rel(a.u_total, b.u_total[::2], late):.2e}, step-mean velocity all {rel(va, vb):.2e}"
    )
    ok = rel(a.qdot, b.qdot[::2], late) < 0.05
    acceptance_report("3b breakdown (transient excluded / averaged)", ok, detail, informational=True)


@pytest.fixture(scope="module")
def paper_pair(paper_runs, stc_pair):
    (fos,) = paper_runs.get(("paper_fosmc", DT, {}))
    return compute_metrics(fos, BAND), compute_metrics(stc_pair[0], BAND)


def test_c4_chattering_ordering(paper_pair, acceptance_report):
    mf, ms = paper_pair
    ratio = ms.chattering_index / mf.chattering_index
    ok = bool(np.all(ms.chattering_index < mf.chattering_index))
    acceptance_report(
        "4 chattering STC < FOSMC",
        ok,
        f"FOSMC {mf.chattering_index.round(3).tolist()}, FOSMC_STC {ms.chattering_index.round(3).tolist()}, "
        f"ratio x={ratio[0]:.7f} y={ratio[1]:.7f}",
    )
    assert ok


def test_c5_overshoot_ordering(paper_pair, acceptance_report):
    mf, ms = paper_pair
    ok = bool(np.all(ms.max_overshoot <= mf.max_overshoot))
    acceptance_report(
        "5 overshoot STC <= FOSMC",
        ok,
        f"FOSMC {mf.max_overshoot.round(5).tolist()}, FOSMC_STC {ms.max_overshoot.round(5).tolist()}",
    )
    assert ok


def _lyapunov_checks(tel):
    after = tel.t > 5.0
    frac = float(np.mean(tel.Vdot[after] <= 1e-3))
    n = len(tel)
    first, last = tel.V[: n // 3].mean(), tel.V[-(n // 3):].mean()
    bounded = bool(np.all(np.isfinite(tel.V)) and tel.V[after].max() <= tel.V[0])
    ok = frac >= 0.99 and bounded and last < first
    return ok, f"Vdot<=1e-3 on {100 * frac:.2f}% after t=5 (need 99%), max V after t=5 {tel.V[after].max():.3g} <= V(0) {tel.V[0]:.3g}: {bounded}, mean V first third {first:.3g} -> final third {last:.3g}"


def test_c6_lyapunov(paper_runs, acceptance_report):
    (tel,) = paper_runs.get(("paper_known_disturbance", DT, {}))
    ok, detail = _lyapunov_checks(tel)
    acceptance_report(f"6 Lyapunov (paper_known_disturbance, {load_preset('paper_known_disturbance').controller})", ok, detail)
    assert ok


def test_c6_lyapunov_compound_law_info(paper_runs, acceptance_report):
    (tel,) = paper_runs.get(("paper_known_disturbance", DT, {"controller": "FOSMC_STC"}))
    ok, detail = _lyapunov_checks(tel)
    acceptance_report("6 Lyapunov, same preset with FOSMC_STC", ok, detail, informational=True)


def _perfect_start(**kw):
    _, qd0, _ = reference(0.0)
    return {"q0": (0.0, 0.0), "qdot0": tuple(float(v) for v in qd0), **kw}


@pytest.mark.parametrize("disturbance", ["none", "preset"])
def test_c7_perfect_start(paper_runs, acceptance_report, disturbance):
    kw = _perfect_start()
    if disturbance == "none":
        kw["disturbance"] = DisturbanceSpec()
    (tel,) = paper_runs.get(("paper_known_disturbance", DT, kw))
    err = float(np.abs(tel.e).max())
    ok = err <= 1e-6
    acceptance_report(f"7 perfect start, known mode, E={disturbance}", ok, f"max|e| = {err:.3e} over T=60 (tol 1e-6)")
    assert ok


def test_c7_perfect_start_compound_law_info(paper_runs, acceptance_report):
    (tel,) = paper_runs.get(("paper_known_disturbance", DT, _perfect_start(controller="FOSMC_STC", disturbance=DisturbanceSpec())))
    err = float(np.abs(tel.e).max())
    acceptance_report("7 perfect start with FOSMC_STC", err <= 1e-6, f"max|e| = {err:.3e} (tol 1e-6)", informational=True)


def test_c8_determinism_and_round_trips(tmp_path, acceptance_report):
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [main(["simulate", "paper_fosmc_stc", "--out", str(o)]) for o in outs]
    csv_a, csv_b = ((o / "telemetry.csv").read_bytes() for o in outs)
    identical = csv_a == csv_b
    cfg = load_preset("paper_fosmc_stc")
    rows = csv_a.count(b"\n") - 1
    back = read_telemetry_csv(outs[0] / "telemetry.csv")
    fresh = run(cfg)
    csv_exact = all(
        np.array_equal(getattr(back, f), getattr(fresh, f))
        for f in ("t", "q", "q_d", "e", "qdot", "s", "u_total", "u_eq", "u_s", "u_stc", "V", "Vdot")
    )
    cfg_trip = all(loads_config(dumps_config(load_preset(n))) == load_preset(n) for n in PRESETS)
    ok = codes == [0, 0] and identical and rows == cfg.n_steps and csv_exact and cfg_trip
    acceptance_report(
        "8 determinism and round trips",
        ok,
        f"exit codes {codes}, byte-identical CSV={identical}, rows={rows} (T/dt={cfg.n_steps}), "
        f"CSV round trip exact={csv_exact}, config round trip={cfg_trip}",
    )
    assert ok
