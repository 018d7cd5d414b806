import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fosmc_gyro.sim import (
    ConfigError,
    DisturbanceSpec,
    ReferenceSpec,
    SimConfig,
    SimulationAborted,
    Telemetry,
    compare,
    compute_metrics,
    reference,
    run,
)


def test_reference_at_zero():
    q_d, qd, qdd = reference(0.0)
    np.testing.assert_array_equal(q_d, [0.0, 0.0])
    np.testing.assert_allclose(qd, [4.17, 6.132], rtol=1e-15)
    np.testing.assert_array_equal(qdd, [0.0, 0.0])


@given(st.floats(0, 1e3))
def test_reference_harmonic_identity(t):
    q_d, _, qdd = reference(t)
    np.testing.assert_allclose(qdd, -np.array([4.17, 5.11]) ** 2 * q_d, rtol=1e-12, atol=1e-12)


def test_reference_quarter_period():
    q_d, qd, _ = reference(math.pi / (2 * 4.17))
    assert q_d[0] == pytest.approx(1.0, rel=1e-15)
    assert qd[0] == pytest.approx(0.0, abs=1e-14)


def test_reference_is_analytic_derivative():
    spec = ReferenceSpec((0.7, 1.3), (2.0, 3.5))
    t, h = 0.81, 1e-6
    q_p, qd_p, _ = reference(t + h, spec)
    q_m, qd_m, _ = reference(t - h, spec)
    _, qd, qdd = reference(t, spec)
    np.testing.assert_allclose((q_p - q_m) / (2 * h), qd, rtol=1e-8)
    np.testing.assert_allclose((qd_p - qd_m) / (2 * h), qdd, rtol=1e-7)


class TestConfig:
    @pytest.mark.parametrize(
        "kw, key",
        [
            ({"dt": -1.0}, "dt"),
            ({"horizon": 0.0}, "horizon"),
            ({"dt": 2.0, "horizon": 1.0}, "dt"),
            ({"controller": "PID"}, "controller"),
            ({"u_max": 0.0}, "u_max"),
            ({"memory_len": 0}, "memory_len"),
            ({"disturbance_mode": "maybe"}, "disturbance_mode"),
            ({"q0": (0.0,)}, "q0"),
            ({"nondim": None, "physical": None}, "plant"),
        ],
    )
    def test_rejects(self, kw, key):
        with pytest.raises(ConfigError) as info:
            SimConfig(**kw).validate()
        assert info.value.key == key
        assert str(info.value).startswith(key)

    def test_steps(self):
        assert SimConfig().n_steps == 60000

    def test_equality(self):
        assert SimConfig() == SimConfig()
        assert SimConfig() != SimConfig(dt=2e-3)


def short(**kw):
    kw.setdefault("horizon", 2.0)
    return SimConfig(**kw)


class TestRun:
    def test_record_count_and_clock(self):
        tel = run(short())
        assert len(tel) == 2000
        np.testing.assert_array_equal(tel.t, np.arange(2000) * 1e-3)

    def test_self_consistency(self):
        tel = run(short())
        np.testing.assert_array_equal(tel.e, tel.q - tel.q_d)
        for rec in list(tel)[::97]:
            assert rec.V == 0.5 * float(rec.s @ rec.s)
            np.testing.assert_array_equal(rec.e, rec.q - rec.q_d)

    def test_deterministic(self):
        a, b = run(short(horizon=1.0)), run(short(horizon=1.0))
        for name in ("t", "q", "qdot", "e", "s", "u_total", "u_eq", "u_s", "u_stc", "V", "Vdot"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    @pytest.mark.parametrize("dist", [DisturbanceSpec(), DisturbanceSpec((0.5, 0.5), (1.7, 2.3))])
    def test_perfect_start_known(self, dist):
        _, qd0, _ = reference(0.0)
        cfg = short(horizon=5.0, controller="FOSMC", q0=(0.0, 0.0), qdot0=tuple(qd0), disturbance_mode="known", disturbance=dist)
        assert np.max(np.abs(run(cfg).e)) <= 1e-6

    def test_compound_law_leaves_perfect_start(self):
        # sign(e) reacts to the O(1e-10) hold residual and the STC integral
        # pumps it into a limit cycle of order 1e-2; exact arithmetic would stay at 0
        _, qd0, _ = reference(0.0)
        cfg = short(horizon=5.0, controller="FOSMC_STC", q0=(0.0, 0.0), qdot0=tuple(qd0), disturbance_mode="known")
        e = np.abs(run(cfg).e)
        assert e[1].max() < 1e-8
        assert e.max() > 1e-3

    def test_saturation(self):
        tel = run(short(horizon=0.5, u_max=50.0))
        assert np.max(np.abs(tel.u_total)) <= 50.0
        assert np.max(np.abs(tel.u_total)) == 50.0

    def test_abort_reports_step_and_control(self):
        with pytest.raises(SimulationAborted) as info:
            run(short(horizon=5.0, scheme="explicit", prehistory="zero"))
        assert info.value.step > 0
        assert info.value.last_u is not None
        assert "step" in str(info.value)


def _tel(n, dt=0.01, u=None, e=None):
    t = np.arange(n) * dt
    z = np.zeros((n, 2))
    return Telemetry.from_arrays(
        t=t, V=np.zeros(n), Vdot=np.zeros(n), q=z, q_d=z, e=z if e is None else e, qdot=z, s=z,
        u_total=z if u is None else u, u_eq=z, u_s=z, u_stc=z,
    )


class TestMetrics:
    def test_constant_control(self):
        m = compute_metrics(_tel(100, u=np.full((100, 2), 3.0)))
        np.testing.assert_array_equal(m.chattering_index, [0.0, 0.0])

    def test_zero_error(self):
        m = compute_metrics(_tel(100))
        np.testing.assert_array_equal(m.rms_error, [0.0, 0.0])
        np.testing.assert_array_equal(m.settling_time, [0.0, 0.0])
        assert m.settled.all()

    def test_square_wave(self):
        dt, n = 1e-3, 20000
        t = np.arange(n) * dt
        # half-sample phase offset keeps every edge away from a sample instant
        sq = np.where(np.floor((t + 0.5 * dt) / 0.05) % 2 == 0, 1.0, 0.0)
        window = (n - n // 2) * dt
        edges = np.count_nonzero(np.diff(sq[n // 2:]))
        assert edges == pytest.approx(2 * window / 0.1, abs=1)
        # unit jumps, two per 0.1 period: 2 * (W / 0.1) / W = 20
        m = compute_metrics(_tel(n, dt, u=np.column_stack([sq, sq])))
        np.testing.assert_allclose(m.chattering_index, edges / window, rtol=1e-12)
        np.testing.assert_allclose(m.chattering_index, 20.0, atol=1.0 / window)
        # a +-1 wave has jumps of 2, so the index doubles
        m2 = compute_metrics(_tel(n, dt, u=np.column_stack([2 * sq - 1, sq])))
        np.testing.assert_allclose(m2.chattering_index, [2 * edges / window, edges / window], rtol=1e-12)

    def test_overshoot_and_settling(self):
        n, dt = 1000, 0.01
        t = np.arange(n) * dt
        ex = 0.5 * np.exp(-t) * np.cos(3 * t)
        m = compute_metrics(_tel(n, dt, e=np.column_stack([ex, np.full(n, 0.2)])), band=0.05)
        first = int(np.flatnonzero(np.sign(ex) != np.sign(ex[0]))[0])
        assert m.max_overshoot[0] == pytest.approx(np.abs(ex[first:]).max())
        last_out = int(np.flatnonzero(np.abs(ex) > 0.05)[-1])
        assert m.settling_time[0] == pytest.approx(t[last_out + 1])
        assert m.max_overshoot[1] == 0.0
        assert not m.settled[1] and math.isinf(m.settling_time[1])

    def test_rejects_short(self):
        with pytest.raises(ValueError):
            compute_metrics(_tel(1))
        with pytest.raises(ValueError):
            compute_metrics(_tel(0))


class TestCompare:
    def test_identical_configs(self):
        cmp = compare(short(horizon=1.0), short(horizon=1.0))
        assert all(v == 0.0 for v in cmp.deltas.values())

    def test_rejects_mismatch(self):
        with pytest.raises(ValueError, match="reference"):
            compare(short(), short(reference=ReferenceSpec((1.0, 1.0), (4.17, 5.11))))
        from fosmc_gyro.plant import PAPER_PHYSICAL

        with pytest.raises(ValueError, match="plant"):
            compare(short(), short(physical=replace(PAPER_PHYSICAL, angular_rate=50.0)))
        with pytest.raises(ValueError, match="dt"):
            compare(short(), short(dt=2e-3))


def _crossings(x):
    s = np.sign(x)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def test_reference_frequency_content(paper_runs):
    (tel,) = paper_runs.get(("paper_fosmc_stc", 1e-3, {}))
    m = compute_metrics(tel)
    for i, w in enumerate((4.17, 5.11)):
        start = float(m.settling_time[i])
        period = 2 * math.pi / w
        sel = (tel.t >= start) & (tel.t < start + 10 * period)
        assert tel.t[-1] >= start + 10 * period
        got = _crossings(tel.q[sel, i])
        assert abs(got - 20) <= 1


def test_dt_convergence_of_final_third(paper_runs):
    a, b = paper_runs.get(("paper_fosmc_stc", 1e-3, {}), ("paper_fosmc_stc", 5e-4, {}))

    def final_rms(tel):
        k = 2 * len(tel) // 3
        return np.sqrt(np.mean(tel.e[k:] ** 2, axis=0))

    assert np.all(final_rms(b) <= final_rms(a) * 1.01)
