import math

import numpy as np
import pytest
from scipy.linalg import expm

from lugre_lab import _backend
from lugre_lab.control import PidConfig, PrefilterConfig
from lugre_lab.observers import (
    Existing, Natural, Oracle, ProposedConstant, ProposedExponential, ProposedTimeVarying,
)
from lugre_lab.signals import Constant, Sinusoid, Step
from lugre_lab.sim import (
    CSV_COLUMNS, ConfigError, InitialConditions, ScenarioConfig, SimulationDiverged, Trajectory,
    integrate_step_rk4, run_closed_loop, run_open_loop_observer,
)

VELOCITY = dict(loop_kind="velocity", reference=Step(1.0), controller=PidConfig(1.6, 0.16))


def test_rk4_zero_derivative():
    x = np.array([1.0, -2.0])
    assert np.array_equal(integrate_step_rk4(lambda t, x: np.zeros(2), x, 0.1), x)


def test_rk4_scalar_decay():
    x1 = integrate_step_rk4(lambda t, x: -x, np.array([1.0]), 0.1)[0]
    assert x1 == pytest.approx(0.9048375, abs=1e-15)
    assert abs(x1 - math.exp(-0.1)) < 1e-7


def test_rk4_fourth_order_on_linear_system():
    A = np.array([[0.0, 1.0], [-4.0, -0.5]])
    x0 = np.array([1.0, 0.0])
    exact = expm(A * 1.0) @ x0

    def err(n):
        x = x0.copy()
        for _ in range(n):
            x = integrate_step_rk4(lambda t, x: A @ x, x, 1.0 / n)
        return np.linalg.norm(x - exact)

    ratio = err(20) / err(40)
    assert 14.0 < ratio < 18.0


def test_rk4_flags_divergence():
    with pytest.raises(SimulationDiverged):
        integrate_step_rk4(lambda t, x: np.array([np.inf]), np.array([0.0]), 0.1)


# frictionless PI velocity loop: w(t) from the matrix exponential of the
# closed loop, evaluated in 40-digit arithmetic
FRICTIONLESS_W = {0.001: 0.51679765270940462, 0.01: 0.99944241289631619,
                  0.1: 1.0001361878449694, 1.0: 1.0001244647778876}


def test_frictionless_pi_matches_linear_oracle():
    tr = run_closed_loop(ScenarioConfig(**VELOCITY, friction_enabled=False, duration=1.0))
    for t, w in FRICTIONLESS_W.items():
        i = int(round(t / 1e-5))
        assert tr.t[i] == pytest.approx(t)
        assert abs(tr["w"][i] - w) <= 1e-6


def test_oracle_compensation_reduces_to_frictionless():
    a = run_closed_loop(ScenarioConfig(**VELOCITY, friction_enabled=False, duration=0.5))
    b = run_closed_loop(ScenarioConfig(**VELOCITY, observer=Oracle(), compensation=True, duration=0.5))
    for col in ("theta", "w", "v", "track_err"):
        assert np.max(np.abs(a[col] - b[col])) <= 1e-9
    # the applied torque differs by exactly the cancelled friction
    np.testing.assert_allclose(b["u"] - b["F"], a["u"], atol=1e-9)


def test_compensated_beats_uncompensated_rmse():
    from lugre_lab.analysis import tracking_metrics
    base = dict(VELOCITY, duration=2.0, record_stride=10)
    unc = tracking_metrics(run_closed_loop(ScenarioConfig(**base)))
    comp = tracking_metrics(run_closed_loop(ScenarioConfig(
        **base, observer=ProposedConstant(-10.24, 22.0), compensation=True)))
    assert comp["rmse"] < unc["rmse"]


def test_position_prefilter_output():
    tr = run_closed_loop(ScenarioConfig(
        loop_kind="position", reference=Step(1.0), controller=PidConfig(15, 1.55),
        prefilter=PrefilterConfig(2.0, True), friction_enabled=False, duration=0.5, record_stride=100))
    assert tr["ref_filtered"][-1] == pytest.approx(0.63212055882855767, abs=1e-12)
    assert tr["ref_raw"][-1] == 1.0


def test_feedforward_uses_filtered_reference_derivative():
    tr = run_closed_loop(ScenarioConfig(
        loop_kind="velocity", reference=Sinusoid(1.0, 1.0), controller=PidConfig(0.0, 0.0),
        feedforward=True, friction_enabled=False, duration=0.25, record_stride=25))
    # with zero feedback the torque is J dr/dt exactly and the plant follows r
    t = tr.t
    np.testing.assert_allclose(tr["u"], 0.0022 * 2 * np.pi * np.cos(2 * np.pi * t), atol=1e-12)
    np.testing.assert_allclose(tr["w"], np.sin(2 * np.pi * t), atol=1e-9)


def test_open_loop_natural_frozen_at_rest():
    tr = run_open_loop_observer(Constant(0.0), Natural(), 0.5, 1e-5,
                                initial=InitialConditions(z_hat=-1e-3))
    assert np.all(tr["e_z"] == 1e-3)


def test_open_loop_constant_velocity_rate():
    tr = run_open_loop_observer(Constant(0.05), Natural(), 0.1, 1e-5,
                                initial=InitialConditions(z_hat=-1e-3), record_stride=100)
    expect = 1e-3 * np.exp(-45.61403508760816 * tr.t)
    np.testing.assert_allclose(tr["e_z"], expect, rtol=1e-9, atol=1e-18)


def test_open_loop_prescribed_velocity_is_exact():
    sig = Sinusoid(0.05, 1.0)
    tr = run_open_loop_observer(sig, Natural(), 1.0, 1e-5, record_stride=1000)
    np.testing.assert_allclose(tr["w"], sig(tr.t), rtol=0, atol=1e-15)
    assert np.all(np.isnan(tr["track_err"])) and np.all(np.isnan(tr["v"]))


def test_existing_observer_ignores_zero_error_in_open_loop():
    init = InitialConditions(z_hat=-1e-3)
    a = run_open_loop_observer(Constant(0.05), Natural(), 0.1, 1e-5, initial=init)
    b = run_open_loop_observer(Constant(0.05), Existing(0.35), 0.1, 1e-5, initial=init)
    np.testing.assert_array_equal(a["z_hat"], b["z_hat"])


def test_blank_columns_per_variant():
    tr = run_closed_loop(ScenarioConfig(**VELOCITY, duration=0.01))
    for col in ("z_hat", "w_hat", "F_hat", "e_z", "e_w", "e_f", "V", "V_dot"):
        assert np.all(np.isnan(tr[col]))
    tr = run_closed_loop(ScenarioConfig(**VELOCITY, observer=Natural(), compensation=True, duration=0.01))
    assert np.all(np.isnan(tr["w_hat"])) and not np.any(np.isnan(tr["z_hat"]))


def test_lyapunov_channels_filled_for_schedules_with_a_form(p, jp):
    sched = ProposedTimeVarying(A=260.0, C=0.0022, alpha=0.22)
    init = InitialConditions(z_hat=-1e-3, w_hat=-1e-2)
    tr = run_open_loop_observer(Sinusoid(0.05, 1.0), sched, 0.1, 1e-5, initial=init, record_stride=10)
    V0 = 260.0 * 1e-6 + 0.0022 * 1e-4
    assert tr["V"][0] == pytest.approx(V0)
    assert tr.meta["lyapunov"] == (260.0, 0.0, 0.0022)
    assert np.all(tr["V_dot"] <= 0.0)


def test_record_stride_decimates():
    tr = run_closed_loop(ScenarioConfig(**VELOCITY, duration=0.01, record_stride=10))
    assert len(tr) == 101
    assert tr.t[1] == pytest.approx(1e-4)


def test_divergence_is_reported():
    cfg = ScenarioConfig(loop_kind="velocity", controller=PidConfig(1e4, 0.0),
                         friction_enabled=False, duration=0.01)
    with pytest.raises(SimulationDiverged) as info:
        run_closed_loop(cfg)
    assert "diverged" in str(info.value) and info.value.t < 0.01


@pytest.mark.parametrize("kw,field", [
    (dict(dt=0.0), "dt"),
    (dict(dt=-1e-5), "dt"),
    (dict(dt=1e-3), "dt"),
    (dict(duration=1.5e-5), "duration"),
    (dict(loop_kind="torque"), "loop_kind"),
    (dict(record_stride=0), "record_stride"),
    (dict(controller=PidConfig(1.0, 1.0, Kd=1.0)), "controller.tf"),
    (dict(inner_controller=PidConfig(1.6, 0.16)), "inner_controller"),
    (dict(observer=ProposedExponential(1.0, 10.0, 1.0)), "dt"),
])
def test_invalid_config_names_field(kw, field):
    base = dict(VELOCITY, duration=0.1)
    base.update(kw)
    with pytest.raises(ConfigError) as info:
        ScenarioConfig(**base).validate()
    assert info.value.field == field


def test_open_loop_kind_rejected_by_closed_loop_runner():
    with pytest.raises(ConfigError):
        run_closed_loop(ScenarioConfig(loop_kind="open_loop_observer"))


def test_cascade_position_loop_runs():
    tr = run_closed_loop(ScenarioConfig(
        loop_kind="position", reference=Step(0.1), controller=PidConfig(15, 1.55),
        inner_controller=PidConfig(1.6, 0.16), prefilter=PrefilterConfig(2.0, True),
        friction_enabled=False, duration=3.0, record_stride=100))
    assert abs(tr["track_err"][-1]) < 0.01


def test_csv_round_trip(tmp_path):
    tr = run_closed_loop(ScenarioConfig(**VELOCITY, observer=Natural(), compensation=True,
                                        duration=0.01))
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    back = Trajectory.from_csv(path)
    for col in CSV_COLUMNS:
        np.testing.assert_array_equal(back[col], tr[col])


def test_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        Trajectory.from_csv(path)


@pytest.mark.skipif("cython" not in _backend.available(), reason="compiled kernel not built")
def test_backends_agree_bit_for_bit():
    cfg = ScenarioConfig(loop_kind="position", reference=Sinusoid(0.3, 1.0), controller=PidConfig(15, 1.55),
                         prefilter=PrefilterConfig(2.0, True), observer=ProposedConstant(-10.24, 22.0),
                         compensation=True, feedforward=True, duration=0.02)
    a = run_closed_loop(cfg, backend="cython")
    b = run_closed_loop(cfg, backend="python")
    for col in CSV_COLUMNS:
        np.testing.assert_array_equal(a[col], b[col])
    assert a.meta["backend"] == "cython" and b.meta["backend"] == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.load("fortran")


def test_friction_error_identity_along_natural_run(p):
    tr = run_open_loop_observer(Sinusoid(0.05, 1.0), Natural(), 0.5, 1e-5,
                                initial=InitialConditions(z_hat=-1e-3), record_stride=10)
    w, ez = tr["w"], tr["e_z"]
    r = np.abs(w) / (p.Fc + (p.Fs - p.Fc) * np.exp(-(w / p.ws) ** 2))
    dez = -p.sigma0 * r * ez
    np.testing.assert_allclose(tr["e_f"], p.sigma0 * ez + p.sigma1 * dez, rtol=1e-9, atol=1e-15)
    # substituted form carries sigma1 inside the bracket
    np.testing.assert_allclose(tr["e_f"], p.sigma0 * (1 - p.sigma1 * r) * ez, rtol=1e-9, atol=1e-15)


def test_coast_down_dissipates_while_sliding(p):
    from lugre_lab.model import steady_state_deflection
    cfg = ScenarioConfig(loop_kind="velocity", reference=Constant(0.0), controller=PidConfig(0.0, 0.0),
                         duration=0.05,
                         initial=InitialConditions(w=0.5, z=float(steady_state_deflection(0.5, p))))
    tr = run_closed_loop(cfg)
    assert np.all(tr["u"] == 0.0)
    sliding = np.nonzero(tr["w"] <= 0)[0][0]
    ke = 0.5 * 0.0022 * tr["w"][:sliding] ** 2
    assert np.all(np.diff(ke) <= 0.0)
    assert np.max(np.abs(tr["w"][-100:])) < 1e-3
