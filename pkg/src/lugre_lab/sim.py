"""Closed-loop and prescribed-velocity simulation on a fixed RK4 grid.

Plant, observer, controller and pre-filter states are integrated together as
one continuous state vector so the whole loop keeps fourth-order accuracy.
The inner loop lives in the kernel chosen by ``_backend``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _backend
from ._layout import (
    I_CASCADE, I_COMP, I_FF, I_FRIC, I_K1MODE, I_K2MODE, I_LOOP, I_OBS, I_PREF, I_REF,
    LOOP_POSITION, LOOP_PRESCRIBED, LOOP_VELOCITY, NIPRM, NPRM, NX,
    OBS_EXISTING, OBS_NATURAL, OBS_NONE, OBS_ORACLE, OBS_PROPOSED, P_A,
    P_ALPHA, P_C, P_J, P_K1, P_K2, P_KD, P_KEX, P_KI, P_KII, P_KP, P_KPI, P_OBS, P_PLANT,
    P_POLE, P_REF, P_TAU, P_TF, REC_COLUMNS, X_DFILT, X_IFILT, X_INT, X_PREF,
    X_IINT, X_THETA, X_W, X_WH, X_Z, X_ZH, DIVERGENCE_LIMIT,
)
from .control import PidConfig, PrefilterConfig
from .model import TABLE1_FRICTION, TABLE1_PLANT, FrictionParams, PlantParams
from .observers import (
    Existing, Natural, NoObserver, Oracle, ProposedBounded, ProposedConstant,
    ProposedExponential, ProposedTimeVarying, error_dynamics_matrix,
)
from .signals import Step

CSV_COLUMNS = ("t", "theta", "w", "z", "z_hat", "w_hat", "F", "F_hat", "u", "v",
               "e_z", "e_w", "e_f", "ref_raw", "ref_filtered", "track_err", "V", "V_dot")

LOOP_KINDS = {"velocity": LOOP_VELOCITY, "position": LOOP_POSITION,
              "open_loop_observer": LOOP_PRESCRIBED}

# explicit RK4 is stable for |lambda| dt up to about 2.78 on the real axis and
# 2.83 on the imaginary axis; keep a margin
RK4_STABILITY = 2.5
MAX_DT_WITH_FRICTION = 1e-4


class ConfigError(ValueError):
    """Scenario configuration is invalid; ``field`` names the culprit."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class SimulationDiverged(RuntimeError):
    def __init__(self, t, state):
        self.t = t
        self.state = np.asarray(state)
        names = ("theta", "w", "z", "z_hat", "w_hat", "integrator", "filter_state",
                 "prefilter_state", "deriv_state", "inner_integrator")
        snap = ", ".join(f"{n}={v:.6g}" for n, v in zip(names, self.state))
        super().__init__(f"simulation diverged at t={t:.6g} s: {snap}")


@dataclass(frozen=True)
class InitialConditions:
    theta: float = 0.0
    w: float = 0.0
    z: float = 0.0
    z_hat: float = 0.0
    w_hat: float = 0.0
    integrator: float = 0.0
    filter_state: float = 0.0
    prefilter_state: float = 0.0
    inner_integrator: float = 0.0


ObserverSchedule = Union[NoObserver, Natural, Existing, Oracle, ProposedConstant,
                         ProposedTimeVarying, ProposedBounded, ProposedExponential]


@dataclass(frozen=True)
class ScenarioConfig:
    loop_kind: str = "velocity"
    reference: object = field(default_factory=Step)
    plant: PlantParams = TABLE1_PLANT
    friction: FrictionParams = TABLE1_FRICTION
    observer: ObserverSchedule = field(default_factory=NoObserver)
    # None means the observer uses the plant's friction parameters
    observer_friction: Optional[FrictionParams] = None
    controller: PidConfig = field(default_factory=lambda: PidConfig(Kp=1.6, Ki=0.16))
    # position loop only: when set, the position PI commands a velocity that
    # this inner PI tracks, instead of commanding torque directly
    inner_controller: Optional[PidConfig] = None
    prefilter: PrefilterConfig = field(default_factory=PrefilterConfig)
    feedforward: bool = False
    compensation: bool = False
    friction_enabled: bool = True
    dt: float = 1e-5
    duration: float = 1.0
    initial: InitialConditions = field(default_factory=InitialConditions)
    record_stride: int = 1
    # None, "auto" (take A, B, C from the gain schedule) or a LyapunovSpec
    lyapunov: object = None
    name: str = "scenario"

    @property
    def obs_friction(self) -> FrictionParams:
        return self.observer_friction or self.friction

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def validate(self):
        if self.loop_kind not in LOOP_KINDS:
            raise ConfigError("loop_kind", f"must be one of {sorted(LOOP_KINDS)}")
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("dt", f"must be positive, got {self.dt!r}")
        if not (math.isfinite(self.duration) and self.duration >= self.dt):
            raise ConfigError("duration", "must be at least one step long")
        if self.friction_enabled and self.dt > MAX_DT_WITH_FRICTION:
            raise ConfigError("dt", f"must be <= {MAX_DT_WITH_FRICTION:g} s with friction on "
                                    "(bristle dynamics are stiff)")
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise ConfigError("record_stride", "must be a positive integer")
        if abs(self.n_steps * self.dt - self.duration) > 1e-9 * max(1.0, self.duration):
            raise ConfigError("duration", "must be an integer multiple of dt")
        c = self.controller
        ic = self.inner_controller
        if ic is not None:
            if self.loop_kind != "position":
                raise ConfigError("inner_controller", "only a position loop can be cascaded")
            if ic.Kd or ic.tau:
                raise ConfigError("inner_controller", "inner loop is a plain PI (Kd = tau = 0)")
        if c.Kd > 0 and c.tf <= 0:
            raise ConfigError("controller.tf", "derivative action needs a smoothing time constant")
        for name, tc in (("controller.tau", c.tau), ("controller.tf", c.tf)):
            if tc > 0 and self.dt / tc > RK4_STABILITY:
                raise ConfigError(name, f"time constant {tc:g} s is too small for dt={self.dt:g} s")
        if self.prefilter.enabled and self.prefilter.pole * self.dt > RK4_STABILITY:
            raise ConfigError("prefilter.pole", "pole too fast for dt")
        self._check_observer_stiffness()
        return self

    def _check_observer_stiffness(self):
        obs = self.observer
        if not hasattr(obs, "gains"):
            return
        p, jp = self.obs_friction, self.plant
        speeds = [0.0]
        if isinstance(obs, ProposedBounded):
            speeds.append(obs.M)
        for w in speeds:
            K1, K2 = obs.gains(w, p, jp)
            lam = np.linalg.eigvals(error_dynamics_matrix(w, float(K1), float(K2), p, jp))
            worst = float(np.max(np.abs(lam))) * self.dt
            if worst > RK4_STABILITY:
                raise ConfigError(
                    "dt", f"observer error dynamics at w={w:g} have |lambda|={worst / self.dt:.4g} 1/s; "
                          f"RK4 needs dt <= {RK4_STABILITY / (worst / self.dt):.3g} s")


@dataclass
class Trajectory:
    """Uniformly sampled simulation record; columns follow ``CSV_COLUMNS``."""

    columns: dict
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.columns[name]

    def __len__(self):
        return len(self.columns["t"])

    @property
    def t(self):
        return self.columns["t"]

    def to_csv(self, path):
        n = len(self)
        nan = np.full(n, np.nan)
        data = np.column_stack([
            nan if self.columns.get(name) is None else np.asarray(self.columns[name], dtype=float)
            for name in CSV_COLUMNS])
        fmt = ",".join(["%.17g"] * len(CSV_COLUMNS))
        with open(path, "w", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in data:
                line = fmt % tuple(row)
                if "nan" in line:
                    line = ",".join("" if f == "nan" else f for f in line.split(","))
                fh.write(line + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header in {path}")
        data = np.array([[float(v) if v != "" else np.nan for v in row] for row in rows])
        data = data.reshape(len(rows), len(CSV_COLUMNS))
        return cls({name: data[:, i].copy() for i, name in enumerate(CSV_COLUMNS)})


# ---------------------------------------------------------------------------


def integrate_step_rk4(f, x, dt, t=0.0):
    """One classical RK4 step of ``dx/dt = f(t, x)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(f(t, x), dtype=float)
    k2 = np.asarray(f(t + dt / 2, x + dt / 2 * k1), dtype=float)
    k3 = np.asarray(f(t + dt / 2, x + dt / 2 * k2), dtype=float)
    k4 = np.asarray(f(t + dt, x + dt * k3), dtype=float)
    out = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    if not np.all(np.isfinite(out)) or np.any(np.abs(out) > DIVERGENCE_LIMIT):
        raise SimulationDiverged(t + dt, out)
    return out


def _observer_code(obs):
    if isinstance(obs, NoObserver):
        return OBS_NONE
    if isinstance(obs, Natural):
        return OBS_NATURAL
    if isinstance(obs, Existing):
        return OBS_EXISTING
    if isinstance(obs, Oracle):
        return OBS_ORACLE
    if isinstance(obs, (ProposedConstant, ProposedTimeVarying, ProposedBounded, ProposedExponential)):
        return OBS_PROPOSED
    raise ConfigError("observer", f"unsupported observer {obs!r}")


def pack(cfg: ScenarioConfig):
    """Flatten a scenario into the kernel's ``(x0, prm, iprm)`` arrays."""
    prm = np.zeros(NPRM)
    iprm = np.zeros(NIPRM, dtype=np.int_)
    p, po = cfg.friction, cfg.obs_friction
    prm[P_J] = cfg.plant.J
    prm[P_PLANT:P_PLANT + 6] = p.as_tuple()
    prm[P_OBS:P_OBS + 6] = po.as_tuple()
    c = cfg.controller
    prm[P_KP], prm[P_KI], prm[P_KD], prm[P_TAU], prm[P_TF] = c.Kp, c.Ki, c.Kd, c.tau, c.tf
    if cfg.inner_controller is not None:
        prm[P_KPI], prm[P_KII] = cfg.inner_controller.Kp, cfg.inner_controller.Ki
        iprm[I_CASCADE] = 1
    prm[P_POLE] = cfg.prefilter.pole
    prm[P_REF:P_REF + 6] = cfg.reference.packed()

    obs = cfg.observer
    if isinstance(obs, Existing):
        prm[P_KEX] = obs.k
    elif isinstance(obs, ProposedConstant):
        prm[P_K1], prm[P_K2] = obs.K1, obs.K2
    elif isinstance(obs, ProposedExponential):
        g = obs.derived(po, cfg.plant)
        prm[P_K1], prm[P_K2] = g.K1, g.K2
    elif isinstance(obs, ProposedTimeVarying):
        prm[P_A], prm[P_C], prm[P_ALPHA] = obs.A, obs.C, obs.alpha
        iprm[I_K1MODE] = iprm[I_K2MODE] = 1
    elif isinstance(obs, ProposedBounded):
        prm[P_A], prm[P_C], prm[P_ALPHA] = obs.A, obs.C, obs.alpha
        prm[P_K2] = obs.K2(po, cfg.plant)
        iprm[I_K1MODE] = 1

    iprm[I_LOOP] = LOOP_KINDS[cfg.loop_kind]
    iprm[I_REF] = cfg.reference.code
    iprm[I_OBS] = _observer_code(obs)
    iprm[I_PREF] = int(cfg.prefilter.enabled)
    iprm[I_FF] = int(cfg.feedforward)
    iprm[I_COMP] = int(cfg.compensation)
    iprm[I_FRIC] = int(cfg.friction_enabled)

    ic = cfg.initial
    x0 = np.zeros(NX)
    x0[X_THETA], x0[X_W], x0[X_Z] = ic.theta, ic.w, ic.z
    x0[X_ZH], x0[X_WH] = ic.z_hat, ic.w_hat
    x0[X_INT], x0[X_IFILT], x0[X_PREF] = ic.integrator, ic.filter_state, ic.prefilter_state
    x0[X_IINT] = ic.inner_integrator
    # start the derivative filter at the initial error: no kick at t = 0
    rf0 = ic.prefilter_state if cfg.prefilter.enabled else cfg.reference.value_d1_d2(0.0)[0]
    x0[X_DFILT] = rf0 - (ic.theta if cfg.loop_kind == "position" else ic.w)
    return x0, prm, iprm


def _assemble(cfg: ScenarioConfig, rec: np.ndarray, backend_name: str) -> Trajectory:
    cols = {name: rec[:, i].copy() for i, name in enumerate(REC_COLUMNS)}
    n = rec.shape[0]
    nan = np.full(n, np.nan)
    obs = cfg.observer
    cols["e_z"] = cols["z"] - cols["z_hat"]
    cols["e_w"] = cols["w"] - cols["w_hat"]
    cols["e_f"] = cols["F"] - cols["F_hat"]
    if isinstance(obs, NoObserver):
        for name in ("z_hat", "w_hat", "F_hat", "e_z", "e_w", "e_f"):
            cols[name] = nan.copy()
    elif isinstance(obs, Oracle):
        for name in ("z_hat", "w_hat", "e_z", "e_w"):
            cols[name] = nan.copy()
    elif isinstance(obs, (Natural, Existing)):
        cols["w_hat"] = nan.copy()
        cols["e_w"] = nan.copy()
    if not cfg.friction_enabled:
        cols["z"] = nan.copy()
        cols["e_z"] = nan.copy()
    if cfg.loop_kind == "open_loop_observer":
        cols["v"] = nan.copy()
        cols["track_err"] = nan.copy()
    cols["V"] = nan.copy()
    cols["V_dot"] = nan.copy()

    meta = {"name": cfg.name, "dt": cfg.dt, "record_stride": cfg.record_stride,
            "sample_interval": cfg.dt * cfg.record_stride, "observer": obs.kind,
            "loop_kind": cfg.loop_kind, "backend": backend_name}
    traj = Trajectory(cols, meta)

    spec = cfg.lyapunov
    if spec == "auto":
        spec = None
        if hasattr(obs, "lyapunov") and obs.lyapunov(cfg.obs_friction, cfg.plant) is not None:
            from .analysis import LyapunovSpec
            spec = LyapunovSpec(*obs.lyapunov(cfg.obs_friction, cfg.plant))
    if spec is not None and cfg.friction_enabled and hasattr(obs, "gains"):
        from .analysis import lyapunov_trace
        V, Vdot = lyapunov_trace(traj, spec, cfg.obs_friction, cfg.plant, obs)
        cols["V"], cols["V_dot"] = V, Vdot
        meta["lyapunov"] = (spec.A, spec.B, spec.C)
    return traj


def _run(cfg: ScenarioConfig, backend=None) -> Trajectory:
    cfg.validate()
    kernel = _backend.kernel if backend is None else _backend.load(backend)
    x0, prm, iprm = pack(cfg)
    rec, n_done, status, x_final = kernel.simulate(x0, prm, iprm, float(cfg.dt),
                                                   cfg.n_steps, cfg.record_stride)
    if status:
        raise SimulationDiverged(n_done * cfg.dt, x_final)
    return _assemble(cfg, rec, kernel.NAME)


def run_closed_loop(cfg: ScenarioConfig, backend=None) -> Trajectory:
    """Simulate the velocity or position loop described by ``cfg``.

    ``backend`` overrides the import-time kernel choice ("cython"/"python").
    """
    if cfg.loop_kind == "open_loop_observer":
        raise ConfigError("loop_kind", "use run_open_loop_observer for prescribed velocity")
    return _run(cfg, backend)


def run_open_loop_observer(w_signal, observer, duration, dt, *, friction=TABLE1_FRICTION,
                           plant=TABLE1_PLANT, observer_friction=None,
                           initial=InitialConditions(), record_stride=1, lyapunov="auto",
                           backend=None, name="open-loop") -> Trajectory:
    """Drive the plant's bristle state and an observer with a prescribed velocity.

    The torque fed to the two-state observer is the one that makes the plant
    follow ``w_signal`` exactly, ``u = J dw/dt + F``.  The existing
    observer's correction sees a zero tracking error here, so it behaves like
    the natural one.
    """
    cfg = ScenarioConfig(
        loop_kind="open_loop_observer", reference=w_signal, plant=plant, friction=friction,
        observer=observer, observer_friction=observer_friction, dt=dt, duration=duration,
        initial=initial, record_stride=record_stride, lyapunov=lyapunov, name=name,
        controller=PidConfig(0.0, 0.0),
    )
    return _run(cfg, backend)


