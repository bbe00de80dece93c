"""PI/PID controller, reference pre-filter and acceleration feed-forward.

The controller acts on ``e = reference - measurement``.  Its integral path is
``Ki / (s (tau s + 1))``: a pure integrator when ``tau == 0`` and an
integrator followed by a first-order lag otherwise.  The step functions here
use exact exponential discretization with the input held over ``dt``; the
closed-loop simulator integrates the same blocks as continuous states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class PidConfig:
    Kp: float
    Ki: float
    Kd: float = 0.0
    tau: float = 0.0
    # derivative smoothing time constant; 0 means raw backward difference
    tf: float = 0.0

    def __post_init__(self):
        for name in ("Kp", "Ki", "Kd", "tau", "tf"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v!r}")

    def transfer(self, s):
        """Evaluate ``C(s)`` at complex ``s`` (scalar or array)."""
        integral = self.Ki / (s * (self.tau * s + 1.0))
        deriv = self.Kd * s / (self.tf * s + 1.0)
        return self.Kp + deriv + integral


@dataclass(frozen=True)
class PrefilterConfig:
    """First-order low-pass ``pole / (s + pole)`` on the raw reference."""

    pole: float = 2.0
    enabled: bool = False

    def __post_init__(self):
        if self.enabled and not (math.isfinite(self.pole) and self.pole > 0):
            raise ValueError("prefilter pole must be positive when enabled")


@dataclass(frozen=True)
class ControllerState:
    integrator: float = 0.0
    filter_state: float = 0.0
    prefilter_state: float = 0.0
    prev_error: float | None = None
    deriv_state: float = 0.0


def pid_step(cfg: PidConfig, cs: ControllerState, e: float, dt: float):
    """Advance the controller over ``dt`` with ``e`` held and return ``(v, state)``.

    The output is formed from the states at the end of the interval, so a
    constant error accumulates exactly ``e * t`` in the integrator.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    integ0 = cs.integrator
    integ1 = integ0 + e * dt
    if cfg.tau > 0:
        # lag driven by the ramp integ0 + e*s on [0, dt], solved exactly
        a = math.exp(-dt / cfg.tau)
        filt = integ1 - e * cfg.tau + (cs.filter_state - integ0 + e * cfg.tau) * a
        ipath = filt
    else:
        filt = integ1
        ipath = integ1

    deriv = 0.0
    dstate = cs.deriv_state
    if cfg.Kd > 0:
        prev = e if cs.prev_error is None else cs.prev_error
        raw = (e - prev) / dt
        if cfg.tf > 0:
            a = math.exp(-dt / cfg.tf)
            dstate = a * dstate + (1.0 - a) * raw
            deriv = dstate
        else:
            deriv = raw

    v = cfg.Kp * e + cfg.Ki * ipath + cfg.Kd * deriv
    return v, replace(cs, integrator=integ1, filter_state=filt, prev_error=e, deriv_state=dstate)


def prefilter_step(cfg: PrefilterConfig, state: float, r: float, dt: float):
    """Return ``(filtered, new_state)``; the output is the state after the step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not cfg.enabled:
        return r, r
    a = math.exp(-cfg.pole * dt)
    y = a * state + (1.0 - a) * r
    return y, y


def feedforward_term(ref_accel: float, J: float) -> float:
    return J * ref_accel
