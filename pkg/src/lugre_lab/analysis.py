"""Instruments for checking observer convergence claims on simulated data."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import FrictionParams, PlantParams, stribeck_h
from .observers import ExponentialGains

DECAY_FLOOR = 1e-14


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class DecayFit:
    rate: float
    r_squared: float
    window: tuple
    n_samples: int


@dataclass(frozen=True)
class LyapunovSpec:
    """Quadratic form ``V = A e_z^2 + B e_z e_w + C e_w^2``."""

    A: float
    B: float
    C: float

    def __post_init__(self):
        if not (self.A > 0 and self.C > 0 and self.B * self.B - 4 * self.A * self.C < 0):
            raise ValueError(f"Lyapunov form is not positive definite: {self}")


# ---------------------------------------------------------------------------
# deflection-error closed form


def _simpson_cumulative(f_nodes, h, refine):
    """Cumulative composite Simpson integral at every ``refine``-th node."""
    n_int = (len(f_nodes) - 1) // refine
    panels = f_nodes.reshape(-1)[: n_int * refine + 1]
    w = np.ones(refine + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    idx = np.arange(n_int)[:, None] * refine + np.arange(refine + 1)[None, :]
    per_interval = (panels[idx] @ w) * h / 3.0
    return np.concatenate([[0.0], np.cumsum(per_interval)])


def closed_form_error_oracle(w_signal, e_z0, p: FrictionParams, t_grid, refine=10):
    """Deflection error of the natural observer from its explicit solution.

    ``e_z(t) = e_z(0) exp(-sigma0 * integral_0^t |w| / h(w) dtau)``, with the
    integral taken by composite Simpson on a grid ``refine`` times finer than
    ``t_grid`` (uniform, starting at 0).  ``w_signal`` is either a vectorized
    callable of time or samples on ``t_grid`` (linearly interpolated).
    """
    if refine < 2 or refine % 2:
        raise ValueError("refine must be a positive even integer")
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 2:
        return np.full(len(t_grid), float(e_z0))
    dt = t_grid[1] - t_grid[0]
    h = dt / refine
    fine = t_grid[0] + h * np.arange((len(t_grid) - 1) * refine + 1)
    if callable(w_signal):
        w = np.asarray(w_signal(fine), dtype=float)
    else:
        w = np.interp(fine, t_grid, np.asarray(w_signal, dtype=float))
    f = np.abs(w) / stribeck_h(w, p)
    integral = _simpson_cumulative(f, h, refine)
    return e_z0 * np.exp(-p.sigma0 * integral)


def pe_window_integral(w_series, T, dt):
    """Smallest sliding-window integral of ``|w|`` over windows of length ``T``.

    Trapezoidal rule on a uniform grid; ``T`` must be a whole number of
    samples.  The excitation condition holds on the record iff the result is
    positive.
    """
    w = np.abs(np.asarray(w_series, dtype=float))
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, dt):
        raise ValueError("T must be a positive integer multiple of dt")
    if n >= len(w):
        raise ValueError("window longer than the series")
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (w[1:] + w[:-1]))])
    return float(np.min(cum[n:] - cum[:-n]))


def window_subsample(t, e, T):
    """Samples of ``e`` at the multiples of ``T`` present on the grid of ``t``."""
    t = np.asarray(t)
    dt = t[1] - t[0]
    step = int(round(T / dt))
    if step < 1:
        raise ValueError("T shorter than the sampling interval")
    return t[::step], np.asarray(e)[::step]


def fit_decay_rate(t, e, window=None, floor=DECAY_FLOOR, min_samples=10):
    """Least-squares exponential rate of ``|e|``.

    Without ``window`` the fit uses samples with ``|e|`` between 1e-10 and
    half the initial magnitude.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(np.asarray(e, dtype=float))
    if window is None:
        mask = (a >= 1e-10) & (a <= 0.5 * a[0])
    else:
        mask = (t >= window[0]) & (t <= window[1])
    mask &= a > floor
    mask &= np.isfinite(a)
    if np.count_nonzero(mask) < min_samples:
        raise InsufficientSamples(
            f"only {np.count_nonzero(mask)} samples above the floor in the fit window")
    ts, ys = t[mask], np.log(a[mask])
    slope, intercept = np.polyfit(ts, ys, 1)
    resid = ys - (slope * ts + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(rate=-float(slope), r_squared=r2, window=(float(ts[0]), float(ts[-1])),
                    n_samples=int(mask.sum()))


# ---------------------------------------------------------------------------
# Lyapunov functions


def error_derivatives(e_z, e_w, w, K1, K2, p: FrictionParams, jp: PlantParams):
    r = np.abs(w) / stribeck_h(w, p)
    K3 = (K2 - p.sigma1 * K1) / jp.J
    de_z = -p.sigma0 * r * e_z - K1 * e_w
    de_w = -(p.sigma0 / jp.J) * e_z + (p.sigma0 * p.sigma1 / jp.J) * r * e_z - K3 * e_w
    return de_z, de_w


def lyapunov_trace(traj, spec: LyapunovSpec, p: FrictionParams, jp: PlantParams, schedule):
    """``V`` and its analytic time derivative along a recorded trajectory.

    ``schedule`` supplies ``gains(w, p, jp) -> (K1, K2)``; the derivative is
    obtained by substituting the error dynamics, not by differencing.
    """
    e_z = np.asarray(traj["e_z"], dtype=float)
    e_w = np.asarray(traj["e_w"], dtype=float)
    w = np.asarray(traj["w"], dtype=float)
    K1, K2 = schedule.gains(w, p, jp)
    de_z, de_w = error_derivatives(e_z, e_w, w, K1, K2, p, jp)
    A, B, C = spec.A, spec.B, spec.C
    V = A * e_z ** 2 + B * e_z * e_w + C * e_w ** 2
    Vdot = 2 * A * e_z * de_z + B * (de_z * e_w + e_z * de_w) + 2 * C * e_w * de_w
    return V, Vdot


def exponential_vdot(e_z, e_w, w, g: ExponentialGains, p: FrictionParams, jp: PlantParams):
    """Closed form of dV/dt under the exponential gain construction."""
    r = np.abs(w) / stribeck_h(w, p)
    return (-p.sigma0 * g.beta * r * e_z ** 2 - (g.B * p.sigma0 / jp.J) * e_z ** 2
            - 2 * g.C * g.alpha * e_w ** 2)


@dataclass(frozen=True)
class Residual:
    name: str
    value: float
    scale: float

    @property
    def relative(self):
        return abs(self.value) / self.scale if self.scale > 0 else abs(self.value)


def gain_identity_residuals(g: ExponentialGains, p: FrictionParams, jp: PlantParams):
    """Residuals of the algebraic conditions the exponential gains must meet.

    Each entry carries the largest term magnitude as its scale.  The first
    entry is an inequality: its value is the violation ``max(0, -(2A - B
    sigma1 / J))``, zero when satisfied.
    """
    J, s0, s1 = jp.J, p.sigma0, p.sigma1
    A, B, C, K1, K2, K3 = g.A, g.B, g.C, g.K1, g.K2, g.K3
    a, b = g.alpha, g.beta

    def res(name, *terms):
        return Residual(name, float(sum(terms)), max(abs(x) for x in terms))

    slack = 2 * A - B * s1 / J
    return [
        Residual("2A - B*sigma1/J >= 0", max(0.0, -slack), max(abs(2 * A), abs(B * s1 / J))),
        res("B*K1 + 2C*K3 - 2C*alpha", B * K1, 2 * C * K3, -2 * C * a),
        res("2C*sigma1/J - B", 2 * C * s1 / J, -B),
        res("B*K3 + 2C*sigma0/J + 2A*K1", B * K3, 2 * C * s0 / J, 2 * A * K1),
        res("B^2 - 4AC + 2*beta*C", B * B, -4 * A * C, 2 * b * C),
        res("K2 - J*alpha", K2, -J * a),
        res("K3 - (K2 - sigma1*K1)/J", K3, -K2 / J, s1 * K1 / J),
    ]


# ---------------------------------------------------------------------------
# SPR margin


@dataclass(frozen=True)
class SprResult:
    margin: float
    freq_hz: float
    singular_freqs_hz: tuple


def default_spr_grid():
    return np.logspace(-2, 5, 1000)


def spr_margin(controller, jp: PlantParams, p: FrictionParams, freq_grid_hz=None):
    """Minimum of ``Re T(j 2 pi f)`` for ``T = (sigma1 s + sigma0)/(J s^2 + C(s))``.

    A negative margin means the strict-positive-realness requirement fails
    somewhere on the grid.  Grid points where the denominator vanishes are
    skipped and returned separately.
    """
    f = default_spr_grid() if freq_grid_hz is None else np.asarray(freq_grid_hz, dtype=float)
    if f.size == 0 or np.any(f <= 0):
        raise ValueError("frequency grid must be non-empty and positive")
    s = 2j * np.pi * f
    den = jp.J * s ** 2 + controller.transfer(s)
    bad = np.abs(den) < 1e-12
    T = (p.sigma1 * s + p.sigma0) / np.where(bad, 1.0, den)
    re = np.where(bad, np.inf, T.real)
    i = int(np.argmin(re))
    return SprResult(float(re[i]), float(f[i]), tuple(float(x) for x in f[bad]))


# ---------------------------------------------------------------------------
# tracking


def tracking_metrics(traj, settle_band=0.02):
    """RMS, steady-state error, overshoot and settling time of a closed-loop run.

    Steady-state error is the mean absolute tracking error over the final 10%
    of the record; the settling band is relative to the reference excursion.
    """
    t = np.asarray(traj["t"])
    e = np.asarray(traj["track_err"])
    ref = np.asarray(traj["ref_filtered"])
    meas_name = "theta" if traj.meta.get("loop_kind") == "position" else "w"
    y = np.asarray(traj[meas_name])
    n = len(t)
    if n == 0:
        raise ValueError("empty trajectory")
    tail = max(1, int(math.ceil(0.1 * n)))
    rmse = float(np.sqrt(np.mean(e ** 2)))
    sse = float(np.mean(np.abs(e[-tail:])))

    r_end = float(traj["ref_raw"][-1])
    span = float(abs(r_end - y[0]))
    if span > 0:
        sgn = math.copysign(1.0, r_end - y[0])
        overshoot = max(0.0, float(np.max(sgn * (y - r_end)))) / span
    else:
        overshoot = 0.0

    scale = max(float(np.max(np.abs(ref))), span)
    outside = np.nonzero(np.abs(e) > settle_band * scale)[0] if scale > 0 else np.array([], int)
    if outside.size == 0:
        settling = 0.0
    elif outside[-1] == n - 1:
        settling = math.inf
    else:
        settling = float(t[outside[-1] + 1] - t[0])
    return {"rmse": rmse, "steady_state_error": sse, "overshoot": overshoot,
            "settling_time": settling}


# ---------------------------------------------------------------------------
# loop bandwidth


def loop_bandwidth_hz(controller, jp: PlantParams, loop_kind="velocity", freq_grid_hz=None):
    """First grid frequency where the closed-loop gain drops below -3 dB.

    The frictionless reference-to-output map is ``C / (J s + C)`` for the
    velocity loop and ``C / (J s^2 + C)`` for the position loop.  Returns
    ``inf`` when the gain stays above the threshold over the whole grid.
    """
    f = np.logspace(-2, 4, 20001) if freq_grid_hz is None else np.asarray(freq_grid_hz, dtype=float)
    s = 2j * np.pi * f
    Cs = controller.transfer(s)
    plant = jp.J * s if loop_kind == "velocity" else jp.J * s ** 2
    gain = np.abs(Cs / (plant + Cs))
    below = np.nonzero(gain < 1 / math.sqrt(2))[0]
    return float(f[below[0]]) if below.size else math.inf
