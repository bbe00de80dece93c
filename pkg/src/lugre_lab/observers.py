"""Friction observers built on the LuGre deflection dynamics.

Three structures are provided:

* the natural observer, an exact copy of the deflection dynamics driven by
  the measured velocity;
* the existing observer-controller, which adds ``-k e`` with ``e`` the
  tracking error and needs a matching control law with feed-forward;
* the two-state observer, which also propagates a velocity estimate and
  feeds the velocity estimation error back through ``K1`` and ``K2``.

Gain schedules for the two-state observer come in four flavours: constant
hand-picked gains, the time-varying schedule that cancels the cross term of
``V = A e_z^2 + C e_w^2``, the same schedule with a constant ``K2`` sized
from a velocity bound, and the constant schedule that makes
``V = A e_z^2 + B e_z e_w + C e_w^2`` a strict Lyapunov function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import FrictionParams, PlantParams, stribeck_h


@dataclass(frozen=True)
class ObserverState:
    z_hat: float = 0.0
    w_hat: float = 0.0


@dataclass(frozen=True)
class ObserverErrors:
    e_z: float
    e_w: float
    e_f: float


def observer_errors(z, w, F, z_hat, w_hat, F_hat):
    return ObserverErrors(z - z_hat, w - w_hat, F - F_hat)


def _positive(**kw):
    for name, value in kw.items():
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be positive and finite, got {value!r}")


# ---------------------------------------------------------------------------
# gain schedules


@dataclass(frozen=True)
class NoObserver:
    """No friction estimate at all; ``F_hat = 0``."""

    kind = "none"


@dataclass(frozen=True)
class Natural:
    kind = "natural"


@dataclass(frozen=True)
class Existing:
    k: float

    kind = "existing"

    def __post_init__(self):
        _positive(k=self.k)


@dataclass(frozen=True)
class Oracle:
    """Test instrument: the compensator is handed the plant's true friction."""

    kind = "oracle"


@dataclass(frozen=True)
class ProposedConstant:
    """Two-state observer with fixed, hand-picked gains."""

    K1: float
    K2: float

    kind = "proposed"

    def __post_init__(self):
        if not (math.isfinite(self.K1) and math.isfinite(self.K2)):
            raise ValueError("K1 and K2 must be finite")

    def gains(self, w, p, jp):
        K1 = np.broadcast_to(float(self.K1), np.shape(w))
        K2 = np.broadcast_to(float(self.K2), np.shape(w))
        return K1, K2

    def lyapunov(self, p, jp):
        return None


@dataclass(frozen=True)
class ProposedTimeVarying:
    """K1(w) and K2(w) recomputed from the measured velocity."""

    A: float
    C: float
    alpha: float

    kind = "proposed_time_varying"

    def __post_init__(self):
        _positive(A=self.A, C=self.C, alpha=self.alpha)

    def gains(self, w, p, jp):
        return proposed_gains_time_varying(w, self.A, self.C, self.alpha, p, jp)

    def lyapunov(self, p, jp):
        return self.A, 0.0, self.C


@dataclass(frozen=True)
class ProposedBounded:
    """K1(w) from the time-varying schedule, K2 held constant using |w| <= M."""

    A: float
    C: float
    alpha: float
    M: float

    kind = "proposed_bounded"

    def __post_init__(self):
        _positive(A=self.A, C=self.C, alpha=self.alpha, M=self.M)

    def K2(self, p, jp):
        return proposed_gains_bounded(self.A, self.C, self.alpha, self.M, p, jp)

    def gains(self, w, p, jp):
        K1, _ = proposed_gains_time_varying(w, self.A, self.C, self.alpha, p, jp)
        return K1, np.broadcast_to(self.K2(p, jp), np.shape(K1))

    def lyapunov(self, p, jp):
        return self.A, 0.0, self.C


@dataclass(frozen=True)
class ExponentialGains:
    K1: float
    K2: float
    K3: float
    A: float
    B: float
    C: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class ProposedExponential:
    """Constant gains from the step-by-step construction (C, alpha, beta free)."""

    C: float
    alpha: float
    beta: float

    kind = "proposed_exponential"

    def __post_init__(self):
        _positive(C=self.C, alpha=self.alpha, beta=self.beta)

    def derived(self, p, jp) -> ExponentialGains:
        return proposed_gains_exponential(self.C, self.alpha, self.beta, p, jp)

    def gains(self, w, p, jp):
        g = self.derived(p, jp)
        return (np.broadcast_to(g.K1, np.shape(w)), np.broadcast_to(g.K2, np.shape(w)))

    def lyapunov(self, p, jp):
        g = self.derived(p, jp)
        return g.A, g.B, g.C


PROPOSED_KINDS = (ProposedConstant, ProposedTimeVarying, ProposedBounded, ProposedExponential)


# ---------------------------------------------------------------------------
# gain formulas


def proposed_gains_time_varying(w, A, C, alpha, p: FrictionParams, jp: PlantParams):
    """Return ``(K1, K2)`` that cancel the e_z e_w cross term of ``A e_z^2 + C e_w^2``.

    ``K2 - sigma1 K1 = alpha`` holds identically, so ``K3 = alpha / J``.
    """
    ratio = np.abs(w) / stribeck_h(w, p)
    K1 = (C * p.sigma0 / (A * jp.J)) * (p.sigma1 * ratio - 1.0)
    K2 = alpha + p.sigma1 * K1
    return K1, K2


def proposed_gains_bounded(A, C, alpha, M, p: FrictionParams, jp: PlantParams) -> float:
    """Constant K2 for velocities bounded by ``M``.

    The bound ``J K3 >= alpha`` along ``|w| <= M`` holds as long as
    ``sigma1 <= 1`` (true for the bench parameters); for stiffer damping the
    bracket under-sizes K2 by the factor ``sigma1``.
    """
    if p.C1 <= 0:
        raise ValueError("bounded schedule needs min(Fs, Fc) > 0")
    return alpha + (C / (A * jp.J)) * p.sigma0 * p.sigma1 * (M / p.C1 - 1.0)


def proposed_gains_exponential(C, alpha, beta, p: FrictionParams, jp: PlantParams) -> ExponentialGains:
    J, s0, s1 = jp.J, p.sigma0, p.sigma1
    B = 2.0 * C * s1 / J
    A = B * s1 / (2.0 * J) + beta / 2.0
    K1 = -2.0 * C * (s1 * alpha + s0) / (beta * J)
    K3 = -s1 * K1 / J + alpha
    # J K3 + sigma1 K1 collapses to J alpha; the direct form avoids cancellation
    K2 = J * alpha
    return ExponentialGains(K1=K1, K2=K2, K3=K3, A=A, B=B, C=C, alpha=alpha, beta=beta)


# ---------------------------------------------------------------------------
# observer right-hand sides


def natural_observer_derivative(z_hat, w, p: FrictionParams):
    return w - p.sigma0 * abs(w) * z_hat / stribeck_h(w, p)


def existing_observer_derivative(z_hat, w, e, k, p: FrictionParams):
    """``e`` is measured minus reference (the observer's own sign convention)."""
    return natural_observer_derivative(z_hat, w, p) - k * e


def existing_control_law(e, controller_output, F_hat, ref_accel, jp: PlantParams):
    """``u = -C(s) e + F_hat + J d2(theta_ref)/dt2``; ``controller_output`` is ``-C(s) e``."""
    return controller_output + F_hat + jp.J * ref_accel


def friction_estimate(z_hat, dz_hat_dt, w, p: FrictionParams):
    return p.sigma0 * z_hat + p.sigma1 * dz_hat_dt + p.Fv * w


def proposed_observer_derivatives(s: ObserverState, w, u, K1, K2, p: FrictionParams, jp: PlantParams):
    """Return ``(dz_hat, dw_hat, F_hat)`` for the two-state observer."""
    e_w = w - s.w_hat
    dz_hat = natural_observer_derivative(s.z_hat, w, p) + K1 * e_w
    F_hat = friction_estimate(s.z_hat, dz_hat, w, p)
    dw_hat = (-F_hat + u + K2 * e_w) / jp.J
    return dz_hat, dw_hat, F_hat


def error_dynamics_matrix(w, K1, K2, p: FrictionParams, jp: PlantParams):
    """Linear map ``(e_z, e_w) -> (de_z, de_w)`` at a frozen velocity ``w``."""
    r = abs(w) / stribeck_h(w, p)
    K3 = (K2 - p.sigma1 * K1) / jp.J
    return np.array([
        [-p.sigma0 * r, -K1],
        [-p.sigma0 / jp.J + p.sigma0 * p.sigma1 * r / jp.J, -K3],
    ])
