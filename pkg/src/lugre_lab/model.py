"""LuGre friction model and the rigid single-inertia plant it acts on.

The plant is ``J dw/dt = -F + u`` with the bristle deflection ``z`` obeying

    dz/dt = w - sigma0 |w| z / h(w)
    F     = sigma0 z + sigma1 dz/dt + Fv w
    h(w)  = Fc + (Fs - Fc) exp(-(w/ws)^2)

All quantities are SI, matching the usual servo-bench parameter tables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FrictionParams:
    """LuGre coefficients.

    Parameters
    ----------
    sigma0 : float
        Bristle stiffness [N m / rad].
    sigma1 : float
        Bristle damping [N m s / rad].
    Fc, Fs : float
        Coulomb and stiction levels [N m].
    Fv : float
        Viscous coefficient [N m s / rad].
    ws : float
        Stribeck velocity [rad/s].
    """

    sigma0: float
    sigma1: float
    Fc: float
    Fs: float
    Fv: float
    ws: float

    def __post_init__(self):
        for name in ("sigma0", "sigma1", "Fc", "Fs", "Fv", "ws"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.sigma0 <= 0:
            raise ValueError("sigma0 must be positive")
        if self.sigma1 < 0:
            raise ValueError("sigma1 must be non-negative")
        if self.Fv < 0:
            raise ValueError("Fv must be non-negative")
        if self.ws <= 0:
            raise ValueError("ws must be positive")
        if self.Fc < 0 or self.Fs < 0:
            raise ValueError("Fc and Fs must be non-negative")
        if self.Fc == 0 and self.Fs == 0:
            raise ValueError("Fc and Fs cannot both be zero")

    @property
    def C1(self) -> float:
        """Lower bound of the Stribeck curve, ``min(Fs, Fc)``."""
        return min(self.Fs, self.Fc)

    @property
    def C2(self) -> float:
        """Upper bound of the Stribeck curve, ``max(Fs, Fc)``."""
        return max(self.Fs, self.Fc)

    def as_tuple(self):
        return (self.sigma0, self.sigma1, self.Fc, self.Fs, self.Fv, self.ws)


@dataclass(frozen=True)
class PlantParams:
    J: float

    def __post_init__(self):
        if not (math.isfinite(self.J) and self.J > 0):
            raise ValueError("J must be positive and finite")


@dataclass(frozen=True)
class PlantState:
    theta: float = 0.0
    w: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.theta, self.w, self.z)):
            raise ValueError("plant state must be finite")


# Bench values used throughout the examples and presets.
TABLE1_FRICTION = FrictionParams(sigma0=260.0, sigma1=0.6, Fc=0.285, Fs=0.335, Fv=0.018, ws=0.01)
TABLE1_PLANT = PlantParams(J=0.0022)


def stribeck_h(w, p: FrictionParams):
    """Stribeck curve ``h(w)``; accepts scalars or arrays."""
    if np.ndim(w) == 0:
        return p.Fc + (p.Fs - p.Fc) * math.exp(-((w / p.ws) ** 2))
    w = np.asarray(w, dtype=float)
    return p.Fc + (p.Fs - p.Fc) * np.exp(-((w / p.ws) ** 2))


def lugre_derivatives(s: PlantState, u: float, p: FrictionParams, jp: PlantParams):
    """Right-hand side of the plant with LuGre friction.

    Returns ``(dtheta, dw, dz, F)`` where ``F`` is the friction torque at ``s``.
    """
    w = s.w
    dz = w - p.sigma0 * abs(w) * s.z / stribeck_h(w, p)
    F = p.sigma0 * s.z + p.sigma1 * dz + p.Fv * w
    return w, (u - F) / jp.J, dz, F


def static_friction(w, p: FrictionParams):
    """Steady-sliding friction curve; ``sgn(0) = 0`` so the value at rest is 0."""
    if np.ndim(w) == 0:
        sgn = 0.0 if w == 0 else math.copysign(1.0, w)
        return sgn * stribeck_h(w, p) + p.Fv * w
    w = np.asarray(w, dtype=float)
    return np.sign(w) * stribeck_h(w, p) + p.Fv * w


def steady_state_deflection(w, p: FrictionParams):
    """Deflection at which ``dz/dt = 0`` for constant velocity ``w``."""
    if np.ndim(w) == 0:
        return (math.copysign(1.0, w) if w != 0 else 0.0) * stribeck_h(w, p) / p.sigma0
    return np.sign(w) * stribeck_h(w, p) / p.sigma0
