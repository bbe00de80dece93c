"""Reference / prescribed-velocity signals with analytic derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# kernel codes
CONSTANT, STEP, SINUSOID, RAMP, DECAYING_EXP = range(5)

# a step switches on at t >= start - STEP_EPS so grid-aligned starts are not
# lost to rounding in k * dt
STEP_EPS = 1e-12


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    code = CONSTANT

    def packed(self):
        return (self.value, 0.0, 0.0, 0.0, 0.0, 0.0)

    def value_d1_d2(self, t):
        return self.value, 0.0, 0.0

    def __call__(self, t):
        return np.full(np.shape(t), float(self.value)) if np.ndim(t) else float(self.value)


@dataclass(frozen=True)
class Step:
    amplitude: float = 1.0
    start_time: float = 0.0

    code = STEP

    def packed(self):
        return (self.amplitude, self.start_time, 0.0, 0.0, 0.0, 0.0)

    def value_d1_d2(self, t):
        return (self.amplitude if t >= self.start_time - STEP_EPS else 0.0), 0.0, 0.0

    def __call__(self, t):
        on = np.asarray(t) >= self.start_time - STEP_EPS
        out = np.where(on, float(self.amplitude), 0.0)
        return out if np.ndim(t) else float(out)


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float = 1.0
    frequency_hz: float = 1.0
    phase: float = 0.0
    offset: float = 0.0

    code = SINUSOID

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise ValueError("frequency_hz must be positive")

    def packed(self):
        return (self.amplitude, 0.0, self.frequency_hz, self.phase, 0.0, self.offset)

    def value_d1_d2(self, t):
        om = 2.0 * math.pi * self.frequency_hz
        s, c = math.sin(om * t + self.phase), math.cos(om * t + self.phase)
        a = self.amplitude
        return self.offset + a * s, a * om * c, -a * om * om * s

    def __call__(self, t):
        om = 2.0 * math.pi * self.frequency_hz
        return self.offset + self.amplitude * np.sin(om * np.asarray(t, dtype=float) + self.phase)


@dataclass(frozen=True)
class Ramp:
    slope: float = 1.0

    code = RAMP

    def packed(self):
        return (0.0, 0.0, 0.0, 0.0, self.slope, 0.0)

    def value_d1_d2(self, t):
        return self.slope * t, self.slope, 0.0

    def __call__(self, t):
        return self.slope * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class DecayingExp:
    amplitude: float = 1.0
    rate: float = 1.0

    code = DECAYING_EXP

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    def packed(self):
        return (self.amplitude, 0.0, 0.0, 0.0, self.rate, 0.0)

    def value_d1_d2(self, t):
        v = self.amplitude * math.exp(-self.rate * t)
        return v, -self.rate * v, self.rate * self.rate * v

    def __call__(self, t):
        return self.amplitude * np.exp(-self.rate * np.asarray(t, dtype=float))


SIGNAL_TYPES = {
    "constant": Constant,
    "step": Step,
    "sinusoid": Sinusoid,
    "ramp": Ramp,
    "decaying_exp": DecayingExp,
}


def signal_name(sig) -> str:
    for name, cls in SIGNAL_TYPES.items():
        if isinstance(sig, cls):
            return name
    raise TypeError(f"not a reference signal: {sig!r}")
