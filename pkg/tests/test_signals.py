import math

import numpy as np
import pytest

from lugre_lab.signals import (
    SIGNAL_TYPES, Constant, DecayingExp, Ramp, Sinusoid, Step, signal_name,
)


def test_step_switches_at_start_time():
    s = Step(2.0, 0.3)
    assert s(0.29) == 0.0 and s(0.3) == 2.0
    assert s.value_d1_d2(0.5) == (2.0, 0.0, 0.0)


def test_sinusoid_derivatives_analytic():
    s = Sinusoid(1.5, 2.0, 0.3, 0.1)
    t = 0.17
    om = 2 * math.pi * 2.0
    v, d1, d2 = s.value_d1_d2(t)
    assert v == pytest.approx(0.1 + 1.5 * math.sin(om * t + 0.3))
    assert d1 == pytest.approx(1.5 * om * math.cos(om * t + 0.3))
    assert d2 == pytest.approx(-om * om * 1.5 * math.sin(om * t + 0.3))


def test_ramp_and_constant():
    assert Ramp(0.5).value_d1_d2(2.0) == (1.0, 0.5, 0.0)
    assert Constant(0.05).value_d1_d2(9.0) == (0.05, 0.0, 0.0)


def test_decaying_exp():
    v, d1, d2 = DecayingExp(0.1, 5.0).value_d1_d2(0.2)
    assert v == pytest.approx(0.1 * math.exp(-1.0))
    assert d1 == pytest.approx(-5 * v) and d2 == pytest.approx(25 * v)


def test_vectorized_call():
    t = np.linspace(0, 1, 11)
    np.testing.assert_allclose(Sinusoid(1.0, 1.0)(t), np.sin(2 * np.pi * t), atol=1e-15)
    assert Step(1.0, 0.5)(t).tolist() == [0.0] * 5 + [1.0] * 6


@pytest.mark.parametrize("ctor", [lambda: Sinusoid(1.0, 0.0), lambda: DecayingExp(1.0, 0.0)])
def test_invalid(ctor):
    with pytest.raises(ValueError):
        ctor()


def test_names_round_trip():
    for name, cls in SIGNAL_TYPES.items():
        assert signal_name(cls()) == name
    with pytest.raises(TypeError):
        signal_name(3.0)
