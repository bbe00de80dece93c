import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from lugre_lab import analysis as an
from lugre_lab.control import ControllerState, PidConfig, pid_step
from lugre_lab.model import TABLE1_FRICTION as P, TABLE1_PLANT as JP, static_friction, stribeck_h
from lugre_lab.observers import ProposedExponential

velocity = st.floats(-50, 50, allow_nan=False)
positive = st.floats(1e-3, 100.0, allow_nan=False)


@given(velocity)
def test_stribeck_bounded_and_even(w):
    h = float(stribeck_h(w, P))
    assert P.C1 <= h <= P.C2
    assert h == float(stribeck_h(-w, P))


@given(velocity)
def test_static_friction_odd(w):
    assert static_friction(-w, P) == -static_friction(w, P)


@given(positive, positive, positive)
def test_exponential_gain_identities(C, alpha, beta):
    g = ProposedExponential(C, alpha, beta).derived(P, JP)
    for r in an.gain_identity_residuals(g, P, JP):
        assert r.relative <= 1e-9, r.name
    assert g.B ** 2 - 4 * g.A * g.C < 0


@settings(max_examples=50)
@given(st.floats(-10, 10, allow_nan=False), st.lists(st.floats(-1, 1, allow_nan=False), min_size=1, max_size=40))
def test_pi_linearity(scale, errors):
    cfg = PidConfig(1.6, 0.16, tau=0.02)
    out = []
    for gain in (1.0, scale):
        cs, v = ControllerState(), []
        for e in errors:
            y, cs = pid_step(cfg, cs, gain * e, 1e-3)
            v.append(y)
        out.append(np.array(v))
    np.testing.assert_allclose(out[1], scale * out[0], rtol=1e-9, atol=1e-12)
