from lugre_lab.verify import Check, gains_suite, oracle_suite, run_suite

import pytest


def test_gains_suite_passes():
    checks = gains_suite(seed=0)
    assert len(checks) == 14 and all(c.passed for c in checks)


def test_gains_suite_seed_changes_draws():
    a = {c.name: c.residual for c in gains_suite(seed=1, n_draws=20)}
    b = {c.name: c.residual for c in gains_suite(seed=2, n_draws=20)}
    assert a != b


def test_oracle_suite_passes():
    checks = oracle_suite()
    assert len(checks) == 4
    for c in checks:
        assert c.passed, c.line()


@pytest.mark.slow
def test_lemmas_suite_passes():
    for c in run_suite("lemmas"):
        assert c.passed, c.line()


def test_check_line_format():
    c = Check("x", False, 2.0, 1.0)
    assert c.line().startswith("FAIL  x: residual=2.000e+00")
    assert c.as_dict() == {"name": "x", "passed": False, "residual": 2.0, "tolerance": 1.0}


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("everything")
