import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from fractal_steiner import normal_bundle as bd
from fractal_steiner import exponents as ex
from fractal_steiner import scene_model as sc
from fractal_steiner.errors import FitError

from conftest import G

X = ex.geometric_samples(1e-4, 1e-1, 6)


@given(st.floats(0.05, 1.95), st.floats(0.1, 10.0))
@settings(max_examples=40, deadline=None)
def test_pure_power_recovered(m, a):
    assume(min(abs(m - 1), abs(m)) > 0.02)  # away from the integer orders
    est = ex.fit_scaling(X, a * X ** (1 - m), 1, "t")
    assert est.exponent == pytest.approx(m, abs=1e-6)
    assert est.upper_content == pytest.approx(a, rel=1e-6)


@given(st.floats(1.1, 1.9), st.floats(-2.0, 2.0))
@settings(max_examples=30, deadline=None)
def test_regular_correction_does_not_bias(m, b):
    # leading power plus the integer-order term x^i
    y = X ** (1 - m) + b * X
    assume(np.all(y > 0))
    est = ex.fit_scaling(X, y, 1, "t")
    assert est.exponent == pytest.approx(m, abs=1e-4)


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.5))
@settings(max_examples=25, deadline=None)
def test_window_robustness(a, b):
    # shrinking the window by up to half a decade on either side keeps the estimate
    y = 3.0 * X ** (1 - 1.4) + 0.5 * X
    lo, hi = 1e-4 * 10 ** a, 1e-1 / 10 ** b
    est = ex.fit_scaling(X, y, 1, "t", window=(lo, hi))
    assert est.exponent == pytest.approx(1.4, abs=1e-4)


def test_log_periodic_amplitude():
    x = ex.periodic_samples(1e-4, 1e-1, 2.0, 16)
    y = x ** (1 - 1.5849625) * (1 + 0.1 * np.cos(2 * np.pi * np.log2(x)))
    est = ex.fit_scaling(x, y, 1, "t", period=2.0)
    assert est.exponent == pytest.approx(1.5849625, abs=1e-3)
    assert est.upper_content > est.lower_content


def test_vanishing_and_constant():
    est = ex.fit_scaling(X, np.zeros_like(X), 1, "t")
    assert est.vanishing and est.exponent == -math.inf
    assert json.loads(est.to_json())["exponent"] == "-inf"
    const = ex.fit_scaling(X, np.full_like(X, 2.0), 0, "t")
    assert const.exponent == 0.0 and const.upper_content == 2.0


def test_integer_order_dominance():
    # beta_1 of a set with a rectifiable part: constant plus a weaker power
    y = 8.0 + 2.0 * X ** (1 - 0.666)
    est = ex.fit_scaling(X, y, 1, "t")
    assert est.exponent == 1.0
    assert est.correction["content"] == pytest.approx(8.0, rel=1e-6)


def test_mixed_powers():
    y = X ** (1 - 1.8) * (1 - 0.3 * X ** 0.6)
    est = ex.fit_scaling(X, y, 1, "t", models=("regular", "mixed"))
    assert est.exponent == pytest.approx(1.8, abs=2e-3)


def test_too_few_points():
    with pytest.raises(FitError):
        ex.fit_scaling(X[:5], X[:5], 1, "t")


def test_sg_basic_exponents(sg6_beta):
    b0, b1 = sg6_beta
    win = (G * 2.0 ** -5, G)
    assert ex.fit_basic_exponent(b0, 0, win, period=2.0).exponent == 0.0
    assert ex.fit_basic_exponent(b1, 1, win, period=2.0).exponent == pytest.approx(math.log2(3), abs=0.02)


def test_bundle_tube_of_segment():
    b0, b1 = bd.basic_functions(sc.generate_segment(1.0))
    eps = ex.geometric_samples(1e-3, 0.3, 4)
    tube = ex.bundle_tube(b0, b1, eps)
    assert np.allclose(tube.volume, 2 * eps + math.pi * eps ** 2)
    assert ex.minkowski_dimension(tube).exponent == 1.0
    rep = ex.bridge_checks(tube, ex.bundle_support_totals(b0, b1, eps), 1.0, b0, b1)
    assert rep.bridge_rel < 1e-6
    assert rep.decomposition_rel < 1e-9


def _est(m, se=0.01, i=0):
    return ex.ExponentEstimate(m, (1e-3, 1e-1), se, 1.0, 1.0, "t", i)


def test_audit_reports_without_raising():
    lines = ex.exponent_inequality_audit(_est(0.0), _est(1.58), _est(0.0), _est(1.3), _est(1.58))
    bad = {a.relation for a in lines if not a.ok}
    assert "s1 = D" in bad
    assert all(a.ok for a in lines if a.relation != "s1 = D" and "s1" not in a.relation)
    json.dumps(ex.audit_to_dict(lines))


@given(st.floats(0.0, 2.0), st.floats(1.0, 2.0))
@settings(max_examples=40, deadline=None)
def test_audit_consistent_data(m0, m1):
    # s0 = m0, s1 = max(m0, m1) = D satisfies every relation with zero errors
    top = max(m0, m1)
    lines = ex.exponent_inequality_audit(_est(m0, 0), _est(m1, 0), _est(m0, 0), _est(top, 0), _est(top, 0))
    assert all(a.ok for a in lines)


def test_resolution_error_folds_difference():
    fine, coarse = _est(1.58, 0.001), _est(1.56, 0.001)
    out = ex.with_resolution_error(fine, coarse)
    assert out.slope_stderr == pytest.approx(math.hypot(0.001, 0.02))
    assert "resolution" in out.flags
