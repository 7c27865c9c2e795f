import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_steiner import spectra as sp
from fractal_steiner.errors import PoleError

LN2 = math.log(2.0)
SPACING = 2 * math.pi / LN2


def _expr(node, region=None):
    return sp.MeromorphicExpr(node, region or sp.DEFAULT_REGION)


def test_simple_residue_of_exponential_denominator():
    # 1/(2^s - 3) at s = log2 3: residue 1/(3 ln 2)
    e = _expr(1 / sp.ExpMinus(2.0, 3.0))
    w = complex(math.log2(3.0), 0)
    assert sp.residue_at(e, w) == pytest.approx(1 / (3 * LN2), rel=1e-12)
    assert sp.pole_order(e, w) == 1


def test_double_pole_order():
    e = _expr(1 / (sp.S() * sp.S()))
    assert sp.pole_order(e, 0j) == 2


def test_unsupported_denominator():
    with pytest.raises(PoleError):
        _expr(1 / (sp.S() + sp.ExpS(2.0))).terms


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(-3, 3))
@settings(max_examples=40, deadline=None)
def test_residue_linearity(a, b, k):
    f = 1 / sp.ExpMinus(2.0, 3.0)
    g = sp.ExpS(0.5) / (sp.Linear(1.0) * sp.ExpMinus(2.0, 3.0))
    w = complex(math.log2(3.0), SPACING * k)
    lhs = sp.residue_at(_expr(a * f + b * g), w)
    rhs = a * sp.residue_at(_expr(f), w) + b * sp.residue_at(_expr(g), w)
    assert abs(lhs - rhs) <= 1e-9 * (1 + abs(rhs))


@given(st.integers(1, 3))
@settings(max_examples=10, deadline=None)
def test_conjugate_symmetry(k):
    z0, z1 = sp.sg_basic_zeta_exprs()
    w = complex(math.log2(3.0), SPACING * k)
    for e in (z1, sp.distance_zeta_expr("sg")):
        assert sp.residue_at(e, w.conjugate()) == pytest.approx(sp.residue_at(e, w).conjugate(), rel=1e-9)


def test_sg_pole_structure():
    poles = sp.complex_dimensions("sg")
    ws = [p.w for p in poles]
    assert any(abs(w) < 1e-10 for w in ws)
    lattice = sorted((p for p in poles if abs(p.w.real - math.log2(3.0)) < 1e-10), key=lambda p: p.w.imag)
    assert len(lattice) == 7
    assert np.allclose(np.diff([p.w.imag for p in lattice]), SPACING, atol=1e-10)
    one = [p for p in poles if abs(p.w - 1) < 1e-10]
    assert one and one[0].removable
    assert abs(sp.residue_numeric(sp.distance_zeta_expr("sg"), 1 + 0j)) < 1e-10


def test_lattice_residue_closed_form():
    _, z1 = sp.sg_basic_zeta_exprs()
    d = math.log2(3.0)
    for k in (0, 1, -2):
        nu = complex(d, SPACING * k)
        # 3 sqrt3 (2 sqrt3)^(-nu) / (nu (nu - 1) ln 2 * 3)
        ref = math.sqrt(3.0) * (2 * math.sqrt(3.0)) ** (-nu) / (nu * (nu - 1) * LN2)
        assert sp.residue_at(z1, nu) == pytest.approx(ref, rel=1e-9)


def test_functional_equation_closed_forms():
    z0, z1 = sp.sg_basic_zeta_exprs()
    za = sp.distance_zeta_expr("sg")
    for s in (2.5 + 1j, 1.9 - 4j, 3.0):
        assert abs(za(s) - 2 * math.pi * z0(s) - 2 * z1(s)) < 1e-12 * abs(za(s))


def test_point_and_segment_registry():
    assert {"sg", "point", "segment"} <= set(sp.registered_scenes())
    p = sp.complex_dimensions("point")
    assert [round(x.w.real, 12) for x in p if not x.removable] == [0.0]
    seg = sp.complex_dimensions("segment")
    assert sorted(round(x.w.real, 12) for x in seg if not x.removable) == [0.0, 1.0]


def test_poles_csv_header():
    text = sp.poles_to_csv(sp.complex_dimensions("point"), ["note"])
    assert text.splitlines()[0] == "# note"
    assert text.splitlines()[1] == "re_w,im_w,order,re_res,im_res,removable"
