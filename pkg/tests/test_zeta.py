import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_steiner import normal_bundle as bd
from fractal_steiner import distance_field as fd
from fractal_steiner import scene_model as sc
from fractal_steiner import zeta as zt
from fractal_steiner.errors import DivergenceError, GridError, PoleError

LOG2_3 = math.log2(3.0)


@pytest.fixture(scope="module")
def point_field():
    return fd.build_field(sc.generate_point(), 1 / 512, 1.0)


def test_point_distance_zeta(point_field):
    # int over the unit disk of |z|^(s-2) = 2 pi / s
    ev = zt.zeta_distance(point_field, 3.0, 1.0, 0.0)
    assert ev.value.real == pytest.approx(2 * math.pi / 3, rel=1e-3)
    assert abs(ev.value.real - 2 * math.pi / 3) <= 5 * ev.abs_error + 1e-6


def test_point_kernel_route(point_field):
    ev = zt.basic_zeta_weighted(point_field, 0, 3.0, 1.0, 0.0)
    assert ev.value.real == pytest.approx(1 / 3, rel=1e-3)


def test_square_frame_reach_route():
    ev = zt.basic_zeta_reach(sc.generate_square(1.0), 1, 2.0, 0.1)
    assert ev.value.real == pytest.approx(0.38, abs=1e-9)


def test_reach_and_mellin_agree():
    scene = sc.generate_sierpinski(4)
    for i in (0, 1):
        beta = bd.basic_functions(scene)[i]
        for s in (2.2, 2.5 + 3j):
            a = zt.basic_zeta_reach(scene, i, s, 0.2).value
            b = zt.basic_zeta_mellin(beta, s, 0.2).value
            assert abs(a - b) <= 1e-9 * abs(a)


def test_refusal_below_abscissa():
    with pytest.raises(DivergenceError):
        zt.basic_zeta_reach(sc.generate_sierpinski(3), 1, 1.2, 0.25, LOG2_3)
    row = zt.sweep_to_csv([(1.2 + 0j, "grid_integral", "below abscissa")]).splitlines()[-1]
    assert row.endswith("grid_integral:refused:below abscissa")


def test_reach_pole_at_index():
    with pytest.raises(PoleError):
        zt.basic_zeta_reach(sc.generate_segment(1.0), 1, 1.0, 0.1)


def test_eps_beyond_margin():
    fld = fd.build_field(sc.generate_point(), 1 / 64, 0.1)
    with pytest.raises(GridError):
        zt.zeta_distance(fld, 3.0, 0.5)


def test_sg_extrapolation_matches_closed_form():
    z0, z1, _ = zt.sg_closed_forms(0.25)
    for i, e in ((0, z0), (1, z1)):
        v = zt.sg_basic_zeta_extrapolated(i, 2.0 + 5j, 0.25, "mellin_of_beta", (4, 5, 6, 7))
        assert abs(v.value - e(2.0 + 5j)) <= 1e-6 * abs(e(2.0 + 5j))


def test_closed_forms_need_eps_above_inradius():
    with pytest.raises(PoleError):
        zt.sg_closed_forms(0.1)


def test_functional_equation_on_the_grid():
    scene = sc.generate_sierpinski(3)
    fld = fd.build_field(scene, 1 / 512, 0.3)
    for s in (2.5, 3.0 + 4j):
        chk = zt.functional_equation_check(scene, fld, s, 0.2, LOG2_3)
        assert chk.ok, (chk.residual, chk.bound)


@given(st.complex_numbers(max_magnitude=10), st.complex_numbers(min_magnitude=0.1, max_magnitude=10),
       st.floats(-0.9, 0.9).filter(lambda q: abs(q) > 0.05))
@settings(max_examples=60, deadline=None)
def test_aitken_exact_on_geometric(limit, c, q):
    vals = [limit + c * q ** n for n in range(3)]
    assert abs(zt.aitken(*vals) - limit) <= 1e-8 * (1 + abs(limit) + abs(c))


@given(st.floats(2.2, 3.5), st.floats(-8, 8))
@settings(max_examples=15, deadline=None)
def test_closed_form_holomorphic(re, im):
    z0, z1, _ = zt.sg_closed_forms(0.25)
    assert zt.holomorphy_residual(z1, complex(re, im)) < 1e-4  # O(h^2) differences
