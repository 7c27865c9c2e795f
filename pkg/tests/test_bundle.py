import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_steiner import normal_bundle as bd
from fractal_steiner import distance_field as fd
from fractal_steiner import scene_model as sc
from fractal_steiner.acceptance import sg_oracle
from fractal_steiner.errors import BundleError

from conftest import G


def test_sg_beta1_matches_summation(sg6_beta):
    t = np.geomspace(G * 2.0 ** -5, 0.999 * G, 40)
    assert np.allclose(sg6_beta[1](t), [sg_oracle(x) for x in t], atol=1e-9, rtol=0)


def test_sg_beta0_is_one(sg6_beta):
    t = np.geomspace(1e-4, 0.9 * G, 20)
    assert np.allclose(sg6_beta[0](t), 1.0)


def test_square_frame_beta0_is_one():
    b0, b1 = bd.basic_functions(sc.generate_square(1.0))
    t = np.array([0.01, 0.1, 0.3, 0.49])
    assert np.allclose(b0(t), 1.0)
    # outer sides never stop, inner sides by the corner bisectors
    assert np.allclose(b1(t), 2.0 + 2.0 * (1.0 - 2.0 * t))


@pytest.mark.parametrize("make, b0, b1", [
    (sc.generate_point, 1.0, 0.0),
    (lambda: sc.generate_segment(2.0), 1.0, 2.0),
    (lambda: sc.generate_disk(0.5), 1.0, 0.5 * math.pi),
])
def test_convex_basic_functions_are_constant(make, b0, b1):
    beta0, beta1 = bd.basic_functions(make())
    t = np.geomspace(1e-3, 1.0, 7)
    assert np.allclose(beta0(t), b0)
    assert np.allclose(beta1(t), b1)


@given(st.floats(1e-4, 0.14), st.floats(1e-4, 0.14))
@settings(max_examples=60, deadline=None)
def test_beta_monotone(sg6_beta, a, b):
    lo, hi = sorted((a, b))
    for beta in sg6_beta:
        assert beta(np.array([hi]))[0] <= beta(np.array([lo]))[0] + 1e-12


def test_steiner_volume_matches_grid():
    scene = sc.generate_sierpinski(4)
    fld = fd.build_field(scene, 1 / 1024, 0.2)
    eps = np.array([0.01, 0.03, 0.1])
    grid = fd.tube_volume(fld, eps)
    assert np.allclose(bd.steiner_volume(*bd.basic_functions(scene), eps), grid, rtol=0.02)


def test_local_reach_oracle():
    scene = sc.generate_square(1.0)
    # inner side y = 0 at x = 0.3: the bisector of the corner at x = 0 stops it at 0.3
    assert bd.local_reach(scene, (0.3, 0.0), (0.0, 1.0)) == pytest.approx(0.3, abs=1e-8)
    assert bd.local_reach(scene, (0.3, 0.0), (0.0, -1.0)) == math.inf
    with pytest.raises(BundleError):
        bd.local_reach(scene, (0.3, 0.2), (0.0, 1.0))


def test_beta_exact_attaches_samples(sg6):
    t = np.array([0.01, 0.05, 0.1])
    b = bd.beta_exact(sg6, 1, t)
    assert np.array_equal(b.t, t)
    assert np.allclose(b.values, [sg_oracle(x) for x in t])
    with pytest.raises(BundleError):
        bd.beta_exact(sg6, 2)


def test_grid_route_recovers_segment_beta():
    fld = fd.build_field(sc.generate_segment(1.0), 1 / 512, 0.3)
    tot = fd.support_totals(fld, [0.05, 0.1, 0.2])
    b1 = bd.beta_from_grid(tot, 1)
    assert np.allclose(b1.values, 1.0, rtol=0.02)


def test_calibration_transcript():
    cal = bd.calibrate_cij()
    assert cal.c[0, 0] == pytest.approx(1.0)
    assert cal.c[1, 0] == pytest.approx(math.pi)
    assert cal.c[1, 1] == pytest.approx(1.0)
    assert len(cal.transcript) == 3
