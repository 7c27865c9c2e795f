import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_steiner import scene_model as sc
from fractal_steiner.errors import PackingError, SceneError


@pytest.mark.parametrize("depth", [1, 3, 6])
def test_sierpinski_frame_count(depth):
    n = len(sc.generate_sierpinski(depth).elements)
    assert n == 1 + sum(3 ** (k - 1) for k in range(1, depth + 1))


def test_window_frame_count():
    assert len(sc.generate_fractal_window(0.3, 3).elements) == 85


def test_point_scene():
    scene = sc.generate_point()
    assert len(scene.elements) == 1
    d, near = sc.exact_distance(scene, (3.0, 4.0))
    assert d == pytest.approx(5.0)
    assert len(near) == 1


def test_exact_distance_ties_on_square_center():
    d, near = sc.exact_distance(sc.generate_square(1.0), (0.5, 0.5))
    assert d == pytest.approx(0.5)
    assert len(near) == 4


def test_distance_many_matches_scalar():
    scene = sc.generate_sierpinski(3)
    rng = np.random.default_rng(1)
    z = rng.uniform(-0.2, 1.2, size=(50, 2))
    many = sc.distance_many(scene, z)
    one = [sc.exact_distance(scene, p)[0] for p in z]
    assert np.allclose(many, one, atol=1e-12)


def test_bad_params():
    with pytest.raises(SceneError):
        sc.DustParams(alpha=0.4)
    with pytest.raises(SceneError):
        sc.generate_disk(-1.0)
    with pytest.raises(PackingError):
        sc.generate_dust(sc.DustParams(j_max=50, box_side=0.5))


_gens = st.sampled_from([
    lambda: sc.generate_sierpinski(3),
    lambda: sc.generate_fractal_window(0.25, 2),
    lambda: sc.generate_square(2.0, filled=True),
    lambda: sc.generate_disk(0.7),
    lambda: sc.generate_segment(1.5),
    sc.generate_point,
    lambda: sc.generate_dust(sc.DustParams(j_max=20)),
])


@given(_gens)
@settings(max_examples=20, deadline=None)
def test_json_round_trip(make):
    scene = make()
    back = sc.SceneDescriptor.from_json(scene.to_json())
    assert back == scene
    assert back.bbox == pytest.approx(scene.bbox)


@given(st.floats(0.05, 5.0), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_segment_distance_formula(length, x, y):
    # unit direction along x from the origin
    d, _ = sc.exact_distance(sc.generate_segment(length), (x, y))
    ref = math.hypot(x - min(max(x, 0.0), length), y)
    assert d == pytest.approx(ref, abs=1e-12)
