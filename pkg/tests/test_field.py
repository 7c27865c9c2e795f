import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import ndimage

from fractal_steiner import distance_field as fd
from fractal_steiner import scene_model as sc
from fractal_steiner.errors import GridError
from fractal_steiner.distance_field import _edt_2d


@given(st.integers(0, 2**32 - 1), st.integers(3, 40), st.integers(3, 40), st.floats(0.02, 0.5))
@settings(max_examples=40, deadline=None)
def test_edt_matches_scipy(seed, ny, nx, density):
    rng = np.random.default_rng(seed)
    mask = rng.random((ny, nx)) < density
    mask[rng.integers(ny), rng.integers(nx)] = True
    d2, nearest = _edt_2d(mask)
    ref = ndimage.distance_transform_edt(~mask)
    assert np.allclose(np.sqrt(d2), ref)
    # the reported nearest seed is a seed at that distance
    jj, ii = nearest[..., 0], nearest[..., 1]
    assert mask[jj, ii].all()
    yy, xx = np.mgrid[0:ny, 0:nx]
    assert np.allclose((jj - yy) ** 2 + (ii - xx) ** 2, d2)


def test_field_is_exact_distance():
    scene = sc.generate_sierpinski(2)
    fld = fd.build_field(scene, 1 / 128, 0.2)
    xc, yc = fld.centers()
    rng = np.random.default_rng(0)
    j = rng.integers(0, fld.ny, 200)
    i = rng.integers(0, fld.nx, 200)
    z = np.column_stack([xc[i], yc[j]])
    assert np.allclose(fld.dist[j, i], sc.distance_many(scene, z), atol=1e-12)


def test_disk_tube_volume():
    fld = fd.build_field(sc.generate_disk(0.5), 1 / 512, 0.3)
    eps = fd.dyadic_eps(0.25, 8 / 512, 2)
    vol = fd.tube_volume(fld, eps)
    assert np.allclose(vol, math.pi * eps + math.pi * eps ** 2, rtol=0.02)


def test_support_totals_segment():
    fld = fd.build_field(sc.generate_segment(1.0), 1 / 512, 0.3)
    eps = np.array([0.05, 0.1, 0.2])
    tot = np.array(fd.support_totals(fld, eps))
    assert np.allclose(tot[:, 1], 1.0, rtol=0.03)
    assert np.allclose(tot[:, 2], 1.0 + math.pi * eps, rtol=0.01)


def test_euler_characteristic_of_frame_tube():
    fld = fd.build_field(sc.generate_square(1.0), 1 / 256, 0.2)
    tube = fd.tube_function(fld, [0.05, 0.1])
    assert list(tube.euler_char) == [0, 0]  # an annulus


def test_eps_beyond_margin_refused():
    fld = fd.build_field(sc.generate_point(), 1 / 64, 0.1)
    with pytest.raises(GridError):
        fd.tube_volume(fld, [0.2])


def test_dyadic_eps():
    e = fd.dyadic_eps(0.5, 0.01, 4)
    assert np.all(np.diff(e) > 0)
    assert e[-1] == 0.5 and e[0] >= 0.01
    assert np.allclose(e[1:] / e[:-1], 2 ** 0.25)


def test_coarsened_keeps_exact_distances(tmp_path):
    scene = sc.generate_segment(1.0)
    fld = fd.build_field(scene, 1 / 64, 0.2)
    c = fld.coarsened()
    assert c.h == 2 * fld.h
    xc, yc = c.centers()
    z = np.column_stack([xc[3:6], yc[[4, 4, 4]]])
    assert np.allclose(c.dist[4, 3:6], sc.distance_many(scene, z))
    fld.save(tmp_path / "f.npz")
    back = fd.DistanceField.load(tmp_path / "f.npz")
    assert np.array_equal(back.dist, fld.dist)
