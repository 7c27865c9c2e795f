import math

import numpy as np
import pytest

from fractal_steiner import normal_bundle as bd
from fractal_steiner import scene_model as sc
from fractal_steiner import spectra as sp
from fractal_steiner.acceptance import sg_oracle
from fractal_steiner.errors import PoleError
from fractal_steiner.tube_reconstruction import reconstruct_beta, reconstruct_tube, sg_beta1_series

from conftest import G


@pytest.mark.parametrize("t", [0.1, G / 2, G / 8, G / 16 * 1.3])
def test_beta1_from_residues(t):
    _, z1 = sp.sg_basic_zeta_exprs()
    v, ser = reconstruct_beta(None, z1, 1, t, 50)
    assert v == pytest.approx(sg_oracle(t), rel=0.01)
    assert ser.tail_bound < 0.01 * v


def test_fourier_series_matches_residue_sum():
    _, z1 = sp.sg_basic_zeta_exprs()
    for t in (0.02, 0.07, 0.1):
        v, _ = reconstruct_beta(None, z1, 1, t, 30)
        assert sg_beta1_series(t, 30) == pytest.approx(v, rel=1e-10)


def test_partial_sums_converge():
    _, z1 = sp.sg_basic_zeta_exprs()
    _, ser = reconstruct_beta(None, z1, 1, 0.05, 40)
    tail = np.abs(np.diff(ser.partial_sums[-20:]))
    assert tail.max() < 1e-3


def test_tube_from_residues_matches_steiner():
    scene = sc.generate_sierpinski(7)
    b0, b1 = bd.basic_functions(scene)
    for eps in (0.02, 0.05, 0.1):
        v, _ = reconstruct_tube(None, eps, 50, sp.distance_zeta_expr("sg"))
        assert v == pytest.approx(bd.steiner_volume(b0, b1, eps)[0], rel=1e-3)


def test_validity_range_enforced():
    _, z1 = sp.sg_basic_zeta_exprs()
    with pytest.raises(PoleError):
        reconstruct_beta(None, z1, 1, 0.2, 10)
    with pytest.raises(PoleError):
        sg_beta1_series(0.2)


def test_series_csv():
    _, z1 = sp.sg_basic_zeta_exprs()
    _, ser = reconstruct_beta(None, z1, 1, 0.1, 3)
    lines = ser.to_csv(["h"]).splitlines()
    assert lines[1] == "k,re_w,im_w,re_term,im_term,partial_sum"
    assert len(lines) == 2 + len(ser.terms)
