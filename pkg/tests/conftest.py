import math

import pytest

from fractal_steiner import normal_bundle as bd
from fractal_steiner import scene_model as sc

G = 1.0 / (4.0 * math.sqrt(3.0))


@pytest.fixture(scope="session")
def sg6():
    return sc.generate_sierpinski(6)


@pytest.fixture(scope="session")
def sg6_beta(sg6):
    return bd.basic_functions(sg6)
