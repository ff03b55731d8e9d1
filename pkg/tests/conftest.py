import math

import numpy as np
import pytest

from rotgauss.boxes import BoxDefinition, RBox2D


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def boundary_pair():
    anchor = RBox2D(0.0, 0.0, 70.0, 10.0, -math.pi / 2, BoxDefinition.OPENCV)
    gt = RBox2D(0.0, 0.0, 10.0, 70.0, math.radians(-25), BoxDefinition.OPENCV)
    return anchor, gt
