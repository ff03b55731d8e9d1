import math

import numpy as np
import pytest

from rotgauss.boxes import AngleMode, OffsetEncoding, RBox2D
from rotgauss.divergences import Metric
from rotgauss.errors import InvalidConfig, ModeMismatch
from rotgauss.loss import (LossConfig, Transform, gaussian_box_loss, normalize_loss,
                           normalize_loss_derivative, smooth_l1, smooth_l1_grad, smooth_l1_loss)


def test_normalize_examples():
    assert normalize_loss(0.0, LossConfig(tau=1.0)) == 0.0
    assert normalize_loss(0.0, LossConfig(tau=2.0)) == 0.5
    assert normalize_loss(4.0, LossConfig(f=Transform.SQRT, tau=1.0)) == pytest.approx(2 / 3)
    assert normalize_loss(math.e - 1, LossConfig(f=Transform.LOG1P, tau=1.0)) == pytest.approx(0.5)


def test_normalize_bounded_and_monotone():
    cfg = LossConfig()
    d = np.linspace(0, 1e4, 1001)
    v = np.array([normalize_loss(x, cfg) for x in d])
    assert np.all(np.diff(v) > 0) and np.all(v < 1)


def test_tau_below_one_rejected():
    with pytest.raises(InvalidConfig):
        LossConfig(tau=0.5)


def test_normalize_derivative_matches_difference():
    for f in Transform:
        cfg = LossConfig(f=f, tau=1.5)
        for d in (0.1, 1.0, 7.0):
            num = (normalize_loss(d + 1e-6, cfg) - normalize_loss(d - 1e-6, cfg)) / 2e-6
            assert normalize_loss_derivative(d, cfg) == pytest.approx(num, rel=1e-6)


def test_box_loss_examples():
    t = RBox2D(0, 0, 2, 2, 0)
    cfg = LossConfig(Metric.KLD_PT, Transform.SQRT, 1.0)
    assert gaussian_box_loss(t, t, cfg) == 0.0
    p1, p2 = RBox2D(0, 0, 70, 10, -math.pi / 2), RBox2D(0, 0, 10, 70, 0)
    assert gaussian_box_loss(p1, p2, cfg) == pytest.approx(0.0, abs=1e-12)
    v = gaussian_box_loss(RBox2D(1, 0, 2, 2, 0), t, cfg)
    assert v == pytest.approx(1 - 1 / (1 + math.sqrt(0.5)))
    assert v == pytest.approx(0.41421, abs=1e-5)


def test_label():
    assert LossConfig(Metric.GWD, Transform.LOG1P, 3.0).label == "gwd-log1p-tau3"


def test_smooth_l1_examples():
    z = OffsetEncoding(0, 0, 0, 0, t_theta=0.0)
    assert smooth_l1_loss(z, z) == 0.0
    one = OffsetEncoding(1.0, 0, 0, 0, t_theta=0.0)
    two = OffsetEncoding(2.0, 0, 0, 0, t_theta=0.0)
    assert smooth_l1_loss(one, z, beta=1.0) == pytest.approx(0.5)
    assert smooth_l1_loss(two, z, beta=1.0) == pytest.approx(1.5)


def test_smooth_l1_grad_matches_difference():
    x = np.linspace(-2, 2, 41) + 1e-3
    num = (smooth_l1(x + 1e-7, 0.3) - smooth_l1(x - 1e-7, 0.3)) / 2e-7
    np.testing.assert_allclose(smooth_l1_grad(x, 0.3), num, atol=1e-6)


def test_smooth_l1_mode_mismatch():
    a = OffsetEncoding(0, 0, 0, 0, t_theta=0.0)
    b = OffsetEncoding.sincos(0, 0, 0, 0, 0.0, 1.0)
    assert b.mode is AngleMode.SINCOS
    with pytest.raises(ModeMismatch):
        smooth_l1_loss(a, b)
