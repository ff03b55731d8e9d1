import math

import numpy as np
import pytest

from rotgauss.boxes import Gaussian, RBox2D, to_gaussian_2d
from rotgauss.divergences import (Metric, bcd, box_distance, distance, gwd_horizontal_closed_form,
                                  gwd_squared, jeffreys, jsd_approx, kld,
                                  kld_horizontal_closed_form, kld_terms_from_boxes, sqrtm_spd)
from rotgauss.errors import NotHorizontal
from rotgauss.selftest import random_box, random_spd_map


def G(*args):
    return to_gaussian_2d(RBox2D(*args))


def test_sqrtm_matches_eigendecomposition(rng):
    for d in (2, 3):
        for _ in range(50):
            a = rng.normal(size=(d, d))
            m = a @ a.T + 0.1 * np.eye(d)
            vals, vecs = np.linalg.eigh(m)
            ref = vecs @ np.diag(np.sqrt(vals)) @ vecs.T
            np.testing.assert_allclose(sqrtm_spd(m), ref, atol=1e-10)


@pytest.mark.parametrize("metric", list(Metric))
def test_identity_is_zero(metric):
    g = G(1, 2, 4, 2, 0.3)
    assert distance(g, g, metric).value == pytest.approx(0.0, abs=1e-12)


def test_gwd_examples():
    assert gwd_squared(G(0, 0, 4, 2, 0), G(1, 0, 4, 2, 0)).value == pytest.approx(1.0)
    assert gwd_squared(G(0, 0, 4, 2, 0), G(0, 0, 2, 4, 0)).value == pytest.approx(2.0)
    assert gwd_squared(G(0, 0, 4, 2, 0), G(0, 0, 6, 2, 0)).value == pytest.approx(1.0)


def test_gwd_terms_sum():
    r = gwd_squared(G(0, 0, 4, 2, 0.2), G(1, -1, 3, 5, 1.0))
    assert sum(r.terms.values()) == pytest.approx(r.value)
    assert r.terms["center"] == pytest.approx(2.0)


def test_gwd_horizontal_closed_form():
    a, b = RBox2D(0, 0, 4, 2, 0), RBox2D(1, 2, 6, 3, math.pi)
    assert gwd_horizontal_closed_form(a, b) == pytest.approx(gwd_squared(G(0, 0, 4, 2, 0), G(1, 2, 6, 3, 0)).value)
    with pytest.raises(NotHorizontal):
        gwd_horizontal_closed_form(a, RBox2D(0, 0, 1, 1, 0.1))


def test_kld_examples():
    p, t = G(1, 0, 2, 2, 0), G(0, 0, 2, 2, 0)
    assert kld(p, t, "pt").value == pytest.approx(0.5)
    assert kld(p, t, "tp").value == pytest.approx(0.5)
    assert kld(G(0, 0, 4, 2, 0), t).value == pytest.approx(1.5 - math.log(2))
    a, b = G(0, 0, 70, 10, -math.pi / 2), G(0, 0, 10, 70, 0)
    assert kld(a, b, "pt").value == pytest.approx(0.0, abs=1e-12)
    assert kld(a, b, "tp").value == pytest.approx(0.0, abs=1e-12)


def test_kld_directions_swap():
    p, t = G(0.3, 0.1, 4, 1, 0.2), G(0, 0, 3, 2, -0.4)
    assert kld(p, t, "tp").value == pytest.approx(kld(t, p, "pt").value)
    assert kld(p, t, "pt").value != pytest.approx(kld(p, t, "tp").value)


def test_kld_terms_sum_and_box_form(rng):
    for _ in range(100):
        pb, tb = random_box(rng, lo=1, hi=10), random_box(rng, lo=1, hi=10)
        r = kld(to_gaussian_2d(pb), to_gaussian_2d(tb))
        assert sum(r.terms.values()) == pytest.approx(r.value, rel=1e-10, abs=1e-10)
        terms = kld_terms_from_boxes(pb, tb)
        for k in r.terms:
            assert terms[k] == pytest.approx(r.terms[k], rel=1e-9, abs=1e-9)


def test_kld_horizontal_closed_form():
    p, t = RBox2D(1, 2, 4, 2, 0), RBox2D(0, 0, 3, 5, 0)
    assert kld_horizontal_closed_form(p, t) == pytest.approx(kld(to_gaussian_2d(p), to_gaussian_2d(t)).value)


def test_jeffreys_and_jsd_examples():
    p, t = G(1, 0, 2, 2, 0), G(0, 0, 2, 2, 0)
    assert jeffreys(p, t).value == pytest.approx(1.0)
    assert jsd_approx(p, t).value == pytest.approx(0.125)
    assert bcd(p, t).value == pytest.approx(0.125)


def test_jsd_approx_is_symmetric(rng):
    for _ in range(50):
        p, t = to_gaussian_2d(random_box(rng)), to_gaussian_2d(random_box(rng))
        assert jsd_approx(p, t).value == pytest.approx(jsd_approx(t, p).value, rel=1e-10)


def test_bcd_scale_invariance(rng):
    for _ in range(50):
        a, b = random_box(rng), random_box(rng)
        v = box_distance(a, b, Metric.BCD).value
        assert box_distance(a.scaled(10), b.scaled(10), Metric.BCD).value == pytest.approx(v, rel=1e-8, abs=1e-8)


def test_affine_invariance(rng):
    for _ in range(100):
        p, t = to_gaussian_2d(random_box(rng)), to_gaussian_2d(random_box(rng))
        m, s = random_spd_map(rng), rng.normal(size=2)
        for metric in (Metric.KLD_PT, Metric.KLD_TP, Metric.BCD, Metric.JEFFREYS):
            v0 = distance(p, t, metric).value
            v1 = distance(p.transformed(m, s), t.transformed(m, s), metric).value
            assert v1 == pytest.approx(v0, rel=1e-8, abs=1e-8)


def test_three_dimensional_metrics():
    a = Gaussian(np.zeros(3), np.diag([1.0, 4.0, 9.0]))
    b = Gaussian(np.array([1.0, 0, 0]), np.diag([1.0, 4.0, 9.0]))
    assert gwd_squared(a, b).value == pytest.approx(1.0)
    assert kld(b, a).value == pytest.approx(0.5)
    assert bcd(a, b).value == pytest.approx(0.125)


def test_metric_parse_aliases():
    assert Metric.parse("kld") is Metric.KLD_PT
    assert Metric.parse("gwd") is Metric.GWD
    with pytest.raises(ValueError):
        Metric.parse("l2")
