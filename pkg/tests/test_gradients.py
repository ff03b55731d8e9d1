import math

import numpy as np
import pytest

from rotgauss.boxes import BoxDefinition, RBox2D
from rotgauss.divergences import Metric, box_distance
from rotgauss.errors import InvalidConfig
from rotgauss.geometry import skew_iou_2d
from rotgauss.gradients import (FitConfig, ParamSpace, SmoothL1Config, SweepKind, SweepScenario,
                                analytic_gradient, default_scenario, finite_difference_gradient,
                                fit_box, kld_closed_form_partials, run_sweep)
from rotgauss.loss import LossConfig
from rotgauss.selftest import gradient_agrees, well_conditioned_pair

RAW_KLD = LossConfig(Metric.KLD_PT)


def test_zero_gradient_at_minimum():
    b = RBox2D(1, 2, 5, 2, 0.4)
    for m in Metric:
        g = analytic_gradient(b, b, LossConfig(m), raw=True).vector()
        assert np.max(np.abs(g)) < 1e-12
        fd = finite_difference_gradient(b, b, LossConfig(m), raw=True).vector()
        assert np.max(np.abs(fd)) <= 1e-6


def test_center_partial_example():
    p, t = RBox2D(1, 0, 2, 3, 0), RBox2D(0, 0, 2, 3, 0)
    g = analytic_gradient(p, t, RAW_KLD, raw=True)
    assert g.d_x == pytest.approx(1.0)
    assert kld_closed_form_partials(p, t)["d_x"] == pytest.approx(1.0)


def test_theta_partial_matched_shapes():
    p, t = RBox2D(0, 0, 1, 2, math.pi / 4), RBox2D(0, 0, 1, 2, 0)
    a = analytic_gradient(p, t, RAW_KLD, raw=True).d_theta
    n = finite_difference_gradient(p, t, RAW_KLD, raw=True).d_theta
    assert a == pytest.approx(1.125, rel=1e-9)
    assert n == pytest.approx(1.125, rel=1e-7)
    cf = kld_closed_form_partials(p, t)
    # the quoted closed form carries an extra factor of two
    assert cf["d_theta"] == pytest.approx(2.25)
    assert cf["d_theta_exact"] == pytest.approx(a, rel=1e-12)


def test_closed_form_position_and_log_edges(rng):
    for _ in range(100):
        t = RBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(1, 5, 2), 0.0)
        p = RBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(1, 5, 2), rng.uniform(-1.5, 1.5))
        g = analytic_gradient(p, t, RAW_KLD, raw=True, log_edges=True)
        cf = kld_closed_form_partials(p, t)
        assert cf["d_x"] == pytest.approx(g.d_x, rel=1e-9, abs=1e-12)
        assert cf["d_y"] == pytest.approx(g.d_y, rel=1e-9, abs=1e-12)
        assert cf["d_log_w"] == pytest.approx(g.d_w, rel=1e-9, abs=1e-12)
        assert cf["d_log_h"] == pytest.approx(g.d_h, rel=1e-9, abs=1e-12)
        assert cf["d_theta_exact"] == pytest.approx(g.d_theta, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("metric", list(Metric))
@pytest.mark.parametrize("wrt", ["pred", "target"])
def test_analytic_matches_finite_difference(rng, metric, wrt):
    cfg = LossConfig(metric)
    for _ in range(20):
        p, t = well_conditioned_pair(rng)
        for log_edges in (False, True):
            a = analytic_gradient(p, t, cfg, log_edges=log_edges, wrt=wrt).vector()
            n = finite_difference_gradient(p, t, cfg, log_edges=log_edges, wrt=wrt).vector()
            assert all(gradient_agrees(x, y) for x, y in zip(a, n)), (a, n)


def test_gwd_symmetry_of_roles(rng):
    cfg = LossConfig(Metric.GWD)
    for _ in range(20):
        p, t = well_conditioned_pair(rng)
        a = analytic_gradient(p, t, cfg, wrt="pred").vector()
        b = analytic_gradient(t, p, cfg, wrt="target").vector()
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_theta_gradient_grows_with_aspect_ratio():
    vals = []
    for r in (1, 2, 3, 4):
        t = RBox2D(0, 0, 1, r, 0)
        vals.append(abs(analytic_gradient(t.replace(theta=math.pi / 8), t, RAW_KLD, raw=True).d_theta))
    assert vals[0] == pytest.approx(0, abs=1e-12)
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_center_gradient_scales_inverse_square():
    g = {w: analytic_gradient(RBox2D(0.5, 0, w, 1.5, 0), RBox2D(0, 0, w, 1.5, 0), RAW_KLD, raw=True).d_x
         for w in (1, 2, 4)}
    assert g[1] / g[2] == pytest.approx(4, rel=1e-9)
    assert g[2] / g[4] == pytest.approx(4, rel=1e-9)


def test_fit_identity_stops_immediately():
    b = RBox2D(0, 0, 4, 2, 0.3)
    traj = fit_box(b, b)
    assert len(traj) == 1 and traj[0].step == 0 and traj[0].skew_iou == pytest.approx(1.0)


def test_fit_boundary_fixture_kld(boundary_pair):
    anchor, gt = boundary_pair
    traj = fit_box(anchor, gt)
    losses = [s.loss for s in traj]
    assert traj[-1].skew_iou >= 0.90
    assert traj[-1].step <= 2000
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    assert all(s.box.definition is BoxDefinition.OPENCV and s.box.in_range() for s in traj)


def test_fit_smooth_l1_runs(boundary_pair):
    anchor, gt = boundary_pair
    traj = fit_box(anchor, gt, FitConfig(loss=SmoothL1Config()))
    losses = [s.loss for s in traj]
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))
    assert traj[-1].skew_iou == pytest.approx(skew_iou_2d(traj[-1].box, gt))


def test_fit_raw_space(boundary_pair):
    anchor, gt = boundary_pair
    traj = fit_box(anchor, gt, FitConfig(param_space=ParamSpace.RAW, max_steps=50))
    assert traj[-1].loss <= traj[0].loss


def test_fit_config_validation():
    with pytest.raises(InvalidConfig):
        FitConfig(max_steps=0)
    with pytest.raises(InvalidConfig):
        FitConfig(stop_iou=0.0)


def test_scale_sweep_invariance():
    rows = run_sweep(default_scenario(SweepKind.SCALE),
                     [LossConfig(Metric.KLD_PT), LossConfig(Metric.BCD), LossConfig(Metric.GWD)])
    by = {}
    for r in rows:
        by.setdefault(r.metric.split("-")[0], []).append((r.grid_value, r.distance))
    for m in ("kld_pt", "bcd"):
        d = [v for _, v in by[m]]
        assert max(d) - min(d) <= 1e-8
    s0, d0 = by["gwd"][0]
    for s, d in by["gwd"]:
        assert d == pytest.approx(d0 * (s / s0) ** 2, rel=1e-8)


def test_angle_sweep_zero_matches_identity():
    rows = run_sweep(default_scenario(SweepKind.ANGLE), [LossConfig(m) for m in Metric])
    at_zero = [r for r in rows if abs(r.grid_value) < 1e-15]
    assert len(at_zero) == len(Metric)
    assert all(r.loss == pytest.approx(0.5) and r.skew_iou == pytest.approx(1.0) for r in at_zero)


def test_angle_sweep_monotone():
    sc = SweepScenario(SweepKind.ANGLE, tuple(np.linspace(0, math.pi / 2, 91)))
    for m in Metric:
        v = [r.loss for r in run_sweep(sc, [LossConfig(m)])]
        assert all(b > a for a, b in zip(v, v[1:])), m


def test_sweep_rejects_empty_grid():
    with pytest.raises(InvalidConfig):
        SweepScenario(SweepKind.ANGLE, ())


def test_center_sweep_kld_quadratic():
    sc = default_scenario(SweepKind.CENTER)
    for g, p, t in sc.pairs():
        assert box_distance(p, t, Metric.KLD_PT).value == pytest.approx(0.5 * 4 * g * g / t.w ** 2, abs=1e-12)
