"""Seeded invariant suite behind the ``selftest`` command.

Every check yields a ``Check`` row; numeric tables produced along the way
(sweeps, gradient checks, fit trajectories) are written as CSV artifacts so
two runs with the same seed can be compared byte for byte.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .assignment import AssignConfig, assign_labels, make_grid, mean_plus_std
from .boxes import (BoxDefinition, RBox2D, RBox3D, canonicalize, convert_definition,
                    from_gaussian_2d, to_gaussian_2d)
from .divergences import (Metric, bcd, gwd_horizontal_closed_form, gwd_squared,
                          kld, kld_horizontal_closed_form, kld_terms_from_boxes)
from .geometry import same_vertex_set, skew_iou_2d
from .gradients import (PARAM_NAMES, FitConfig, SmoothL1Config, analytic_gradient,
                        default_scenario, finite_difference_gradient, fit_box,
                        kld_closed_form_partials, run_sweep)
from .heading3d import HeadingVector, PostProcConfig, post_process_heading
from .loss import LossConfig, gaussian_box_loss
from .records import write_csv

ALL_METRICS = tuple(Metric)


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool


def random_box(rng, definition=BoxDefinition.LONG_EDGE, lo=1.0, hi=50.0) -> RBox2D:
    x, y = rng.uniform(-50, 50, 2)
    w, h = rng.uniform(lo, hi, 2)
    box = RBox2D(x, y, w, h, rng.uniform(-math.pi, math.pi), definition)
    return canonicalize(box, definition)


def random_spd_map(rng, d=2, lo=0.3, hi=3.0) -> np.ndarray:
    q1, _ = np.linalg.qr(rng.normal(size=(d, d)))
    q2, _ = np.linalg.qr(rng.normal(size=(d, d)))
    return q1 @ np.diag(rng.uniform(lo, hi, d)) @ q2


def well_conditioned_pair(rng):
    """Random (pred, target) away from square shapes and quarter-turn offsets."""
    while True:
        t = RBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(1.0, 5.0, 2), rng.uniform(-math.pi, math.pi))
        p = RBox2D(t.x + rng.uniform(-1, 1), t.y + rng.uniform(-1, 1),
                   t.w * rng.uniform(0.6, 1.6), t.h * rng.uniform(0.6, 1.6),
                   t.theta + rng.uniform(-1.2, 1.2))
        sq = min(abs(p.w - p.h) / max(p.w, p.h), abs(t.w - t.h) / max(t.w, t.h))
        dth = abs(math.remainder(p.theta - t.theta, math.pi / 2))
        if sq > 1e-3 and dth > 1e-3:
            return p, t


def gradient_agrees(a: float, n: float, rel: float = 1e-4, atol: float = 1e-7) -> bool:
    if abs(a) < 1e-3:
        return abs(a - n) <= atol
    return abs(a - n) <= rel * abs(a)


def grad_check_rows(rng, n_configs: int, metrics=ALL_METRICS):
    rows = []
    for i in range(n_configs):
        p, t = well_conditioned_pair(rng)
        for m in metrics:
            cfg = LossConfig(m)
            a = analytic_gradient(p, t, cfg).vector()
            n = finite_difference_gradient(p, t, cfg, step=1e-5).vector()
            for k, name in enumerate(PARAM_NAMES):
                err = abs(a[k] - n[k])
                rel = err / abs(a[k]) if a[k] != 0 else err
                rows.append((i, m.value, name, a[k], n[k], err, rel, gradient_agrees(a[k], n[k])))
    return rows


GRAD_HEADER = ("config", "metric", "param", "analytic", "numeric", "abs_err", "rel_err", "ok")
SWEEP_HEADER = ("grid_value", "metric", "distance", "loss", "skew_iou")
FIT_HEADER = ("step", "x", "y", "w", "h", "theta", "loss", "skew_iou")

BOUNDARY_ANCHOR = RBox2D(0.0, 0.0, 70.0, 10.0, -math.pi / 2, BoxDefinition.OPENCV)
BOUNDARY_GT = RBox2D(0.0, 0.0, 10.0, 70.0, math.radians(-25), BoxDefinition.OPENCV)


def fit_rows(trajectory):
    return [(s.step, s.box.x, s.box.y, s.box.w, s.box.h, s.box.theta, s.loss, s.skew_iou)
            for s in trajectory]


def run_selftest(seed: int = 42, out_dir=None, n: int = 200) -> list:
    rng = np.random.default_rng(seed)
    checks = []

    def add(name, measured, tol, passed=None):
        measured = float(measured)
        checks.append(Check(name, measured, tol, measured <= tol if passed is None else bool(passed)))

    # Gaussian modelling
    err1 = err2 = errc = 0.0
    for _ in range(n):
        b = random_box(rng)
        g = to_gaussian_2d(b)
        err1 = max(err1, np.max(np.abs(g.sigma - to_gaussian_2d(
            b.replace(w=b.h, h=b.w, theta=b.theta - math.pi / 2)).sigma)))
        err2 = max(err2, np.max(np.abs(g.sigma - to_gaussian_2d(b.replace(theta=b.theta - math.pi)).sigma)))
        oc = convert_definition(b, BoxDefinition.OPENCV)
        errc = max(errc, np.max(np.abs(g.sigma - to_gaussian_2d(oc).sigma)))
        if not same_vertex_set(b, from_gaussian_2d(g, BoxDefinition.OPENCV), 1e-6):
            errc = max(errc, 1.0)
    add("property1_max_err", err1, 1e-9)
    add("property2_max_err", err2, 1e-9)
    add("definition_invariance_max_err", errc, 1e-9)

    # horizontal closed forms
    eg = ek = 0.0
    for _ in range(n):
        a = RBox2D(*rng.uniform(-5, 5, 2), *rng.uniform(0.5, 10, 2), 0.0)
        b = RBox2D(*rng.uniform(-5, 5, 2), *rng.uniform(0.5, 10, 2), math.pi * rng.integers(-2, 3))
        ga, gb = to_gaussian_2d(a), to_gaussian_2d(b)
        v = gwd_squared(ga, gb).value
        eg = max(eg, abs(v - gwd_horizontal_closed_form(a, b)) / max(v, 1e-300))
        v = kld(ga, gb).value
        ek = max(ek, abs(v - kld_horizontal_closed_form(a, b)) / max(v, 1e-300))
    add("gwd_horizontal_rel_err", eg, 1e-9)
    add("kld_horizontal_rel_err", ek, 1e-9)

    # affine / scale behaviour
    ea = es = et = 0.0
    for _ in range(n):
        a, b = random_box(rng, lo=1, hi=10), random_box(rng, lo=1, hi=10)
        a = a.replace(x=a.x / 10, y=a.y / 10)
        ga, gb = to_gaussian_2d(a), to_gaussian_2d(b)
        m = random_spd_map(rng)
        shift = rng.normal(size=2)
        for fn in (lambda p, q: kld(p, q).value, lambda p, q: bcd(p, q).value):
            ea = max(ea, abs(fn(ga, gb) - fn(ga.transformed(m, shift), gb.transformed(m, shift))))
        s = rng.uniform(0.1, 10)
        v = gwd_squared(ga, gb).value
        es = max(es, abs(gwd_squared(to_gaussian_2d(a.scaled(s)), to_gaussian_2d(b.scaled(s))).value
                         - s * s * v) / (s * s * v))
        terms = kld_terms_from_boxes(a, b)
        et = max(et, abs(sum(terms.values()) - kld(ga, gb).value))
    add("kld_bcd_affine_max_err", ea, 1e-8)
    add("gwd_scale_rel_err", es, 1e-8)
    add("kld_term_decomposition_err", et, 1e-9)

    # analytic vs finite-difference gradients
    grad_rows = grad_check_rows(rng, max(n // 10, 5))
    add("grad_check_failures", sum(not r[-1] for r in grad_rows), 0)
    ecf = 0.0
    for _ in range(n):
        t = RBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(0.5, 5, 2), 0.0)
        p = RBox2D(*rng.uniform(-2, 2, 2), *rng.uniform(0.5, 5, 2), rng.uniform(-math.pi, math.pi))
        g = analytic_gradient(p, t, LossConfig(Metric.KLD_PT), raw=True, log_edges=True)
        cf = kld_closed_form_partials(p, t)
        ecf = max(ecf, abs(g.d_x - cf["d_x"]), abs(g.d_y - cf["d_y"]),
                  abs(g.d_w - cf["d_log_w"]), abs(g.d_h - cf["d_log_h"]),
                  abs(g.d_theta - cf["d_theta_exact"]))
    add("kld_closed_form_partials_err", ecf, 1e-9)

    # boundary continuity through -pi/2
    cfgs = [LossConfig(m) for m in ALL_METRICS]
    jump = 0.0
    base = BOUNDARY_ANCHOR.theta
    for k in range(-20, 20):
        a = canonicalize(BOUNDARY_ANCHOR.replace(theta=base + k * 1e-6), BoxDefinition.OPENCV)
        b = canonicalize(BOUNDARY_ANCHOR.replace(theta=base + (k + 1) * 1e-6), BoxDefinition.OPENCV)
        for cfg in cfgs:
            jump = max(jump, abs(gaussian_box_loss(a, BOUNDARY_GT, cfg) - gaussian_box_loss(b, BOUNDARY_GT, cfg)))
    add("boundary_max_loss_jump", jump, 1e-4)

    # SkewIoU hand cases
    sq = RBox2D(0, 0, 2, 2, 0)
    add("iou_identity_err", abs(skew_iou_2d(sq, sq) - 1), 1e-12)
    add("iou_offset_squares_err", abs(skew_iou_2d(sq, RBox2D(1, 1, 2, 2, 0)) - 1 / 7), 1e-12)
    add("iou_disjoint", skew_iou_2d(sq, RBox2D(5, 5, 2, 2, 0)), 0.0)

    # sweeps
    sweeps = {}
    for kind in ("angle", "aspect", "center", "height", "scale"):
        rows = run_sweep(default_scenario(kind), cfgs)
        sweeps[kind] = rows
    scale_rows = sweeps["scale"]
    for m in (Metric.KLD_PT, Metric.BCD):
        vals = [r.distance for r in scale_rows if r.metric == LossConfig(m).label]
        add(f"scale_sweep_{m.value}_spread", max(vals) - min(vals), 1e-8)
    nonmono = 0
    for cfg in cfgs:
        vals = [(abs(r.grid_value), r.loss) for r in sweeps["angle"]
                if r.metric == cfg.label and r.grid_value >= 0]
        vals.sort()
        nonmono += sum(1 for (_, a), (_, b) in zip(vals, vals[1:]) if b < a - 1e-12)
    add("angle_sweep_nonmonotone_steps", nonmono, 0)

    # toy fit
    traj = fit_box(BOUNDARY_ANCHOR, BOUNDARY_GT, FitConfig())
    base_traj = fit_box(BOUNDARY_ANCHOR, BOUNDARY_GT, FitConfig(loss=SmoothL1Config()))
    add("fit_kld_final_iou", traj[-1].skew_iou, 0.90, traj[-1].skew_iou >= 0.90)
    add("fit_kld_loss_increase", max([b.loss - a.loss for a, b in zip(traj, traj[1:])] or [0.0]), 0.0)

    # assignment
    add("atss_hand_threshold_err", abs(mean_plus_std([0.5, 0.4, 0.3, 0.2]) - 0.461803398874989), 1e-6)
    grid = make_grid((128, 128), strides=(16, 32), scale=2.0)
    missing = 0
    for _ in range(max(n // 20, 5)):
        gts = [RBox2D(*rng.uniform(10, 118, 2), *rng.uniform(8, 60, 2), rng.uniform(-math.pi / 2, math.pi / 2))
               for _ in range(rng.integers(1, 5))]
        res = assign_labels(gts, grid, AssignConfig())
        missing += sum(1 for i in range(len(gts)) if len(res.positives(i)) == 0)
    add("assign_gts_without_positive", missing, 0)

    # heading post-processing
    cfg3 = PostProcConfig()
    bad = 0
    for _ in range(n):
        w, h = rng.uniform(1, 6, 2)
        if 1 / 1.2 < w / h < 1.2:
            continue
        cube = RBox3D(*rng.uniform(-10, 10, 3), w, h, rng.uniform(1, 3), rng.uniform(-4, 4))
        hv = HeadingVector(*rng.normal(size=2))
        cls = "vehicle" if rng.random() < 0.5 else "pedestrian"
        out = post_process_heading(cube, hv, cls, cfg3)
        again = post_process_heading(out, hv, cls, cfg3)
        if not (-math.pi <= out.theta < math.pi):
            bad += 1
        if not same_vertex_set(cube.bev(), out.bev(), 1e-9):
            bad += 1
        if max(abs(out.theta - again.theta), abs(out.w - again.w), abs(out.h - again.h)) > 1e-9:
            bad += 1
    add("heading_invariant_violations", bad, 0)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for kind, rows in sweeps.items():
            with open(os.path.join(out_dir, f"sweep_{kind}.csv"), "w", encoding="utf-8", newline="") as fh:
                write_csv(SWEEP_HEADER, [(r.grid_value, r.metric, r.distance, r.loss, r.skew_iou)
                                         for r in rows], fh)
        with open(os.path.join(out_dir, "grad_check.csv"), "w", encoding="utf-8", newline="") as fh:
            write_csv(GRAD_HEADER, grad_rows, fh)
        with open(os.path.join(out_dir, "fit_kld.csv"), "w", encoding="utf-8", newline="") as fh:
            write_csv(FIT_HEADER, fit_rows(traj), fh)
        with open(os.path.join(out_dir, "fit_smooth_l1.csv"), "w", encoding="utf-8", newline="") as fh:
            write_csv(FIT_HEADER, fit_rows(base_traj), fh)
        with open(os.path.join(out_dir, "checks.csv"), "w", encoding="utf-8", newline="") as fh:
            write_csv(("check", "measured", "tolerance", "passed"),
                      [(c.name, c.measured, c.tolerance, c.passed) for c in checks], fh)
    return checks
