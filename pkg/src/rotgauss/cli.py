"""Command-line entry point.

Each subcommand writes a CSV table (or JSON lines for ``convert`` with
``--jsonl`` and ``head-fix``) to ``--out`` or standard output, then prints a
``# key=value ...`` summary line to standard output.

Exit codes: 0 ok, 1 input/parse error, 2 numeric error, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys

import numpy as np

from . import records
from .assignment import AssignConfig, assign_labels, make_grid
from .boxes import BoxDefinition, RBox3D, convert_definition
from .divergences import Metric, box_distance
from .errors import InvalidConfig, NumericError
from .geometry import iou_3d_yaw, skew_iou_2d
from .gradients import (FitConfig, SmoothL1Config, SweepKind, default_scenario, fit_box,
                        run_sweep)
from .heading3d import DEFAULT_LONG_SIDE_CLASSES, HeadingVector, PostProcConfig, post_process_heading
from .loss import LossConfig, Transform, normalize_loss
from .selftest import (FIT_HEADER, GRAD_HEADER, SWEEP_HEADER, fit_rows, grad_check_rows,
                       run_selftest)

EXIT_INPUT, EXIT_NUMERIC, EXIT_SELFTEST = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _metrics(text: str) -> list:
    return [Metric.parse(m) for m in text.split(",") if m.strip()]


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _summary(**fields) -> None:
    print("# " + " ".join(f"{k}={records.fmt(v)}" for k, v in fields.items()))


def _definition(args):
    return BoxDefinition.parse(args.definition)


def cmd_convert(args) -> int:
    boxes = records.read_box_file(args.boxes, _definition(args), args.degrees)
    target = BoxDefinition.parse(args.to)
    out = [convert_definition(b, target) for b in boxes]
    with _output(args.out) as fh:
        if args.jsonl:
            for b in out:
                fh.write(json.dumps(records.box_to_record(b), sort_keys=True) + "\n")
        else:
            records.write_csv(("x", "y", "w", "h", "theta", "def"),
                              [(b.x, b.y, b.w, b.h, b.theta, b.definition.value) for b in out], fh)
    _summary(command="convert", rows=len(out), to=target.value)
    return 0


def cmd_distance(args) -> int:
    pairs = records.read_pairs(args.pairs, _definition(args), args.degrees)
    rows = []
    for i, (p, t) in enumerate(pairs):
        for m in _metrics(args.metric):
            rows.append((i, m.value, box_distance(p, t, m).value))
    with _output(args.out) as fh:
        records.write_csv(("pair", "metric", "value"), rows, fh)
    _summary(command="distance", rows=len(rows))
    return 0


def cmd_loss(args) -> int:
    pairs = records.read_pairs(args.pairs, _definition(args), args.degrees)
    rows = []
    for i, (p, t) in enumerate(pairs):
        for m in _metrics(args.metric):
            cfg = LossConfig(m, Transform.parse(args.f), args.tau)
            d = box_distance(p, t, m).value
            rows.append((i, cfg.label, d, normalize_loss(d, cfg)))
    with _output(args.out) as fh:
        records.write_csv(("pair", "metric", "distance", "loss"), rows, fh)
    _summary(command="loss", rows=len(rows))
    return 0


def cmd_iou(args) -> int:
    pairs = records.read_pairs(args.pairs, _definition(args), args.degrees)
    rows = []
    for i, (a, b) in enumerate(pairs):
        if isinstance(a, RBox3D) != isinstance(b, RBox3D):
            raise ValueError(f"pair {i} mixes 2-D and 3-D boxes")
        iou = iou_3d_yaw(a, b) if isinstance(a, RBox3D) else skew_iou_2d(a, b)
        rows.append((i, iou))
    with _output(args.out) as fh:
        records.write_csv(("pair", "iou"), rows, fh)
    _summary(command="iou", rows=len(rows))
    return 0


def cmd_sweep(args) -> int:
    scenario = default_scenario(SweepKind(args.scenario))
    cfgs = [LossConfig(m, Transform.parse(args.f), args.tau) for m in _metrics(args.metrics)]
    rows = run_sweep(scenario, cfgs)
    with _output(args.out) as fh:
        records.write_csv(SWEEP_HEADER, [(r.grid_value, r.metric, r.distance, r.loss, r.skew_iou)
                                         for r in rows], fh)
    _summary(command="sweep", scenario=args.scenario, rows=len(rows))
    return 0


def cmd_grad_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = grad_check_rows(rng, args.n, _metrics(args.metric))
    failures = sum(not r[-1] for r in rows)
    with _output(args.out) as fh:
        records.write_csv(GRAD_HEADER, rows, fh)
    _summary(command="grad-check", rows=len(rows), failures=failures)
    return 0 if failures == 0 else EXIT_NUMERIC


def cmd_fit(args) -> int:
    definition = _definition(args)
    init = records.read_box_file(args.init, definition, args.degrees)[0]
    target = records.read_box_file(args.target, definition, args.degrees)[0]
    if args.loss == "smooth_l1":
        loss = SmoothL1Config()
    else:
        loss = LossConfig(Metric.parse(args.loss), Transform.parse(args.f), args.tau)
    cfg = FitConfig(max_steps=args.max_steps, stop_iou=args.stop_iou, loss=loss)
    traj = fit_box(init, target, cfg)
    with _output(args.out) as fh:
        records.write_csv(FIT_HEADER, fit_rows(traj), fh)
    _summary(command="fit", steps=traj[-1].step, final_loss=traj[-1].loss,
             final_iou=traj[-1].skew_iou)
    return 0


def cmd_assign(args) -> int:
    gts = records.read_box_file(args.gts, _definition(args), args.degrees)
    grid = make_grid(tuple(args.image_size), tuple(int(s) for s in args.strides.split(",")),
                     args.anchor_scale)
    cfg = AssignConfig(args.strategy, args.metric, args.k, args.tau, args.pos_thresh,
                       args.neg_thresh, args.center_inside)
    res = assign_labels(gts, grid, cfg)
    rows = []
    for j in range(len(grid)):
        label = int(res.labels[j])
        thr = res.thresholds[label - 1] if label > 0 else float("nan")
        rows.append((j, grid.level_of[j], label, res.affinity[j],
                     "" if math.isnan(thr) else thr))
    with _output(args.out) as fh:
        records.write_csv(("anchor", "level", "label", "affinity", "threshold"), rows, fh)
    _summary(command="assign", anchors=len(grid), positives=int(np.sum(res.labels > 0)),
             gts=len(gts))
    return 0


def cmd_head_fix(args) -> int:
    classes = frozenset(c.strip() for c in args.long_side_classes.split(",") if c.strip())
    cfg = PostProcConfig(args.ratio_threshold, classes)
    n = 0
    with _output(args.out) as fh:
        for rec in records.read_jsonl(args.input):
            cube = RBox3D.from_dict(rec, degrees=args.degrees)
            hv = HeadingVector(float(rec["dx"]), float(rec["dy"]))
            out = post_process_heading(cube, hv, rec.get("class"), cfg)
            new = dict(rec)
            new.update({"w": out.w, "h": out.h,
                        "theta": math.degrees(out.theta) if args.degrees else out.theta})
            fh.write(json.dumps(new, sort_keys=True) + "\n")
            n += 1
    _summary(command="head-fix", rows=n)
    return 0


def cmd_selftest(args) -> int:
    checks = run_selftest(args.seed, args.out)
    failed = [c.name for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} measured={records.fmt(c.measured)} "
              f"tol={records.fmt(c.tolerance)}")
    _summary(command="selftest", checks=len(checks), failed=len(failed), seed=args.seed)
    return 0 if not failed else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rotgauss", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("--def", dest="definition", default="le", choices=["oc", "le"],
                        help="definition for boxes without a 'def' field")
    common.add_argument("--degrees", action="store_true", help="input angles are in degrees")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=42)
    loss_opts = _Parser(add_help=False)
    loss_opts.add_argument("--f", default="sqrt", choices=["sqrt", "log1p"])
    loss_opts.add_argument("--tau", type=float, default=2.0)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", parents=[common], help="convert box definitions")
    p.add_argument("--boxes", required=True)
    p.add_argument("--to", required=True, choices=["oc", "le"])
    p.add_argument("--jsonl", action="store_true", help="emit JSON lines instead of CSV")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("distance", parents=[common], help="Gaussian distances for box pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--metric", default="kld", help="comma list of gwd,kld,kld_tp,jeffreys,jsd,bcd")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("loss", parents=[common, loss_opts], help="normalized losses for box pairs")
    p.add_argument("--pairs", required=True)
    p.add_argument("--metric", default="kld")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("iou", parents=[common], help="exact SkewIoU / yaw-only 3-D IoU")
    p.add_argument("--pairs", required=True)
    p.set_defaults(func=cmd_iou)

    p = sub.add_parser("sweep", parents=[common, loss_opts], help="loss curves over a scenario grid")
    p.add_argument("--scenario", required=True, choices=[k.value for k in SweepKind])
    p.add_argument("--metrics", default="gwd,kld,bcd")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("grad-check", parents=[common], help="analytic vs finite-difference gradients")
    p.add_argument("--n", type=int, default=100, help="number of random configurations")
    p.add_argument("--metric", default=",".join(m.value for m in Metric))
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("fit", parents=[common, loss_opts], help="gradient-descent box fitting")
    p.add_argument("--init", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--loss", default="kld",
                   choices=[m.value for m in Metric] + ["kld", "smooth_l1"])
    p.add_argument("--max-steps", type=int, default=2000)
    p.add_argument("--stop-iou", type=float, default=0.99)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("assign", parents=[common], help="label assignment on a generated anchor grid")
    p.add_argument("--gts", required=True)
    p.add_argument("--image-size", type=float, nargs=2, required=True, metavar=("W", "H"))
    p.add_argument("--strides", default="8,16,32")
    p.add_argument("--anchor-scale", type=float, default=4.0)
    p.add_argument("--strategy", default="atss", choices=["atss", "maxiou"])
    p.add_argument("--metric", default="kld", choices=["iou", "kld", "bcd", "gwd"])
    p.add_argument("--k", type=int, default=9)
    p.add_argument("--tau", type=float, default=2.0)
    p.add_argument("--pos-thresh", type=float, default=0.5)
    p.add_argument("--neg-thresh", type=float, default=0.4)
    p.add_argument("--center-inside", action="store_true")
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("head-fix", parents=[common], help="3-D heading post-processing")
    p.add_argument("--input", required=True)
    p.add_argument("--ratio-threshold", type=float, default=1.1)
    p.add_argument("--long-side-classes", default=",".join(sorted(DEFAULT_LONG_SIDE_CLASSES)))
    p.set_defaults(func=cmd_head_fix)

    p = sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    p.set_defaults(func=cmd_selftest, out=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "selftest" and args.out is not None:
        os.makedirs(args.out, exist_ok=True)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"rotgauss: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, KeyError, TypeError, InvalidConfig) as exc:
        print(f"rotgauss: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
