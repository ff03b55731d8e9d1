"""How the Gaussian losses react to angle, aspect ratio, offset and scale.

Each sweep prints a few rows of the table the ``sweep`` subcommand writes.
"""

import math

import numpy as np

from rotgauss.divergences import Metric
from rotgauss.gradients import SweepKind, default_scenario, run_sweep
from rotgauss.loss import LossConfig

metrics = [LossConfig(Metric.GWD), LossConfig(Metric.KLD_PT), LossConfig(Metric.BCD)]


def show(kind, every):
    rows = run_sweep(default_scenario(kind), metrics)
    print(f"\n{kind.value} sweep")
    print(f"{'grid':>8} " + " ".join(f"{c.label:>18}" for c in metrics) + f" {'skew_iou':>9}")
    for i in range(0, len(rows), len(metrics) * every):
        chunk = rows[i:i + len(metrics)]
        print(f"{chunk[0].grid_value:8.3f} " + " ".join(f"{r.loss:18.4f}" for r in chunk)
              + f" {chunk[0].skew_iou:9.4f}")


show(SweepKind.ANGLE, 20)
show(SweepKind.ASPECT, 15)
show(SweepKind.CENTER, 20)

# scaling both boxes leaves KLD and BCD untouched; GWD grows with the square of the scale
rows = run_sweep(default_scenario(SweepKind.SCALE), metrics)
for c in metrics:
    d = np.array([r.distance for r in rows if r.metric == c.label])
    print(f"\nscale sweep {c.label}: min {d.min():.6g} max {d.max():.6g}")
print("GWD ratio at s=10 vs s=1:", rows[-3].distance / rows[0].distance, "(expected 100)")
print("angle sweep step:", math.degrees(default_scenario(SweepKind.ANGLE).grid[1]
                                        - default_scenario(SweepKind.ANGLE).grid[0]), "degrees")
