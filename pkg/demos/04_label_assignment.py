"""ATSS label assignment with Gaussian affinities on a small anchor grid."""

import math

import numpy as np

from rotgauss.assignment import AffinityMetric, AssignConfig, Strategy, assign_labels, make_grid
from rotgauss.boxes import RBox2D

grid = make_grid((128, 128), strides=(8, 16, 32), scale=4.0)
gts = [RBox2D(40, 40, 60, 12, math.radians(30)),
       RBox2D(96, 90, 20, 20, 0.0),
       RBox2D(100, 30, 8, 40, math.radians(-70))]
print(f"{len(grid)} anchors over {grid.levels} levels, {len(gts)} ground truths")

for strategy, metric in ((Strategy.MAX_IOU, AffinityMetric.IOU), (Strategy.ATSS, AffinityMetric.IOU),
                         (Strategy.ATSS, AffinityMetric.KLD), (Strategy.ATSS, AffinityMetric.GWD)):
    res = assign_labels(gts, grid, AssignConfig(strategy, metric))
    counts = [len(res.positives(i)) for i in range(len(gts))]
    levels = [sorted({grid.level_of[j] for j in res.positives(i)}) for i in range(len(gts))]
    print(f"\n{strategy.value:>6}/{metric.value:<3} positives per GT {counts} levels {levels}")
    print("  thresholds", np.round(res.thresholds, 4), " forced", int(res.forced.sum()))
