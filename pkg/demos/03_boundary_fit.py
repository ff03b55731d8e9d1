"""Fitting across the angle boundary.

The anchor sits at -90 degrees in the OpenCV range and the target is a tall
box at -25 degrees. Both describe nearly the same shape, yet their offsets
differ in every coordinate. Smooth-L1 on direct angle offsets sees a loss
that jumps when the prediction crosses -90 degrees. The Gaussian losses do
not.
"""

import math

import numpy as np

from rotgauss.boxes import AnchorBox, BoxDefinition, RBox2D, convert_definition, encode_offsets
from rotgauss.divergences import Metric
from rotgauss.gradients import FitConfig, SmoothL1Config, fit_box
from rotgauss.loss import LossConfig, gaussian_box_loss, smooth_l1_loss

OC = BoxDefinition.OPENCV
anchor = RBox2D(0, 0, 70, 10, -math.pi / 2, OC)
target = RBox2D(0, 0, 10, 70, math.radians(-25), OC)
a = AnchorBox.from_box(anchor)

print("loss on either side of the boundary (prediction = anchor turned by +-1e-6):")
for t in (-math.pi / 2 - 1e-6, -math.pi / 2 + 1e-6):
    pred = convert_definition(anchor.replace(theta=t), OC)
    sl1 = smooth_l1_loss(encode_offsets(pred, a), encode_offsets(target, a))
    kl = gaussian_box_loss(pred, target, LossConfig(Metric.KLD_PT))
    print(f"  pred {np.round(pred.params, 4)}  smooth-l1 {sl1:.4f}  kld {kl:.6f}")

for name, loss in (("kld", LossConfig(Metric.KLD_PT)), ("gwd", LossConfig(Metric.GWD)),
                   ("smooth-l1", SmoothL1Config())):
    traj = fit_box(anchor, target, FitConfig(loss=loss))
    last = traj[-1]
    print(f"\n{name}: {last.step} steps, final skew_iou {last.skew_iou:.4f}, box {np.round(last.box.params, 3)}")
    for s in traj[:: max(1, len(traj) // 5)]:
        print(f"  step {s.step:4d} loss {s.loss:.5f} iou {s.skew_iou:.4f}")
