"""Recovering a full heading for 3-D boxes whose footprint came from a Gaussian.

The Gaussian fixes the footprint only up to a half turn. A separately
regressed heading vector picks the final direction, turning by a multiple of
pi for classes whose heading follows the long edge, by a multiple of pi/2
otherwise.
"""

import math

from rotgauss.boxes import RBox3D
from rotgauss.heading3d import HeadingVector, post_process_heading

cases = [
    ("vehicle", RBox3D(0, 0, 0, 4.5, 1.9, 1.6, 0.2), HeadingVector(-0.1, -1.0)),
    ("vehicle", RBox3D(0, 0, 0, 1.9, 4.5, 1.6, 0.2), HeadingVector(1.0, 0.1)),
    ("cyclist", RBox3D(0, 0, 0, 1.8, 0.6, 1.7, -1.0), HeadingVector(0.5, 0.8)),
    ("pedestrian", RBox3D(0, 0, 0, 0.7, 0.68, 1.8, 1.3), HeadingVector(-1.0, 0.0)),
    ("sign", RBox3D(0, 0, 0, 1.0, 0.2, 2.0, 0.0), HeadingVector(1.0, 0.0)),
]
for cls, cube, hv in cases:
    out = post_process_heading(cube, hv, cls)
    print(f"{cls:>10}: in (w={cube.w}, h={cube.h}, theta={math.degrees(cube.theta):7.2f})"
          f"  heading {math.degrees(hv.angle):7.2f}"
          f"  -> (w={out.w}, h={out.h}, theta={math.degrees(out.theta):7.2f})")
