"""Rotated boxes as 2-D Gaussians.

Two parameterizations of the same rectangle can look nothing alike as
numbers. Mapped to a Gaussian they collapse to one covariance, which is why
distances between Gaussians do not care how the angle was written down.
"""

import math

import numpy as np

from rotgauss.boxes import BoxDefinition, RBox2D, convert_definition, from_gaussian_2d, to_gaussian_2d
from rotgauss.geometry import same_vertex_set

np.set_printoptions(precision=4, suppress=True)

a = RBox2D(0, 0, 70, 10, -math.pi / 2, BoxDefinition.OPENCV)
b = RBox2D(0, 0, 10, 70, 0.0)
print("box a:", a.params, "box b:", b.params)
print("same rectangle:", same_vertex_set(a, b))
print("sigma(a)\n", to_gaussian_2d(a).sigma)
print("sigma(b)\n", to_gaussian_2d(b).sigma)

# a half turn also leaves the Gaussian alone
c = RBox2D(3, -1, 6, 2, 0.4)
flipped = c.replace(theta=c.theta - math.pi)
print("\nhalf-turn difference:", np.abs(to_gaussian_2d(c).sigma - to_gaussian_2d(flipped).sigma).max())

# switching definitions changes the numbers, not the Gaussian
for d in BoxDefinition:
    print(f"{d.name:>9}:", convert_definition(c, d).params)

# going back from a Gaussian picks a representative in the requested range
g = to_gaussian_2d(c)
for d in BoxDefinition:
    r = from_gaussian_2d(g, d)
    print(f"recovered {d.value}:", r.params, "same rectangle:", same_vertex_set(c, r))

# a square carries no orientation at all
sq = [to_gaussian_2d(RBox2D(0, 0, 2, 2, t)).sigma for t in np.linspace(0, math.pi, 7)]
print("\nsquare covariance spread over angles:", max(np.abs(s - sq[0]).max() for s in sq))
