"""Heading recovery for yaw-only 3-D boxes regressed through Gaussians.

A Gaussian cannot tell ``theta`` from ``theta + pi``, and for a square
footprint it carries no orientation at all. :func:`post_process_heading`
resolves both using a separately regressed heading vector ``(dx, dy)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .boxes import RBox3D, wrap_angle
from .errors import InvalidConfig, ZeroHeading

DEFAULT_LONG_SIDE_CLASSES = frozenset({"vehicle", "cyclist"})


@dataclass(frozen=True)
class HeadingVector:
    dx: float
    dy: float

    def __post_init__(self):
        if math.hypot(self.dx, self.dy) < 1e-9:
            raise ZeroHeading("heading vector is (numerically) zero")

    @property
    def angle(self) -> float:
        # argument order (dx, dy) is deliberate: angle measured from +y
        return math.atan2(self.dx, self.dy)


@dataclass(frozen=True)
class PostProcConfig:
    ratio_threshold: float = 1.1
    long_side_classes: frozenset = DEFAULT_LONG_SIDE_CLASSES

    def __post_init__(self):
        if not self.ratio_threshold > 1:
            raise InvalidConfig("ratio_threshold must be > 1")
        object.__setattr__(self, "long_side_classes", frozenset(self.long_side_classes))


def limit_period(angle: float, lower: float = -math.pi, period: float = 2 * math.pi) -> float:
    """Wrap ``angle`` into ``[lower, lower + period)``."""
    if period <= 0:
        raise ValueError("period must be positive")
    return wrap_angle(angle, lower, period)


def is_square_like(cube: RBox3D, r: float) -> bool:
    return 1.0 / r < cube.w / cube.h < r


def post_process_heading(cube: RBox3D, hv: HeadingVector, cls,
                         cfg: PostProcConfig = PostProcConfig()) -> RBox3D:
    """Pick the final heading of ``cube`` given the heading vector and class.

    Square-like footprints take the decoded heading outright. Classes whose
    heading runs along the long edge are turned by a multiple of ``pi``
    (after making ``w`` the long edge). Others are turned by a multiple of
    ``pi/2``, swapping ``w`` and ``h`` on odd multiples. The multiple is the
    one that lands closest to the decoded heading.
    """
    theta_d = hv.angle
    w, h, theta = cube.w, cube.h, cube.theta
    if is_square_like(cube, cfg.ratio_threshold):
        theta = theta_d
        w = h = max(w, h)
    if cls in cfg.long_side_classes:
        if w < h:
            theta += math.pi / 2
            w, h = h, w
        n = round((theta_d - theta) / math.pi)
        theta = limit_period(theta + math.pi * (n % 2))
    else:
        n = round((theta_d - theta) / (math.pi / 2))
        theta = limit_period(theta + math.pi / 2 * (n % 4))
        if n % 2:
            w, h = h, w
    return cube.replace(w=w, h=h, theta=theta)
