"""Rotated box parameterizations and their Gaussian representation.

A 2-D box ``(x, y, w, h, theta)`` maps to a Gaussian with mean ``(x, y)`` and
covariance ``Sigma = (R Lambda R^T)^2`` where ``Lambda = diag(w/2, h/2)``.
The 3-D (yaw-only) box adds ``z`` and a vertical extent ``l``.

Angles are radians everywhere. Two angle conventions are supported:

* ``OPENCV``: ``theta`` in ``[-pi/2, 0)``, measured for the ``w`` edge.
* ``LONG_EDGE``: ``theta`` in ``[-pi/2, pi/2)``, ``w`` is the long edge.

Box objects accept any angle; :func:`canonicalize` maps a box into the range
of a given convention without changing the rectangle it describes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBox, NonSPD

EPS_MIN = 1e-6
# eigenvalues closer than this (relative) are treated as isotropic
ISO_TOL = 1e-9


class BoxDefinition(enum.Enum):
    OPENCV = "oc"
    LONG_EDGE = "le"

    @classmethod
    def parse(cls, value: "str | BoxDefinition") -> "BoxDefinition":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"oc": cls.OPENCV, "opencv": cls.OPENCV,
                   "le": cls.LONG_EDGE, "longedge": cls.LONG_EDGE, "long_edge": cls.LONG_EDGE}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown box definition {value!r}") from None

    @property
    def angle_range(self) -> tuple[float, float]:
        if self is BoxDefinition.OPENCV:
            return (-math.pi / 2, 0.0)
        return (-math.pi / 2, math.pi / 2)


def wrap_angle(angle: float, lower: float, period: float) -> float:
    """Map ``angle`` into ``[lower, lower + period)`` modulo ``period``."""
    out = angle - period * math.floor((angle - lower) / period)
    if out >= lower + period:
        out -= period
    if out < lower:
        out = lower
    return out


def wrap_pi(angle: float) -> float:
    """Wrap to ``(-pi, pi]``."""
    return -wrap_angle(-angle, -math.pi, 2 * math.pi)


@dataclass(frozen=True)
class RBox2D:
    x: float
    y: float
    w: float
    h: float
    theta: float
    definition: BoxDefinition = BoxDefinition.LONG_EDGE

    def __post_init__(self):
        if not (self.w >= EPS_MIN and self.h >= EPS_MIN):
            raise DegenerateBox(f"edge lengths must be >= {EPS_MIN}, got w={self.w}, h={self.h}")

    @property
    def params(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h, self.theta], dtype=float)

    def in_range(self) -> bool:
        lo, hi = self.definition.angle_range
        if not lo <= self.theta < hi:
            return False
        if self.definition is BoxDefinition.LONG_EDGE:
            return self.w >= self.h
        return True

    def replace(self, **changes) -> "RBox2D":
        kw = dict(x=self.x, y=self.y, w=self.w, h=self.h, theta=self.theta,
                  definition=self.definition)
        kw.update(changes)
        return RBox2D(**kw)

    def scaled(self, s: float) -> "RBox2D":
        """Scale about the origin (centre and edges)."""
        return self.replace(x=self.x * s, y=self.y * s, w=self.w * s, h=self.h * s)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h,
                "theta": self.theta, "def": self.definition.value}

    @classmethod
    def from_dict(cls, d: dict, definition=None, degrees: bool = False) -> "RBox2D":
        theta = float(d["theta"])
        if degrees:
            theta = math.radians(theta)
        definition = d.get("def", definition or BoxDefinition.LONG_EDGE)
        return cls(float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"]), theta,
                   BoxDefinition.parse(definition))


@dataclass(frozen=True)
class RBox3D:
    """Yaw-only cuboid; ``w``, ``h`` span the ground plane, ``l`` is the z extent."""

    x: float
    y: float
    z: float
    w: float
    h: float
    l: float
    theta: float

    def __post_init__(self):
        if not (self.w >= EPS_MIN and self.h >= EPS_MIN and self.l >= EPS_MIN):
            raise DegenerateBox(
                f"edge lengths must be >= {EPS_MIN}, got w={self.w}, h={self.h}, l={self.l}")

    @property
    def params(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.w, self.h, self.l, self.theta], dtype=float)

    def bev(self) -> RBox2D:
        return RBox2D(self.x, self.y, self.w, self.h, self.theta)

    def replace(self, **changes) -> "RBox3D":
        kw = dict(x=self.x, y=self.y, z=self.z, w=self.w, h=self.h, l=self.l, theta=self.theta)
        kw.update(changes)
        return RBox3D(**kw)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z, "w": self.w, "h": self.h,
                "l": self.l, "theta": self.theta}

    @classmethod
    def from_dict(cls, d: dict, degrees: bool = False) -> "RBox3D":
        theta = float(d["theta"])
        if degrees:
            theta = math.radians(theta)
        return cls(*(float(d[k]) for k in ("x", "y", "z", "w", "h", "l")), theta)


Cube3D = RBox3D


@dataclass(frozen=True, eq=False)
class Gaussian:
    """Mean vector and SPD covariance, in 2 or 3 dimensions."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        sigma = np.asarray(self.sigma, dtype=float)
        d = mu.shape[0]
        if sigma.shape != (d, d):
            raise ValueError(f"covariance shape {sigma.shape} does not match mean of size {d}")
        if np.max(np.abs(sigma - sigma.T)) > 1e-12 * max(1.0, np.max(np.abs(sigma))):
            raise NonSPD("covariance is not symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        if not np.all(np.isfinite(sigma)) or np.linalg.eigvalsh(sigma)[0] <= 0:
            raise NonSPD("covariance is not positive definite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def transformed(self, m: np.ndarray, shift=None) -> "Gaussian":
        """Distribution of ``M X + shift``."""
        m = np.asarray(m, dtype=float)
        mu = m @ self.mu
        if shift is not None:
            mu = mu + np.asarray(shift, dtype=float)
        return Gaussian(mu, m @ self.sigma @ m.T)

    def allclose(self, other: "Gaussian", atol: float = 1e-9) -> bool:
        return (np.allclose(self.mu, other.mu, rtol=0, atol=atol)
                and np.allclose(self.sigma, other.sigma, rtol=0, atol=atol))


Gaussian2 = Gaussian
Gaussian3 = Gaussian


def rotation_2d(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_yaw(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def sqrt_covariance_2d(box: RBox2D) -> np.ndarray:
    """``R Lambda R^T`` for the box, i.e. the covariance square root."""
    r = rotation_2d(box.theta)
    return r @ np.diag([box.w / 2, box.h / 2]) @ r.T


def to_gaussian_2d(box: RBox2D) -> Gaussian:
    r = rotation_2d(box.theta)
    sigma = r @ np.diag([box.w ** 2 / 4, box.h ** 2 / 4]) @ r.T
    return Gaussian(np.array([box.x, box.y]), 0.5 * (sigma + sigma.T))


def to_gaussian_3d(cube: RBox3D) -> Gaussian:
    r = rotation_yaw(cube.theta)
    sigma = r @ np.diag([cube.w ** 2 / 4, cube.h ** 2 / 4, cube.l ** 2 / 4]) @ r.T
    return Gaussian(np.array([cube.x, cube.y, cube.z]), 0.5 * (sigma + sigma.T))


def to_gaussian(box: "RBox2D | RBox3D") -> Gaussian:
    if isinstance(box, RBox3D):
        return to_gaussian_3d(box)
    return to_gaussian_2d(box)


def canonicalize(box: RBox2D, target: BoxDefinition) -> RBox2D:
    """Re-express ``box`` in the angle range of ``target`` (same rectangle)."""
    target = BoxDefinition.parse(target)
    w, h, theta = box.w, box.h, box.theta
    if target is BoxDefinition.LONG_EDGE:
        if w < h:
            w, h, theta = h, w, theta + math.pi / 2
        theta = wrap_angle(theta, -math.pi / 2, math.pi)
    else:
        k = math.floor((theta + math.pi / 2) / (math.pi / 2))
        theta = theta - k * (math.pi / 2)
        if theta >= 0.0:
            theta -= math.pi / 2
            k += 1
        if theta < -math.pi / 2:
            theta = -math.pi / 2
        if k % 2:
            w, h = h, w
    return RBox2D(box.x, box.y, w, h, theta, target)


def convert_definition(box: RBox2D, target: BoxDefinition) -> RBox2D:
    """Convert between the OpenCV and long-edge conventions.

    For in-range inputs this is the textbook case split: OpenCV to long-edge
    swaps edges and adds ``pi/2`` when ``w < h``; long-edge to OpenCV swaps and
    subtracts ``pi/2`` when ``theta >= 0``.
    """
    return canonicalize(box, target)


def from_gaussian_2d(g: Gaussian, target: BoxDefinition = BoxDefinition.LONG_EDGE) -> RBox2D:
    """Recover a box from a 2-D Gaussian.

    The larger eigenvalue becomes the long edge. Isotropic covariances give a
    square with ``theta = 0`` in long-edge form (``-pi/2`` once mapped into the
    OpenCV range).
    """
    if g.dim != 2:
        raise ValueError("from_gaussian_2d needs a 2-D Gaussian")
    vals, vecs = np.linalg.eigh(g.sigma)
    lo, hi = float(vals[0]), float(vals[1])
    if hi - lo <= ISO_TOL * hi:
        side = 2.0 * math.sqrt(0.5 * (lo + hi))
        box = RBox2D(g.mu[0], g.mu[1], side, side, 0.0, BoxDefinition.LONG_EDGE)
    else:
        v = vecs[:, 1]
        theta = wrap_angle(math.atan2(v[1], v[0]), -math.pi / 2, math.pi)
        box = RBox2D(g.mu[0], g.mu[1], 2.0 * math.sqrt(hi), 2.0 * math.sqrt(lo), theta,
                     BoxDefinition.LONG_EDGE)
    return canonicalize(box, target)


# --- offset encodings -------------------------------------------------------


class AngleMode(enum.Enum):
    DIRECT = "direct"
    SINCOS = "sincos"


@dataclass(frozen=True)
class AnchorBox:
    x_a: float
    y_a: float
    w_a: float
    h_a: float
    theta_a: float = 0.0

    def __post_init__(self):
        if not (self.w_a >= EPS_MIN and self.h_a >= EPS_MIN):
            raise DegenerateBox(f"anchor edges must be >= {EPS_MIN}")

    def as_box(self, definition: BoxDefinition = BoxDefinition.LONG_EDGE) -> RBox2D:
        return RBox2D(self.x_a, self.y_a, self.w_a, self.h_a, self.theta_a, definition)

    @classmethod
    def from_box(cls, box: RBox2D) -> "AnchorBox":
        return cls(box.x, box.y, box.w, box.h, box.theta)


def normalize_sincos(t_sin: float, t_cos: float) -> tuple[float, float]:
    n = math.hypot(t_sin, t_cos)
    if n == 0.0:
        raise ValueError("sin/cos pair has zero norm")
    return t_sin / n, t_cos / n


@dataclass(frozen=True)
class OffsetEncoding:
    tx: float
    ty: float
    tw: float
    th: float
    mode: AngleMode = AngleMode.DIRECT
    t_theta: float = 0.0
    t_sin: float = 0.0
    t_cos: float = 1.0

    @classmethod
    def sincos(cls, tx, ty, tw, th, t_sin, t_cos) -> "OffsetEncoding":
        s, c = normalize_sincos(t_sin, t_cos)
        return cls(tx, ty, tw, th, AngleMode.SINCOS, t_sin=s, t_cos=c)

    def vector(self) -> np.ndarray:
        if self.mode is AngleMode.DIRECT:
            return np.array([self.tx, self.ty, self.tw, self.th, self.t_theta])
        return np.array([self.tx, self.ty, self.tw, self.th, self.t_sin, self.t_cos])


def encode_offsets(box: RBox2D, anchor: AnchorBox, mode: AngleMode = AngleMode.DIRECT) -> OffsetEncoding:
    tx = (box.x - anchor.x_a) / anchor.w_a
    ty = (box.y - anchor.y_a) / anchor.h_a
    tw = math.log(box.w / anchor.w_a)
    th = math.log(box.h / anchor.h_a)
    d = box.theta - anchor.theta_a
    if mode is AngleMode.DIRECT:
        return OffsetEncoding(tx, ty, tw, th, mode, t_theta=wrap_pi(d))
    return OffsetEncoding.sincos(tx, ty, tw, th, math.sin(d), math.cos(d))


def decode_offsets(enc: OffsetEncoding, anchor: AnchorBox,
                   definition: BoxDefinition = BoxDefinition.LONG_EDGE) -> RBox2D:
    """Inverse of :func:`encode_offsets`; the angle is not range-normalized."""
    if enc.mode is AngleMode.DIRECT:
        d = enc.t_theta
    else:
        s, c = normalize_sincos(enc.t_sin, enc.t_cos)
        d = math.atan2(s, c)
    return RBox2D(anchor.x_a + enc.tx * anchor.w_a,
                  anchor.y_a + enc.ty * anchor.h_a,
                  anchor.w_a * math.exp(enc.tw),
                  anchor.h_a * math.exp(enc.th),
                  anchor.theta_a + d,
                  BoxDefinition.parse(definition))
