"""Distances between Gaussians (any dimension) and horizontal closed forms.

All functions take two :class:`~rotgauss.boxes.Gaussian` objects ``p`` (the
prediction) and ``t`` (the target) of equal dimension and return a
:class:`DistanceResult`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .boxes import Gaussian, RBox2D, to_gaussian
from .errors import NonSPD, NotHorizontal

CLAMP_TOL = 1e-12


class Metric(enum.Enum):
    GWD = "gwd"
    KLD_PT = "kld_pt"
    KLD_TP = "kld_tp"
    JEFFREYS = "jeffreys"
    JSD_APPROX = "jsd"
    BCD = "bcd"

    @classmethod
    def parse(cls, value: "str | Metric") -> "Metric":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key == "kld":
            return cls.KLD_PT
        for m in cls:
            if m.value == key or m.name.lower() == key:
                return m
        raise ValueError(f"unknown metric {value!r}")


@dataclass(frozen=True)
class DistanceResult:
    value: float
    metric: Metric
    terms: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def _clamp(value: float, scale: float = 1.0) -> float:
    # cancellation noise grows with the magnitude of the summed terms
    if -CLAMP_TOL * max(1.0, scale) <= value < 0.0:
        return 0.0
    return value


def _check(p: Gaussian, t: Gaussian) -> None:
    if p.dim != t.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {t.dim}")


def sqrtm_spd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric positive (semi)definite matrix.

    2x2 uses the closed form ``(M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M))``;
    larger sizes use a symmetric eigendecomposition.
    """
    m = np.asarray(m, dtype=float)
    if m.shape == (2, 2):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if det < 0:
            raise NonSPD("matrix has a negative determinant")
        s = math.sqrt(det)
        denom = math.sqrt(m[0, 0] + m[1, 1] + 2 * s)
        if denom == 0.0:
            return np.zeros((2, 2))
        return (m + s * np.eye(2)) / denom
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    if vals[0] < -1e-12 * max(1.0, abs(vals[-1])):
        raise NonSPD("matrix has a negative eigenvalue")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def _logdet(m: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(m)
    if sign <= 0:
        raise NonSPD("covariance determinant is not positive")
    return float(val)


def gwd_squared(p: Gaussian, t: Gaussian) -> DistanceResult:
    """Squared 2-Wasserstein distance between two Gaussians."""
    _check(p, t)
    dmu = p.mu - t.mu
    sp_half = sqrtm_spd(p.sigma)
    cross = sqrtm_spd(sp_half @ t.sigma @ sp_half)
    center = float(dmu @ dmu)
    shape = float(np.trace(p.sigma) + np.trace(t.sigma) - 2 * np.trace(cross))
    return DistanceResult(_clamp(center + shape, np.trace(p.sigma) + np.trace(t.sigma)),
                          Metric.GWD, {"center": center, "shape": shape})


def _kld(p: Gaussian, t: Gaussian, metric: Metric) -> DistanceResult:
    # D(p || t)
    d = p.dim
    dmu = p.mu - t.mu
    t_inv = np.linalg.inv(t.sigma)
    quad = float(dmu @ t_inv @ dmu)
    trace = float(np.trace(t_inv @ p.sigma))
    logdet = _logdet(t.sigma) - _logdet(p.sigma)
    terms = {"quadratic": 0.5 * quad, "trace": 0.5 * trace,
             "log_det": 0.5 * logdet, "constant": -0.5 * d}
    return DistanceResult(_clamp(sum(terms.values()), sum(abs(v) for v in terms.values())),
                          metric, terms)


def kld(p: Gaussian, t: Gaussian, direction: str = "pt") -> DistanceResult:
    """Kullback-Leibler divergence.

    ``direction="pt"`` gives ``KL(p || t)``; ``"tp"`` gives ``KL(t || p)``.
    The ``terms`` map splits the value into the Mahalanobis, trace, log-det and
    constant parts; they sum to ``value``.
    """
    _check(p, t)
    if direction == "pt":
        return _kld(p, t, Metric.KLD_PT)
    if direction == "tp":
        return _kld(t, p, Metric.KLD_TP)
    raise ValueError(f"direction must be 'pt' or 'tp', got {direction!r}")


def jeffreys(p: Gaussian, t: Gaussian) -> DistanceResult:
    a = kld(p, t, "pt").value
    b = kld(p, t, "tp").value
    return DistanceResult(_clamp(a + b), Metric.JEFFREYS, {"kld_pt": a, "kld_tp": b})


def midpoint_gaussian(p: Gaussian, t: Gaussian) -> Gaussian:
    """Parameter average of two Gaussians (stand-in for their mixture)."""
    return Gaussian(0.5 * (p.mu + t.mu), 0.5 * (p.sigma + t.sigma))


def jsd_approx(p: Gaussian, t: Gaussian) -> DistanceResult:
    """Jensen-Shannon divergence with the mixture replaced by the parameter mean.

    With this substitution the value coincides with the Bhattacharyya distance;
    it is computed here from the two one-sided KL terms.
    """
    _check(p, t)
    m = midpoint_gaussian(p, t)
    a = _kld(t, m, Metric.KLD_PT).value
    b = _kld(p, m, Metric.KLD_PT).value
    return DistanceResult(_clamp(0.5 * (a + b)), Metric.JSD_APPROX,
                          {"kld_t_m": a, "kld_p_m": b})


def bcd(p: Gaussian, t: Gaussian) -> DistanceResult:
    """Bhattacharyya distance."""
    _check(p, t)
    s = 0.5 * (p.sigma + t.sigma)
    dmu = p.mu - t.mu
    quad = 0.125 * float(dmu @ np.linalg.solve(s, dmu))
    logterm = 0.5 * (_logdet(s) - 0.5 * (_logdet(p.sigma) + _logdet(t.sigma)))
    return DistanceResult(_clamp(quad + logterm, abs(_logdet(s))), Metric.BCD,
                          {"quadratic": quad, "log_det": logterm})


def distance(p: Gaussian, t: Gaussian, metric: "Metric | str") -> DistanceResult:
    metric = Metric.parse(metric)
    if metric is Metric.GWD:
        return gwd_squared(p, t)
    if metric is Metric.KLD_PT:
        return kld(p, t, "pt")
    if metric is Metric.KLD_TP:
        return kld(p, t, "tp")
    if metric is Metric.JEFFREYS:
        return jeffreys(p, t)
    if metric is Metric.JSD_APPROX:
        return jsd_approx(p, t)
    return bcd(p, t)


def box_distance(pred, target, metric: "Metric | str") -> DistanceResult:
    return distance(to_gaussian(pred), to_gaussian(target), metric)


# --- horizontal closed forms -------------------------------------------------


def _require_horizontal(*boxes: RBox2D, tol: float = 1e-12) -> None:
    for b in boxes:
        r = math.remainder(b.theta, math.pi)
        if abs(r) > tol:
            raise NotHorizontal(f"box angle {b.theta} is not a multiple of pi")


def gwd_horizontal_closed_form(a: RBox2D, b: RBox2D) -> float:
    _require_horizontal(a, b)
    return ((a.x - b.x) ** 2 + (a.y - b.y) ** 2
            + ((a.w - b.w) ** 2 + (a.h - b.h) ** 2) / 4)


def kld_horizontal_closed_form(p_box: RBox2D, t_box: RBox2D) -> float:
    """``KL(p || t)`` for axis-aligned boxes written in box parameters."""
    _require_horizontal(p_box, t_box)
    wp, hp, wt, ht = p_box.w, p_box.h, t_box.w, t_box.h
    dx, dy = p_box.x - t_box.x, p_box.y - t_box.y
    return 0.5 * (wp ** 2 / wt ** 2 + hp ** 2 / ht ** 2
                  + 4 * dx ** 2 / wt ** 2 + 4 * dy ** 2 / ht ** 2
                  + math.log(wt ** 2 / wp ** 2) + math.log(ht ** 2 / hp ** 2) - 2)


def kld_terms_from_boxes(p_box: RBox2D, t_box: RBox2D) -> dict:
    """``KL(p || t)`` pieces written in box parameters.

    Returns the same keys as ``kld(...).terms``. The trace piece is
    ``(hp^2/wt^2 + wp^2/ht^2) sin^2(dtheta) + (hp^2/ht^2 + wp^2/wt^2) cos^2(dtheta)``.
    """
    wp, hp, wt, ht = p_box.w, p_box.h, t_box.w, t_box.h
    dx, dy = p_box.x - t_box.x, p_box.y - t_box.y
    ct, st = math.cos(t_box.theta), math.sin(t_box.theta)
    quad = (4 * (dx * ct + dy * st) ** 2 / wt ** 2
            + 4 * (dy * ct - dx * st) ** 2 / ht ** 2)
    dth = p_box.theta - t_box.theta
    s2, c2 = math.sin(dth) ** 2, math.cos(dth) ** 2
    trace = (hp ** 2 / wt ** 2 + wp ** 2 / ht ** 2) * s2 + (hp ** 2 / ht ** 2 + wp ** 2 / wt ** 2) * c2
    logdet = math.log(ht ** 2 / hp ** 2) + math.log(wt ** 2 / wp ** 2)
    return {"quadratic": 0.5 * quad, "trace": 0.5 * trace, "log_det": 0.5 * logdet,
            "constant": -1.0}
