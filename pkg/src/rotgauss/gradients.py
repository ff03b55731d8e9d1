"""Analytic gradients of the Gaussian losses, finite-difference checks,
gradient-descent box fitting and loss sweeps.

Gradients are computed in two stages. First the distance is differentiated
with respect to the Gaussian parameters (mean and covariance). Then the
covariance derivative is contracted with ``dSigma/dparam``. With
``u = (cos t, sin t)``, ``v = (-sin t, cos t)`` and
``Sigma = (w/2)^2 u u^T + (h/2)^2 v v^T``::

    dSigma/dw     = (w/2) u u^T
    dSigma/dh     = (h/2) v v^T
    dSigma/dtheta = ((w/2)^2 - (h/2)^2) (u v^T + v u^T)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .boxes import (AnchorBox, AngleMode, Gaussian, RBox2D, canonicalize,
                    encode_offsets, to_gaussian_2d)
from .divergences import Metric, box_distance, sqrtm_spd
from .errors import DivergedFit, InvalidConfig
from .geometry import skew_iou_2d
from .loss import (DEFAULT_BETA, LossConfig, normalize_loss, normalize_loss_derivative,
                   smooth_l1_grad, smooth_l1_loss)

PARAM_NAMES = ("x", "y", "w", "h", "theta")
MAX_HALVINGS = 30


@dataclass(frozen=True)
class ParamGradient:
    d_x: float
    d_y: float
    d_w: float
    d_h: float
    d_theta: float
    log_edges: bool = False

    def vector(self) -> np.ndarray:
        return np.array([self.d_x, self.d_y, self.d_w, self.d_h, self.d_theta])

    @classmethod
    def from_vector(cls, v, log_edges: bool = False) -> "ParamGradient":
        return cls(*(float(e) for e in v), log_edges=log_edges)


# --- gradients with respect to Gaussian parameters ---------------------------


def _kld_pt_first(a: Gaussian, b: Gaussian):
    # d KL(a || b) / d(mu_a, Sigma_a)
    b_inv = np.linalg.inv(b.sigma)
    dmu = a.mu - b.mu
    return b_inv @ dmu, 0.5 * (b_inv - np.linalg.inv(a.sigma))


def _kld_pt_second(a: Gaussian, b: Gaussian):
    # d KL(a || b) / d(mu_b, Sigma_b)
    b_inv = np.linalg.inv(b.sigma)
    dmu = a.mu - b.mu
    inner = np.outer(dmu, dmu) + a.sigma
    return -b_inv @ dmu, 0.5 * (b_inv - b_inv @ inner @ b_inv)


def _gwd_first(a: Gaussian, b: Gaussian):
    a_half = sqrtm_spd(a.sigma)
    a_half_inv = np.linalg.inv(a_half)
    transport = a_half_inv @ sqrtm_spd(a_half @ b.sigma @ a_half) @ a_half_inv
    transport = 0.5 * (transport + transport.T)
    return 2 * (a.mu - b.mu), np.eye(a.dim) - transport


def _bcd_first(a: Gaussian, b: Gaussian):
    s_inv = np.linalg.inv(0.5 * (a.sigma + b.sigma))
    dmu = a.mu - b.mu
    sd = s_inv @ dmu
    return 0.25 * sd, -np.outer(sd, sd) / 16 + 0.25 * s_inv - 0.25 * np.linalg.inv(a.sigma)


def gaussian_gradient(p: Gaussian, t: Gaussian, metric: Metric, wrt: str = "pred"):
    """``(dD/dmu, dD/dSigma)`` of ``metric(p, t)`` with respect to ``p`` or ``t``."""
    metric = Metric.parse(metric)
    first = wrt == "pred"
    if wrt not in ("pred", "target"):
        raise ValueError("wrt must be 'pred' or 'target'")
    if metric is Metric.KLD_PT:
        return _kld_pt_first(p, t) if first else _kld_pt_second(p, t)
    if metric is Metric.KLD_TP:
        return _kld_pt_second(t, p) if first else _kld_pt_first(t, p)
    if metric is Metric.JEFFREYS:
        g1 = gaussian_gradient(p, t, Metric.KLD_PT, wrt)
        g2 = gaussian_gradient(p, t, Metric.KLD_TP, wrt)
        return g1[0] + g2[0], g1[1] + g2[1]
    # symmetric metrics; the midpoint JSD equals BCD in closed form
    base = {Metric.GWD: _gwd_first, Metric.BCD: _bcd_first, Metric.JSD_APPROX: _bcd_first}[metric]
    return base(p, t) if first else base(t, p)


def covariance_jacobian(box: RBox2D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``dSigma/dw``, ``dSigma/dh``, ``dSigma/dtheta`` for a 2-D box."""
    c, s = math.cos(box.theta), math.sin(box.theta)
    u = np.array([c, s])
    v = np.array([-s, c])
    uu, vv = np.outer(u, u), np.outer(v, v)
    uv = np.outer(u, v) + np.outer(v, u)
    return (box.w / 2) * uu, (box.h / 2) * vv, (box.w ** 2 - box.h ** 2) / 4 * uv


def distance_gradient(pred: RBox2D, target: RBox2D, metric: Metric, wrt: str = "pred",
                      log_edges: bool = False) -> np.ndarray:
    box = pred if wrt == "pred" else target
    g_mu, g_sigma = gaussian_gradient(to_gaussian_2d(pred), to_gaussian_2d(target), metric, wrt)
    dw, dh, dth = covariance_jacobian(box)
    grad = np.array([g_mu[0], g_mu[1], np.sum(g_sigma * dw), np.sum(g_sigma * dh),
                     np.sum(g_sigma * dth)])
    if log_edges:
        grad[2] *= box.w
        grad[3] *= box.h
    return grad


def analytic_gradient(pred: RBox2D, target: RBox2D, cfg: LossConfig = LossConfig(),
                      raw: bool = False, log_edges: bool = False,
                      wrt: str = "pred") -> ParamGradient:
    """Gradient of the normalized loss (or of the bare distance when ``raw``).

    ``log_edges`` reports ``d/d ln w`` and ``d/d ln h`` instead of ``d/dw``,
    ``d/dh``. Where the loss uses ``f = sqrt`` and the distance is exactly 0
    the gradient is reported as 0.
    """
    grad = distance_gradient(pred, target, cfg.metric, wrt, log_edges)
    if not raw:
        d = box_distance(pred, target, cfg.metric).value
        grad = grad * normalize_loss_derivative(d, cfg)
    return ParamGradient.from_vector(grad, log_edges)


def _objective(pred, target, cfg, raw):
    d = box_distance(pred, target, cfg.metric).value
    return d if raw else normalize_loss(d, cfg)


def _perturb(box: RBox2D, i: int, delta: float, log_edges: bool) -> RBox2D:
    p = box.params
    if log_edges and i in (2, 3):
        p[i] = p[i] * math.exp(delta)
    else:
        p[i] += delta
    return RBox2D(*p, box.definition)


def finite_difference_gradient(pred: RBox2D, target: RBox2D, cfg: LossConfig = LossConfig(),
                               step: float = 1e-5, raw: bool = False, log_edges: bool = False,
                               wrt: str = "pred") -> ParamGradient:
    """Central-difference gradient; the independent check on :func:`analytic_gradient`."""
    if step <= 0:
        raise ValueError("step must be positive")
    out = np.zeros(5)
    for i in range(5):
        if wrt == "pred":
            hi = _objective(_perturb(pred, i, step, log_edges), target, cfg, raw)
            lo = _objective(_perturb(pred, i, -step, log_edges), target, cfg, raw)
        else:
            hi = _objective(pred, _perturb(target, i, step, log_edges), cfg, raw)
            lo = _objective(pred, _perturb(target, i, -step, log_edges), cfg, raw)
        out[i] = (hi - lo) / (2 * step)
    return ParamGradient.from_vector(out, log_edges)


def kld_closed_form_partials(pred: RBox2D, target: RBox2D) -> dict:
    """Hand-derived ``KL(p || t)`` partials for a target with ``theta_t = 0``.

    ``d_theta`` is the expression as usually quoted,
    ``((hp^2 - wp^2)/wt^2 + (wp^2 - hp^2)/ht^2) sin(2 dtheta)``. It is twice
    the true derivative of the divergence; ``d_theta_exact`` holds the
    correctly scaled value.
    """
    if abs(math.remainder(target.theta, math.pi)) > 1e-12:
        raise ValueError("closed-form partials assume a horizontal target")
    wp, hp, wt, ht = pred.w, pred.h, target.w, target.h
    dth = pred.theta - target.theta
    c2, s2 = math.cos(dth) ** 2, math.sin(dth) ** 2
    d_theta = ((hp ** 2 - wp ** 2) / wt ** 2 + (wp ** 2 - hp ** 2) / ht ** 2) * math.sin(2 * dth)
    return {
        "d_x": 4 * (pred.x - target.x) / wt ** 2,
        "d_y": 4 * (pred.y - target.y) / ht ** 2,
        "d_log_w": wp ** 2 / wt ** 2 * c2 + wp ** 2 / ht ** 2 * s2 - 1,
        "d_log_h": hp ** 2 / ht ** 2 * c2 + hp ** 2 / wt ** 2 * s2 - 1,
        "d_theta": d_theta,
        "d_theta_exact": 0.5 * d_theta,
    }


# --- gradient-descent fitting ---------------------------------------------------


class ParamSpace(enum.Enum):
    RAW = "raw"
    LOG_EDGES = "log_edges"


@dataclass(frozen=True)
class SmoothL1Config:
    """Smooth-L1 over offsets encoded against ``anchor`` (defaults to the init box)."""

    beta: float = DEFAULT_BETA
    mode: AngleMode = AngleMode.DIRECT
    anchor: "AnchorBox | None" = None
    normalize: "LossConfig | None" = None


@dataclass(frozen=True)
class FitConfig:
    step_sizes: tuple = (0.1, 0.1, 0.05, 0.05, 0.05)
    max_steps: int = 2000
    stop_iou: float = 0.99
    loss: "LossConfig | SmoothL1Config" = field(default_factory=LossConfig)
    param_space: ParamSpace = ParamSpace.LOG_EDGES

    def __post_init__(self):
        if self.max_steps < 1:
            raise InvalidConfig("max_steps must be >= 1")
        if len(self.step_sizes) != 5 or min(self.step_sizes) <= 0:
            raise InvalidConfig("step_sizes needs five positive entries")
        if not 0 < self.stop_iou <= 1:
            raise InvalidConfig("stop_iou must be in (0, 1]")


@dataclass(frozen=True)
class FitStep:
    step: int
    box: RBox2D
    loss: float
    skew_iou: float


def _smooth_l1_value_grad(pred: RBox2D, target: RBox2D, cfg: SmoothL1Config,
                          anchor: AnchorBox, log_edges: bool):
    ep = encode_offsets(pred, anchor, cfg.mode)
    et = encode_offsets(target, anchor, cfg.mode)
    value = smooth_l1_loss(ep, et, cfg.beta)
    g = smooth_l1_grad(ep.vector() - et.vector(), cfg.beta)
    grad = np.array([g[0] / anchor.w_a, g[1] / anchor.h_a, g[2], g[3], 0.0])
    if cfg.mode is AngleMode.DIRECT:
        grad[4] = g[4]
    else:
        # pair (sin d, cos d) with d = theta - theta_a
        grad[4] = g[4] * ep.t_cos - g[5] * ep.t_sin
    if not log_edges:
        grad[2] /= pred.w
        grad[3] /= pred.h
    if cfg.normalize is not None:
        scale = normalize_loss_derivative(value, cfg.normalize)
        return normalize_loss(value, cfg.normalize), grad * scale
    return value, grad


def _fit_eval(box, target, cfg, anchor, log_edges):
    if anchor is None:
        return _objective(box, target, cfg.loss, raw=False), None
    return _smooth_l1_value_grad(box, target, cfg.loss, anchor, log_edges)


def fit_box(init: RBox2D, target: RBox2D, cfg: FitConfig = FitConfig()) -> list:
    """Fit ``init`` to ``target`` by gradient descent.

    Returns a list of :class:`FitStep` starting at step 0. ``cfg.step_sizes``
    is the trial step; it is halved (up to ``MAX_HALVINGS`` times) whenever the
    full step would raise the loss, so the recorded losses never increase.
    After every update the box is re-expressed in ``init.definition``'s angle
    range. Stops once SkewIoU reaches ``cfg.stop_iou``, after ``max_steps``
    updates, or when no halved step lowers the loss.
    """
    definition = init.definition
    target = canonicalize(target, definition)
    box = canonicalize(init, definition)
    log_edges = cfg.param_space is ParamSpace.LOG_EDGES
    lr = np.asarray(cfg.step_sizes, dtype=float)
    anchor = None
    if isinstance(cfg.loss, SmoothL1Config):
        anchor = cfg.loss.anchor or AnchorBox.from_box(box)

    value, grad = _fit_eval(box, target, cfg, anchor, log_edges)
    trajectory = []
    for step in range(cfg.max_steps + 1):
        if not math.isfinite(value):
            raise DivergedFit(f"loss became {value} at step {step}")
        iou = skew_iou_2d(box, target)
        trajectory.append(FitStep(step, box, value, iou))
        if iou >= cfg.stop_iou or step == cfg.max_steps:
            break
        if anchor is None:
            grad = analytic_gradient(box, target, cfg.loss, log_edges=log_edges).vector()
        p0 = box.params
        if log_edges:
            p0[2:4] = np.log(p0[2:4])
        for k in range(MAX_HALVINGS + 1):
            p = p0 - lr * grad * 0.5 ** k
            if not np.all(np.isfinite(p)):
                raise DivergedFit(f"parameters became non-finite at step {step}")
            if log_edges:
                p[2:4] = np.exp(p[2:4])
            cand = canonicalize(RBox2D(*p, definition), definition)
            cand_value, cand_grad = _fit_eval(cand, target, cfg, anchor, log_edges)
            if cand_value <= value:
                break
        else:
            break
        box, value, grad = cand, cand_value, cand_grad
    return trajectory


# --- sweeps ------------------------------------------------------------------------


class SweepKind(enum.Enum):
    ANGLE = "angle"
    ASPECT = "aspect"
    CENTER = "center"
    HEIGHT = "height"
    SCALE = "scale"


@dataclass(frozen=True)
class SweepScenario:
    """A one-parameter family of (pred, target) pairs.

    ``base`` is the target at grid value 1 (for ``ASPECT``/``HEIGHT`` the
    varying edge is replaced by the grid value); ``offset`` is the fixed
    perturbation applied to the prediction: an angle for ``ASPECT``/``HEIGHT``,
    a full ``(dx, dy, dw, dh, dtheta)`` tuple for ``SCALE``.
    """

    kind: SweepKind
    grid: tuple
    base: RBox2D = RBox2D(0.0, 0.0, 4.0, 1.0, 0.0)
    offset: "float | tuple" = 0.0

    def __post_init__(self):
        if len(self.grid) == 0:
            raise InvalidConfig("sweep grid is empty")

    def pairs(self):
        b = self.base
        for g in self.grid:
            g = float(g)
            if self.kind is SweepKind.ANGLE:
                target = b
                pred = b.replace(theta=b.theta + g)
            elif self.kind is SweepKind.CENTER:
                target = b
                pred = b.replace(x=b.x + g)
            elif self.kind is SweepKind.ASPECT:
                target = b.replace(w=g * b.h)
                pred = target.replace(theta=target.theta + self.offset)
            elif self.kind is SweepKind.HEIGHT:
                target = b.replace(h=g)
                pred = target.replace(theta=target.theta + self.offset)
            else:
                dx, dy, dw, dh, dth = self.offset
                target = b.scaled(g)
                pred = b.replace(x=b.x + dx, y=b.y + dy, w=b.w + dw, h=b.h + dh,
                                 theta=b.theta + dth).scaled(g)
            yield g, pred, target


def default_scenario(kind: "SweepKind | str") -> SweepScenario:
    kind = SweepKind(kind) if not isinstance(kind, SweepKind) else kind
    if kind is SweepKind.ANGLE:
        return SweepScenario(kind, tuple(np.linspace(-math.pi / 2, math.pi / 2, 181)))
    if kind is SweepKind.CENTER:
        return SweepScenario(kind, tuple(np.linspace(-6.0, 6.0, 121)))
    if kind is SweepKind.ASPECT:
        return SweepScenario(kind, tuple(np.linspace(1.0, 10.0, 91)), offset=math.pi / 12)
    if kind is SweepKind.HEIGHT:
        return SweepScenario(kind, tuple(np.linspace(1.0, 4.0, 31)),
                             base=RBox2D(0.0, 0.0, 1.0, 1.0, 0.0), offset=math.pi / 8)
    return SweepScenario(kind, tuple(np.linspace(1.0, 10.0, 46)),
                         base=RBox2D(0.0, 0.0, 4.0, 1.0, 0.0),
                         offset=(0.3, 0.2, -0.5, 0.2, math.pi / 12))


@dataclass(frozen=True)
class SweepRow:
    grid_value: float
    metric: str
    distance: float
    loss: float
    skew_iou: float


def run_sweep(scenario: SweepScenario, metrics) -> list:
    """One row per (grid point, loss config), in grid order."""
    rows = []
    for g, pred, target in scenario.pairs():
        iou = skew_iou_2d(pred, target)
        for cfg in metrics:
            d = box_distance(pred, target, cfg.metric).value
            rows.append(SweepRow(g, cfg.label, d, normalize_loss(d, cfg), iou))
    return rows
