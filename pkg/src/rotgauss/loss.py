"""Bounded regression losses built on Gaussian distances, plus Smooth-L1."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .boxes import OffsetEncoding
from .divergences import Metric, box_distance
from .errors import InvalidConfig, ModeMismatch

DEFAULT_BETA = 1.0 / 9.0


class Transform(enum.Enum):
    SQRT = "sqrt"
    LOG1P = "log1p"

    @classmethod
    def parse(cls, value) -> "Transform":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())

    def __call__(self, d: float) -> float:
        if self is Transform.SQRT:
            return math.sqrt(d)
        return math.log1p(d)

    def derivative(self, d: float) -> float:
        if self is Transform.SQRT:
            # subgradient 0 at the minimum, where sqrt(d) has a kink
            return 0.0 if d <= 0.0 else 0.5 / math.sqrt(d)
        return 1.0 / (1.0 + d)


@dataclass(frozen=True)
class LossConfig:
    metric: Metric = Metric.KLD_PT
    f: Transform = Transform.SQRT
    tau: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        object.__setattr__(self, "f", Transform.parse(self.f))
        if not self.tau >= 1.0:
            raise InvalidConfig(f"tau must be >= 1, got {self.tau}")

    @property
    def label(self) -> str:
        return f"{self.metric.value}-{self.f.value}-tau{self.tau:g}"


def normalize_loss(distance: float, cfg: LossConfig) -> float:
    """``1 - 1 / (tau + f(distance))``."""
    if cfg.tau < 1.0:
        raise InvalidConfig(f"tau must be >= 1, got {cfg.tau}")
    if distance < 0.0:
        raise ValueError(f"distance must be nonnegative, got {distance}")
    return 1.0 - 1.0 / (cfg.tau + cfg.f(distance))


def normalize_loss_derivative(distance: float, cfg: LossConfig) -> float:
    """d loss / d distance."""
    denom = cfg.tau + cfg.f(distance)
    return cfg.f.derivative(distance) / denom ** 2


def gaussian_box_loss(pred, target, cfg: LossConfig = LossConfig()) -> float:
    """Convert both boxes to Gaussians, measure, then normalize."""
    return normalize_loss(box_distance(pred, target, cfg.metric).value, cfg)


def smooth_l1(diff: np.ndarray, beta: float = DEFAULT_BETA) -> np.ndarray:
    diff = np.abs(np.asarray(diff, dtype=float))
    if beta <= 0:
        return diff
    return np.where(diff < beta, 0.5 * diff ** 2 / beta, diff - 0.5 * beta)


def smooth_l1_grad(diff: np.ndarray, beta: float = DEFAULT_BETA) -> np.ndarray:
    diff = np.asarray(diff, dtype=float)
    if beta <= 0:
        return np.sign(diff)
    return np.where(np.abs(diff) < beta, diff / beta, np.sign(diff))


def smooth_l1_loss(pred_enc: OffsetEncoding, target_enc: OffsetEncoding,
                   beta: float = DEFAULT_BETA, normalize: "LossConfig | None" = None) -> float:
    """Summed Smooth-L1 over offset components.

    With ``normalize`` set, the sum is passed through :func:`normalize_loss`.
    """
    if pred_enc.mode is not target_enc.mode:
        raise ModeMismatch(f"{pred_enc.mode.value} vs {target_enc.mode.value}")
    total = float(np.sum(smooth_l1(pred_enc.vector() - target_enc.vector(), beta)))
    if normalize is not None:
        return normalize_loss(total, normalize)
    return total
