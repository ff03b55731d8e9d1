"""Label assignment over anchor grids: Max-IoU and ATSS with Gaussian affinities.

Labels follow the common detection convention: ``0`` negative, ``-1`` ignore,
``i + 1`` positive for ground truth ``i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .boxes import AnchorBox, RBox2D
from .divergences import Metric, box_distance
from .errors import EmptyGrid, InvalidConfig
from .geometry import skew_iou_2d

NEGATIVE = 0
IGNORE = -1


class Strategy(enum.Enum):
    MAX_IOU = "maxiou"
    ATSS = "atss"


class AffinityMetric(enum.Enum):
    IOU = "iou"
    KLD = "kld"
    BCD = "bcd"
    GWD = "gwd"


_GAUSSIAN = {AffinityMetric.KLD: Metric.KLD_PT, AffinityMetric.BCD: Metric.BCD,
             AffinityMetric.GWD: Metric.GWD}


@dataclass(frozen=True)
class AnchorGrid:
    anchors: tuple
    level_of: tuple
    levels: int

    def __post_init__(self):
        if len(self.anchors) != len(self.level_of):
            raise InvalidConfig("anchors and level_of differ in length")
        if any(not 0 <= lv < self.levels for lv in self.level_of):
            raise InvalidConfig("level index out of range")

    def __len__(self):
        return len(self.anchors)

    def centers(self) -> np.ndarray:
        return np.array([[a.x_a, a.y_a] for a in self.anchors], dtype=float).reshape(-1, 2)


def make_grid(image_size: tuple, strides=(8, 16, 32), scale: float = 4.0,
              ratios=(1.0,)) -> AnchorGrid:
    """Horizontal anchors centred on every cell of every stride level.

    Anchor area is ``(stride * scale)^2``; ``ratios`` are ``h / w``.
    """
    width, height = image_size
    anchors, levels = [], []
    for lv, stride in enumerate(strides):
        base = stride * scale
        ys = np.arange(stride / 2, height, stride)
        xs = np.arange(stride / 2, width, stride)
        for cy in ys:
            for cx in xs:
                for r in ratios:
                    w = base / np.sqrt(r)
                    anchors.append(AnchorBox(float(cx), float(cy), float(w), float(w * r)))
                    levels.append(lv)
    return AnchorGrid(tuple(anchors), tuple(levels), len(strides))


@dataclass(frozen=True)
class AssignConfig:
    strategy: Strategy = Strategy.ATSS
    metric: AffinityMetric = AffinityMetric.KLD
    k: int = 9
    tau: float = 2.0
    pos_thresh: float = 0.5
    neg_thresh: float = 0.4
    center_inside: bool = False

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "metric", AffinityMetric(self.metric))
        if self.k < 1:
            raise InvalidConfig("k must be positive")
        if self.strategy is Strategy.MAX_IOU and not 0 <= self.neg_thresh <= self.pos_thresh <= 1:
            raise InvalidConfig("need 0 <= neg_thresh <= pos_thresh <= 1")


@dataclass(frozen=True)
class AssignResult:
    labels: np.ndarray       # per anchor: 0 negative, -1 ignore, i+1 positive for GT i
    affinity: np.ndarray     # per anchor: affinity to the assigned (or best) GT
    thresholds: np.ndarray   # per GT
    forced: np.ndarray       # per anchor: positive only through best-anchor forcing

    def positives(self, gt_index: int) -> np.ndarray:
        return np.flatnonzero(self.labels == gt_index + 1)


def affinity(gt: RBox2D, anchor_box: RBox2D, metric: AffinityMetric, tau: float = 2.0) -> float:
    """SkewIoU, or ``1 / (tau + D)`` for a Gaussian distance ``D``.

    The anchor plays the prediction role in asymmetric distances.
    """
    metric = AffinityMetric(metric)
    if metric is AffinityMetric.IOU:
        return skew_iou_2d(gt, anchor_box)
    d = box_distance(anchor_box, gt, _GAUSSIAN[metric]).value
    return 1.0 / (tau + d)


def _anchor_box(a: AnchorBox) -> RBox2D:
    # anchors enter the Gaussian metrics as horizontal boxes
    return RBox2D(a.x_a, a.y_a, a.w_a, a.h_a, 0.0)


def affinity_matrix(gts, grid: AnchorGrid, cfg: AssignConfig) -> np.ndarray:
    boxes = [_anchor_box(a) for a in grid.anchors]
    return np.array([[affinity(g, b, cfg.metric, cfg.tau) for b in boxes] for g in gts],
                    dtype=float).reshape(len(gts), len(boxes))


def select_candidates(gt: RBox2D, grid: AnchorGrid, k: int) -> np.ndarray:
    """``k`` nearest anchor centres per level; ties go to the lower index."""
    if len(grid) == 0:
        raise EmptyGrid("anchor grid is empty")
    centers = grid.centers()
    dist = np.hypot(centers[:, 0] - gt.x, centers[:, 1] - gt.y)
    level_of = np.asarray(grid.level_of)
    picked = []
    for lv in range(grid.levels):
        idx = np.flatnonzero(level_of == lv)
        order = np.argsort(dist[idx], kind="stable")
        picked.extend(idx[order[:k]].tolist())
    return np.array(sorted(picked), dtype=int)


def mean_plus_std(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.mean() + values.std())


def atss_threshold(gt: RBox2D, grid: AnchorGrid, cfg: AssignConfig, affinities=None):
    """Return ``(threshold, candidate_indices)`` for one ground truth.

    The threshold is the mean plus the population standard deviation of the
    candidates' affinities.
    """
    cand = select_candidates(gt, grid, cfg.k)
    if affinities is None:
        aff = np.array([affinity(gt, _anchor_box(grid.anchors[j]), cfg.metric, cfg.tau)
                        for j in cand])
    else:
        aff = np.asarray(affinities, dtype=float)[cand]
    return mean_plus_std(aff), cand


def _inside(gt: RBox2D, a: AnchorBox) -> bool:
    c, s = np.cos(gt.theta), np.sin(gt.theta)
    dx, dy = a.x_a - gt.x, a.y_a - gt.y
    return abs(c * dx + s * dy) <= gt.w / 2 and abs(-s * dx + c * dy) <= gt.h / 2


def _force_best(labels, forced, aff, gt_candidates):
    """Give every GT without a positive its best still-available anchor."""
    n_gt = aff.shape[0]
    for i in range(n_gt):
        if np.any(labels == i + 1):
            continue
        cand = gt_candidates[i]
        order = cand[np.argsort(-aff[i, cand], kind="stable")]
        chosen = None
        for j in order:
            owner = labels[j] - 1
            if labels[j] <= 0 or (not forced[j] and np.count_nonzero(labels == owner + 1) > 1):
                chosen = j
                break
        if chosen is None:
            chosen = order[0]
        labels[chosen] = i + 1
        forced[chosen] = True


def assign_labels(gts, grid: AnchorGrid, cfg: AssignConfig = AssignConfig()) -> AssignResult:
    if len(grid) == 0:
        raise EmptyGrid("anchor grid is empty")
    gts = list(gts)
    n = len(grid)
    labels = np.zeros(n, dtype=int)
    forced = np.zeros(n, dtype=bool)
    if not gts:
        return AssignResult(labels, np.zeros(n), np.zeros(0), forced)
    aff = affinity_matrix(gts, grid, cfg)

    if cfg.strategy is Strategy.ATSS:
        thresholds = np.zeros(len(gts))
        candidates = []
        # score[i, j] is the affinity where anchor j qualifies for GT i, else -inf
        score = np.full(aff.shape, -np.inf)
        for i, gt in enumerate(gts):
            t, cand = atss_threshold(gt, grid, cfg, aff[i])
            thresholds[i] = t
            candidates.append(cand)
            ok = cand[aff[i, cand] >= t]
            if cfg.center_inside:
                ok = np.array([j for j in ok if _inside(gt, grid.anchors[j])], dtype=int)
            score[i, ok] = aff[i, ok]
        best = np.argmax(score, axis=0)
        has = np.isfinite(score[best, np.arange(n)])
        labels[has] = best[has] + 1
        _force_best(labels, forced, aff, candidates)
    else:
        thresholds = np.full(len(gts), cfg.pos_thresh)
        best = np.argmax(aff, axis=0)
        top = aff[best, np.arange(n)]
        labels[top < cfg.neg_thresh] = NEGATIVE
        labels[(top >= cfg.neg_thresh) & (top < cfg.pos_thresh)] = IGNORE
        pos = top >= cfg.pos_thresh
        labels[pos] = best[pos] + 1
        _force_best(labels, forced, aff, [np.arange(n)] * len(gts))

    assigned = np.where(labels > 0, labels - 1, np.argmax(aff, axis=0))
    return AssignResult(labels, aff[assigned, np.arange(n)], thresholds, forced)
