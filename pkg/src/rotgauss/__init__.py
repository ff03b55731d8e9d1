"""Rotated boxes as Gaussians: distances, losses, gradients, assignment and heading recovery."""

from .assignment import (AffinityMetric, AnchorGrid, AssignConfig, AssignResult, Strategy,
                         affinity, assign_labels, atss_threshold, make_grid)
from .boxes import (AnchorBox, AngleMode, BoxDefinition, Gaussian, OffsetEncoding, RBox2D,
                    RBox3D, canonicalize, convert_definition, decode_offsets, encode_offsets,
                    from_gaussian_2d, to_gaussian, to_gaussian_2d, to_gaussian_3d)
from .divergences import (DistanceResult, Metric, bcd, box_distance, distance, gwd_squared,
                          jeffreys, jsd_approx, kld)
from .errors import (DegenerateBox, DivergedFit, EmptyGrid, InvalidConfig, ModeMismatch,
                     NonSPD, NotHorizontal, NumericError, RotGaussError, ZeroHeading)
from .geometry import box_vertices, clip_convex, intersection_area, iou_3d_yaw, polygon_area, skew_iou_2d
from .gradients import (FitConfig, ParamGradient, SmoothL1Config, SweepKind, analytic_gradient,
                        default_scenario, finite_difference_gradient, fit_box, run_sweep)
from .heading3d import HeadingVector, PostProcConfig, limit_period, post_process_heading
from .loss import LossConfig, Transform, gaussian_box_loss, normalize_loss, smooth_l1_loss

__version__ = "0.1.0"
