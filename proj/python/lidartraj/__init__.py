"""LiDAR motion distortion, trajectory perturbation attacks and AP metrics."""

from lidartraj._core import (
    ArgumentError,
    AttackConfig,
    Box3D,
    Detection,
    DetectorConfig,
    FormatError,
    NumericError,
    Pose,
    SceneCase,
    SuiteConfig,
    attack,
    average_precision,
    bev_iou,
    chamfer,
    compensate,
    detect,
    distort,
    interpolate_track,
    iou3d,
    lp_distance,
    make_case,
)

__all__ = [
    "ArgumentError",
    "AttackConfig",
    "Box3D",
    "Detection",
    "DetectorConfig",
    "FormatError",
    "NumericError",
    "Pose",
    "SceneCase",
    "SuiteConfig",
    "attack",
    "average_precision",
    "bev_iou",
    "chamfer",
    "compensate",
    "detect",
    "distort",
    "interpolate_track",
    "iou3d",
    "lp_distance",
    "make_case",
]
