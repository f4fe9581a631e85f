"""Grasp representation and coordinate conversions.

Conventions used throughout the package:

  * Pixel coordinates are (x, y) = (column, row).  Rasters are numpy
    arrays indexed [row, col].
  * A grasp box is a rotated rectangle (x, y, w, h, theta): center in
    pixels, ``w`` along the gripper-opening axis, ``h`` along the
    finger-thickness axis, ``theta`` in radians from the +x (column)
    axis toward +y (row), normalized to [0, pi).
  * The long sides of the box (length ``w``) run parallel to the
    opening axis; the short sides (length ``h``) mark the two finger
    positions.
  * Camera frame: x right, y down in the image, z along the optical
    axis (depth, meters, positive in front of the camera).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GraspBox",
    "CameraIntrinsics",
    "CameraPoint",
    "HandEyeCalibration",
    "GraspProjection",
    "RobotGrasp",
    "InvalidDepthError",
    "pixel_to_camera",
    "camera_to_robot",
    "robot_to_camera",
    "project_grasp_params",
    "grasp_box_corners",
    "grasp_box_long_sides",
    "grasp_box_short_sides",
]

_AXES = ("x", "y", "z")


class InvalidDepthError(ValueError):
    """Raised when a depth value is non-finite or non-positive."""


@dataclass(frozen=True)
class GraspBox:
    """Rotated-rectangle grasp candidate in image coordinates."""

    x: float
    y: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        if not (self.w > 0):
            raise ValueError(f"grasp box width must be > 0, got {self.w}")
        if self.h < 0:
            raise ValueError(f"grasp box height must be >= 0, got {self.h}")
        # The box is symmetric under a half-turn, so theta is canonical
        # in [0, pi).  A tiny negative residue from fmod is folded back.
        theta = math.fmod(self.theta, math.pi)
        if theta < 0:
            theta += math.pi
        if theta >= math.pi:
            theta -= math.pi
        object.__setattr__(self, "theta", theta)

    @property
    def center(self) -> tuple[float, float]:
        return (self.x, self.y)

    def rotated(self, delta: float) -> "GraspBox":
        """Same box rotated in place by ``delta`` radians."""
        return GraspBox(self.x, self.y, self.w, self.h, self.theta + delta)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class CameraPoint:
    """Point in the camera frame, meters."""

    x_c: float
    y_c: float
    z_c: float


@dataclass(frozen=True)
class HandEyeCalibration:
    """Rotationless camera-to-end-effector transform.

    ``axis_map[i]`` names the signed camera axis feeding robot axis i,
    e.g. ``("x", "-y", "-z")``.  Only signed permutations of the three
    axes are accepted; a general rotation is rejected at construction.
    ``translation`` is the offset in meters added after the axis swap.
    ``e_c`` is the planar translation error bound of the calibration in
    meters, consumed by grasp-width refinement.
    """

    axis_map: tuple[str, str, str] = ("x", "y", "z")
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    e_c: float = 0.0

    def __post_init__(self):
        seen = []
        for spec in self.axis_map:
            name = spec[1:] if spec.startswith("-") else spec
            if name not in _AXES or spec.count("-") > 1:
                raise ValueError(f"bad axis spec {spec!r}")
            seen.append(name)
        if sorted(seen) != sorted(_AXES):
            raise ValueError(f"axis_map must be a signed permutation, got {self.axis_map}")
        if self.e_c < 0:
            raise ValueError("e_c must be >= 0")

    def _indices_signs(self) -> tuple[list[int], list[float]]:
        idx, sgn = [], []
        for spec in self.axis_map:
            neg = spec.startswith("-")
            idx.append(_AXES.index(spec[1:] if neg else spec))
            sgn.append(-1.0 if neg else 1.0)
        return idx, sgn


@dataclass(frozen=True)
class GraspProjection:
    """Affine pixel-to-gripper projection for grasp width and angle.

    Width: ``w_r = width_scale * (w * d / fx) + width_offset`` clamped
    to [0, max_opening]; the ``w * d / fx`` factor is the pinhole
    pixel-to-meter conversion at depth ``d``.  Angle:
    ``theta_r = angle_scale * theta + angle_offset``.
    """

    width_scale: float = 1.0
    width_offset: float = 0.0
    angle_scale: float = 1.0
    angle_offset: float = 0.0
    max_opening: float = 0.10

    def __post_init__(self):
        if not (self.width_scale > 0):
            raise ValueError("width_scale must be > 0")
        if not (self.max_opening > 0):
            raise ValueError("max_opening must be > 0")


@dataclass(frozen=True)
class RobotGrasp:
    """Grasp in the robot end-effector frame.

    ``theta_x_star`` and ``theta_y_star`` are the constant approach
    rotations about X and Y; top-down grasping keeps them fixed.
    """

    x_r: float
    y_r: float
    z_r: float
    w_r: float
    theta_r: float
    theta_x_star: float = 0.0
    theta_y_star: float = 0.0


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------

def pixel_to_camera(px: tuple[float, float], d: float, k: CameraIntrinsics) -> CameraPoint:
    """Back-project pixel (x, y) at depth ``d`` meters into the camera frame."""
    if not (math.isfinite(d) and d > 0):
        raise InvalidDepthError(f"depth must be finite and > 0, got {d}")
    x, y = px
    return CameraPoint((x - k.cx) * d / k.fx, (y - k.cy) * d / k.fy, d)


def camera_to_robot(p: CameraPoint, cal: HandEyeCalibration) -> tuple[float, float, float]:
    """Map a camera-frame point into the end-effector frame."""
    src = (p.x_c, p.y_c, p.z_c)
    idx, sgn = cal._indices_signs()
    return tuple(sgn[i] * src[idx[i]] + cal.translation[i] for i in range(3))


def robot_to_camera(p: tuple[float, float, float], cal: HandEyeCalibration) -> CameraPoint:
    """Exact inverse of :func:`camera_to_robot`."""
    idx, sgn = cal._indices_signs()
    out = [0.0, 0.0, 0.0]
    for i in range(3):
        out[idx[i]] = (p[i] - cal.translation[i]) / sgn[i]
    return CameraPoint(*out)


def project_grasp_params(
    w: float, theta: float, proj: GraspProjection, d: float, k: CameraIntrinsics
) -> tuple[float, float]:
    """Convert grasp width (pixels) and angle to gripper opening and rotation."""
    if not (w > 0):
        raise ValueError(f"grasp width must be > 0, got {w}")
    w_r = proj.width_scale * (w * d / k.fx) + proj.width_offset
    w_r = min(max(w_r, 0.0), proj.max_opening)
    theta_r = proj.angle_scale * theta + proj.angle_offset
    return (w_r, theta_r)


# ---------------------------------------------------------------------------
# Box geometry
# ---------------------------------------------------------------------------

def _box_axes(g: GraspBox) -> tuple[np.ndarray, np.ndarray]:
    u = np.array([math.cos(g.theta), math.sin(g.theta)])
    v = np.array([-math.sin(g.theta), math.cos(g.theta)])
    return u, v


def grasp_box_corners(g: GraspBox) -> np.ndarray:
    """Corners of the rotated rectangle as a (4, 2) array of (x, y).

    Ordered so that corners 0-1 and 3-2 are the long sides (length w)
    and corners 1-2 / 0-3 are the short sides (length h) at the +w/2
    and -w/2 ends of the opening axis.
    """
    u, v = _box_axes(g)
    c = np.array([g.x, g.y])
    hw, hh = g.w / 2.0, g.h / 2.0
    return np.array([
        c - hw * u - hh * v,
        c + hw * u - hh * v,
        c + hw * u + hh * v,
        c - hw * u + hh * v,
    ])


def grasp_box_long_sides(g: GraspBox) -> list[tuple[np.ndarray, np.ndarray]]:
    """The two length-w sides, each as (start, end) points in (x, y)."""
    p = grasp_box_corners(g)
    return [(p[0], p[1]), (p[3], p[2])]


def grasp_box_short_sides(g: GraspBox) -> list[tuple[np.ndarray, np.ndarray]]:
    """The two finger segments (length h), at the -w/2 and +w/2 ends."""
    p = grasp_box_corners(g)
    return [(p[0], p[3]), (p[1], p[2])]
