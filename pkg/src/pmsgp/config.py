"""Pipeline configuration: every constant the grasping policy consumes.

The JSON config file mirrors the dataclass field names; unknown keys
are rejected so typos fail loudly.  Defaults describe the reference
desk-scale setup: a 1280x720 camera 0.7 m above a 0.5 m square
workspace, 224-pixel crops, 2-degree angle calibration and 30-degree
adaptive view rotation.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .grasp import CameraIntrinsics, GraspProjection, HandEyeCalibration
from .scene import DEFAULT_DIMS, DEFAULT_MIX, GripperSpec, VirtualCamera

__all__ = ["CameraConfig", "PipelineConfig", "ConfigError", "load_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CameraConfig:
    height: float = 0.70
    fx: float = 900.0
    fy: float = 900.0
    full_width: int = 1280
    full_height: int = 720

    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(self.fx, self.fy, self.full_width / 2.0, self.full_height / 2.0)


@dataclass(frozen=True)
class PipelineConfig:
    # Filtering and refinement tolerances
    t_d: float = 0.015                 # adjacent-collision depth threshold, m
    e_c: float = 0.003                 # hand-eye translation error bound, m
    dilation_tol: float = 0.01        # depth-seeded mask growth tolerance, m
    align_tol: float = 0.0            # allowed center-vs-min gap after alignment, m

    # Discretization
    crop_size: int = 224
    calibration_step_deg: float = 2.0
    view_rotation_step_deg: float = 30.0
    grid_step: int = 8                 # candidate lattice pitch, px
    width_pad: float = 2.0             # candidate width margin per side, px
    finger_thickness_px: float = 10.0  # candidate box h, px

    # Depth protocol
    depth_clamp: tuple = (0.10, 0.69)
    noise_sigma: float = 0.0           # rendered depth noise, m
    corruption: float = 0.3            # noisy segmenter mask corruption level

    # Trial protocol
    failure_cap: int = 3
    segmenter: str = "oracle"          # oracle | noisy | region-grow
    generator: str = "baseline"        # baseline | file
    generator_file: str | None = None
    no_tva: bool = False
    no_cps: bool = False
    no_msp: bool = False
    seed: int = 0

    # World
    camera: CameraConfig = field(default_factory=CameraConfig)
    workspace: tuple = (-0.25, 0.25, -0.25, 0.25)
    ground_height: float = 0.0
    scene_mix: dict = field(default_factory=lambda: dict(DEFAULT_MIX))
    scene_dims: dict = field(default_factory=lambda: dict(DEFAULT_DIMS))

    # Gripper and calibration
    max_opening: float = 0.10
    finger_width: float = 0.008
    calibration_axis_map: tuple = ("x", "y", "-z")
    calibration_translation: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        lo, hi = self.depth_clamp
        if not (0 < lo < hi):
            raise ConfigError(f"depth_clamp must satisfy 0 < lo < hi, got {self.depth_clamp}")
        for name in ("t_d", "dilation_tol", "calibration_step_deg",
                     "view_rotation_step_deg", "width_pad", "finger_thickness_px"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("e_c", "align_tol", "noise_sigma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.failure_cap < 1:
            raise ConfigError("failure_cap must be >= 1")
        if self.grid_step < 1:
            raise ConfigError("grid_step must be >= 1")
        if not (0.0 <= self.corruption <= 1.0):
            raise ConfigError("corruption must be in [0, 1]")
        if self.segmenter not in ("oracle", "noisy", "region-grow"):
            raise ConfigError(f"unknown segmenter {self.segmenter!r}")
        if self.generator not in ("baseline", "file"):
            raise ConfigError(f"unknown generator {self.generator!r}")
        if self.generator == "file" and not self.generator_file:
            raise ConfigError("generator 'file' requires generator_file")
        if self.crop_size > min(self.camera.full_width, self.camera.full_height):
            raise ConfigError("crop_size larger than camera resolution")

    # -- derived objects ----------------------------------------------------

    def intrinsics(self) -> CameraIntrinsics:
        return self.camera.intrinsics()

    def home_camera(self) -> VirtualCamera:
        x0, x1, y0, y1 = self.workspace
        return VirtualCamera(
            x=(x0 + x1) / 2.0,
            y=(y0 + y1) / 2.0,
            height=self.camera.height,
            intrinsics=self.intrinsics(),
            full_width=self.camera.full_width,
            full_height=self.camera.full_height,
            crop_size=self.crop_size,
        )

    def hand_eye(self) -> HandEyeCalibration:
        return HandEyeCalibration(
            axis_map=tuple(self.calibration_axis_map),
            translation=tuple(self.calibration_translation),
            e_c=self.e_c,
        )

    def projection(self) -> GraspProjection:
        return GraspProjection(max_opening=self.max_opening)

    def gripper(self) -> GripperSpec:
        return GripperSpec(max_opening=self.max_opening, finger_width=self.finger_width)

    def with_ablation(self, *, no_tva=None, no_cps=None, no_msp=None) -> "PipelineConfig":
        kw = {}
        if no_tva is not None:
            kw["no_tva"] = no_tva
        if no_cps is not None:
            kw["no_cps"] = no_cps
        if no_msp is not None:
            kw["no_msp"] = no_msp
        return replace(self, **kw)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["depth_clamp"] = list(self.depth_clamp)
        d["workspace"] = list(self.workspace)
        d["calibration_axis_map"] = list(self.calibration_axis_map)
        d["calibration_translation"] = list(self.calibration_translation)
        d["scene_dims"] = {k: list(v) for k, v in self.scene_dims.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "camera" in d and isinstance(d["camera"], dict):
            cam_known = {f.name for f in fields(CameraConfig)}
            cam_unknown = set(d["camera"]) - cam_known
            if cam_unknown:
                raise ConfigError(f"unknown camera keys: {sorted(cam_unknown)}")
            d["camera"] = CameraConfig(**d["camera"])
        for key in ("depth_clamp", "workspace", "calibration_axis_map", "calibration_translation"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def load_config(path) -> PipelineConfig:
    """Load a JSON config file, layering it over the defaults."""
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return PipelineConfig.from_dict(data)
