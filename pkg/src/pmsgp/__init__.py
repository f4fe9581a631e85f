"""Pyramid-monozone grasping: isolate the topmost object in clutter,
then sample, filter, and refine parallel-jaw grasps inside its mask."""

from .bench import TrialReport, render_report, run_suite, run_trial, write_suite_outputs
from .config import PipelineConfig, load_config
from .grasp import (
    CameraIntrinsics,
    CameraPoint,
    GraspBox,
    GraspProjection,
    HandEyeCalibration,
    RobotGrasp,
    camera_to_robot,
    grasp_box_corners,
    pixel_to_camera,
    project_grasp_params,
)
from .imaging import (
    BinaryMask,
    DepthImage,
    EdgeSet,
    clamp_depth_range,
    fill_depth_holes,
    mask_union,
    read_depth,
    read_mask,
    region_grow,
    sobel_edges,
    write_depth,
    write_mask,
)
from .msp import (
    CandidateSet,
    NoGraspError,
    calibrate_angle,
    filter_adjacent_collision,
    filter_self_collision,
    generate_baseline_candidates,
    refine_grasp,
    run_msp,
    select_optimal,
)
from .psp import (
    AlignedView,
    OracleSegmenter,
    farthest_pixel_pair,
    min_depth_pixel,
    perpendicular_pair,
    run_psp,
    top_view_align,
)
from .scene import (
    GraspOutcome,
    GripperSpec,
    LabelImage,
    Scene,
    SceneObject,
    VirtualCamera,
    execute_grasp,
    generate_scene,
    load_scene,
    noisy_segment,
    oracle_segment,
    render_depth,
    render_labels,
    render_scene,
    save_scene,
    topmost_object,
)

__version__ = "0.1.0"
