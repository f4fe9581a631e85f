import math

import numpy as np
import pytest

import oracles
from pmsgp.config import CameraConfig, PipelineConfig
from pmsgp.imaging import BinaryMask, DepthImage, sobel_edges
from pmsgp.psp import (
    DegenerateCrossError,
    NoValidDepthError,
    OracleSegmenter,
    farthest_pixel_pair,
    fixed_center_view,
    min_depth_pixel,
    perpendicular_pair,
    run_psp,
    top_view_align,
)
from pmsgp.scene import Scene, SceneObject, render_scene

CFG = PipelineConfig(camera=CameraConfig(height=0.70, fx=450.0, fy=450.0,
                                         full_width=640, full_height=360))


def scene_of(*objects):
    return Scene(tuple(objects), ground_height=0.0,
                 workspace=(-0.25, 0.25, -0.25, 0.25), seed=0)


# ---------------------------------------------------------------------------
# min_depth_pixel
# ---------------------------------------------------------------------------

def test_min_depth_constant_ties_to_origin():
    img = DepthImage(np.full((9, 9), 0.5, dtype=np.float32))
    assert min_depth_pixel(img) == (0, 0)


def test_min_depth_single_minimum():
    a = np.full((10, 10), 0.5, dtype=np.float32)
    a[5, 7] = 0.4
    assert min_depth_pixel(DepthImage(a)) == (5, 7)


def test_min_depth_ignores_invalid_and_matches_scan():
    rng = np.random.default_rng(21)
    for _ in range(30):
        a = rng.uniform(0.2, 1.0, (12, 15)).astype(np.float32)
        a[rng.random((12, 15)) < 0.3] = 0.0
        if not (a > 0).any():
            continue
        want = oracles.min_depth_scan(a.tolist())
        assert min_depth_pixel(DepthImage(a)) == want


def test_min_depth_all_invalid_raises():
    with pytest.raises(NoValidDepthError):
        min_depth_pixel(DepthImage(np.zeros((3, 3), dtype=np.float32)))


# ---------------------------------------------------------------------------
# top_view_align
# ---------------------------------------------------------------------------

def test_align_centered_object_is_noop():
    # a sphere has a unique min-depth pixel, so centering it is a fixpoint
    sph = SceneObject(1, "sphere", (0.025,), 0.0, 0.0)
    aligned = top_view_align(scene_of(sph), CFG.home_camera(), CFG)
    assert len(aligned.trace) == 3
    for step in aligned.trace:
        assert np.hypot(*step.move) < 2e-3  # within one pixel of no motion
        assert not step.clamped
    assert aligned.depth.values.shape == (224, 224)
    assert aligned.center_min_gap == 0.0


def test_align_translates_to_offset_object():
    box = SceneObject(1, "box", (0.05, 0.05, 0.03), 0.10, 0.0)
    aligned = top_view_align(scene_of(box), CFG.home_camera(), CFG)
    first = aligned.trace[0]
    # one pixel of slack for the back-projected move
    px = 0.70 / 450.0
    assert abs(first.move[0] - 0.10) <= 2 * px + 0.05  # lands on the box top
    assert abs(aligned.camera.x - 0.10) <= 0.05
    for step in aligned.trace[1:]:
        assert np.hypot(*step.move) <= 2 * px
    # the aligned crop's center pixel holds the crop's minimum depth
    assert aligned.center_min_gap == 0.0
    c = CFG.crop_size // 2
    assert aligned.labels.values[c, c] == 1


def test_align_clamps_to_workspace():
    box = SceneObject(1, "box", (0.05, 0.05, 0.03), 0.30, 0.0)
    s = Scene((box,), ground_height=0.0, workspace=(-0.25, 0.25, -0.25, 0.25), seed=0)
    aligned = top_view_align(s, CFG.home_camera(), CFG)
    assert aligned.trace[0].clamped
    assert aligned.camera.x == 0.25


def test_crop_render_matches_full_view_window():
    box = SceneObject(1, "box", (0.06, 0.04, 0.03), 0.01, -0.02)
    s = scene_of(box)
    cam = CFG.home_camera()
    full, full_labels = render_scene(s, cam)
    crop, crop_labels = render_scene(s, cam, crop=True)
    r0, c0 = cam.crop_origin()
    sz = cam.crop_size
    assert np.array_equal(crop.values, full.values[r0:r0 + sz, c0:c0 + sz])
    assert np.array_equal(crop_labels.values, full_labels.values[r0:r0 + sz, c0:c0 + sz])


# ---------------------------------------------------------------------------
# farthest / perpendicular pairs
# ---------------------------------------------------------------------------

def square_edge():
    m = np.zeros((20, 20), dtype=bool)
    m[5:15, 5:15] = True
    return sobel_edges(BinaryMask(m))


def test_farthest_two_pixels():
    edge = sobel_edges(BinaryMask(np.eye(2, dtype=bool)))
    assert farthest_pixel_pair(edge) == ((0, 0), (1, 1))


def test_farthest_square_diagonal_with_tie_break():
    # both diagonals tie; the lexicographically smallest pair wins
    assert farthest_pixel_pair(square_edge()) == ((5, 5), (14, 14))


def test_farthest_matches_brute_force_on_blobs():
    from conftest import random_edge
    rng = np.random.default_rng(5)
    for _ in range(10):
        edge = random_edge(rng)
        assert farthest_pixel_pair(edge) == oracles.farthest_pair(edge.pixels)


def test_perpendicular_square_gives_other_diagonal():
    edge = square_edge()
    pm, pm2 = farthest_pixel_pair(edge)
    assert perpendicular_pair(edge, pm, pm2) == ((5, 14), (14, 5))


def test_perpendicular_bar_spans_height_at_midlength():
    m = np.zeros((24, 40), dtype=bool)
    m[10:13, 5:26] = True
    edge = sobel_edges(BinaryMask(m))
    pm, pm2 = farthest_pixel_pair(edge)
    got = perpendicular_pair(edge, pm, pm2)
    assert got == oracles.perpendicular_pair(edge.pixels, pm, pm2)
    (r1, c1), (r2, c2) = got
    assert abs(r1 - r2) == 2                     # spans the bar's height
    assert abs((c1 + c2) / 2 - 15.0) <= 2.0      # near midlength


def test_perpendicular_matches_brute_force_on_blobs():
    from conftest import random_edge
    rng = np.random.default_rng(8)
    for _ in range(10):
        edge = random_edge(rng)
        pm, pm2 = farthest_pixel_pair(edge)
        want = oracles.perpendicular_pair(edge.pixels, pm, pm2)
        if want is None:
            with pytest.raises(DegenerateCrossError):
                perpendicular_pair(edge, pm, pm2)
        else:
            assert perpendicular_pair(edge, pm, pm2) == want


def test_farthest_distance_dominates_all_pairs():
    edge = square_edge()
    (r1, c1), (r2, c2) = farthest_pixel_pair(edge)
    best = (r1 - r2) ** 2 + (c1 - c2) ** 2
    pts = edge.pixels
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    assert best == d2.max()


# ---------------------------------------------------------------------------
# run_psp
# ---------------------------------------------------------------------------

def test_run_psp_oracle_closure_is_exact():
    # separated objects with top gaps above the growth tolerance
    a = SceneObject(1, "box", (0.06, 0.05, 0.045), -0.08, 0.0)
    b = SceneObject(2, "box", (0.06, 0.05, 0.020), 0.08, 0.0)
    res = run_psp(scene_of(a, b), CFG.home_camera(), OracleSegmenter(), CFG)
    want = res.aligned.labels.values == 1
    assert np.array_equal(res.mask.values, want)
    assert not res.degenerate_cross


def test_run_psp_no_cps_returns_first_mask():
    a = SceneObject(1, "box", (0.06, 0.05, 0.045), 0.0, 0.0)
    cfg = CFG.with_ablation(no_cps=True)
    res = run_psp(scene_of(a), CFG.home_camera(), OracleSegmenter(), cfg)
    assert res.cross_prompts is None and res.area_cross is None
    assert res.mask.area() == res.area_first


def test_run_psp_first_mask_subset_of_refined():
    a = SceneObject(1, "box", (0.06, 0.05, 0.045), -0.08, 0.0)
    b = SceneObject(2, "box", (0.06, 0.05, 0.020), 0.08, 0.0)
    res = run_psp(scene_of(a, b), CFG.home_camera(), OracleSegmenter(), CFG)
    assert res.mask.area() >= res.area_first


def test_run_psp_noisy_union_recovers_area():
    from pmsgp.psp import NoisySegmenter
    a = SceneObject(1, "box", (0.06, 0.05, 0.045), 0.0, 0.0)
    seg = NoisySegmenter(0.3, np.random.default_rng(3))
    res = run_psp(scene_of(a), CFG.home_camera(), seg, CFG)
    assert res.mask.area() >= res.area_first


def test_run_psp_degenerate_mask_falls_back():
    class TinySegmenter:
        def segment(self, view, prompts):
            m = np.zeros(view.depth.values.shape, dtype=bool)
            x, y = prompts[0]
            m[int(y), int(x)] = True
            return BinaryMask(m)

    a = SceneObject(1, "box", (0.06, 0.05, 0.045), 0.0, 0.0)
    res = run_psp(scene_of(a), CFG.home_camera(), TinySegmenter(), CFG)
    assert res.degenerate_cross
    assert res.mask.area() >= 1


def test_run_psp_targets_topmost_across_seeded_scenes():
    from pmsgp.scene import generate_scene
    seg = OracleSegmenter()
    for seed in range(1, 11):
        s = generate_scene(seed, 8, workspace=CFG.workspace)
        res = run_psp(s, CFG.home_camera(), seg, CFG)
        pr, pc = int(res.prompt[1]), int(res.prompt[0])
        target = int(res.aligned.labels.values[pr, pc])
        best = max(s.objects, key=lambda o: o.top_z)
        assert target == best.id


def test_fixed_center_view_keeps_camera_home():
    a = SceneObject(1, "box", (0.06, 0.05, 0.045), 0.1, 0.05)
    view = fixed_center_view(scene_of(a), CFG.home_camera(), CFG)
    assert view.camera.x == 0.0 and view.camera.y == 0.0
    assert view.trace == ()
