"""Pyramid sequencing: isolate the topmost object before each grasp.

The policy aligns the camera so the minimum-depth pixel sits at the
view center (once at full resolution, twice more on center crops),
segments the centered object with a single prompt, then re-segments
with four cross prompts derived from the first mask's boundary: the
farthest boundary pixel pair and the farthest pair near the
perpendicular bisector line.  The refined mask is the union of the
cross-prompted mask and a depth-grown region seeded at the first
prompt.

Prompts are (x, y) pixels; boundary pixel sets are (row, col) arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .config import PipelineConfig
from .imaging import (
    BinaryMask,
    DepthImage,
    EdgeSet,
    EmptyMaskError,
    InvalidSeedError,
    clamp_depth_range,
    fill_depth_holes,
    mask_union,
    region_grow,
    sobel_edges,
)
from .scene import (
    LabelImage,
    Scene,
    VirtualCamera,
    noisy_segment,
    oracle_segment,
    render_scene,
)

__all__ = [
    "Segmenter",
    "SegmenterView",
    "OracleSegmenter",
    "NoisySegmenter",
    "RegionGrowSegmenter",
    "make_segmenter",
    "PromptSet",
    "AlignStep",
    "AlignedView",
    "PspResult",
    "NoValidDepthError",
    "SegmentationFailureError",
    "DegenerateCrossError",
    "min_depth_pixel",
    "preprocess_depth",
    "top_view_align",
    "fixed_center_view",
    "farthest_pixel_pair",
    "perpendicular_pair",
    "run_psp",
]

# An 8-connected digital line always meets a 4-connected boundary within
# half a diagonal, so this tolerance cannot produce empty intersections.
LINE_TOL = math.sqrt(2.0) / 2.0


class NoValidDepthError(RuntimeError):
    pass


class SegmentationFailureError(RuntimeError):
    pass


class DegenerateCrossError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Segmenters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmenterView:
    """What a segmenter may look at: the depth crop and, for the
    simulator-backed segmenters, the instance labels of the same crop."""

    depth: DepthImage
    labels: LabelImage | None = None


class Segmenter(Protocol):
    def segment(self, view: SegmenterView, prompts) -> BinaryMask: ...


class OracleSegmenter:
    """Ground-truth instance lookup; stands in for a learned segmenter."""

    def segment(self, view: SegmenterView, prompts) -> BinaryMask:
        if view.labels is None:
            raise ValueError("oracle segmenter needs instance labels")
        return oracle_segment(view.labels, prompts)


class NoisySegmenter:
    """Oracle lookup with a seeded corruption bite.

    Single-point prompts suffer the full corruption level; four or more
    spread prompts suffer a fifth of it, mirroring how unstable
    single-point prompting is compared to cross prompting.
    """

    def __init__(self, corruption: float, rng: np.random.Generator):
        self.corruption = corruption
        self._rng = rng

    def segment(self, view: SegmenterView, prompts) -> BinaryMask:
        if view.labels is None:
            raise ValueError("noisy segmenter needs instance labels")
        seed = int(self._rng.integers(0, 2**31 - 1))
        return noisy_segment(view.labels, prompts, seed, self.corruption)


class RegionGrowSegmenter:
    """Depth-only baseline: flood the region depth-continuous with the prompts."""

    def __init__(self, tol: float):
        self.tol = tol

    def segment(self, view: SegmenterView, prompts) -> BinaryMask:
        valid = view.depth.valid
        seeds = []
        for x, y in prompts:
            r, c = int(y), int(x)
            if 0 <= r < view.depth.height and 0 <= c < view.depth.width and valid[r, c]:
                seeds.append((r, c))
        if not seeds:
            return BinaryMask(np.zeros(view.depth.values.shape, dtype=bool))
        return region_grow(view.depth, seeds, self.tol)


def make_segmenter(cfg: PipelineConfig, rng: np.random.Generator) -> Segmenter:
    if cfg.segmenter == "oracle":
        return OracleSegmenter()
    if cfg.segmenter == "noisy":
        return NoisySegmenter(cfg.corruption, rng)
    return RegionGrowSegmenter(cfg.dilation_tol)


# ---------------------------------------------------------------------------
# Alignment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PromptSet:
    """Prompts fed to a segmentation call: one center point, or the four
    cross points (p_m, p_m', p_mp, p_mp') as (x, y) pixels."""

    pixels: tuple

    def __post_init__(self):
        if len(self.pixels) not in (1, 4):
            raise ValueError("prompt set holds one center prompt or four cross prompts")
        if len(set(self.pixels)) != len(self.pixels):
            raise ValueError("cross prompts must be pairwise distinct")


@dataclass(frozen=True)
class AlignStep:
    """One camera alignment move."""

    pixel: tuple          # (row, col) of the min-depth pixel, full-view coords
    depth: float          # meters at that pixel
    move: tuple           # world (dx, dy) applied to the camera
    clamped: bool         # whether the move hit the workspace boundary


@dataclass(frozen=True)
class AlignedView:
    """Camera state and center crop after top-view alignment."""

    camera: VirtualCamera
    depth: DepthImage     # preprocessed crop
    labels: LabelImage    # simulator labels for the same crop
    crop_origin: tuple    # (row, col) of the crop in the full view
    trace: tuple          # AlignStep per alignment operation
    center_min_gap: float  # |depth(center) - min(crop)| after alignment


def min_depth_pixel(img: DepthImage) -> tuple[int, int]:
    """(row, col) of the smallest valid depth; ties take the smallest
    row, then column."""
    v = img.values
    masked = np.where(v > 0, v, np.inf)
    flat = int(np.argmin(masked))
    if not np.isfinite(masked.flat[flat]):
        raise NoValidDepthError("image has no valid depth pixel")
    r, c = np.unravel_index(flat, v.shape)
    return int(r), int(c)


def preprocess_depth(img: DepthImage, depth_clamp) -> DepthImage:
    """Protocol preprocessing: repair holes, then invalidate pixels
    outside the working depth range (which deliberately excludes the
    open ground plane)."""
    if img.valid.any():
        img = fill_depth_holes(img)
    return clamp_depth_range(img, depth_clamp[0], depth_clamp[1])


def _clamp_to_workspace(x, y, workspace):
    x0, x1, y0, y1 = workspace
    cx = min(max(x, x0), x1)
    cy = min(max(y, y0), y1)
    return cx, cy, (cx != x or cy != y)


def _render_pre(scene, cam, cfg, crop, noise_rng):
    depth, labels = render_scene(
        scene, cam, crop, noise_sigma=cfg.noise_sigma, noise_rng=noise_rng
    )
    return preprocess_depth(depth, cfg.depth_clamp), labels


def top_view_align(
    scene: Scene,
    cam: VirtualCamera,
    cfg: PipelineConfig,
    noise_rng: np.random.Generator | None = None,
) -> AlignedView:
    """Center the minimum-depth pixel: one global alignment at full
    resolution, then exactly two local alignments on center crops.

    Each move translates the camera in its plane by the back-projected
    offset of the min-depth pixel at that pixel's depth, clamping to
    the workspace (flagged in the trace).
    """
    k = cam.intrinsics
    trace = []
    for step, use_crop in enumerate((False, True, True)):
        depth, _ = _render_pre(scene, cam, cfg, use_crop, noise_rng)
        r, c = min_depth_pixel(depth)
        if use_crop:
            r_off, c_off = cam.crop_origin()
            r_full, c_full = r + r_off, c + c_off
        else:
            r_full, c_full = r, c
        d = float(depth.values[r, c])
        a = (c_full - k.cx) / k.fx
        b = (r_full - k.cy) / k.fy
        dx, dy = cam.image_dir_to_world(a * d, b * d)
        nx, ny, clamped = _clamp_to_workspace(cam.x + dx, cam.y + dy, scene.workspace)
        trace.append(AlignStep((r_full, c_full), d, (nx - cam.x, ny - cam.y), clamped))
        cam = cam.moved_to(nx, ny)

    depth, labels = _render_pre(scene, cam, cfg, True, noise_rng)
    center = (cam.crop_size // 2, cam.crop_size // 2)
    mr, mc = min_depth_pixel(depth)
    gap = abs(float(depth.values[center]) - float(depth.values[mr, mc]))
    return AlignedView(cam, depth, labels, cam.crop_origin(), tuple(trace), gap)


def fixed_center_view(
    scene: Scene,
    cam: VirtualCamera,
    cfg: PipelineConfig,
    noise_rng: np.random.Generator | None = None,
) -> AlignedView:
    """Ablation stand-in for alignment: the camera stays put and the
    center crop is taken as-is."""
    depth, labels = _render_pre(scene, cam, cfg, True, noise_rng)
    mr, mc = min_depth_pixel(depth)
    center = (cam.crop_size // 2, cam.crop_size // 2)
    gap = abs(float(depth.values[center]) - float(depth.values[mr, mc]))
    return AlignedView(cam, depth, labels, cam.crop_origin(), (), gap)


# ---------------------------------------------------------------------------
# Cross prompts
# ---------------------------------------------------------------------------

def _lex_sorted(pixels: np.ndarray) -> np.ndarray:
    order = np.lexsort((pixels[:, 1], pixels[:, 0]))
    return pixels[order]


def _farthest_pair_of(pixels: np.ndarray):
    """Max-distance pixel pair with exact integer arithmetic; ties take
    the lexicographically smallest (p_i, p_j)."""
    p = _lex_sorted(pixels).astype(np.int64)
    dr = p[:, 0][:, None] - p[:, 0][None, :]
    dc = p[:, 1][:, None] - p[:, 1][None, :]
    d2 = dr * dr + dc * dc
    best = int(d2.max())
    ii, jj = np.nonzero(d2 == best)
    keep = ii < jj
    ii, jj = ii[keep], jj[keep]
    # nonzero scans row-major, so the first (i, j) is the lexicographic min
    i, j = int(ii[0]), int(jj[0])
    return (int(p[i, 0]), int(p[i, 1])), (int(p[j, 0]), int(p[j, 1]))


def farthest_pixel_pair(edge: EdgeSet):
    """The two most distant boundary pixels, returned in lexicographic order."""
    if len(edge) < 2:
        raise ValueError("need at least two edge pixels")
    return _farthest_pair_of(edge.pixels)


def perpendicular_pair(edge: EdgeSet, p_m, p_m2):
    """Farthest pixel pair near the perpendicular bisector of (p_m, p_m2).

    The line runs through the midpoint of the farthest pair,
    perpendicular to it; edge pixels within half a diagonal of the line
    qualify.  Fewer than two qualifying pixels raise
    DegenerateCrossError (callers fall back to the single-prompt mask).
    """
    ar = int(p_m2[0]) - int(p_m[0])
    ac = int(p_m2[1]) - int(p_m[1])
    if ar == 0 and ac == 0:
        raise DegenerateCrossError("farthest pair is degenerate")
    # Membership |(p - mid) . a| / |a| <= sqrt(2)/2 evaluated exactly:
    # (2 (p - mid) . a)^2 <= 2 |a|^2, all integer.
    p = edge.pixels.astype(np.int64)
    k2 = 2 * (p[:, 0] * ar + p[:, 1] * ac) - (
        (int(p_m[0]) + int(p_m2[0])) * ar + (int(p_m[1]) + int(p_m2[1])) * ac
    )
    near = edge.pixels[k2 * k2 <= 2 * (ar * ar + ac * ac)]
    if near.shape[0] < 2:
        raise DegenerateCrossError("fewer than two edge pixels near the perpendicular line")
    return _farthest_pair_of(near)


# ---------------------------------------------------------------------------
# Full policy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PspResult:
    mask: BinaryMask            # refined mask M_r
    aligned: AlignedView
    prompt: tuple               # first prompt, (x, y)
    cross_prompts: tuple | None  # four (x, y) prompts when cross segmentation ran
    area_first: int             # single-prompt mask area
    area_cross: int | None      # cross-prompted mask area
    area_grown: int | None      # depth-grown mask area
    degenerate_cross: bool


def _grow_from_prompt(depth: DepthImage, prompt, tol: float) -> BinaryMask:
    r, c = int(prompt[1]), int(prompt[0])
    try:
        return region_grow(depth, [(r, c)], tol)
    except InvalidSeedError:
        return BinaryMask(np.zeros(depth.values.shape, dtype=bool))


def run_psp(
    scene: Scene,
    cam: VirtualCamera,
    seg: Segmenter,
    cfg: PipelineConfig,
    noise_rng: np.random.Generator | None = None,
) -> PspResult:
    """Align, segment with the center prompt, refine with cross prompts.

    With ``no_tva`` the camera never moves and the prompt falls on the
    crop's min-depth pixel instead of its center; with ``no_cps`` the
    single-prompt mask is returned unrefined.
    """
    if cfg.no_tva:
        aligned = fixed_center_view(scene, cam, cfg, noise_rng)
        pr, pc = min_depth_pixel(aligned.depth)
        prompt = (pc, pr)
    else:
        aligned = top_view_align(scene, cam, cfg, noise_rng)
        half = cfg.crop_size // 2
        prompt = (half, half)

    view = SegmenterView(aligned.depth, aligned.labels)
    m_f = seg.segment(view, [prompt])
    if m_f.area() == 0:
        raise SegmentationFailureError("first segmentation produced an empty mask")

    if cfg.no_cps:
        return PspResult(m_f, aligned, prompt, None, m_f.area(), None, None, False)

    m_d = _grow_from_prompt(aligned.depth, prompt, cfg.dilation_tol)
    try:
        edge = sobel_edges(m_f)
        if len(edge) < 2:
            raise DegenerateCrossError("mask boundary is a single pixel")
        p_m, p_m2 = farthest_pixel_pair(edge)
        p_mp, p_mp2 = perpendicular_pair(edge, p_m, p_m2)
        if len({p_m, p_m2, p_mp, p_mp2}) != 4:
            raise DegenerateCrossError("cross prompts are not pairwise distinct")
    except (DegenerateCrossError, EmptyMaskError):
        m_r = mask_union(m_f, m_d)
        return PspResult(m_r, aligned, prompt, None, m_f.area(), None, m_d.area(), True)

    cross = tuple((int(c), int(r)) for r, c in (p_m, p_m2, p_mp, p_mp2))
    m_s = seg.segment(view, cross)
    m_r = mask_union(m_s, m_d)
    return PspResult(m_r, aligned, prompt, cross, m_f.area(), m_s.area(), m_d.area(), False)
