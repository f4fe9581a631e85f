"""Monozone sampling: grasp candidates restricted to the topmost object's mask.

The funnel runs G -> G' -> G'' -> G''' -> g* -> g*_f:

  * generation: a deterministic grid of candidates inside the mask
    interior (stand-in for a learned candidate model);
  * angle calibration: exhaustive 2-degree rotation search minimizing
    how far the mask-boundary crossing directions at the two finger
    ends deviate from perpendicular to the box's long sides;
  * self-collision filter: finger segments clear of the mask, center
    inside it;
  * adjacent-collision filter: finger-segment depths within t_d of the
    center depth;
  * optimal selection: smallest center depth;
  * refinement: shrink width and re-center to the mask pixels covered
    by the grasp box, widened by the hand-eye error bound.

Empty funnels trigger adaptive view rotation: the crop and mask are
rotated 30 degrees at a time and the funnel re-runs, up to a full turn.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import PipelineConfig
from .grasp import CameraIntrinsics, GraspBox, grasp_box_short_sides
from .imaging import BinaryMask, DepthImage, EdgeSet, rasterize_segment, sobel_edges

__all__ = [
    "CandidateGenerator",
    "CandidateSet",
    "CalibrationResult",
    "RefinementRectangle",
    "MspResult",
    "NoGraspError",
    "BaselineGridGenerator",
    "FileCandidateGenerator",
    "make_generator",
    "generate_baseline_candidates",
    "calibrate_angle",
    "filter_self_collision",
    "filter_adjacent_collision",
    "select_optimal",
    "refine_grasp",
    "coverage_score",
    "rotate_raster",
    "rotate_point_back",
    "run_msp",
]

# Crossing-detection band around each long side; half a pixel diagonal
# guarantees a 4-connected boundary cannot slip between samples.
SIDE_TOL = math.sqrt(2.0) / 2.0

ORIENTATIONS = tuple(math.radians(a) for a in range(0, 180, 30))


class NoGraspError(RuntimeError):
    """Every view rotation left the candidate funnel empty."""


@dataclass(frozen=True)
class CandidateSet:
    """Candidates at one funnel stage, in the (possibly rotated) crop frame."""

    stage: str
    boxes: tuple
    view_rotation_deg: float = 0.0

    _ORDER = ("G", "G'", "G''", "G'''")

    def __post_init__(self):
        if self.stage not in self._ORDER:
            raise ValueError(f"unknown funnel stage {self.stage!r}")

    def advanced(self, boxes) -> "CandidateSet":
        nxt = self._ORDER[self._ORDER.index(self.stage) + 1]
        return CandidateSet(nxt, tuple(boxes), self.view_rotation_deg)

    def __len__(self) -> int:
        return len(self.boxes)


@dataclass(frozen=True)
class CalibrationResult:
    box: GraspBox
    rotation_deg: float
    score: float
    calibrated: bool


@dataclass(frozen=True)
class RefinementRectangle:
    """Oriented bounding rectangle of the mask pixels under a grasp box."""

    center: tuple          # (x, y)
    width: float           # extent along the grasp axis, px
    extent: float          # extent along the finger axis, px
    orientation: float     # radians, equals the grasp's theta


@dataclass(frozen=True)
class MspResult:
    grasp: GraspBox                  # final grasp, unrotated crop frame
    selected: GraspBox               # pre-refinement optimum, unrotated frame
    rotation_deg: float              # adaptive view rotation that produced it
    funnel: tuple                    # per-rotation dicts of stage sizes
    refinement: RefinementRectangle | None
    refine_degenerate: bool
    uncalibrated: int                # candidates whose calibration was skipped
    posthoc_eq7: bool | None = None  # selected optimum re-passes the mask filter
    posthoc_eq8: bool | None = None  # selected optimum re-passes the depth filter
    refined_eq7: bool | None = None  # final grasp still passes the mask filter
    refined_eq8: bool | None = None  # final grasp's fingers still inside the depth band


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

class CandidateGenerator:
    """Interface: (depth crop, mask) -> stage-G candidates and optional scores."""

    def generate(self, depth: DepthImage, mask: BinaryMask, cfg: PipelineConfig):
        raise NotImplementedError


def _mask_interior(m: np.ndarray) -> np.ndarray:
    interior = np.zeros_like(m)
    interior[1:-1, 1:-1] = (
        m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    )
    return interior


def _mask_extent_along(mask: np.ndarray, centers: np.ndarray, theta: float) -> np.ndarray:
    """Length of the contiguous in-mask run through each center along theta.

    Marches in half-pixel steps both ways and stops at the first sample
    outside the mask (or the image).
    """
    h, w = mask.shape
    n_max = int(math.ceil(math.hypot(h, w) / 0.5)) + 1
    ts = np.arange(1, n_max + 1) * 0.5
    ux, uy = math.cos(theta), math.sin(theta)
    reach = np.zeros((2, centers.shape[0]))
    for k, sign in enumerate((1.0, -1.0)):
        cols = np.rint(centers[:, 1][:, None] + sign * ts[None, :] * ux).astype(np.int64)
        rows = np.rint(centers[:, 0][:, None] + sign * ts[None, :] * uy).astype(np.int64)
        inb = (rows >= 0) & (rows < h) & (cols >= 0) & (cols < w)
        ok = np.zeros(inb.shape, dtype=bool)
        ok[inb] = mask[rows[inb], cols[inb]]
        # run length = index of the first failing sample (in half-pixel units)
        stop = np.argmin(ok, axis=1)
        full = ok.all(axis=1)
        reach[k] = np.where(full, ts[-1], stop * 0.5)
    return reach[0] + reach[1]


class BaselineGridGenerator(CandidateGenerator):
    """Deterministic lattice of candidates inside the mask interior.

    Centers fall on a grid_step lattice anchored at (0, 0); each center
    spawns one candidate per 30-degree orientation, sized to the local
    mask extent along the grasp axis plus a width pad per side.
    """

    def generate(self, depth, mask, cfg):
        m = mask.values
        interior = _mask_interior(m)
        s = cfg.grid_step
        lattice = np.zeros_like(interior)
        lattice[::s, ::s] = interior[::s, ::s]
        centers = np.argwhere(lattice)
        if centers.shape[0] == 0:
            return CandidateSet("G", ()), None
        boxes = []
        widths = {th: _mask_extent_along(m, centers, th) for th in ORIENTATIONS}
        for i, (r, c) in enumerate(centers):
            for th in ORIENTATIONS:
                w = float(widths[th][i]) + 2.0 * cfg.width_pad
                boxes.append(GraspBox(float(c), float(r), w, cfg.finger_thickness_px, th))
        return CandidateSet("G", tuple(boxes)), None


class FileCandidateGenerator(CandidateGenerator):
    """Candidates imported from a JSON file of externally produced grasps.

    Format: a list of {x, y, w, h, theta_deg, score}.  Candidates whose
    center falls outside the crop are dropped.
    """

    def __init__(self, path):
        with open(path) as f:
            entries = json.load(f)
        self._entries = entries

    def generate(self, depth, mask, cfg):
        boxes, scores = [], []
        for e in self._entries:
            x, y = float(e["x"]), float(e["y"])
            if not (0 <= y < depth.height and 0 <= x < depth.width):
                continue
            boxes.append(GraspBox(x, y, float(e["w"]), float(e["h"]),
                                  math.radians(float(e["theta_deg"]))))
            scores.append(float(e.get("score", 0.0)))
        return CandidateSet("G", tuple(boxes)), tuple(scores)


def make_generator(cfg: PipelineConfig) -> CandidateGenerator:
    if cfg.generator == "file":
        return FileCandidateGenerator(cfg.generator_file)
    return BaselineGridGenerator()


def generate_baseline_candidates(depth, mask, cfg) -> CandidateSet:
    return BaselineGridGenerator().generate(depth, mask, cfg)[0]


# ---------------------------------------------------------------------------
# Angle calibration
# ---------------------------------------------------------------------------

def _edge_xy(edge: EdgeSet) -> np.ndarray:
    return edge.pixels[:, ::-1].astype(np.float64)  # (x, y)


@lru_cache(maxsize=512)
def _rotation_tables(theta: float, step: float, n_rot: int):
    """Direction vectors for every evaluated rotation of one candidate.

    Scalar trig keeps every value bit-identical to a plain scalar
    reference; candidates share orientations, so the tables cache well.
    """
    angles = [theta + math.radians(k * step) for k in range(n_rot)]
    u = np.array([[math.cos(a), math.sin(a)] for a in angles])
    v = np.array([[-math.sin(a), math.cos(a)] for a in angles])
    u.setflags(write=False)
    v.setflags(write=False)
    return u, v


def calibrate_angle(g: GraspBox, edge: EdgeSet, cfg: PipelineConfig) -> CalibrationResult:
    """Exhaustive rotation search for the most perpendicular boundary contact.

    For each rotation of the candidate (2-degree steps over a full
    turn), both long sides are intersected with the mask boundary; the
    crossing nearest each side endpoint defines the boundary direction
    at each finger, and the rotation minimizing the summed deviation of
    those directions from perpendicular wins (ties take the smallest
    rotation).  Rotations where either side finds no crossing, or where
    the crossing vectors degenerate, are skipped; if every rotation is
    skipped the candidate is returned unchanged and flagged.
    """
    step = cfg.calibration_step_deg
    n_rot = int(round(360.0 / step))
    exy = _edge_xy(edge)
    rel = exy - np.array([g.x, g.y])
    hw, hh = g.w / 2.0, g.h / 2.0
    radius = math.hypot(hw, hh + SIDE_TOL) + 1.0
    keep = (rel[:, 0] ** 2 + rel[:, 1] ** 2) <= radius * radius
    rel = rel[keep]
    exy = exy[keep]
    if rel.shape[0] == 0:
        return CalibrationResult(g, 0.0, math.inf, False)

    # Scalar trig and explicit elementwise dots keep every float op in
    # the same order as a straightforward scalar evaluation, so results
    # are bit-identical to a brute-force reference (BLAS/SIMD paths are
    # not).
    angles = [g.theta + math.radians(k * step) for k in range(n_rot)]
    u = np.array([[math.cos(a), math.sin(a)] for a in angles])  # (K, 2)
    v = np.array([[-math.sin(a), math.cos(a)] for a in angles])
    t = rel[:, 0, None] * u[None, :, 0] + rel[:, 1, None] * u[None, :, 1]  # (n, K)
    s = rel[:, 0, None] * v[None, :, 0] + rel[:, 1, None] * v[None, :, 1]
    in_span = np.abs(t) <= hw

    picks = []
    ok = np.ones(n_rot, dtype=bool)
    for side in (-hh, hh):
        cond = in_span & (np.abs(s - side) <= SIDE_TOL)
        any_cross = cond.any(axis=0)
        ok &= any_cross
        t_neg = np.where(cond, t, np.inf)
        t_pos = np.where(cond, t, -np.inf)
        picks.append((np.argmin(t_neg, axis=0), np.argmax(t_pos, axis=0)))

    # crossing vectors from raw pixel coordinates: differencing the
    # center-relative values instead would add a rounding step
    (n1, p1), (n2, p2) = picks
    v_neg = exy[n2] - exy[n1]                                   # (K, 2)
    v_pos = exy[p2] - exy[p1]
    len_neg = np.sqrt(v_neg[:, 0] * v_neg[:, 0] + v_neg[:, 1] * v_neg[:, 1])
    len_pos = np.sqrt(v_pos[:, 0] * v_pos[:, 0] + v_pos[:, 1] * v_pos[:, 1])
    ok &= (len_neg > 0) & (len_pos > 0)

    with np.errstate(divide="ignore", invalid="ignore"):
        cos_n = (v_neg[:, 0] * u[:, 0] + v_neg[:, 1] * u[:, 1]) / len_neg
        cos_p = (v_pos[:, 0] * u[:, 0] + v_pos[:, 1] * u[:, 1]) / len_pos
    # scalar acos rather than the SIMD ufunc: last-ulp differences can
    # flip the argmin between half-turn near-ties
    th_n = np.array([math.acos(x) for x in np.clip(cos_n, -1.0, 1.0)])
    th_p = np.array([math.acos(x) for x in np.clip(cos_p, -1.0, 1.0)])
    score = np.abs(th_n - math.pi / 2.0) + np.abs(th_p - math.pi / 2.0)
    score = np.where(ok, score, np.inf)
    if not ok.any():
        return CalibrationResult(g, 0.0, math.inf, False)
    k = int(np.argmin(score))
    rot = k * step
    return CalibrationResult(g.rotated(math.radians(rot)), rot, float(score[k]), True)


def _calibrate_all(cands: CandidateSet, edge: EdgeSet, cfg) -> tuple[CandidateSet, int]:
    boxes, skipped = [], 0
    for g in cands.boxes:
        res = calibrate_angle(g, edge, cfg)
        boxes.append(res.box)
        if not res.calibrated:
            skipped += 1
    return cands.advanced(boxes), skipped


# ---------------------------------------------------------------------------
# Filters and selection
# ---------------------------------------------------------------------------

def _short_side_pixels(g: GraspBox) -> np.ndarray:
    sides = grasp_box_short_sides(g)
    return np.concatenate([rasterize_segment(p0, p1) for p0, p1 in sides])


def _center_pixel(g: GraspBox) -> tuple[int, int]:
    return int(np.rint(g.y)), int(np.rint(g.x))


def filter_self_collision(cands: CandidateSet, mask: BinaryMask) -> CandidateSet:
    """Keep candidates whose finger segments avoid the mask and whose
    center lies inside it."""
    if cands.stage != "G'":
        raise ValueError(f"self-collision filter expects stage G', got {cands.stage}")
    m = mask.values
    h, w = m.shape
    kept = []
    for g in cands.boxes:
        r, c = _center_pixel(g)
        if not (0 <= r < h and 0 <= c < w) or not m[r, c]:
            continue
        pix = _short_side_pixels(g)
        inb = (pix[:, 0] >= 0) & (pix[:, 0] < h) & (pix[:, 1] >= 0) & (pix[:, 1] < w)
        p = pix[inb]
        if p.size and m[p[:, 0], p[:, 1]].any():
            continue
        kept.append(g)
    return cands.advanced(kept)


def filter_adjacent_collision(cands: CandidateSet, depth: DepthImage, t_d: float) -> CandidateSet:
    """Keep candidates whose finger-segment depths stay within t_d of the
    center depth.

    Finger pixels outside the crop or without a valid depth (out of the
    working clamp range, e.g. open ground) are skipped: there is
    nothing in range for the fingers to meet there.
    """
    if cands.stage != "G''":
        raise ValueError(f"adjacent-collision filter expects stage G'', got {cands.stage}")
    if t_d <= 0:
        raise ValueError("t_d must be > 0")
    d = depth.values
    h, w = d.shape
    kept = []
    for g in cands.boxes:
        r, c = _center_pixel(g)
        if not (0 <= r < h and 0 <= c < w) or d[r, c] <= 0:
            continue
        dc = d[r, c]
        pix = _short_side_pixels(g)
        inb = (pix[:, 0] >= 0) & (pix[:, 0] < h) & (pix[:, 1] >= 0) & (pix[:, 1] < w)
        p = pix[inb]
        dp = d[p[:, 0], p[:, 1]]
        dp = dp[dp > 0]
        if dp.size and np.abs(dp - dc).max() > t_d:
            continue
        kept.append(g)
    return cands.advanced(kept)


def select_optimal(cands: CandidateSet, depth: DepthImage) -> GraspBox | None:
    """Candidate with the smallest center depth; ties take the
    lexicographically smallest center, then the smallest theta.
    Returns None on an empty stage (signals adaptive rotation)."""
    if cands.stage != "G'''":
        raise ValueError(f"selection expects stage G''', got {cands.stage}")
    if not cands.boxes:
        return None
    d = depth.values

    def key(g: GraspBox):
        r, c = _center_pixel(g)
        return (float(d[r, c]), r, c, g.theta)

    return min(cands.boxes, key=key)


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------

def _box_region_pixels(g: GraspBox, shape) -> np.ndarray:
    """Integer pixels whose centers lie inside the rotated rectangle."""
    h, w = shape
    hw, hh = g.w / 2.0, g.h / 2.0
    reach = math.hypot(hw, hh)
    r0 = max(int(math.floor(g.y - reach)), 0)
    r1 = min(int(math.ceil(g.y + reach)) + 1, h)
    c0 = max(int(math.floor(g.x - reach)), 0)
    c1 = min(int(math.ceil(g.x + reach)) + 1, w)
    if r0 >= r1 or c0 >= c1:
        return np.empty((0, 2), dtype=np.int64)
    rr, cc = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
    dx = cc - g.x
    dy = rr - g.y
    ux, uy = math.cos(g.theta), math.sin(g.theta)
    t = dx * ux + dy * uy
    s = -dx * uy + dy * ux
    inside = (np.abs(t) <= hw) & (np.abs(s) <= hh)
    return np.column_stack([rr[inside], cc[inside]])


def refine_grasp(
    g: GraspBox,
    mask: BinaryMask,
    depth: DepthImage,
    e_c: float,
    k: CameraIntrinsics,
) -> tuple[GraspBox, RefinementRectangle | None, bool]:
    """Shrink the grasp to the mask pixels it covers and add the
    hand-eye error margin.

    The covered pixels' bounding rectangle, oriented at the grasp's
    theta, gives the new center and the minimal width along the grasp
    axis; the width then grows by the calibration error bound converted
    to pixels at the center depth.  An empty intersection (or an
    invalid center depth) returns the grasp unrefined and flagged.
    """
    pix = _box_region_pixels(g, mask.values.shape)
    if pix.shape[0] == 0:
        return g, None, True
    covered = pix[mask.values[pix[:, 0], pix[:, 1]]]
    if covered.shape[0] == 0:
        return g, None, True
    r, c = _center_pixel(g)
    d_c = float(depth.values[r, c]) if (0 <= r < depth.height and 0 <= c < depth.width) else 0.0
    if d_c <= 0:
        return g, None, True

    ux, uy = math.cos(g.theta), math.sin(g.theta)
    dx = covered[:, 1] - g.x
    dy = covered[:, 0] - g.y
    t = dx * ux + dy * uy
    s = -dx * uy + dy * ux
    t0, t1 = float(t.min()), float(t.max())
    s0, s1 = float(s.min()), float(s.max())
    cx = g.x + ux * (t0 + t1) / 2.0 - uy * (s0 + s1) / 2.0
    cy = g.y + uy * (t0 + t1) / 2.0 + ux * (s0 + s1) / 2.0

    e_c_px = e_c * k.fx / d_c
    width = max((t1 - t0) + e_c_px, 1.0)
    rect = RefinementRectangle((cx, cy), t1 - t0, s1 - s0, g.theta)
    return GraspBox(cx, cy, width, g.h, g.theta), rect, False


# ---------------------------------------------------------------------------
# Quality proxy and view rotation
# ---------------------------------------------------------------------------

def coverage_score(g: GraspBox, mask: BinaryMask) -> float:
    """Fraction of the box's pixels inside the mask (quality stand-in)."""
    pix = _box_region_pixels(g, mask.values.shape)
    if pix.shape[0] == 0:
        return 0.0
    return float(mask.values[pix[:, 0], pix[:, 1]].mean())


def rotate_raster(values: np.ndarray, beta_deg: float, fill) -> np.ndarray:
    """Nearest-neighbor rotation about the image center; out-of-frame
    samples take ``fill``."""
    h, w = values.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    beta = math.radians(beta_deg)
    cb, sb = math.cos(beta), math.sin(beta)
    rr, cc = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    dx = cc - cx
    dy = rr - cy
    src_c = np.rint(cx + cb * dx - sb * dy).astype(np.int64)
    src_r = np.rint(cy + sb * dx + cb * dy).astype(np.int64)
    inb = (src_r >= 0) & (src_r < h) & (src_c >= 0) & (src_c < w)
    out = np.full(values.shape, fill, dtype=values.dtype)
    out[inb] = values[src_r[inb], src_c[inb]]
    return out


def rotate_point_back(xy, beta_deg: float, shape) -> tuple[float, float]:
    """Map a point found in a rotated raster back to the unrotated frame."""
    h, w = shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    beta = math.radians(beta_deg)
    cb, sb = math.cos(beta), math.sin(beta)
    dx = xy[0] - cx
    dy = xy[1] - cy
    return (cx + cb * dx - sb * dy, cy + sb * dx + cb * dy)


def _rotate_box_back(g: GraspBox, beta_deg: float, shape) -> GraspBox:
    if beta_deg == 0.0:
        return g
    x, y = rotate_point_back((g.x, g.y), beta_deg, shape)
    return GraspBox(x, y, g.w, g.h, g.theta + math.radians(beta_deg))


# ---------------------------------------------------------------------------
# Full funnel
# ---------------------------------------------------------------------------

def run_msp(
    depth: DepthImage,
    mask: BinaryMask,
    gen: CandidateGenerator,
    cfg: PipelineConfig,
) -> MspResult:
    """Run the candidate funnel, rotating the view on empty stages.

    The final grasp is expressed in the unrotated crop frame.  With
    ``no_msp`` the funnel is bypassed: the generator's best candidate
    by quality proxy (imported score, else mask-coverage fraction) is
    returned raw.
    """
    if mask.area() == 0:
        raise NoGraspError("empty instance mask")
    shape = mask.values.shape

    if cfg.no_msp:
        cands, scores = gen.generate(depth, mask, cfg)
        if not len(cands):
            raise NoGraspError("generator produced no candidates")
        if scores is None:
            scores = tuple(coverage_score(g, mask) for g in cands.boxes)
        best = max(range(len(scores)), key=lambda i: (scores[i], -i))
        g = cands.boxes[best]
        sizes = {"rotation_deg": 0.0, "G": len(cands), "G'": 0, "G''": 0, "G'''": 0}
        return MspResult(g, g, 0.0, (sizes,), None, False, 0)

    step = cfg.view_rotation_step_deg
    n_rot = max(int(round(360.0 / step)), 1)
    funnel = []
    d_k, m_k = depth, mask
    for k in range(n_rot):
        beta = k * step
        if k > 0:
            d_k = DepthImage(rotate_raster(depth.values, beta, np.float32(0.0)))
            m_k = BinaryMask(rotate_raster(mask.values, beta, False))
        sizes = {"rotation_deg": beta, "G": 0, "G'": 0, "G''": 0, "G'''": 0}
        funnel.append(sizes)
        if not m_k.values.any():
            continue
        cands, _ = gen.generate(d_k, m_k, cfg)
        sizes["G"] = len(cands)
        if not len(cands):
            continue
        edge = sobel_edges(m_k)
        calibrated, skipped = _calibrate_all(cands, edge, cfg)
        sizes["G'"] = len(calibrated)
        g2 = filter_self_collision(calibrated, m_k)
        sizes["G''"] = len(g2)
        g3 = filter_adjacent_collision(g2, d_k, cfg.t_d)
        sizes["G'''"] = len(g3)
        g_star = select_optimal(g3, d_k)
        if g_star is None:
            continue
        refined, rect, degenerate = refine_grasp(
            g_star, m_k, d_k, cfg.e_c, cfg.intrinsics()
        )
        # Soundness audit in the frame the funnel ran in: the selected
        # optimum must re-pass both filters.  The refined grasp is also
        # re-checked for the record; refinement deliberately narrows the
        # fingers to the mask edge plus the calibration margin, which
        # can re-position them over deeper out-of-band surfaces that the
        # fingers never reach, so its depth-band result is diagnostic,
        # not a contract.
        def _passes(box, stage, check):
            return len(check(CandidateSet(stage, (box,), beta))) == 1

        eq7 = _passes(g_star, "G'", lambda cs: filter_self_collision(cs, m_k))
        eq8 = _passes(g_star, "G''", lambda cs: filter_adjacent_collision(cs, d_k, cfg.t_d))
        r7 = _passes(refined, "G'", lambda cs: filter_self_collision(cs, m_k))
        r8 = _passes(refined, "G''", lambda cs: filter_adjacent_collision(cs, d_k, cfg.t_d))
        return MspResult(
            grasp=_rotate_box_back(refined, beta, shape),
            selected=_rotate_box_back(g_star, beta, shape),
            rotation_deg=beta,
            funnel=tuple(funnel),
            refinement=rect,
            refine_degenerate=degenerate,
            uncalibrated=skipped,
            posthoc_eq7=eq7,
            posthoc_eq8=eq8,
            refined_eq7=r7,
            refined_eq8=r8,
        )
    raise NoGraspError(f"no candidates after {n_rot} view rotations")
