"""Procedural clutter simulator: scene generation, top-down rendering,
ground-truth segmentation, and grasp execution.

World frame: +Z up, ground plane at ``ground_height``.  The camera
looks straight down; a pixel (u, v) maps to the ray

    P(t) = (cam_x + dx * t, cam_y + dy * t, cam_z - t),
    (dx, dy) = R(view_rot) @ ((u - cx) / fx, (v - cy) / fy)

parameterized by z-depth t, so rendered depth values back-project
exactly through the pinhole equations.  Image +x maps to world +X and
image +y to world +Y when ``view_rot`` is zero, which makes image-plane
angles equal world XY angles.

Everything here is deterministic given (inputs, seed); rendering adds
optional seeded Gaussian depth noise when a generator is supplied.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grasp import CameraIntrinsics, RobotGrasp
from .imaging import DepthImage

__all__ = [
    "SceneObject",
    "Scene",
    "VirtualCamera",
    "LabelImage",
    "GraspOutcome",
    "GripperSpec",
    "SceneError",
    "GenerationError",
    "MalformedGraspError",
    "SHAPES",
    "generate_scene",
    "render_scene",
    "render_depth",
    "render_labels",
    "oracle_segment",
    "noisy_segment",
    "topmost_object",
    "execute_grasp",
    "scene_to_dict",
    "scene_from_dict",
    "save_scene",
    "load_scene",
    "scene_hash",
]

SHAPES = ("box", "cylinder", "sphere")

SUPPORT_OVERLAP = 0.25      # fraction of footprint that must rest on a support
_SUPPORT_GRID = 24          # footprint overlap sampling resolution
_FINGER_STEP = 0.001        # m, finger-sweep sampling
_SECTION_STEP = 0.0005      # m, cross-section marching


class SceneError(ValueError):
    pass


class GenerationError(SceneError):
    pass


class MalformedGraspError(SceneError):
    pass


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneObject:
    """Primitive resting in the scene.

    dims: box -> (lx, ly, lz); cylinder -> (radius, height);
    sphere -> (radius,).  ``z0`` is the bottom height (stacking offset);
    ``yaw`` only matters for boxes.
    """

    id: int
    shape: str
    dims: tuple
    x: float
    y: float
    yaw: float = 0.0
    z0: float = 0.0
    material: str = "generic"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise SceneError(f"unknown shape {self.shape!r}")
        if any(d <= 0 for d in self.dims):
            raise SceneError("object dimensions must be positive")
        n = {"box": 3, "cylinder": 2, "sphere": 1}[self.shape]
        if len(self.dims) != n:
            raise SceneError(f"{self.shape} needs {n} dims, got {len(self.dims)}")

    @property
    def height(self) -> float:
        if self.shape == "box":
            return self.dims[2]
        if self.shape == "cylinder":
            return self.dims[1]
        return 2.0 * self.dims[0]

    @property
    def top_z(self) -> float:
        return self.z0 + self.height

    @property
    def planar_radius(self) -> float:
        """Radius of the smallest circle containing the footprint."""
        if self.shape == "box":
            return math.hypot(self.dims[0], self.dims[1]) / 2.0
        return self.dims[0]

    def contains_xy(self, pts: np.ndarray) -> np.ndarray:
        """Footprint membership for an (N, 2) array of world XY points."""
        dx = pts[:, 0] - self.x
        dy = pts[:, 1] - self.y
        if self.shape == "box":
            c, s = math.cos(-self.yaw), math.sin(-self.yaw)
            lx = c * dx - s * dy
            ly = s * dx + c * dy
            return (np.abs(lx) <= self.dims[0] / 2.0) & (np.abs(ly) <= self.dims[1] / 2.0)
        return dx * dx + dy * dy <= self.dims[0] ** 2

    def column_top(self, pts: np.ndarray) -> np.ndarray:
        """Highest surface Z over each XY point; -inf where the column misses."""
        out = np.full(pts.shape[0], -np.inf)
        inside = self.contains_xy(pts)
        if self.shape == "sphere":
            r = self.dims[0]
            dx = pts[:, 0] - self.x
            dy = pts[:, 1] - self.y
            rho2 = dx * dx + dy * dy
            zc = self.z0 + r
            cap = np.zeros_like(out)
            cap[inside] = zc + np.sqrt(np.maximum(r * r - rho2[inside], 0.0))
            out[inside] = cap[inside]
        else:
            out[inside] = self.top_z
        return out


@dataclass(frozen=True)
class Scene:
    """Ordered pile of objects; later objects may rest on earlier ones."""

    objects: tuple
    ground_height: float = 0.0
    workspace: tuple = (-0.25, 0.25, -0.25, 0.25)
    seed: int = 0

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise SceneError("object ids must be unique")
        x0, x1, y0, y1 = self.workspace
        if not (x0 < x1 and y0 < y1):
            raise SceneError("workspace bounds must be ordered")

    def object_by_id(self, oid: int) -> SceneObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(f"no object with id {oid}")

    def max_top(self) -> float:
        if not self.objects:
            return self.ground_height
        return max(o.top_z for o in self.objects)

    def surface_top(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-point (top_z, owner_id); ground owns points no object covers."""
        top = np.full(pts.shape[0], self.ground_height)
        owner = np.zeros(pts.shape[0], dtype=np.int32)
        for o in self.objects:
            t = o.column_top(pts)
            better = t > top
            top[better] = t[better]
            owner[better] = o.id
        return top, owner


@dataclass(frozen=True)
class VirtualCamera:
    """Movable top-down camera with pinhole intrinsics.

    ``height`` is meters above the ground plane; ``view_rot`` is the
    in-plane rotation of the image axes relative to world X/Y.
    """

    x: float
    y: float
    height: float
    intrinsics: CameraIntrinsics
    full_width: int = 1280
    full_height: int = 720
    crop_size: int = 224
    view_rot: float = 0.0

    def __post_init__(self):
        if self.height <= 0:
            raise SceneError("camera height must be positive")
        if self.crop_size > min(self.full_width, self.full_height):
            raise SceneError("crop must fit inside the full resolution")

    def crop_origin(self) -> tuple[int, int]:
        """(row, col) of the center crop's top-left pixel in the full view."""
        return ((self.full_height - self.crop_size) // 2,
                (self.full_width - self.crop_size) // 2)

    def moved_to(self, x: float, y: float) -> "VirtualCamera":
        return replace(self, x=x, y=y)

    def z(self, ground_height: float) -> float:
        return ground_height + self.height

    def image_dir_to_world(self, a, b):
        """Rotate normalized image-plane direction (a, b) into world XY."""
        c, s = math.cos(self.view_rot), math.sin(self.view_rot)
        return (c * a - s * b, s * a + c * b)


@dataclass(frozen=True)
class LabelImage:
    """Per-pixel object id; 0 is ground."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.int32)
        if v.ndim != 2:
            raise SceneError("label image must be 2-D")
        if np.any(v < 0):
            raise SceneError("label ids must be >= 0")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


FAILURE_REASONS = (
    "collision-adjacent",
    "collision-ground",
    "missed-target",
    "width-exceeded",
    "antipodal-fail",
)


@dataclass(frozen=True)
class GraspOutcome:
    success: bool
    reason: str | None = None
    object_id: int | None = None

    def __post_init__(self):
        if self.success != (self.reason is None) or self.success != (self.object_id is not None):
            raise SceneError("success iff reason absent iff object id present")
        if self.reason is not None and self.reason not in FAILURE_REASONS:
            raise SceneError(f"unknown failure reason {self.reason!r}")


@dataclass(frozen=True)
class GripperSpec:
    """Parallel-jaw geometry used by the execution model."""

    max_opening: float = 0.10
    finger_width: float = 0.008   # finger plate extent along the box's h axis
    insertion: float = 0.015      # how far fingers descend below the grasp point
    clearance: float = 0.005      # surfaces closer than this above the grasp plane collide


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

DEFAULT_MIX = {"box": 0.5, "cylinder": 0.3, "sphere": 0.2}

DEFAULT_DIMS = {
    "side_range": (0.025, 0.07),     # box sides, cylinder diameter
    "height_range": (0.018, 0.045),  # box/cylinder heights
    "sphere_diameter_range": (0.025, 0.045),
}

_MAX_RETRIES = 100


def _sample_object(rng, oid, mix, dims_cfg, workspace, prior, max_stack):
    x0, x1, y0, y1 = workspace
    names = sorted(mix)
    probs = np.array([mix[k] for k in names], dtype=float)
    probs = probs / probs.sum()
    cum = np.cumsum(probs)

    for _ in range(_MAX_RETRIES):
        u = rng.random()
        shape = names[int(np.searchsorted(cum, u, side="right").clip(0, len(names) - 1))]
        smin, smax = dims_cfg["side_range"]
        hmin, hmax = dims_cfg["height_range"]
        if shape == "box":
            dims = (rng.uniform(smin, smax), rng.uniform(smin, smax), rng.uniform(hmin, hmax))
        elif shape == "cylinder":
            dims = (rng.uniform(smin, smax) / 2.0, rng.uniform(hmin, hmax))
        else:
            dmin, dmax = dims_cfg["sphere_diameter_range"]
            dims = (rng.uniform(dmin, dmax) / 2.0,)
        yaw = rng.uniform(0.0, math.pi) if shape == "box" else 0.0

        probe = SceneObject(oid, shape, dims, 0.0, 0.0, yaw)
        margin = probe.planar_radius
        if x0 + margin >= x1 - margin or y0 + margin >= y1 - margin:
            continue
        x = rng.uniform(x0 + margin, x1 - margin)
        y = rng.uniform(y0 + margin, y1 - margin)
        obj = replace(probe, x=x, y=y)
        z0 = _settle_height(obj, prior)
        if z0 + obj.height > max_stack:
            continue
        return replace(obj, z0=z0)
    raise GenerationError(f"could not place object {oid} after {_MAX_RETRIES} tries")


def _footprint_samples(obj: SceneObject) -> np.ndarray:
    """Deterministic grid of XY points inside the object's footprint."""
    r = obj.planar_radius
    ax = np.linspace(obj.x - r, obj.x + r, _SUPPORT_GRID)
    ay = np.linspace(obj.y - r, obj.y + r, _SUPPORT_GRID)
    gx, gy = np.meshgrid(ax, ay)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return pts[obj.contains_xy(pts)]


def _settle_height(obj: SceneObject, prior) -> float:
    """Resting height: the highest earlier object supporting >= 25% of the footprint."""
    if not prior:
        return 0.0
    pts = _footprint_samples(obj)
    if pts.shape[0] == 0:
        return 0.0
    best = 0.0
    for other in prior:
        frac = float(other.contains_xy(pts).mean())
        if frac >= SUPPORT_OVERLAP and other.top_z > best:
            best = other.top_z
    return best


def generate_scene(
    seed: int,
    n: int,
    mix: dict | None = None,
    *,
    workspace: tuple = (-0.25, 0.25, -0.25, 0.25),
    ground_height: float = 0.0,
    dims_cfg: dict | None = None,
    max_stack: float = 0.30,
) -> Scene:
    """Drop-and-settle a deterministic pile of ``n`` primitive objects."""
    if n < 1:
        raise GenerationError("need at least one object")
    mix = dict(DEFAULT_MIX if mix is None else mix)
    dims_cfg = dict(DEFAULT_DIMS if dims_cfg is None else dims_cfg)
    rng = np.random.default_rng(seed)
    objects = []
    for i in range(n):
        obj = _sample_object(rng, i + 1, mix, dims_cfg, workspace, objects, max_stack)
        objects.append(obj)
    return Scene(tuple(objects), ground_height=ground_height, workspace=workspace, seed=seed)


def _resettle(objects) -> tuple:
    """Re-derive resting heights in list order (vertical drop only)."""
    settled: list[SceneObject] = []
    for obj in objects:
        z0 = _settle_height(obj, settled)
        settled.append(replace(obj, z0=z0))
    return tuple(settled)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _object_pixel_window(obj, cam, cam_z, rows, cols):
    """Conservative pixel-rect covering the object's projection, or None."""
    k = cam.intrinsics
    if obj.shape == "box":
        hx = (abs(obj.dims[0] * math.cos(obj.yaw)) + abs(obj.dims[1] * math.sin(obj.yaw))) / 2.0
        hy = (abs(obj.dims[0] * math.sin(obj.yaw)) + abs(obj.dims[1] * math.cos(obj.yaw))) / 2.0
    else:
        hx = hy = obj.dims[0]
    t_near = cam_z - obj.top_z
    t_far = cam_z - obj.z0
    if t_near <= 0:
        raise SceneError("camera must stay above every object")
    c, s = math.cos(-cam.view_rot), math.sin(-cam.view_rot)
    us, vs = [], []
    for ex in (obj.x - hx - cam.x, obj.x + hx - cam.x):
        for ey in (obj.y - hy - cam.y, obj.y + hy - cam.y):
            a_w, b_w = c * ex - s * ey, s * ex + c * ey
            for t in (t_near, t_far):
                us.append(k.cx + a_w / t * k.fx)
                vs.append(k.cy + b_w / t * k.fy)
    r0 = max(int(math.floor(min(vs))) - 2, rows.start)
    r1 = min(int(math.ceil(max(vs))) + 3, rows.stop)
    c0 = max(int(math.floor(min(us))) - 2, cols.start)
    c1 = min(int(math.ceil(max(us))) + 3, cols.stop)
    if r0 >= r1 or c0 >= c1:
        return None
    return (r0, r1, c0, c1)


def _ray_dirs(cam, cam_z, r0, r1, c0, c1):
    k = cam.intrinsics
    a = (np.arange(c0, c1, dtype=np.float64) - k.cx) / k.fx
    b = (np.arange(r0, r1, dtype=np.float64) - k.cy) / k.fy
    aa, bb = np.meshgrid(a, b)
    cr, sr = math.cos(cam.view_rot), math.sin(cam.view_rot)
    dx = cr * aa - sr * bb
    dy = sr * aa + cr * bb
    return dx, dy


def _intersect_box(obj, cam, cam_z, dx, dy):
    ox, oy = cam.x - obj.x, cam.y - obj.y
    c, s = math.cos(-obj.yaw), math.sin(-obj.yaw)
    o_lx, o_ly = c * ox - s * oy, s * ox + c * oy
    d_lx, d_ly = c * dx - s * dy, s * dx + c * dy

    t_lo = np.full(dx.shape, cam_z - obj.top_z)
    t_hi = np.full(dx.shape, cam_z - obj.z0)
    hit = np.ones(dx.shape, dtype=bool)
    for o_a, d_a, half in ((o_lx, d_lx, obj.dims[0] / 2.0), (o_ly, d_ly, obj.dims[1] / 2.0)):
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-half - o_a) / d_a
            t2 = (half - o_a) / d_a
        near = np.minimum(t1, t2)
        far = np.maximum(t1, t2)
        parallel = np.abs(d_a) < 1e-15
        inside = np.abs(o_a) <= half
        near = np.where(parallel, -np.inf, near)
        far = np.where(parallel, np.inf, far)
        hit &= ~parallel | inside
        t_lo = np.maximum(t_lo, near)
        t_hi = np.minimum(t_hi, far)
    hit &= t_lo <= t_hi
    hit &= t_lo > 0
    return np.where(hit, t_lo, np.inf)


def _intersect_cylinder(obj, cam, cam_z, dx, dy):
    r, h = obj.dims
    ox, oy = cam.x - obj.x, cam.y - obj.y
    t_top = cam_z - obj.top_z
    t_bot = cam_z - obj.z0

    best = np.full(dx.shape, np.inf)
    for t_cap in (t_top, t_bot):
        px = ox + dx * t_cap
        py = oy + dy * t_cap
        on_cap = (px * px + py * py <= r * r) & (t_cap > 0)
        best = np.where(on_cap, np.minimum(best, t_cap), best)

    a = dx * dx + dy * dy
    b = 2.0 * (ox * dx + oy * dy)
    cc = ox * ox + oy * oy - r * r
    disc = b * b - 4.0 * a * cc
    ok = (disc >= 0) & (a > 1e-18)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        for sign in (-1.0, 1.0):
            t = (-b + sign * sq) / (2.0 * a)
            z_ok = (t >= t_top) & (t <= t_bot) & (t > 0)
            best = np.where(ok & z_ok, np.minimum(best, t), best)
    return best


def _intersect_sphere(obj, cam, cam_z, dx, dy):
    r = obj.dims[0]
    zc = obj.z0 + r
    ox, oy, oz = cam.x - obj.x, cam.y - obj.y, cam_z - zc
    a = dx * dx + dy * dy + 1.0
    b = 2.0 * (ox * dx + oy * dy - oz)
    c = ox * ox + oy * oy + oz * oz - r * r
    disc = b * b - 4.0 * a * c
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t = (-b - sq) / (2.0 * a)
    return np.where(ok & (t > 0), t, np.inf)


_INTERSECT = {"box": _intersect_box, "cylinder": _intersect_cylinder, "sphere": _intersect_sphere}


def render_scene(
    scene: Scene,
    cam: VirtualCamera,
    crop: bool = False,
    *,
    noise_sigma: float = 0.0,
    noise_rng: np.random.Generator | None = None,
) -> tuple[DepthImage, LabelImage]:
    """Ray-cast depth and instance labels in one pass.

    Depth is the z-distance to the nearest surface along each pixel's
    ray; pixels hitting nothing read the ground plane.  Gaussian depth
    noise (meters) is added when ``noise_sigma > 0`` and a generator is
    supplied; labels are never noisy.
    """
    cam_z = cam.z(scene.ground_height)
    if scene.objects and cam_z <= scene.max_top():
        raise SceneError("camera must stay above every object")
    if crop:
        r_off, c_off = cam.crop_origin()
        rows = range(r_off, r_off + cam.crop_size)
        cols = range(c_off, c_off + cam.crop_size)
    else:
        rows = range(0, cam.full_height)
        cols = range(0, cam.full_width)

    h, w = len(rows), len(cols)
    depth = np.full((h, w), cam.height, dtype=np.float64)
    labels = np.zeros((h, w), dtype=np.int32)

    for obj in scene.objects:
        win = _object_pixel_window(obj, cam, cam_z, rows, cols)
        if win is None:
            continue
        r0, r1, c0, c1 = win
        dx, dy = _ray_dirs(cam, cam_z, r0, r1, c0, c1)
        t = _INTERSECT[obj.shape](obj, cam, cam_z, dx, dy)
        sl = (slice(r0 - rows.start, r1 - rows.start), slice(c0 - cols.start, c1 - cols.start))
        closer = t < depth[sl]
        depth[sl][closer] = t[closer]
        labels[sl][closer] = obj.id

    depth = depth.astype(np.float32)
    if noise_sigma > 0.0 and noise_rng is not None:
        depth += noise_rng.standard_normal(depth.shape, dtype=np.float32) * np.float32(noise_sigma)
        np.maximum(depth, np.float32(1e-4), out=depth)
    return DepthImage(depth), LabelImage(labels)


def render_depth(scene, cam, crop=False, **kw) -> DepthImage:
    return render_scene(scene, cam, crop, **kw)[0]


def render_labels(scene, cam, crop=False) -> LabelImage:
    return render_scene(scene, cam, crop)[1]


def topmost_object(scene: Scene, cam: VirtualCamera) -> int:
    """Id at the pixel of global minimum rendered depth (row-major ties)."""
    if not scene.objects:
        raise SceneError("empty scene has no topmost object")
    depth, labels = render_scene(scene, cam)
    flat = int(np.argmin(depth.values))
    r, c = np.unravel_index(flat, depth.values.shape)
    return int(labels.values[r, c])


# ---------------------------------------------------------------------------
# Ground-truth segmentation
# ---------------------------------------------------------------------------

def _majority_id(labels: LabelImage, prompts) -> int:
    ids = []
    for c, r in prompts:
        rr, cc = int(r), int(c)
        if not (0 <= rr < labels.height and 0 <= cc < labels.width):
            raise SceneError(f"prompt ({c}, {r}) outside view")
        ids.append(int(labels.values[rr, cc]))
    counts: dict[int, int] = {}
    for i in ids:
        counts[i] = counts.get(i, 0) + 1
    best = max(counts.values())
    winners = [i for i, n in counts.items() if n == best]
    return winners[0] if len(winners) == 1 else ids[0]


def oracle_segment(labels: LabelImage, prompts) -> "BinaryMask":
    """Exact visible region of the majority-id object at the prompts.

    Prompts are (x, y) pixels.  Ties fall back to the id under the
    first prompt; ground prompts yield an empty mask.
    """
    from .imaging import BinaryMask

    if not len(prompts):
        raise SceneError("need at least one prompt")
    target = _majority_id(labels, prompts)
    if target == 0:
        return BinaryMask(np.zeros(labels.values.shape, dtype=bool))
    return BinaryMask(labels.values == target)


def noisy_segment(labels: LabelImage, prompts, seed: int, corruption: float) -> "BinaryMask":
    """Oracle mask with a deterministic bite eroded from its far boundary.

    ``corruption * area`` pixels are removed starting from the mask
    pixel farthest from the prompt centroid.  A single prompt suffers
    the full corruption; four or more distinct prompts cut it to 20%,
    modelling the stabilizing effect of spread prompts.  Two or three
    prompts behave like one.
    """
    from .imaging import BinaryMask

    if not (0.0 <= corruption <= 1.0):
        raise SceneError("corruption must be in [0, 1]")
    base = oracle_segment(labels, prompts)
    area = base.area()
    if area == 0 or corruption == 0.0:
        return base
    distinct = {(int(c), int(r)) for c, r in prompts}
    eff = corruption * 0.2 if len(distinct) >= 4 else corruption
    n_remove = int(round(eff * area))
    if n_remove == 0:
        return base

    pix = np.argwhere(base.values)  # (row, col)
    centroid_r = float(np.mean([r for _, r in prompts]))
    centroid_c = float(np.mean([c for c, _ in prompts]))
    d2c = (pix[:, 0] - centroid_r) ** 2 + (pix[:, 1] - centroid_c) ** 2
    far = np.flatnonzero(d2c == d2c.max())
    rng = np.random.default_rng(seed)
    anchor = pix[far[int(rng.integers(len(far)))]]

    d2a = (pix[:, 0] - anchor[0]) ** 2 + (pix[:, 1] - anchor[1]) ** 2
    order = np.lexsort((pix[:, 1], pix[:, 0], d2a))
    out = base.values.copy()
    bite = pix[order[:n_remove]]
    out[bite[:, 0], bite[:, 1]] = False
    return BinaryMask(out)


# ---------------------------------------------------------------------------
# Grasp execution
# ---------------------------------------------------------------------------

def _segment_points(p0, p1, step):
    length = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
    n = max(int(math.ceil(length / step)), 1)
    t = np.linspace(0.0, 1.0, n + 1)
    return np.column_stack([p0[0] + (p1[0] - p0[0]) * t, p0[1] + (p1[1] - p0[1]) * t])


def _section_reach(scene, target, center, u, z_low, sign, limit):
    """How far the target blocks finger travel along sign*u from the center."""
    n = int(limit / _SECTION_STEP)
    ts = np.arange(0, n + 1) * _SECTION_STEP
    pts = center[None, :] + (sign * ts)[:, None] * u[None, :]
    tops = target.column_top(pts)
    blocked = tops > z_low
    if not blocked[0]:
        return 0.0
    stop = np.argmin(blocked)  # first False, or 0 if all True
    if blocked.all():
        return float(ts[-1])
    return float(ts[stop - 1]) if stop > 0 else 0.0


def execute_grasp(
    scene: Scene,
    g: RobotGrasp,
    target_id: int,
    gripper: GripperSpec = GripperSpec(),
) -> tuple[GraspOutcome, Scene]:
    """Desk-scale grasp execution against analytic scene geometry.

    The grasp is interpreted in the world frame (robot base == world).
    Success requires, in order: the center column hits the target;
    neither finger sweep meets a surface more than ``clearance`` above
    the grasp height (ground included); the target's cross-section
    along the grasp axis fits the commanded opening; both fingers
    contact the target across the center.  On success the object is
    removed and the pile resettles by vertical drop.
    """
    vals = (g.x_r, g.y_r, g.z_r, g.w_r, g.theta_r)
    if not all(math.isfinite(v) for v in vals) or g.w_r < 0:
        raise MalformedGraspError(f"non-finite or negative grasp parameters: {vals}")
    w_r = min(g.w_r, gripper.max_opening)
    center = np.array([g.x_r, g.y_r])
    z_g = g.z_r
    u = np.array([math.cos(g.theta_r), math.sin(g.theta_r)])
    v = np.array([-math.sin(g.theta_r), math.cos(g.theta_r)])

    # Rule 1: the center column must belong to the target.
    top, owner = scene.surface_top(center[None, :])
    if int(owner[0]) != target_id:
        return GraspOutcome(False, "missed-target"), scene

    # Rule 2: finger sweeps must be clear above the grasp plane.
    z_block = z_g + gripper.clearance
    if scene.ground_height > z_block:
        return GraspOutcome(False, "collision-ground"), scene
    half_f = gripper.finger_width / 2.0
    for sign in (-1.0, 1.0):
        f = center + sign * (w_r / 2.0) * u
        pts = _segment_points(f - half_f * v, f + half_f * v, _FINGER_STEP)
        tops, owners = scene.surface_top(pts)
        bad = tops > z_block
        if bad.any():
            first = int(np.argmax(bad))
            reason = "collision-ground" if owners[first] == 0 else "collision-adjacent"
            return GraspOutcome(False, reason), scene

    # Rule 3: cross-section along the grasp axis must fit the opening.
    target = scene.object_by_id(target_id)
    z_low = z_g - gripper.insertion
    t_pos = _section_reach(scene, target, center, u, z_low, +1.0, gripper.max_opening)
    t_neg = _section_reach(scene, target, center, u, z_low, -1.0, gripper.max_opening)
    section = t_pos + t_neg
    if section > w_r:
        return GraspOutcome(False, "width-exceeded"), scene

    # Rule 4: both fingers must contact the target across the center.
    if t_pos <= 0.0 or t_neg <= 0.0 or max(t_pos, t_neg) > w_r / 2.0:
        return GraspOutcome(False, "antipodal-fail"), scene

    remaining = tuple(o for o in scene.objects if o.id != target_id)
    new_scene = replace(scene, objects=_resettle(remaining))
    return GraspOutcome(True, None, target_id), new_scene


# ---------------------------------------------------------------------------
# Scene files
# ---------------------------------------------------------------------------

def scene_to_dict(scene: Scene) -> dict:
    return {
        "seed": scene.seed,
        "ground_height": scene.ground_height,
        "workspace": list(scene.workspace),
        "objects": [
            {
                "id": o.id,
                "shape": o.shape,
                "dims": list(o.dims),
                "pose": {"x": o.x, "y": o.y, "yaw": o.yaw, "z": o.z0},
            }
            for o in scene.objects
        ],
    }


def scene_from_dict(d: dict) -> Scene:
    objects = tuple(
        SceneObject(
            id=int(e["id"]),
            shape=e["shape"],
            dims=tuple(e["dims"]),
            x=float(e["pose"]["x"]),
            y=float(e["pose"]["y"]),
            yaw=float(e["pose"]["yaw"]),
            z0=float(e["pose"]["z"]),
        )
        for e in d["objects"]
    )
    return Scene(
        objects,
        ground_height=float(d["ground_height"]),
        workspace=tuple(d["workspace"]),
        seed=int(d["seed"]),
    )


def save_scene(path, scene: Scene) -> None:
    with open(path, "w") as f:
        json.dump(scene_to_dict(scene), f)
        f.write("\n")


def load_scene(path) -> Scene:
    with open(path) as f:
        return scene_from_dict(json.load(f))


def scene_hash(scene: Scene) -> str:
    """Short deterministic digest of the scene state."""
    blob = json.dumps(scene_to_dict(scene), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
