"""Raster operations consumed by the grasping pipeline.

Depth images are float32 arrays in meters with 0 marking invalid
pixels; binary masks are bool arrays of the same shape.  All functions
are pure and deterministic: ties in nearest-neighbor hole filling break
toward the smaller row, then column, and edge/flood outputs are ordered
row-major.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = [
    "DepthImage",
    "BinaryMask",
    "EdgeSet",
    "ImagingError",
    "UnfillableImageError",
    "EmptyMaskError",
    "InvalidSeedError",
    "FormatError",
    "fill_depth_holes",
    "clamp_depth_range",
    "sobel_edges",
    "region_grow",
    "mask_union",
    "rasterize_segment",
    "write_depth",
    "read_depth",
    "write_mask",
    "read_mask",
]

DEPTH_MAGIC = b"PMDI"
MASK_MAGIC = b"PMBM"
_HEADER = struct.Struct("<4sIII")

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


class ImagingError(ValueError):
    pass


class UnfillableImageError(ImagingError):
    """Depth image contains no valid pixel to fill holes from."""


class EmptyMaskError(ImagingError):
    pass


class InvalidSeedError(ImagingError):
    """Region-growth seed sits on an invalid depth pixel."""


class FormatError(ImagingError):
    """Malformed PMDI/PMBM payload."""


@dataclass(frozen=True)
class DepthImage:
    """Row-major depth raster in meters; 0 encodes an invalid pixel."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float32)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ImagingError(f"depth image must be 2-D and non-empty, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ImagingError("depth values must be finite and >= 0")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid(self) -> np.ndarray:
        return self.values > 0


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel membership raster."""

    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values)
        if v.dtype != np.bool_:
            if not np.isin(v, (0, 1)).all():
                raise ImagingError("mask values must be 0/1")
            v = v.astype(bool)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ImagingError(f"mask must be 2-D and non-empty, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def area(self) -> int:
        return int(self.values.sum())


@dataclass(frozen=True)
class EdgeSet:
    """Mask-boundary pixels as an (N, 2) array of (row, col), row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.pixels, dtype=np.int32)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 1:
            raise ImagingError(f"edge set must be a non-empty (N, 2) array, got {p.shape}")
        object.__setattr__(self, "pixels", p)

    def __len__(self) -> int:
        return self.pixels.shape[0]


# ---------------------------------------------------------------------------
# Depth operations
# ---------------------------------------------------------------------------

def fill_depth_holes(img: DepthImage) -> DepthImage:
    """Replace every invalid pixel with its nearest valid pixel's value.

    Nearest is Euclidean; equidistant sources resolve to the smaller
    row, then column, so the result is defined independently of the
    underlying distance-transform implementation.
    """
    valid = img.valid
    if valid.all():
        return img
    if not valid.any():
        raise UnfillableImageError("no valid pixel to fill from")

    dist = ndimage.distance_transform_edt(~valid)
    out = img.values.copy()
    h, w = out.shape
    holes = np.argwhere(~valid)
    for r, c in holes:
        k = int(round(float(dist[r, c]) ** 2))
        src = _nearest_valid_at_sq_dist(valid, int(r), int(c), k, h, w)
        out[r, c] = img.values[src]
    return DepthImage(out)


def _nearest_valid_at_sq_dist(valid, r, c, k, h, w):
    """Lexicographically smallest valid pixel at squared distance k of (r, c)."""
    radius = math.isqrt(k)
    for dr in range(-radius, radius + 1):
        rr = r + dr
        if rr < 0 or rr >= h:
            continue
        rem = k - dr * dr
        dc = math.isqrt(rem)
        if dc * dc != rem:
            continue
        for cc in ((c - dc, c + dc) if dc else (c,)):
            if 0 <= cc < w and valid[rr, cc]:
                return (rr, cc)
    raise AssertionError("distance transform disagreed with direct scan")


def clamp_depth_range(img: DepthImage, lo: float, hi: float) -> DepthImage:
    """Invalidate pixels outside the closed interval [lo, hi] meters."""
    if not (0 < lo < hi):
        raise ImagingError(f"require 0 < lo < hi, got lo={lo}, hi={hi}")
    out = img.values.copy()
    out[(out < lo) | (out > hi)] = 0.0
    return DepthImage(out)


# ---------------------------------------------------------------------------
# Mask operations
# ---------------------------------------------------------------------------

def sobel_edges(mask: BinaryMask) -> EdgeSet:
    """Boundary of a binary mask, ordered row-major.

    A pixel is boundary iff it is a mask member with at least one
    non-member 4-neighbor, pixels beyond the image counting as
    non-members.  This is the unambiguous reading of a gradient
    operator on a 0/1 raster and is what every downstream consumer
    (prompt construction, angle calibration) assumes.
    """
    m = mask.values
    if not m.any():
        raise EmptyMaskError("cannot extract edges of an empty mask")
    interior = np.zeros_like(m)
    interior[1:-1, 1:-1] = (
        m[1:-1, 1:-1]
        & m[:-2, 1:-1]
        & m[2:, 1:-1]
        & m[1:-1, :-2]
        & m[1:-1, 2:]
    )
    return EdgeSet(np.argwhere(m & ~interior))


def region_grow(img: DepthImage, seeds, tol: float) -> BinaryMask:
    """Depth-gated 4-connected flood fill.

    Each seed grows the connected component of pixels whose depth lies
    within ``tol`` meters of that seed's depth; the result is the union
    over seeds.  Invalid pixels never join.
    """
    if tol < 0:
        raise ImagingError("tolerance must be >= 0")
    seeds = [(int(r), int(c)) for r, c in seeds]
    if not seeds:
        raise ImagingError("need at least one seed")
    d = img.values
    valid = img.valid
    out = np.zeros(d.shape, dtype=bool)
    for r, c in seeds:
        if not (0 <= r < d.shape[0] and 0 <= c < d.shape[1]):
            raise InvalidSeedError(f"seed ({r}, {c}) outside image")
        if not valid[r, c]:
            raise InvalidSeedError(f"seed ({r}, {c}) has invalid depth")
        reachable = valid & (np.abs(d - d[r, c]) <= np.float32(tol))
        labels, _ = ndimage.label(reachable, structure=_CROSS)
        out |= labels == labels[r, c]
    return BinaryMask(out)


def mask_union(a: BinaryMask, b: BinaryMask) -> BinaryMask:
    """Pixelwise OR of two same-shaped masks."""
    if a.values.shape != b.values.shape:
        raise ImagingError(f"mask shapes differ: {a.values.shape} vs {b.values.shape}")
    return BinaryMask(a.values | b.values)


def rasterize_segment(p0, p1) -> np.ndarray:
    """Integer pixels along a sub-pixel segment, as an ordered (N, 2) of (row, col).

    Samples the segment at half-pixel steps and rounds; duplicates keep
    their first occurrence, so the output is ordered from p0 to p1.
    p0/p1 are (x, y) points.
    """
    x0, y0 = float(p0[0]), float(p0[1])
    x1, y1 = float(p1[0]), float(p1[1])
    length = math.hypot(x1 - x0, y1 - y0)
    n = max(int(math.ceil(length / 0.5)), 1)
    t = np.linspace(0.0, 1.0, n + 1)
    cols = np.rint(x0 + (x1 - x0) * t).astype(np.int32)
    rows = np.rint(y0 + (y1 - y0) * t).astype(np.int32)
    pix = np.stack([rows, cols], axis=1)
    _, first = np.unique(pix, axis=0, return_index=True)
    return pix[np.sort(first)]


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def _write_raster(path, magic: bytes, payload: bytes, width: int, height: int) -> None:
    with open(path, "wb") as f:
        f.write(_HEADER.pack(magic, width, height, 0))
        f.write(payload)


def _read_header(data: bytes, magic: bytes, path) -> tuple[int, int]:
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    got, width, height, reserved = _HEADER.unpack_from(data)
    if got != magic:
        raise FormatError(f"{path}: bad magic {got!r}, expected {magic!r}")
    if width == 0 or height == 0:
        raise FormatError(f"{path}: zero dimension {width}x{height}")
    if reserved != 0:
        raise FormatError(f"{path}: reserved field must be 0")
    return width, height


def write_depth(path, img: DepthImage) -> None:
    payload = np.ascontiguousarray(img.values, dtype="<f4").tobytes()
    _write_raster(path, DEPTH_MAGIC, payload, img.width, img.height)


def read_depth(path) -> DepthImage:
    with open(path, "rb") as f:
        data = f.read()
    width, height = _read_header(data, DEPTH_MAGIC, path)
    expected = width * height * 4
    body = data[_HEADER.size:]
    if len(body) != expected:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    values = np.frombuffer(body, dtype="<f4").reshape(height, width)
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise FormatError(f"{path}: depth values must be finite and >= 0")
    return DepthImage(values.copy())


def write_mask(path, mask: BinaryMask) -> None:
    payload = np.ascontiguousarray(mask.values, dtype=np.uint8).tobytes()
    _write_raster(path, MASK_MAGIC, payload, mask.width, mask.height)


def read_mask(path) -> BinaryMask:
    with open(path, "rb") as f:
        data = f.read()
    width, height = _read_header(data, MASK_MAGIC, path)
    expected = width * height
    body = data[_HEADER.size:]
    if len(body) != expected:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    values = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    if not np.isin(values, (0, 1)).all():
        raise FormatError(f"{path}: mask bytes must be 0 or 1")
    return BinaryMask(values.astype(bool))
