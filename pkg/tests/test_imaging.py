import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from pmsgp.imaging import (
    BinaryMask,
    DepthImage,
    EmptyMaskError,
    FormatError,
    ImagingError,
    InvalidSeedError,
    UnfillableImageError,
    clamp_depth_range,
    fill_depth_holes,
    mask_union,
    rasterize_segment,
    read_depth,
    read_mask,
    region_grow,
    sobel_edges,
    write_depth,
    write_mask,
)


def depth(a):
    return DepthImage(np.asarray(a, dtype=np.float32))


def mask(a):
    return BinaryMask(np.asarray(a, dtype=bool))


# ---------------------------------------------------------------------------
# fill_depth_holes
# ---------------------------------------------------------------------------

def test_fill_no_holes_is_identity():
    img = depth(np.full((5, 7), 0.5))
    assert np.array_equal(fill_depth_holes(img).values, img.values)


def test_fill_single_center_hole():
    a = np.full((5, 5), 0.5, dtype=np.float32)
    a[2, 2] = 0.0
    out = fill_depth_holes(depth(a))
    assert out.values[2, 2] == np.float32(0.5)


def test_fill_block_between_plateaus_matches_exhaustive_scan():
    a = np.zeros((5, 5), dtype=np.float32)
    a[:, :2] = 0.4   # left plateau
    a[:, 4:] = 0.7   # right plateau
    a[1:3, 2:4] = 0.0
    a[0, 2:4] = 0.4  # give the top rows values so only a 2x2 block is hollow
    a[3:, 2:4] = 0.7
    a[1:3, 2:4] = 0.0
    out = fill_depth_holes(depth(a))
    ref = oracles.nearest_valid_fill([[float(v) for v in row] for row in a])
    assert np.allclose(out.values, np.asarray(ref, dtype=np.float32))


def test_fill_tie_breaks_toward_smaller_row_then_col():
    # hole equidistant from two sources: (0,1)=0.2 and (2,1)=0.9
    a = np.array([[0.0, 0.2, 0.0],
                  [0.0, 0.0, 0.0],
                  [0.0, 0.9, 0.0]], dtype=np.float32)
    out = fill_depth_holes(depth(a))
    assert out.values[1, 1] == np.float32(0.2)  # smaller row wins
    # (1,0) is equidistant from (0,1) and (2,1) too
    assert out.values[1, 0] == np.float32(0.2)


def test_fill_all_invalid_raises():
    with pytest.raises(UnfillableImageError):
        fill_depth_holes(depth(np.zeros((3, 3))))


@given(arrays(np.float32, (6, 6), elements=st.sampled_from([0.0, 0.25, 0.5, 1.0])))
@settings(max_examples=60, deadline=None)
def test_fill_idempotent_and_complete(a):
    img = depth(a)
    if not img.valid.any():
        return
    once = fill_depth_holes(img)
    assert once.valid.all()
    assert np.array_equal(fill_depth_holes(once).values, once.values)
    assert np.array_equal(once.values[img.valid], img.values[img.valid])


def test_fill_matches_exhaustive_scan_on_seeded_images():
    rng = np.random.default_rng(11)
    for _ in range(20):
        a = rng.uniform(0.2, 1.0, (8, 9)).astype(np.float32)
        a[rng.random((8, 9)) < 0.4] = 0.0
        if not (a > 0).any():
            continue
        out = fill_depth_holes(depth(a))
        ref = oracles.nearest_valid_fill([[float(v) for v in row] for row in a])
        assert np.allclose(out.values, np.asarray(ref, dtype=np.float32))


# ---------------------------------------------------------------------------
# clamp_depth_range
# ---------------------------------------------------------------------------

def test_clamp_inside_unchanged():
    img = depth(np.full((3, 3), 0.5))
    assert np.array_equal(clamp_depth_range(img, 0.1, 1.0).values, img.values)


def test_clamp_below_lower_limit_invalidated():
    img = depth([[0.05, 0.5]])
    out = clamp_depth_range(img, 0.10, 1.0)
    assert out.values[0, 0] == 0.0 and out.values[0, 1] == np.float32(0.5)


def test_clamp_keeps_closed_interval_endpoints():
    img = depth([[0.1, 0.8, 0.0999, 0.8001]])
    out = clamp_depth_range(img, 0.1, 0.8)
    assert out.values[0, 0] == np.float32(0.1)
    assert out.values[0, 1] == np.float32(0.8)
    assert out.values[0, 2] == 0.0
    assert out.values[0, 3] == 0.0


def test_clamp_rejects_bad_range():
    img = depth([[0.5]])
    with pytest.raises(ImagingError):
        clamp_depth_range(img, 0.5, 0.5)
    with pytest.raises(ImagingError):
        clamp_depth_range(img, -0.1, 0.5)


# ---------------------------------------------------------------------------
# sobel_edges
# ---------------------------------------------------------------------------

def test_edges_of_full_mask_are_border():
    m = mask(np.ones((4, 6)))
    got = {tuple(p) for p in sobel_edges(m).pixels}
    want = {(r, c) for r in range(4) for c in range(6)
            if r in (0, 3) or c in (0, 5)}
    assert got == want


def test_edges_single_pixel():
    a = np.zeros((5, 5), dtype=bool)
    a[2, 3] = True
    assert [tuple(p) for p in sobel_edges(mask(a)).pixels] == [(2, 3)]


def test_edges_filled_square_perimeter():
    a = np.zeros((20, 20), dtype=bool)
    a[5:15, 5:15] = True
    got = sobel_edges(mask(a))
    assert len(got) == 36
    ref = oracles.boundary_pixels(a.tolist())
    assert [tuple(p) for p in got.pixels] == ref


def test_edges_empty_mask_raises():
    with pytest.raises(EmptyMaskError):
        sobel_edges(mask(np.zeros((3, 3))))


@given(arrays(np.bool_, (12, 12), elements=st.booleans()))
@settings(max_examples=80, deadline=None)
def test_edge_properties(a):
    if not a.any():
        return
    m = mask(a)
    edge = sobel_edges(m)
    pix = {tuple(p) for p in edge.pixels}
    # edge subset of mask
    assert all(a[r, c] for r, c in pix)
    # removing the edge leaves no pixel 4-adjacent to the exterior
    rest = a.copy()
    for r, c in pix:
        rest[r, c] = False
    assert [tuple(p) for p in edge.pixels] == oracles.boundary_pixels(a.tolist())
    for r, c in np.argwhere(rest):
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            assert 0 <= rr < 12 and 0 <= cc < 12 and a[rr, cc]


# ---------------------------------------------------------------------------
# region_grow
# ---------------------------------------------------------------------------

def test_region_grow_constant_image_fills_everything():
    img = depth(np.full((6, 6), 0.5))
    out = region_grow(img, [(3, 3)], 0.0)
    assert out.values.all()


def test_region_grow_zero_tol_strictly_varying():
    a = np.arange(1, 10, dtype=np.float32).reshape(3, 3) / 10.0
    out = region_grow(depth(a), [(1, 1)], 0.0)
    assert out.area() == 1 and out.values[1, 1]


def test_region_grow_two_plateaus():
    a = np.full((6, 10), 0.40, dtype=np.float32)
    a[:, 5:] = 0.55
    out = region_grow(depth(a), [(2, 1)], 0.05)
    # exactly the first plateau: cross-check against connected labeling
    from scipy import ndimage
    want = np.zeros_like(a, dtype=bool)
    labels, _ = ndimage.label(np.abs(a - 0.40) <= 0.05)
    want = labels == labels[2, 1]
    assert np.array_equal(out.values, want)
    assert out.area() == 30


def test_region_grow_invalid_seed_raises():
    a = np.full((4, 4), 0.5, dtype=np.float32)
    a[1, 1] = 0.0
    with pytest.raises(InvalidSeedError):
        region_grow(depth(a), [(1, 1)], 0.1)
    with pytest.raises(InvalidSeedError):
        region_grow(depth(a), [(9, 9)], 0.1)


@given(
    arrays(np.float32, (8, 8), elements=st.sampled_from([0.3, 0.35, 0.5, 0.8])),
    st.integers(0, 7), st.integers(0, 7),
    st.floats(0, 0.1), st.floats(0, 0.3),
)
@settings(max_examples=60, deadline=None)
def test_region_grow_properties(a, r, c, tol_small, tol_extra):
    img = depth(a)
    small = region_grow(img, [(r, c)], tol_small)
    big = region_grow(img, [(r, c)], tol_small + tol_extra)
    assert small.values[r, c] and big.values[r, c]        # contains the seed
    assert not small.values[~big.values].any()            # monotone in tol


# ---------------------------------------------------------------------------
# mask_union
# ---------------------------------------------------------------------------

def test_union_with_empty_is_identity():
    a = mask(np.eye(4))
    e = mask(np.zeros((4, 4)))
    assert np.array_equal(mask_union(a, e).values, a.values)


def test_union_idempotent_commutative_disjoint_counts():
    rng = np.random.default_rng(0)
    a = mask(rng.random((5, 5)) < 0.3)
    b = mask(rng.random((5, 5)) < 0.3)
    assert np.array_equal(mask_union(a, a).values, a.values)
    assert np.array_equal(mask_union(a, b).values, mask_union(b, a).values)
    d1 = np.zeros((4, 4), dtype=bool)
    d1[0, :3] = True
    d2 = np.zeros((4, 4), dtype=bool)
    d2[2, :4] = True
    assert mask_union(mask(d1), mask(d2)).area() == 7


def test_union_dimension_mismatch():
    with pytest.raises(ImagingError):
        mask_union(mask(np.zeros((3, 3))), mask(np.zeros((4, 3))))


# ---------------------------------------------------------------------------
# rasterize_segment
# ---------------------------------------------------------------------------

def test_rasterize_horizontal_segment():
    pix = rasterize_segment((0.0, 0.0), (4.0, 0.0))
    assert [tuple(p) for p in pix] == [(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]


def test_rasterize_single_point():
    assert [tuple(p) for p in rasterize_segment((2.0, 3.0), (2.0, 3.0))] == [(3, 2)]


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def test_depth_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    img = depth(rng.uniform(0, 2, (7, 5)).astype(np.float32))
    path = tmp_path / "d.pmdi"
    write_depth(path, img)
    back = read_depth(path)
    assert np.array_equal(back.values, img.values)
    raw = path.read_bytes()
    assert raw[:4] == b"PMDI"
    assert int.from_bytes(raw[4:8], "little") == 5      # width
    assert int.from_bytes(raw[8:12], "little") == 7     # height
    assert int.from_bytes(raw[12:16], "little") == 0
    assert len(raw) == 16 + 7 * 5 * 4


def test_mask_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    m = mask(rng.random((6, 9)) < 0.5)
    path = tmp_path / "m.pmbm"
    write_mask(path, m)
    back = read_mask(path)
    assert np.array_equal(back.values, m.values)
    raw = path.read_bytes()
    assert raw[:4] == b"PMBM" and len(raw) == 16 + 6 * 9


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXX" + b[4:],                      # bad magic
    lambda b: b[:-4],                               # truncated payload
    lambda b: b[:12] + b"\x01\x00\x00\x00" + b[16:],  # nonzero reserved
])
def test_depth_format_errors(tmp_path, mutate):
    img = depth(np.full((3, 3), 0.5))
    path = tmp_path / "d.pmdi"
    write_depth(path, img)
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(FormatError):
        read_depth(path)


def test_mask_rejects_non_binary_bytes(tmp_path):
    m = mask(np.ones((2, 2)))
    path = tmp_path / "m.pmbm"
    write_mask(path, m)
    raw = bytearray(path.read_bytes())
    raw[16] = 7
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        read_mask(path)
