import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from khop.dissection import (BoxNode, GroupingSchedule, Shift, beta_for, box_count, build_dissection,
                             dissection_lines, find_leaf, grouping_schedule, level_schedule,
                             portal_offsets, portal_positions, portals_of, shift_coordinate)
from khop.geom_instance import NormalizedInstance


def grid(points, L, k=1):
    return NormalizedInstance.from_grid(points, L, k)


@pytest.mark.parametrize("X,a,L,out", [(14, 3, 16, 1), (0, 0, 16, 0), (5, 11, 16, 0)])
def test_shift_coordinate(X, a, L, out):
    assert shift_coordinate(X, a, L) == out


def test_shift_range_checked():
    with pytest.raises(ValueError):
        Shift(16, 0).check(16)
    with pytest.raises(ValueError):
        build_dissection(grid([[0, 0]], 16), Shift(0, 16))


def test_single_point_root_is_leaf():
    root = build_dissection(grid([[3, 3]], 8), Shift(2, 5))
    assert root.is_leaf and root.points == [0]


def test_two_points_distinct_unit_cells():
    root = build_dissection(grid([[0, 0], [1, 1]], 2), Shift(0, 0))
    # the root square has side 2L, so the points part ways one level further down
    assert root.side == 4 and len(root.children) == 4
    (only,) = [c for c in root.children if c.points]
    assert len(only.children) == 4
    assert sorted(len(c.points) for c in only.children) == [0, 0, 1, 1]
    assert all(c.is_leaf for c in only.children)


def cell_path(root, p):
    """(side, origin) of every box containing point p, top down."""
    out = []
    box = root
    while True:
        out.append((box.side, box.origin))
        nxt = [c for c in box.children if p in c.points]
        if not nxt:
            return out
        box = nxt[0]


def test_wrap_example_separates_points():
    inst = grid([[3, 3], [3, 4]], 16)
    root = build_dissection(inst, Shift(0, 12))
    assert [shift_coordinate(y, 12, 16) for y in (3, 4)] == [15, 0]
    a, b = cell_path(root, 0), cell_path(root, 1)
    # no box of side <= L holds both points
    assert [s for (s, o1), (_, o2) in zip(a, b) if o1 == o2] == [32]


@given(st.integers(1, 5), st.data())
def test_membership_matches_wrapped_cells(logL, data):
    L = 2 ** logL
    pts = data.draw(st.lists(st.tuples(st.integers(0, L - 1), st.integers(0, L - 1)),
                             min_size=2, max_size=6))
    a, b = data.draw(st.integers(0, L - 1)), data.draw(st.integers(0, L - 1))
    root = build_dissection(grid(pts, L), Shift(a, b))
    for s in (2 ** e for e in range(logL + 1)):
        cells = {}
        for box in root.walk():
            if box.side == s:
                for p in box.points:
                    cells[p] = box.origin
        for p in cells:
            for q in cells:
                # a torus cell that wraps past the box edge is cut into its two pieces
                same = all(shift_coordinate(pts[p][i], (a, b)[i], L) // s
                           == shift_coordinate(pts[q][i], (a, b)[i], L) // s
                           and (pts[p][i] + (a, b)[i] >= L) == (pts[q][i] + (a, b)[i] >= L)
                           for i in (0, 1))
                assert (cells[p] == cells[q]) == same


@given(st.integers(0, 5), st.data())
def test_tree_shape(logL, data):
    L = 2 ** logL
    pts = data.draw(st.lists(st.tuples(st.integers(0, L), st.integers(0, L)),
                             min_size=1, max_size=8))
    a, b = data.draw(st.integers(0, L - 1)), data.draw(st.integers(0, L - 1))
    root = build_dissection(grid(pts, L), Shift(a, b))
    assert root.level == 0 and root.side == 2 * L and root.origin == (-a, -b)
    assert root.depth() <= logL + 1
    assert box_count(root) <= 4 * (2 * L) ** 2
    leaves = [bx for bx in root.walk() if bx.is_leaf]
    seen = sorted(p for bx in leaves for p in bx.points)
    assert seen == list(range(len(pts)))
    for bx in root.walk():
        if bx.is_leaf:
            assert bx.side == 1 or len(bx.points) <= 1 or len({tuple(pts[p]) for p in bx.points}) == 1
        else:
            assert sorted(p for c in bx.children for p in c.points) == sorted(bx.points)
            assert all(c.side * 2 == bx.side for c in bx.children)
        ox, oy = bx.origin
        for p in bx.points:
            assert ox <= pts[p][0] < ox + bx.side and oy <= pts[p][1] < oy + bx.side
    for p in range(len(pts)):
        assert p in find_leaf(root, p).points


def test_preorder_indices():
    root = build_dissection(grid([[0, 0], [5, 1], [2, 7]], 8), Shift(1, 3))
    assert [bx.index for bx in root.walk()] == list(range(box_count(root)))


def test_portals_side8_m2():
    box = BoxNode(1, (0, 0), 8, [])
    got = [p.position for p in portals_of(box, 2)]
    assert got == [(0, 0), (4, 0), (8, 0), (8, 4), (8, 8), (4, 8), (0, 8), (0, 4)]
    assert [p.side for p in portals_of(box, 2)][::2] == ["bottom", "right", "top", "left"]


def test_portals_unit_box_corners():
    pos = portal_offsets(1, 1)
    assert sorted(map(tuple, pos.tolist())) == [(0, 0), (0, 1), (1, 0), (1, 1)]


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_portal_spacing(m):
    pos = portal_offsets(8, m)
    gaps = np.hypot(*(np.roll(pos, -1, axis=0) - pos).T)
    assert len(pos) == 4 * m
    assert np.allclose(gaps, 8 / m)
    assert len({tuple(p) for p in pos.tolist()}) == 4 * m


@pytest.mark.parametrize("m", [1, 2, 4])
def test_sibling_walls_and_parent_portals(m):
    parent = BoxNode(0, (0, 0), 8, [])
    left, right = BoxNode(1, (0, 0), 4, []), BoxNode(1, (4, 0), 4, [])
    wall_l = {tuple(p) for p in portal_positions(left, m).tolist() if p[0] == 4}
    wall_r = {tuple(p) for p in portal_positions(right, m).tolist() if p[0] == 4}
    assert wall_l == wall_r
    kids = [BoxNode(1, (x, y), 4, []) for y in (0, 4) for x in (0, 4)]
    child_pos = {tuple(p) for c in kids for p in portal_positions(c, m).tolist()}
    assert {tuple(p) for p in portal_positions(parent, m).tolist()} <= child_pos


def test_level_schedule_example():
    s = level_schedule(8, 2, 1.0, 32)
    assert s.gamma == (0, 4, 8, 16, 32, 64)
    assert s.alpha_in == 4 and s.alpha_out == 5
    assert s.gamma[s.alpha_in] >= 2 * math.sqrt(2) * 8


def test_level_schedule_unit():
    s = level_schedule(1, 1, 1.0, 1)
    assert s.gamma[:4] == (0, 1, 2, 4) and s.alpha_in == 3


def test_level_schedule_fractional_delta():
    s = level_schedule(1, 1, 0.5, 16)
    assert s.gamma[:4] == pytest.approx((0, 1, 1.5, 2.25))


@given(st.integers(0, 6), st.integers(1, 6), st.floats(0.05, 1.0), st.integers(0, 4))
def test_level_schedule_invariants(loge, m, delta, extra):
    l = 2 ** loge
    L = l * 2 ** extra
    s = level_schedule(l, m, delta, L)
    g = np.asarray(s.gamma)
    assert g[0] == 0 and np.all(np.diff(g[1:]) > 0)
    assert g[s.alpha_in] >= 2 * math.sqrt(2) * l
    assert s.alpha_in == 0 or g[s.alpha_in - 1] < 2 * math.sqrt(2) * l
    assert g[s.alpha_out] >= 2 * L


@pytest.mark.parametrize("delta,beta", [(1.0, 1), (0.5, 4), (0.1, 32)])
def test_beta(delta, beta):
    assert beta_for(delta) == beta
    assert grouping_schedule(2, delta, 3).beta == beta


@given(st.floats(0.01, 1.0))
def test_beta_is_smallest(delta):
    beta = beta_for(delta)
    assert (1 + delta) ** beta >= 2 / delta
    assert beta == 1 or (1 + delta) ** (beta - 1) < 2 / delta


@given(st.integers(1, 8), st.integers(1, 6), st.integers(1, 40))
def test_grouping_bands(m, beta, levels):
    g = GroupingSchedule(m, beta, levels)
    covered = []
    for rng, width, count in g.bands:
        covered.extend(rng)
        f = rng.start // beta
        assert width == min(2 ** f, 4 * m)
        assert count == (1 if width >= 4 * m else math.ceil(4 * m / 2 ** f))
    assert covered == list(range(levels))
    for j in range(levels):
        groups = g.groups(j)
        assert [d for grp in groups for d in grp] == list(range(4 * m))
        assert len(groups) == g.group_count(j)
    assert g.variable_count <= 8 * m * beta + levels


def test_grouping_validation():
    with pytest.raises(ValueError):
        grouping_schedule(0, 0.5, 3)
    with pytest.raises(ValueError):
        grouping_schedule(1, 1.5, 3)


def test_dissection_lines_follow_shift():
    lines = dissection_lines(16, Shift(3, 5), min_side=8)
    assert lines == {"x": [5, 13], "y": [3, 11]}
    assert dissection_lines(16, Shift(0, 0), min_side=16) == {"x": [], "y": []}
