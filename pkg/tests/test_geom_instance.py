import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import example, given, strategies as st

from khop.geom_instance import (ApproxParams, InstanceFormatError, NormalizedInstance,
                                RawInstance, dump_instance, euclid_dist, generate_instance,
                                grid_side, load_instance, normalize)

FIXTURES = Path(__file__).parent / "fixtures"
coord = st.floats(-1e3, 1e3, allow_nan=False)


def test_load_single_point():
    inst = load_instance("khop 1\n1 1\n0 0\n")
    assert inst.n == 1 and inst.k == 1 and inst.points == ((0.0, 0.0),)


def test_load_collinear():
    inst = load_instance("khop 1\n3 2\n0 0\n1 0\n2 0\n")
    assert inst.k == 2
    assert inst.points == ((0.0, 0.0), (1.0, 0.0), (2.0, 0.0))


@pytest.mark.parametrize("text,line", [
    ("khop 1\n2 x\n0 0\n1 1\n", 2),
    ("kho 1\n1 1\n0 0\n", 1),
    ("khop 1\n2 1\n0 0\n", 4),
    ("khop 1\n2 1\n0 0\n1 a\n", 4),
    ("khop 1\n1 1\n0 0\n3 3\n", 4),
    ("khop 1\n1 0\n0 0\n", 2),
])
def test_load_errors_name_the_line(text, line):
    with pytest.raises(InstanceFormatError) as info:
        load_instance(text)
    assert info.value.lineno == line
    assert f"line {line}" in str(info.value)


@given(st.lists(st.tuples(coord, coord), min_size=1, max_size=12), st.integers(1, 5))
def test_dump_load_round_trip(points, k):
    inst = RawInstance(tuple(points), k)
    assert load_instance(dump_instance(inst)) == inst


def test_raw_instance_validation():
    with pytest.raises(ValueError):
        RawInstance((), 1)
    with pytest.raises(ValueError):
        RawInstance(((0, 0),), 0)
    with pytest.raises(ValueError):
        RawInstance(((0, math.inf),), 1)


def test_approx_params_validation():
    for bad in (dict(eps=0), dict(eps=1.5), dict(shifts=0), dict(m_override=0),
                dict(delta_override=-1.0)):
        with pytest.raises(ValueError):
            ApproxParams(**bad)


@pytest.mark.parametrize("n,eps,L", [(3, 0.5, 32), (1, 1.0, 4), (2, 1.0, 8), (8, 0.5, 64), (5, 0.3, 128)])
def test_grid_side(n, eps, L):
    assert grid_side(n, eps) == L


def test_normalize_triangle():
    inst = normalize(RawInstance(((0, 0), (10, 0), (0, 10)), 2), ApproxParams(eps=0.5))
    assert inst.L == 32
    assert inst.scale == pytest.approx(3.2)
    assert inst.grid_points[1].tolist() == [32, 0]


def test_normalize_single_point():
    inst = normalize(RawInstance(((5, 7),), 1), ApproxParams(eps=1.0))
    assert inst.L == 4
    assert inst.grid_points.tolist() == [[0, 0]]


def test_normalize_two_points():
    inst = normalize(RawInstance(((0, 0), (1, 1)), 1), ApproxParams(eps=1.0))
    assert inst.L == 8 and inst.scale == 8
    assert inst.grid_points.tolist() == [[0, 0], [8, 8]]


def test_normalize_coincident_points_kept():
    inst = normalize(RawInstance(((2, 2), (2, 2), (2, 2)), 1), ApproxParams(eps=0.5))
    assert inst.n == 3
    assert (inst.grid_points == 0).all()


def test_normalize_ties_round_up():
    # 0.5 grid units after scaling must snap to 1
    inst = normalize(RawInstance(((0, 0), (8, 0), (0.25, 0.25)), 1), ApproxParams(eps=1.0))
    assert inst.L == 16 and inst.scale == 2
    assert inst.grid_points[2].tolist() == [1, 1]


@given(st.lists(st.tuples(coord, coord), min_size=2, max_size=10),
       st.sampled_from([0.25, 0.5, 1.0]))
@example([(0.0, 0.0), (0.0, 5e-324)], 0.25)
def test_normalize_invariants(points, eps):
    raw = RawInstance(tuple(points), 1)
    inst = normalize(raw, ApproxParams(eps=eps))
    L = inst.L
    assert L & (L - 1) == 0 and L >= 4 * raw.n / eps
    assert inst.grid_points.min() >= 0 and inst.grid_points.max() <= L
    pts = np.asarray(points)
    if np.ptp(pts, axis=0).max() > 0:
        sp = inst.scaled_points
        cheb = np.abs(sp[:, None, :] - sp[None, :, :]).max()
        assert cheb >= L * (1 - 2 / L) - 1e-9
    # each point moves by at most half a cell per axis
    assert np.abs(inst.grid_points - inst.scaled_points).max() <= 0.5 + 1e-9


@given(st.lists(st.tuples(st.integers(0, 64), st.integers(0, 64)), min_size=2, max_size=8))
def test_normalize_idempotent_up_to_translation(points):
    raw = RawInstance(tuple(points), 1)
    once = normalize(raw, ApproxParams(eps=0.5))
    again = normalize(RawInstance(tuple(map(tuple, once.grid_points.tolist())), 1),
                      ApproxParams(eps=0.5))
    if np.ptp(once.grid_points, axis=0).max() == once.L:
        shifted = once.grid_points - once.grid_points.min(axis=0)
        assert (again.grid_points == shifted).all()


def test_normalized_instance_validation():
    with pytest.raises(ValueError):
        NormalizedInstance.from_grid([[0, 0]], L=6, k=1)
    with pytest.raises(ValueError):
        NormalizedInstance.from_grid([[0, 9]], L=8, k=1)


@pytest.mark.parametrize("p,q,d", [((0, 0), (3, 4), 5.0), ((2, 2), (2, 2), 0.0),
                                   ((0, 0), (1, 1), 1.41421356)])
def test_euclid_dist_examples(p, q, d):
    assert euclid_dist(p, q) == pytest.approx(d, abs=1e-8)


def test_euclid_dist_metric_axioms():
    rng = np.random.default_rng(0)
    for p, q, r in rng.integers(-100, 100, size=(1000, 3, 2)):
        pq, qr, pr = euclid_dist(p, q), euclid_dist(q, r), euclid_dist(p, r)
        assert pq >= 0 and pq == euclid_dist(q, p)
        assert pr <= pq + qr + 1e-9
        assert (pq == 0) == (tuple(p) == tuple(q))


def test_generate_single_point():
    inst = generate_instance(1, 1, 0, "uniform")
    assert inst.n == 1


@pytest.mark.parametrize("kind", ["uniform", "clustered"])
def test_generate_deterministic(kind):
    assert generate_instance(9, 2, 3, kind) == generate_instance(9, 2, 3, kind)
    assert generate_instance(9, 2, 3, kind) != generate_instance(9, 2, 4, kind)


def test_generate_golden_fixture():
    golden = load_instance((FIXTURES / "gen_n8_k2_s7_uniform.khop").read_text())
    assert generate_instance(8, 2, 7, "uniform") == golden


def test_generate_in_unit_square():
    for kind in ("uniform", "clustered"):
        pts = np.asarray(generate_instance(50, 1, 1, kind).points)
        assert pts.min() >= 0 and pts.max() <= 1


def test_generate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        generate_instance(0, 1, 0)
    with pytest.raises(ValueError):
        generate_instance(3, 1, 0, "gaussian")
