import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarseforge.coning import ConedGraph
from coarseforge.deelect_algo import AlgoConstants, good_quasigeodesic, measure_qg
from coarseforge.generators import path_graph
from coarseforge.graph_core import MetricGraph

from conftest import f2_ball, strip_cosets
from test_graph_core import connected_graphs


def _qg_oracle(D, verts, C):
    m = len(verts)
    return max([0.0] + [(j - i) - C * D[verts[i], verts[j]] for i in range(m) for j in range(i + 1, m)])


@given(connected_graphs(max_n=10), st.lists(st.integers(0, 9), min_size=1, max_size=12))
def test_measure_qg_matches_oracle(g, raw):
    verts = [v % g.n for v in raw]
    q = measure_qg(g, verts)
    D = g.dist.astype(np.int64)
    for C, e in zip(q.C_grid, q.eps):
        assert e == _qg_oracle(D, verts, C)
    assert all(a >= b for a, b in zip(q.eps, q.eps[1:]))


def test_measure_qg_examples():
    assert measure_qg(path_graph(5), [0, 1, 2, 3, 4]).best == (1.0, 0.0)
    q = measure_qg(path_graph(3), [0, 1, 0, 1, 2])
    assert q.eps[0] == 2


def test_constants_at_delta_one():
    c = AlgoConstants.from_delta(1, 0)
    assert (c.D, c.Delta, c.ball_radius) == (190, 194, 582)
    assert AlgoConstants.from_delta(0, 0).Delta == 0


def test_trivial_and_empty_family():
    ball = f2_ball(4)
    cg = ConedGraph(ball.graph, [])
    r = good_quasigeodesic(cg, 5, 5)
    assert r.coned.vertices == (5,) and r.tilde.vertices == (5,)
    x, y = ball.vertex("abA"), ball.vertex("BBa")
    r = good_quasigeodesic(cg, x, y)
    assert len(r.tilde.vertices) - 1 == ball.graph.d(x, y)
    assert r.qg_tilde.best == (1.0, 0.0)


def _spur():
    # path 4-5-6-7-8 with a spur 6-0-1-2-3; two members sharing the spur
    g = MetricGraph(9, [(4, 5), (5, 6), (6, 7), (7, 8), (6, 0), (0, 1), (1, 2), (2, 3)])
    return ConedGraph(g, [[4, 5, 6, 0, 1, 2, 3], [3, 2, 1, 0, 6, 7, 8]])


def test_step1_cuts_far_multi_piece_excursion():
    cg = _spur()
    c = AlgoConstants(0, 0, 1, 0, 1, 0, 1, 3)
    r = good_quasigeodesic(cg, 4, 8, constants=c)
    assert r.step1["cuts"] == 1 and r.step1["contained"]
    assert r.tilde.vertices == (4, 5, 6, 7, 8)
    assert r.coned.vertices[0] == 4 and r.coned.vertices[-1] == 8


def test_step1_keeps_component_near_segment():
    cg = _spur()
    c = AlgoConstants(0, 0, 1, 0, 1, 5, 5, 15)
    r = good_quasigeodesic(cg, 4, 8, constants=c)
    assert r.step1["cuts"] == 0


def test_step2_sweep_on_a_path():
    g = path_graph(40)
    cg = ConedGraph(g, [list(range(20)), list(range(10, 40))])
    r = good_quasigeodesic(cg, 0, 39, constants=AlgoConstants(0, 0, 1, 0, 1, 0, 2, 6))
    assert r.step2["t"] == [0, 6, 12, 18, 24, 30, 36]
    assert r.step2["monotone"] and r.step2["iterations"] <= r.step2["iteration_bound"]


def test_step2_splices_backtracking():
    E = [(i, i + 1) for i in range(20)] + [(10, 21), (21, 22), (22, 23), (23, 24), (24, 25)]
    g = MetricGraph(26, E)
    cg = ConedGraph(g, [list(range(10)) + [25], [25] + list(range(11, 21))])
    before = good_quasigeodesic(cg, 0, 20, measure=False, constants=AlgoConstants(0, 0, 1, 0, 1, 10, 1, 30))
    assert 25 in before.tilde.vertices
    r = good_quasigeodesic(cg, 0, 20, constants=AlgoConstants(0, 0, 1, 0, 1, 10, 1, 3))
    assert r.step2["splices"] == 1
    assert 25 not in r.tilde.vertices
    assert len(r.tilde.vertices) < len(before.tilde.vertices)
    t = r.tilde.vertices
    assert t[0] == 0 and t[-1] == 20 and all(g.d(u, v) == 1 for u, v in zip(t, t[1:]))


def test_f2_plateau():
    ball = f2_ball(6)
    cg = ConedGraph(ball.graph, strip_cosets(ball))
    out = []
    for k in (3, 5):
        x, y = ball.vertex("b" * k), ball.vertex("a" + "B" * k)
        r = good_quasigeodesic(cg, x, y)
        assert r.step1["contained"]
        out.append(r.qg_tilde.best)
        assert r.coned.vertices[0] == x and r.tilde.vertices[-1] == y
    assert out[0] == out[1]


@given(st.data())
def test_outputs_are_paths(data):
    ball = f2_ball(4)
    cg = ConedGraph(ball.graph, strip_cosets(ball))
    x = data.draw(st.integers(0, cg.n - 1))
    y = data.draw(st.integers(0, cg.n - 1))
    r = good_quasigeodesic(cg, x, y)
    t, c = r.tilde.vertices, r.coned.vertices
    assert t[0] == c[0] == x and t[-1] == c[-1] == y
    assert all(cg.base.d(u, v) == 1 for u, v in zip(t, t[1:]))
    assert all(cg.dist_hat[u, v] == 1 for u, v in zip(c, c[1:]))
    # tree base, zero constants: the de-electrification is the geodesic
    assert len(t) - 1 == cg.base.d(x, y)
