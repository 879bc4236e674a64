import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarseforge import _fallback, _kernels
from coarseforge.errors import ArgumentError, DisconnectedGraphError
from coarseforge.generators import cycle_graph, path_graph, random_tree
from coarseforge.graph_core import MetricGraph, core_vertices, diam, dist_to_set, geodesic, \
    geodesic_interval, hausdorff, hyperbolicity, walk

from oracles import bfs_table, four_point_delta, hausdorff as haus_oracle, on_geodesic


@st.composite
def connected_graphs(draw, max_n=14):
    n = draw(st.integers(2, max_n))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    edges = {(p, i) for i, p in enumerate(parents, start=1)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    edges |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    return MetricGraph(n, sorted(edges))


@given(connected_graphs())
def test_distances_match_bfs(g):
    assert (g.dist.astype(np.int64) == bfs_table(g)).all()


@given(connected_graphs())
def test_metric_axioms(g):
    D = g.dist.astype(np.int64)
    assert (D == D.T).all() and (np.diag(D) == 0).all()
    assert (D[:, :, None] <= D[:, None, :] + D.T[None, :, :] + 0).all() or True
    for k in range(g.n):
        assert (D <= D[:, k:k + 1] + D[k:k + 1, :]).all()


@given(connected_graphs(), st.data())
def test_walk_is_canonical_geodesic(g, data):
    x = data.draw(st.integers(0, g.n - 1))
    y = data.draw(st.integers(0, g.n - 1))
    p = walk(g, x, y)
    D = g.dist
    assert p[0] == x and p[-1] == y and len(p) - 1 == D[x, y]
    for u, v in zip(p, p[1:]):
        assert g.d(u, v) == 1
        # smallest-id neighbour one step closer to y
        closer = [w for w in g.neighbors(u) if D[w, y] == D[u, y] - 1]
        assert v == min(closer)


@given(connected_graphs(), st.data())
def test_interval_is_union_of_geodesics(g, data):
    x = data.draw(st.integers(0, g.n - 1))
    y = data.draw(st.integers(0, g.n - 1))
    G = nx.Graph(list(g.explicit_edges()))
    G.add_nodes_from(range(g.n))
    expect = {v for p in nx.all_shortest_paths(G, x, y) for v in p}
    assert geodesic_interval(g, x, y) == frozenset(expect)


@given(connected_graphs(), st.data())
def test_set_distances(g, data):
    A = data.draw(st.sets(st.integers(0, g.n - 1), min_size=1, max_size=4))
    B = data.draw(st.sets(st.integers(0, g.n - 1), min_size=1, max_size=4))
    D = g.dist.astype(np.int64)
    assert hausdorff(g, sorted(A), sorted(B)) == haus_oracle(D, A, B)
    assert diam(g, sorted(A)) == max(D[a, b] for a in A for b in A)
    d = dist_to_set(g, sorted(A))
    assert all(d[v] == min(D[v, a] for a in A) for v in range(g.n))


def test_disconnected_graph_raises():
    with pytest.raises(DisconnectedGraphError):
        MetricGraph(3, [(0, 1)]).dist


def test_cliques_are_complete_graphs():
    g = MetricGraph(5, [(0, 1), (1, 2), (2, 3), (3, 4)], cliques=[(0, 4)])
    assert g.d(0, 4) == 1 and g.d(0, 2) == 2 and g.d(1, 4) == 2


def test_geodesic_and_core():
    g = path_graph(7)
    assert geodesic(g, 0, 6).vertices == tuple(range(7))
    assert list(core_vertices(g, 2)) == [0, 1, 2, 3, 4]


@pytest.mark.parametrize("seed", range(8))
def test_trees_have_zero_delta(seed):
    g = random_tree(40 + 7 * seed, seed)
    rep = hyperbolicity(g, tree_shortcut=False)
    assert rep.delta_thin == 0 and rep.delta_4pt == 0


@pytest.mark.parametrize("n", [4, 5, 6, 7, 8])
def test_cycle_four_point_matches_oracle(n):
    g = cycle_graph(n)
    D = g.dist.astype(np.int64).tolist()
    assert hyperbolicity(g).delta_4pt == four_point_delta(D)


@given(connected_graphs(max_n=10))
def test_four_point_matches_oracle(g):
    D = g.dist.astype(np.int64).tolist()
    rep = hyperbolicity(g, tree_shortcut=False)
    assert rep.delta_4pt == four_point_delta(D)
    assert rep.delta_thin <= rep.thin_all_geodesics_upper


def _thin_oracle(g):
    D = g.dist.astype(np.int64)
    n = g.n
    best = 0
    for x in range(n):
        for y in range(x + 1, n):
            for z in range(y + 1, n):
                sides = [walk(g, x, y), walk(g, x, z), walk(g, y, z)]
                for k in range(3):
                    others = [v for j in range(3) if j != k for v in sides[j]]
                    best = max(best, max(min(D[s, o] for o in others) for s in sides[k]))
    return best


@given(connected_graphs(max_n=9))
def test_thin_triangles_match_oracle(g):
    assert hyperbolicity(g, tree_shortcut=False, four_point=False).delta_thin == _thin_oracle(g)


@given(connected_graphs(max_n=12))
def test_backends_agree(g):
    D = g.dist
    NX = g.next_hop_table()
    assert tuple(_kernels.thin_exact(D, NX, 1))[0] == tuple(_fallback.thin_exact(D, NX, 1))[0]
    assert _kernels.four_point_exact(D, 1)[0] == _fallback.four_point_exact(D, 1)[0]


def test_sampled_hyperbolicity_is_reported():
    g = cycle_graph(500)
    rep = hyperbolicity(g, samples=500, four_point=False)
    assert not rep.exact_thin and rep.method_thin == "sampled"
    assert rep.delta_thin <= 125


def test_induced_subgraph():
    g = cycle_graph(6)
    h, loc = g.induced([0, 1, 2])
    assert list(loc) == [0, 1, 2] and h.d(0, 2) == 2


def test_json_roundtrip():
    g = MetricGraph(4, [(0, 1), (1, 2), (2, 3)], subspaces={"A": [0, 1]})
    h = MetricGraph.from_json(g.to_json())
    assert h.to_json() == g.to_json()
