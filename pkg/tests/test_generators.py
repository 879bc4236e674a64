import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarseforge.errors import ArgumentError, NonConfluentError, StructuralError
from coarseforge.generators import NetSpec, PresentationSpec, approximation_graph, cayley_ball, \
    cycle_graph, inverse_word, path_graph, random_tree, star_fixture, star_members
from coarseforge.graph_core import hausdorff, hyperbolicity

from conftest import f2_ball, f2c2_ball, z_ball


def _reduced_words(r):
    """Reduced words over a, A, b, B by direct enumeration."""
    out = [""]
    layer = [""]
    inv = {"a": "A", "A": "a", "b": "B", "B": "b"}
    for _ in range(r):
        layer = [w + c for w in layer for c in "aAbB" if not w or inv[c] != w[-1]]
        out += layer
    return set(out)


@pytest.mark.parametrize("r", [0, 1, 2, 3, 4])
def test_free_ball_vertices(r):
    ball = cayley_ball(PresentationSpec(["a", "b"], [], r))
    assert set(ball.words) == _reduced_words(r)
    assert ball.graph.n == 1 + sum(4 * 3 ** (k - 1) for k in range(1, r + 1))


def test_free_ball_radius_two_has_17_vertices():
    assert f2_ball(2).graph.n == 17


def test_identity_is_zero_and_shortlex_order():
    ball = f2_ball(3)
    assert ball.words[0] == ""
    keys = [ball.spec.shortlex_key(w) for w in ball.words]
    assert keys == sorted(keys)
    assert (ball.graph.dist[0] == [len(w) for w in ball.words]).all()


def test_distance_examples():
    ball = f2_ball(3)
    assert ball.graph.d(ball.vertex("aaa"), ball.vertex("AAA")) == 6


def test_integer_ball_is_a_path():
    g = z_ball(5).graph
    assert g.n == 11 and g.is_tree and int(g.dist.max()) == 10


def test_trivial_group_is_a_point():
    ball = cayley_ball(PresentationSpec(["a"], [("a", ""), ("A", "")], 4))
    assert ball.graph.n == 1


def test_axes_hausdorff():
    ball = f2_ball(4)
    A = [ball.index[w] for w in ball.words if set(w) <= set("aA")]
    B = [ball.index[w] for w in ball.words if set(w) <= set("bB")]
    assert hausdorff(ball.graph, A, B) == 4


def test_non_confluent_rules_rejected():
    # killing a but not A: Aa reduces both to A and to the empty word
    spec = PresentationSpec(["a"], [("a", "")], 3)
    with pytest.raises(NonConfluentError) as err:
        cayley_ball(spec)
    assert err.value.word


def test_free_times_c2():
    ball = f2c2_ball(3)
    g = ball.graph
    t = ball.vertex("t")
    for w in ball.words:
        if "t" not in w and len(w) < 3:
            v = ball.vertex(w)
            assert ball.vertex(w + "t") == ball.vertex("t" + w)
            assert g.d(v, ball.vertex(w + "t")) == 1
    assert g.d(0, t) == 1
    assert hyperbolicity(g, four_point=False).delta_thin == 1


@given(st.text(alphabet="aAbB", max_size=6))
def test_reduce_is_group_multiplication(w):
    spec = PresentationSpec(["a", "b"], [], 6)
    assert spec.reduce(w + inverse_word(w)) == ""
    r = spec.reduce(w)
    assert spec.reduce(r) == r and len(r) <= len(w)


@pytest.mark.parametrize("m,L,n", [(1, 5, 11), (3, 4, 17), (2, 1, 4)])
def test_star_fixture_layout(m, L, n):
    # I_0 plus m further rays, so 1 + (m + 1)·L vertices
    g = star_fixture(m, L)
    assert g.n == n and g.is_tree
    assert star_members(g) == [f"F{j}" for j in range(1, m + 1)] + ["I0"]
    I0 = set(g.subspaces["I0"])
    assert len(I0) == L + 1 and 0 in I0
    for j in range(1, m + 1):
        F = set(g.subspaces[f"F{j}"])
        assert I0 < F and len(F) == 2 * L + 1


def test_star_fixture_rejects_zero():
    with pytest.raises(ArgumentError):
        star_fixture(0, 3)


@pytest.mark.parametrize("seed", range(5))
def test_random_tree(seed):
    g = random_tree(30, seed)
    assert g.is_tree and g.n == 30
    assert random_tree(30, seed).edges == g.edges


def _path_metric(n):
    i = np.arange(n)
    return np.abs(i[:, None] - i[None, :]).astype(float)


def test_approximation_identity_and_point():
    D = _path_metric(10)
    ap = approximation_graph(NetSpec(D, 1, 1))
    assert ap.net == list(range(10)) and ap.graph.n == 10
    assert approximation_graph(NetSpec(D, 20)).graph.n == 1


def test_approximation_bounds():
    D = _path_metric(10)
    ap = approximation_graph(NetSpec(D, 2, 10))
    assert ap.net == [0, 2, 4, 6, 8]
    g = ap.graph
    for x in range(10):
        for y in range(10):
            dO = g.d(ap.omega[x], ap.omega[y])
            assert D[x, y] / (5 * 2) - 5 * 2 <= dO <= D[x, y] + 1


def test_approximation_disconnected():
    D = _path_metric(10)
    with pytest.raises(StructuralError):
        approximation_graph(NetSpec(D, 3, 2))


def test_netspec_validates_metric():
    with pytest.raises(ArgumentError):
        NetSpec(np.array([[0, 5, 1], [5, 0, 1], [1, 1, 0]], float), 1)


def test_cycle_and_path():
    assert cycle_graph(6).d(0, 3) == 3
    assert path_graph(5).d(0, 4) == 4
