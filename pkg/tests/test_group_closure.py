import numpy as np
import pytest

from coarseforge.errors import ArgumentError
from coarseforge.group_closure import Generated, Intersection, coset_family, height_probe, \
    intersection_approx, orbit, prox_closure, proximal_pairs

from conftest import f2_ball, strip_cosets, z_ball
from oracles import projection


def test_f2_coset_count_matches_enumeration():
    ball = f2_ball(3)
    fam = coset_family(ball, ["a"], core_radius=3)
    expect = strip_cosets(ball)
    assert len(fam.cosets) == len(expect) == 27
    assert sorted(c.vertices for c in fam.cosets) == sorted(tuple(c) for c in expect)


def test_default_core_radius_f2():
    fam = coset_family(f2_ball(6), ["a"])
    assert (fam.delta, fam.K, fam.R_used, fam.core_radius) == (0, 0, 2, 3)
    assert len(fam.cosets) == 27


def test_integer_cosets():
    ball = z_ball(5)
    fam = coset_family(ball, ["a"], core_radius=5)
    assert len(fam.cosets) == 1 and len(fam.cosets[0]) == ball.graph.n
    dup = coset_family(ball, ["aa", "aa"], core_radius=5)
    assert len(dup.cosets) == 2


def test_trivial_subgroup_rejected():
    ball = f2_ball(3)
    with pytest.raises(ArgumentError):
        Generated(ball.spec, ["aA"])


def _proximal_oracle(fam):
    D = fam.graph.dist.astype(np.int64).tolist()
    out = []
    for i, Ci in enumerate(fam.cosets):
        for j, Cj in enumerate(fam.cosets):
            if i == j:
                continue
            P = set()
            for x in Cj.vertices:
                P |= set(projection(D, Ci.vertices, x))
            dia = max(D[a][b] for a in P for b in P)
            if dia >= fam.xi_threshold:
                out.append((i, j, dia))
    return out


def test_proximal_pairs_f2_match_oracle():
    fam = coset_family(f2_ball(4), ["a", "b"], core_radius=1)
    assert proximal_pairs(fam) == _proximal_oracle(fam) == []


def test_proximal_pairs_integers_match_oracle():
    fam = coset_family(z_ball(12), ["aa", "aaa"])
    got = proximal_pairs(fam)
    assert got == _proximal_oracle(fam)
    assert len(got) == len(fam.cosets) * (len(fam.cosets) - 1)


def test_single_bridge_projection_is_small():
    ball = f2_ball(5)
    fam = coset_family(ball, ["a"], core_radius=1)
    i = fam.tags.index((0, ""))
    j = fam.tags.index((0, "b"))
    assert fam.geometry().proj_diams(i)[j] == 0
    with pytest.raises(ArgumentError):
        intersection_approx(fam, i, j)
    with pytest.raises(ArgumentError):
        intersection_approx(fam, i, i)


def test_intersection_examples():
    zb = z_ball(30)
    H, J = Generated(zb.spec, ["aa"]), Generated(zb.spec, ["aaa"])
    K = Intersection(H, "", J)
    assert sorted(len(w) for w in K.elements(30)) == sorted(len(w) for w in zb.words if len(w) % 6 == 0)
    fb = f2_ball(5)
    A = Generated(fb.spec, ["a"])
    assert set(orbit(fb, Intersection(A, "", A)).tolist()) == set(orbit(fb, A).tolist())
    assert Intersection(A, "b", A).elements(5) == frozenset([""])


def test_intersection_approx_integers():
    ball = z_ball(30)
    fam = coset_family(ball, ["aa", "aaa"])
    i = fam.tags.index((0, ""))
    j = fam.tags.index((1, ""))
    res = intersection_approx(fam, i, j)
    assert res.conjugator == ""
    assert set(res.coset.vertices) == {ball.index[w] for w in ball.words if len(w) % 6 == 0}
    assert not res.violations and res.projection_haus <= res.bound


def test_closure_f2_axes():
    tr = prox_closure(f2_ball(6), ["a", "b"])
    assert tr.stabilized and tr.stabilized_at == 0
    assert tr.proximal_counts == [0] and tr.added_per_level == []
    assert len(tr.family.cosets) == 54


def test_closure_single_malnormal():
    tr = prox_closure(f2_ball(5), ["a"])
    assert tr.stabilized_at == 0 and len(tr.classes.classes) == len(tr.family.cosets)


def test_closure_integers_merges():
    ball = z_ball(30)
    tr = prox_closure(ball, ["aa", "aaa"])
    assert tr.stabilized and tr.stabilized_at <= 1
    assert len(tr.classes.classes) == 1
    assert integer_scan(ball, tr.family.cosets) <= 1


def integer_scan(ball, cosets):
    """Pairwise Hausdorff distance by direct scan, measured from points one
    step inside the ball so that a truncated neighbour never counts."""
    D = ball.graph.dist
    inner = ball.graph.dist[0] <= ball.radius - 1
    worst = 0
    for c in cosets:
        for e in cosets:
            src = c.arr[inner[c.arr]]
            worst = max(worst, int(D[np.ix_(src, e.arr)].min(axis=1).max()))
    return worst


def test_closure_dedupes_and_validates():
    tr = prox_closure(f2_ball(4), ["a", "a", "aaA"])
    assert len(tr.levels[0]) == 1
    with pytest.raises(ArgumentError):
        prox_closure(f2_ball(4), ["a"], height_cap=0)


def test_height_probe():
    assert height_probe(f2_ball(5), ["a"])["height"] == 1
    assert height_probe(z_ball(10), ["a"])["height"] == 1
    hp = height_probe(z_ball(20), ["aa", "aaa"], xi=3)
    assert hp["height"] == 2 and hp["conjugates"] == 2
    with pytest.raises(ArgumentError):
        height_probe(z_ball(5), ["a"], c_max=0)


def test_trace_json_is_plain():
    import json
    tr = prox_closure(z_ball(12), ["aa", "aaa"])
    json.dumps(tr.to_json())
