import numpy as np
import pytest
from hypothesis import given, strategies as st

from coarseforge.coarse_geometry import subspace
from coarseforge.errors import ArgumentError, UnverifiedFamilyError
from coarseforge.factor_systems import approx_r, build_P, check_factor_system, \
    check_weak_factor_system, equivalence_classes, member_gap, promote, qi_constant, \
    sub_factor_report
from coarseforge.group_closure import coset_family
from coarseforge.generators import path_graph, random_tree, star_fixture, star_members

from conftest import f2_ball, strip_cosets, z_ball
from oracles import hausdorff as haus_oracle, on_geodesic


def star_family(m=3, L=5):
    g = star_fixture(m, L)
    return g, [subspace(g, g.subspaces[k], k) for k in star_members(g)]


def z_orbit(ball, step):
    return [ball.index[w] for w in ball.words if len(w) % step == 0]


def test_star_is_a_factor_system():
    g, fam = star_family()
    ff = check_factor_system(g, fam)
    assert ff.ok and ff.kind == "factor"
    assert ff.constants["B"] == 0 and ff.constants["c"] == 2
    assert ff.items["4_chains"]["longest"] == 2


def test_star_rays_alone_need_large_B():
    # without I0 the pairwise projections F_i -> F_j are the whole I0 ray
    g, fam = star_family()
    ff = check_factor_system(g, fam[:3])
    assert not ff.ok
    assert {f.check for f in ff.failures} >= {"item3_full_projection"}


def test_single_proper_member():
    g = path_graph(8)
    ff = check_factor_system(g, [[2, 3, 4]])
    assert ff.ok and ff.constants["c"] == 1


def test_factor_check_on_f2_cosets():
    ball = f2_ball(5)
    cos = strip_cosets(ball)
    core = [c for c in cos if min(len(ball.words[v]) for v in c) <= 1]
    ff = check_factor_system(ball.graph, core)
    assert ff.ok and ff.constants["B"] == 0


def test_duplicate_members_fail_separation():
    g = path_graph(8)
    ff = check_factor_system(g, [[2, 3, 4], [2, 3, 4]])
    assert not ff.items["5_separated"]["pass"]


def test_qi_constant():
    g = path_graph(6)
    assert qi_constant(g, subspace(g, [0, 1, 2]))[0] == 1.0
    assert qi_constant(g, subspace(g, [0, 2]))[0] == float("inf")


def test_star_weak_check_names_I0():
    g, fam = star_family()
    ff = check_weak_factor_system(g, fam, theta_max=3)
    assert not ff.ok
    fails = ff.items["3_anchored_geodesics"]["failures"]
    assert [f["name"] for f in fails] == ["I0"]
    assert fails[0]["v"] == 0 and fails[0]["theta"] == 1


def test_weak_check_f2_cosets_passes_with_zero_Dprime():
    ball = f2_ball(5)
    core = [c for c in strip_cosets(ball) if min(len(ball.words[v]) for v in c) <= 1]
    ff = check_weak_factor_system(ball.graph, core, theta_max=4)
    assert ff.ok and ff.kind == "geodesic-weak" and ff.constants["Dprime"] == 0


def test_weak_check_whole_host():
    ball = f2_ball(4)
    ff = check_weak_factor_system(ball.graph, [range(ball.graph.n)], theta_max=4)
    assert ff.ok


def test_member_gap():
    ball = z_ball(6)
    g = ball.graph
    assert member_gap(g, subspace(g, range(g.n))) == 1
    assert member_gap(g, subspace(g, z_orbit(ball, 2))) == 2


# ---------------------------------------------------------------- approx_r

def _approx_oracle(g, Q, r):
    D = g.dist
    out = set(Q)
    for p in Q:
        for q in Q:
            if D[p, q] <= r:
                out |= {v for v in range(g.n) if on_geodesic(D, p, q, v)}
    return sorted(out)


def test_approx_examples():
    g = path_graph(5)
    assert approx_r(g, [0, 4], 0).tolist() == [0, 4]
    assert approx_r(g, [0, 4], 4).tolist() == [0, 1, 2, 3, 4]
    ball = f2_ball(4)
    A = [v for v, w in enumerate(ball.words) if set(w) <= set("aA") and len(w) <= 2]
    B = [v for v, w in enumerate(ball.words) if set(w) <= set("bB") and len(w) <= 2 and w]
    Q = sorted(A + [ball.vertex("bb"), ball.vertex("BB")])
    out = approx_r(ball.graph, Q, 4).tolist()
    assert set(B) <= set(out) and out == _approx_oracle(ball.graph, Q, 4)


@given(st.integers(0, 5), st.sets(st.integers(0, 29), min_size=1, max_size=6), st.integers(0, 6))
def test_approx_properties(seed, Q, r):
    g = random_tree(30, seed)
    Q = sorted(Q)
    a = approx_r(g, Q, r)
    assert a.tolist() == _approx_oracle(g, Q, r)
    assert set(Q) <= set(a.tolist())
    assert set(a.tolist()) <= set(approx_r(g, Q, r + 1).tolist())
    # geodesics in a tree are unique, so with r >= diam the hull is reached in one step
    big = int(g.dist.max())
    hull = approx_r(g, Q, big)
    assert approx_r(g, hull, big).tolist() == hull.tolist()


def test_approx_empty():
    with pytest.raises(ArgumentError):
        approx_r(path_graph(3), [], 1)


# ------------------------------------------------------ classes, P, promote

def test_classes_examples():
    g = path_graph(30)
    far = equivalence_classes(g, [[0, 1], [14, 15], [28, 29]], 2)
    assert far.classes == [[0], [1], [2]]
    same = equivalence_classes(g, [[3, 4], [3, 4]], 0)
    assert same.classes == [[0, 1]] and same.max_intra_haus == 0
    ball = z_ball(30)
    D = ball.graph.dist.astype(np.int64)
    A2, A3 = z_orbit(ball, 2), z_orbit(ball, 3)
    assert haus_oracle(D, A2, A3) <= 1
    ec = equivalence_classes(ball.graph, [A2, A3], 1)
    assert ec.classes == [[0, 1]]
    with pytest.raises(ArgumentError):
        equivalence_classes(g, [[1]], -1)


def test_order_and_nested_P():
    g, fam = star_family()
    ec = equivalence_classes(g, fam, 0)
    assert len(ec.classes) == 4
    I0 = ec.class_of[3]
    for k in range(3):
        assert ec.order[I0, ec.class_of[k]]
        assert not ec.order[ec.class_of[k], I0]
    PI = build_P(g, fam, ec, I0, 0)
    assert PI.vset == fam[3].vset
    for k in range(3):
        assert PI.vset <= build_P(g, fam, ec, ec.class_of[k], 0).vset


def z_cosets():
    return coset_family(z_ball(30), ["aa", "aaa"]).cosets


def test_build_P_merged_axis():
    ball = z_ball(30)
    fam = z_cosets()
    assert len(fam) == 5
    ec = equivalence_classes(ball.graph, fam, 1)
    assert len(ec.classes) == 1
    P = build_P(ball.graph, fam, ec, 0, 1)
    assert P.vset == frozenset(range(ball.graph.n))


def test_promote_f2_cosets():
    ball = f2_ball(5)
    core = [c for c in strip_cosets(ball) if min(len(ball.words[v]) for v in c) <= 1]
    weak = check_weak_factor_system(ball.graph, core, theta_max=4)
    ff = promote(ball.graph, weak)
    assert ff.ok and ff.kind == "factor" and len(ff.members) == len(core)
    assert ff.constants["c"] == 1


def test_promote_merges_integer_orbits():
    ball = z_ball(30)
    weak = check_weak_factor_system(ball.graph, z_cosets(), theta_max=4)
    assert weak.ok
    ff = promote(ball.graph, weak)
    assert ff.ok and len(ff.members) == 1 and len(ff.members[0]) == 61


def test_promote_star_singletons():
    g, fam = star_family()
    strict = check_factor_system(g, fam)
    # a slack of D' = 3 hides the missing geodesics through the centre up to θ = 3
    weak = check_weak_factor_system(g, fam, theta_max=3, Dprime=3)
    assert weak.ok
    ff = promote(g, weak)
    assert ff.ok and ff.constants["c"] == strict.constants["c"]
    assert [P.vset for P in ff.members] == [W.vset for W in fam]


def test_star_counterexample_beyond_slack():
    g, fam = star_family(3, 6)
    ff = check_weak_factor_system(g, fam, theta_max=5, Dprime=3)
    fails = ff.items["3_anchored_geodesics"]["failures"]
    assert [(f["name"], f["v"], f["theta"]) for f in fails] == [("I0", 0, 4)]


def test_promote_rejects_unverified():
    g, fam = star_family()
    with pytest.raises(UnverifiedFamilyError):
        promote(g, check_weak_factor_system(g, fam, theta_max=3))


def test_sub_factor_report_star():
    g, fam = star_family()
    ff = check_factor_system(g, fam)
    rep = sub_factor_report(ff)
    assert [r["size"] for r in rep] == [1, 1, 1, 0]
    assert all(r["pass"] for r in rep)


def test_empty_family():
    g = path_graph(4)
    ff = check_factor_system(g, [])
    assert ff.ok and ff.constants["c"] == 0
