import json

import networkx as nx
import numpy as np
import pytest

from coarseforge.errors import ArgumentError, UnverifiedFamilyError
from coarseforge.factor_systems import check_factor_system, check_weak_factor_system, promote
from coarseforge.generators import path_graph
from coarseforge.group_closure import prox_closure
from coarseforge.hhs_verifier import build_hhs, verify_axioms

from conftest import f2_ball
from test_factor_systems import star_family


def test_empty_family():
    g = path_graph(6)
    s = build_hhs(g, check_factor_system(g, []))
    assert s.size == 1 and s.coned[0].base is g and not s.coned[0].family
    rep = verify_axioms(s)
    assert rep.ok and rep.kappa0 == 0 and rep.complexity == 1


def test_star_structure():
    g, fam = star_family(3, 5)
    s = build_hhs(g, check_factor_system(g, fam))
    assert s.size == 3 + 2
    # nesting is vertex-set inclusion plus everything below the top
    for u in range(4):
        for w in range(4):
            assert s.nested[u, w] == (fam[u].vset <= fam[w].vset)
    assert s.nested[:, s.top].all()
    top = s.coned[s.top]
    assert sorted(len(H) for H in top.family) == [6, 11, 11, 11]
    # CU of F_n cones off I0 only
    for k in range(3):
        cu = s.coned[k]
        assert cu.labels == [3]
        G = nx.Graph(list(cu.base.explicit_edges()))
        G.add_edges_from((u, v) for H in cu.family for i, u in enumerate(H.vertices) for v in H.vertices[i + 1:])
        assert nx.diameter(G) == int(cu.dist_hat.max())


def test_star_axioms():
    g, fam = star_family(3, 5)
    rep = verify_axioms(build_hhs(g, check_factor_system(g, fam)))
    assert rep.ok and rep.complexity == 3
    json.dumps(rep.to_json())


def test_rho_sets_star():
    g, fam = star_family(3, 5)
    s = build_hhs(g, check_factor_system(g, fam))
    # rho of F1 on the transverse F2 is the projection of F1 to F2, i.e. I0
    r = s.rho_set(0, 1)
    assert set(fam[1].arr[r].tolist()) == fam[3].vset
    with pytest.raises(ArgumentError):
        s.rho_set(0, 3)


@pytest.fixture(scope="module")
def f2_r5_factor():
    ball = f2_ball(5)
    tr = prox_closure(ball, ["a"])
    weak = check_weak_factor_system(ball.graph, tr.family.cosets, theta_max=4)
    return ball, promote(ball.graph, weak)


def test_f2_axioms(f2_r5_factor):
    ball, ff = f2_r5_factor
    assert ff.ok
    s = build_hhs(ball.graph, ff)
    assert s.size == len(ff.members) + 1
    for u in range(s.top):
        assert not s.coned[u].family
        assert s.coned[u].n == len(ff.members[u])
    rep = verify_axioms(s, sample_budget=500)
    assert rep.ok and rep.complexity == 2
    assert all(np.isfinite(v) for v in (rep.kappa0, rep.Theta, rep.E_bgi, rep.delta_prime))


def test_budget_and_kind_errors(f2_r5_factor):
    ball, ff = f2_r5_factor
    with pytest.raises(ArgumentError):
        verify_axioms(build_hhs(ball.graph, ff), sample_budget=0)
    g, fam = star_family()
    with pytest.raises(UnverifiedFamilyError):
        build_hhs(g, check_weak_factor_system(g, fam, theta_max=3))


def test_report_is_deterministic():
    g, fam = star_family(2, 4)
    s = build_hhs(g, check_factor_system(g, fam))
    a = json.dumps(verify_axioms(s, seed=3).to_json(), sort_keys=True)
    b = json.dumps(verify_axioms(s, seed=3).to_json(), sort_keys=True)
    assert a == b
