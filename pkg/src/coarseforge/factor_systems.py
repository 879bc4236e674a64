"""Factor-system and weak-factor-system checks, Approx_r, Hausdorff classes
and the promotion of a weak family to a factor family."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coarse_geometry import SubspaceRef, Violation, interval_gauge, subspace
from .errors import ArgumentError, UnverifiedFamilyError
from .graph_core import MetricGraph, as_vertex_array, hyperbolicity

BIG = np.iinfo(np.int32).max // 4


def _refs(host: MetricGraph, members) -> list:
    out = []
    for i, m in enumerate(members):
        if isinstance(m, SubspaceRef):
            out.append(m)
        elif isinstance(m, str):
            out.append(subspace(host, host.subspaces[m], m))
        else:
            out.append(subspace(host, m, f"M{i}"))
    return out


def host_delta(host: MetricGraph) -> float:
    d = getattr(host, "_delta_thin", None)
    if d is None:
        d = hyperbolicity(host, four_point=False).delta_thin
        host._delta_thin = d
    return d


class FamilyGeometry:
    """Shared pairwise data for a family: membership, inclusions, Hausdorff
    distances and every projection p_{W_i}(W_j)."""

    def __init__(self, host: MetricGraph, members: Sequence[SubspaceRef]):
        self.host = host
        self.members = list(members)
        m, n = len(self.members), host.n
        D = host.dist
        self.M = np.zeros((m, n), dtype=bool)
        for i, W in enumerate(self.members):
            self.M[i, W.arr] = True
        sizes = self.M.sum(axis=1)
        inter = self.M.astype(np.int32) @ self.M.T.astype(np.int32)
        self.sub = inter == sizes[:, None]           # sub[i, j]: W_i inside W_j
        self.DT = np.empty((m, n), dtype=np.int32)   # distance to each member
        for i, W in enumerate(self.members):
            self.DT[i] = D[:, W.arr].min(axis=1)
        S = np.empty((m, m), dtype=np.int32)         # S[i, j] = sup_{x in W_j} d(x, W_i)
        for j, W in enumerate(self.members):
            S[:, j] = self.DT[:, W.arr].max(axis=1)
        self.S = S
        self.haus = np.maximum(S, S.T)
        self._idx = np.concatenate([W.arr for W in self.members]) if m else np.zeros(0, np.int64)
        self._off = np.cumsum([0] + [len(W) for W in self.members])[:-1]
        self._proj = {}

    def projections(self, i: int) -> np.ndarray:
        """(m, |W_i|) mask: row j is p_{W_i}(W_j) as positions in W_i."""
        if i not in self._proj:
            Y = self.members[i].arr
            sub = self.host.dist[:, Y]
            mask = sub == sub.min(axis=1)[:, None]
            self._proj[i] = np.logical_or.reduceat(mask[self._idx], self._off, axis=0)
        return self._proj[i]

    def proj_diams(self, i: int) -> np.ndarray:
        P = self.projections(i)
        Y = self.members[i].arr
        DYY = self.host.dist[np.ix_(Y, Y)].astype(np.int32)
        out = np.zeros(len(P), dtype=np.int32)
        for a in range(len(Y)):
            rows = P[:, a]
            if rows.any():
                out[rows] = np.maximum(out[rows], np.where(P[rows], DYY[a][None, :], 0).max(axis=1))
        return out

    def proj_haus_to(self, i: int, upos: np.ndarray) -> np.ndarray:
        """Hausdorff distance of each p_{W_i}(W_j) to the subset upos of W_i."""
        P = self.projections(i)
        Y = self.members[i].arr
        DYY = self.host.dist[np.ix_(Y, Y)].astype(np.int32)
        dU = DYY[:, upos].min(axis=1)
        a = np.where(P, dU[None, :], -1).max(axis=1)
        b = np.full(len(P), -1, dtype=np.int32)
        for u in upos:
            b = np.maximum(b, np.where(P, DYY[u][None, :], BIG).min(axis=1))
        return np.maximum(a, b)

    def longest_chain(self, rel: np.ndarray) -> tuple:
        """Longest chain in a strict partial order rel[i, j] (i below j)."""
        m = len(rel)
        order = sorted(range(m), key=lambda k: int(rel[:, k].sum()))
        best, prev = [1] * m, [-1] * m
        changed = True
        while changed:
            changed = False
            for j in order:
                for i in np.flatnonzero(rel[:, j]):
                    if best[i] + 1 > best[j]:
                        best[j], prev[j] = best[i] + 1, int(i)
                        changed = True
        if not m:
            return 0, []
        k = int(np.argmax(best))
        chain = []
        while k >= 0:
            chain.append(k)
            k = prev[k]
        return max(best), chain[::-1]


@dataclass
class FactorFamily:
    host: MetricGraph
    members: list
    constants: dict
    kind: str
    items: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"kind": self.kind, "members": [{"name": W.name, "vertices": list(W.vertices)} for W in self.members],
                "constants": dict(sorted(self.constants.items())),
                "items": {k: self.items[k] for k in sorted(self.items)},
                "failures": [f.to_json() for f in self.failures],
                "extra": _jsonable(self.extra)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(obj[k]) for k in sorted(obj, key=str)}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return obj


def qi_constant(host: MetricGraph, W: SubspaceRef) -> tuple:
    """Smallest K with d_W <= K d + K over member pairs, and the worst pair."""
    if len(W) < 2:
        return 1.0, None
    if not W.connected:
        return float("inf"), None
    g, loc = host.induced(W.vertices)
    DW = g.dist.astype(np.float64)
    D = host.dist[np.ix_(loc, loc)].astype(np.float64)
    ratio = DW / (D + 1)
    k = int(np.argmax(ratio))
    a, b = divmod(k, len(loc))
    return max(1.0, float(ratio.flat[k])), [int(loc[a]), int(loc[b])]


def family_gauge(host: MetricGraph, members) -> int:
    D = host.dist
    K = 0
    for W in members:
        K = max(K, interval_gauge(D, D[:, W.arr].min(axis=1).astype(np.int64), W.arr)[0])
    return K


def default_R(K: float, delta: float) -> float:
    return 2 * K + 8 * delta + 2


def check_factor_system(host: MetricGraph, members, *, xi: Optional[float] = None, B: Optional[float] = None,
                        c: Optional[int] = None, R: Optional[float] = None,
                        delta: Optional[float] = None, geometry: Optional[FamilyGeometry] = None) -> FactorFamily:
    """Items (1)-(5) of a factor system with measured constants.

    Unset constants are reported at their minimal passing values; ξ
    defaults to 8δ+2K+1 with K the quasiconvexity gauge.
    """
    members = _refs(host, members)
    if delta is None:
        delta = host_delta(host)
    Kq = family_gauge(host, members)
    if xi is None:
        xi = 8 * delta + 2 * Kq + 1
    if R is None:
        R = default_R(Kq, delta)
    fg = geometry or FamilyGeometry(host, members)
    m = len(members)
    fails, items = [], {}

    # (1) uniform QI embedding
    Kqi, wit = 1.0, None
    for i, W in enumerate(members):
        k, w = qi_constant(host, W)
        if k > Kqi:
            Kqi, wit = k, [i] + (w or [])
    items["1_qi_embedded"] = {"pass": bool(np.isfinite(Kqi)), "K": Kqi, "witness": wit}
    if not np.isfinite(Kqi):
        fails.append(Violation("item1_qi_embedded", None, "inf", wit))

    # (2) and (3): projections
    distinct = ~np.eye(m, dtype=bool)
    need_B, B_wit = 0, None
    room_B, room_wit = None, None
    large_pairs = 0
    for i in range(m):
        dia = fg.proj_diams(i)
        subs = [np.flatnonzero(np.isin(members[i].arr, members[u].arr)) for u in np.flatnonzero(fg.sub[:, i])]
        best = np.full(m, BIG, dtype=np.int64)
        for upos in subs:
            best = np.minimum(best, fg.proj_haus_to(i, upos))
        large = (dia > xi) & distinct[i]
        large_pairs += int(large.sum())
        if large.any():
            j = int(np.flatnonzero(large)[np.argmax(best[large])])
            if best[j] > need_B:
                need_B, B_wit = int(best[j]), [i, j]
        full = fg.proj_haus_to(i, np.arange(len(members[i])))
        bad = distinct[i] & ~fg.sub[i]
        if bad.any():
            j = int(np.flatnonzero(bad)[np.argmin(full[bad])])
            if room_B is None or full[j] < room_B:
                room_B, room_wit = int(full[j]), [i, j]
    B_used = need_B if B is None else B
    items["2_projections"] = {"pass": B_used >= need_B, "xi": xi, "B_needed": need_B,
                              "witness": B_wit, "large_pairs": large_pairs}
    if B_used < need_B:
        fails.append(Violation("item2_projections", B_used, need_B, B_wit))
    ok3 = room_B is None or room_B > B_used
    items["3_full_projection"] = {"pass": ok3, "B": B_used, "min_haus_noninclusion": room_B,
                                  "witness": room_wit}
    if not ok3:
        fails.append(Violation("item3_full_projection", B_used, room_B, room_wit))

    # (4) inclusion chains
    strict = fg.sub & ~fg.sub.T
    chain_len, chain = fg.longest_chain(strict)
    ok4 = c is None or chain_len <= c
    items["4_chains"] = {"pass": ok4, "c": chain_len if c is None else c, "longest": chain_len, "chain": chain}
    if not ok4:
        fails.append(Violation("item4_chains", c, chain_len, chain))

    # (5) distinct members are far apart
    close = (fg.haus <= R) & distinct & ~(fg.sub & fg.sub.T)
    same = np.triu(fg.sub & fg.sub.T & distinct, 1)
    pairs5 = [[int(a), int(b)] for a, b in np.argwhere(np.triu(close, 1) | same)]
    haus_off = fg.haus[distinct] if m > 1 else np.zeros(0)
    items["5_separated"] = {"pass": not pairs5, "R_used": R,
                            "min_haus_distinct": int(haus_off.min()) if len(haus_off) else None,
                            "pairs": pairs5[:20]}
    for p in pairs5[:20]:
        fails.append(Violation("item5_separated", R, int(fg.haus[p[0], p[1]]), p))

    consts = {"K": Kqi, "K_quasiconvex": Kq, "c": chain_len if c is None else c, "xi": xi, "B": B_used,
              "R_used": R, "delta": delta}
    return FactorFamily(host, members, consts, "factor" if not fails else "unverified", items, fails)


def boundary_room(host: MetricGraph, root: int = 0) -> np.ndarray:
    """Distance from each vertex to the outermost sphere about root."""
    dr = host.dist[root].astype(np.int64)
    far = np.flatnonzero(dr == dr.max())
    return host.dist[:, far].min(axis=1).astype(np.int64)


def member_gap(host: MetricGraph, V: SubspaceRef) -> int:
    """Largest distance from a point of V to the rest of V (1 if connected)."""
    if len(V) < 2:
        return 1
    sub = host.dist[np.ix_(V.arr, V.arr)].astype(np.int64)
    np.fill_diagonal(sub, np.iinfo(np.int64).max)
    return int(sub.min(axis=1).max())


def anchored_reach(host: MetricGraph, V: SubspaceRef, Dprime: float) -> np.ndarray:
    """For each v in V, the largest θ such that some geodesic with endpoints
    a, b in V, both at distance >= θ from v, passes within D' of v."""
    D = host.dist
    Vv = V.arr
    DVV = D[np.ix_(Vv, Vv)].astype(np.int32)
    out = np.zeros(len(Vv), dtype=np.int64)
    for k, v in enumerate(Vv):
        near = np.flatnonzero(D[v] <= Dprime)
        hit = np.zeros((len(Vv), len(Vv)), dtype=bool)
        for w in near:
            dw = D[Vv, w].astype(np.int32)
            hit |= (dw[:, None] + dw[None, :]) == DVV
        dv = DVV[k]
        score = np.where(hit, np.minimum(dv[:, None], dv[None, :]), -1)
        out[k] = max(0, int(score.max()))
    return out


def check_weak_factor_system(host: MetricGraph, members, theta_max: int, *, Dprime: Optional[float] = None,
                             xi: Optional[float] = None, B: Optional[float] = None, c: Optional[int] = None,
                             R: Optional[float] = None, delta: Optional[float] = None, root: int = 0,
                             geometry: Optional[FamilyGeometry] = None) -> FactorFamily:
    """Items (1), (2), (3') of a weak factor system, (3') truncated at
    min(theta_max, room to the boundary) per point."""
    members = _refs(host, members)
    if delta is None:
        delta = host_delta(host)
    Kq = family_gauge(host, members)
    if Dprime is None:
        Dprime = 2 * delta
    if xi is None:
        xi = 8 * delta + 2 * Kq + 1
    if R is None:
        R = default_R(Kq, delta)
    fg = geometry or FamilyGeometry(host, members)
    m = len(members)
    fails, items = [], {}

    # (1) proper coarse inclusion chains at R
    below = fg.S.T <= R          # below[i, j]: W_i inside N_R(W_j)
    proper = below & ~below.T
    chain_len, chain = fg.longest_chain(proper)
    ok1 = c is None or chain_len <= c
    items["1_coarse_chains"] = {"pass": ok1, "longest": chain_len, "chain": chain, "R": R}
    if not ok1:
        fails.append(Violation("item1_coarse_chains", c, chain_len, chain))

    # (2) large projections are near members
    need_B, wit = 0, None
    for i in range(m):
        dia = fg.proj_diams(i)
        large = np.flatnonzero((dia >= xi) & (np.arange(m) != i))
        if not len(large):
            continue
        P = fg.projections(i)
        Y = members[i].arr
        for j in large:
            S = Y[P[j]]
            h = np.maximum(fg.DT[:, S].max(axis=1), np.where(fg.M, host.dist[S].min(axis=0)[None, :], -1).max(axis=1))
            u = int(np.argmin(h))
            if h[u] > need_B:
                need_B, wit = int(h[u]), [i, int(j), u]
    B_used = need_B if B is None else B
    items["2_projections"] = {"pass": B_used >= need_B, "xi": xi, "B_needed": need_B, "witness": wit}
    if B_used < need_B:
        fails.append(Violation("item2_projections", B_used, need_B, wit))

    # (3') long anchored geodesics
    room = boundary_room(host, root)
    checked, failing = 0, []
    for i, V in enumerate(members):
        reach = anchored_reach(host, V, Dprime)
        want = np.minimum(theta_max, np.maximum(0, room[V.arr] - (member_gap(host, V) - 1)))
        checked += int(want.sum())
        bad = np.flatnonzero(reach < want)
        if len(bad):
            k = int(bad[0])
            failing.append({"member": i, "name": V.name, "v": int(V.arr[k]), "theta": int(reach[k]) + 1})
            fails.append(Violation("item3_anchored_geodesics", Dprime, int(reach[k]) + 1,
                                   [i, int(V.arr[k]), int(reach[k]) + 1]))
    items["3_anchored_geodesics"] = {"pass": not failing, "Dprime": Dprime, "theta_max": theta_max,
                                     "points_thetas_checked": checked, "failures": failing,
                                     "note": "truncated: theta up to min(theta_max, room to the boundary less the member gap)"}
    consts = {"K": Kq, "c": chain_len if c is None else c, "xi": xi, "B": B_used, "q": 1,
              "Dprime": Dprime, "R_used": R, "delta": delta}
    return FactorFamily(host, members, consts, "geodesic-weak" if not fails else "unverified", items, fails)


def approx_r(host: MetricGraph, Q, r: float) -> np.ndarray:
    """Q together with every vertex on a geodesic between two points of Q at
    distance <= r."""
    Qv = Q.arr if isinstance(Q, SubspaceRef) else as_vertex_array(Q)
    if not len(Qv):
        raise ArgumentError("approx_r of an empty set")
    D = host.dist
    mask = np.zeros(host.n, dtype=bool)
    mask[Qv] = True
    for p in Qv:
        qs = Qv[(D[p, Qv] <= r) & (Qv > p)]
        if len(qs):
            Dp = D[p].astype(np.int32)
            hit = (Dp[None, :] + D[qs]) == D[p, qs][:, None].astype(np.int32)
            mask |= hit.any(axis=0)
    return np.flatnonzero(mask)


@dataclass
class EquivClasses:
    classes: list
    representatives: list
    R_used: float
    order: np.ndarray
    class_of: list
    max_intra_haus: int = 0
    closure_flag: bool = False

    def to_json(self) -> dict:
        return {"classes": [list(c) for c in self.classes], "representatives": list(self.representatives),
                "R_used": self.R_used, "order": [[int(a), int(b)] for a, b in np.argwhere(self.order)],
                "max_intra_haus": self.max_intra_haus, "closure_flag": self.closure_flag}


def equivalence_classes(host: MetricGraph, members, R: float, geometry: Optional[FamilyGeometry] = None,
                        representatives: Optional[Sequence[int]] = None) -> EquivClasses:
    """Transitive closure of Hausdorff <= R; the order compares every
    member pair at R."""
    if R < 0:
        raise ArgumentError("R must be nonnegative")
    members = _refs(host, members)
    fg = geometry or FamilyGeometry(host, members)
    m = len(members)
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in np.argwhere(np.triu(fg.haus <= R, 1)):
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(i) for i in range(m)})
    cid = {r: k for k, r in enumerate(roots)}
    classes = [[] for _ in roots]
    for i in range(m):
        classes[cid[find(i)]].append(i)
    class_of = [cid[find(i)] for i in range(m)]
    below = fg.S.T <= R
    k = len(classes)
    order = np.zeros((k, k), dtype=bool)
    for a in range(k):
        for b in range(k):
            if a != b:
                order[a, b] = bool(below[np.ix_(classes[a], classes[b])].all())
    intra = max((int(fg.haus[np.ix_(c, c)].max()) for c in classes), default=0)
    reps = []
    for c in classes:
        if representatives is not None:
            reps.append(min(c, key=lambda i: representatives[i]))
        else:
            reps.append(c[0])
    return EquivClasses(classes, reps, R, order, class_of, intra, intra > R)


def build_P(host: MetricGraph, members, classes: EquivClasses, class_id: int, zeta: float) -> SubspaceRef:
    """Approx_zeta of the union of every member whose class lies below class_id."""
    members = _refs(host, members)
    below = [class_id] + [a for a in range(len(classes.classes)) if classes.order[a, class_id]]
    verts = np.unique(np.concatenate([members[i].arr for a in below for i in classes.classes[a]]))
    P = approx_r(host, verts, zeta)
    rep = members[classes.representatives[class_id]]
    return subspace(host, P, f"P[{rep.name}]")


def promote(host: MetricGraph, weak: FactorFamily, *, R: Optional[float] = None,
            representatives: Optional[Sequence[int]] = None, check_sub: bool = True) -> FactorFamily:
    """Hausdorff classes, one P per class, then the factor-system check on
    the P's.  Lemma-level consistency checks are attached to ``extra``."""
    if weak.kind not in ("weak", "geodesic-weak"):
        raise UnverifiedFamilyError("promotion needs a family that passed the weak check")
    members = weak.members
    delta = weak.constants["delta"]
    K = weak.constants["K"]
    Dp = weak.constants["Dprime"]
    if R is None:
        R = weak.constants["R_used"]
    zeta = 2 * delta + Dp + K
    fg = FamilyGeometry(host, members)
    cls = equivalence_classes(host, members, R, fg, representatives)
    Ps = [build_P(host, members, cls, a, zeta) for a in range(len(cls.classes))]
    viol = []
    room = boundary_room(host)
    for a, c in enumerate(cls.classes):
        for i in c:
            # points of P closer to the boundary than the member gap are truncation artefacts
            Pa = Ps[a].arr
            inner = Pa[room[Pa] >= member_gap(host, members[i]) - 1]
            Vi = members[i].arr
            h = int(max(host.dist[np.ix_(inner, Vi)].min(axis=1).max(),
                        host.dist[np.ix_(Vi, Pa)].min(axis=1).max()))
            if h > zeta:
                viol.append(Violation("P_within_zeta", zeta, h, [i, a]))
    ff = check_factor_system(host, Ps, R=R, delta=delta)
    pg = FamilyGeometry(host, Ps)
    k = len(Ps)
    below_P = pg.S.T <= R
    triple = []
    lemma_sc = []
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            t = (bool(below_P[a, b]), bool(cls.order[a, b]), bool(pg.sub[a, b]))
            if len(set(t)) > 1:
                triple.append([a, b, list(t)])
            proj = Ps[a].arr[pg.projections(a)[b]]
            if (host.dist[np.ix_(Ps[a].arr, proj)].min(axis=1).max() <= R) and not cls.order[a, b]:
                lemma_sc.append([a, b])
    for t in triple:
        viol.append(Violation("equivalence_with_preceq", None, None, t))
    for p in lemma_sc:
        viol.append(Violation("some_conditions", R, None, p))
    ff.failures.extend(viol)
    ff.kind = "factor" if not ff.failures else "unverified"
    ff.constants.update({"zeta": zeta, "Dprime": Dp})
    ff.extra = {"classes": cls, "class_names": [members[r].name for r in cls.representatives],
                "triple_equivalence_mismatches": triple, "some_conditions_mismatches": lemma_sc}
    if check_sub:
        ff.extra["sub_factor_systems"] = sub_factor_report(ff)
        for s in ff.extra["sub_factor_systems"]:
            if not s["pass"]:
                ff.failures.append(Violation("sub_factor_system", ff.constants["c"] - 1, s["c"], [s["member"]]))
        ff.kind = "factor" if not ff.failures else "unverified"
    return ff


def _haus(host: MetricGraph, A: np.ndarray, B: np.ndarray) -> int:
    sub = host.dist[np.ix_(A, B)]
    return int(max(sub.min(axis=1).max(), sub.min(axis=0).max()))


def sub_factor_report(ff: FactorFamily) -> list:
    """For each member W, the members strictly inside W as a family of the
    induced graph W, checked recursively one level."""
    out = []
    fg = FamilyGeometry(ff.host, ff.members)
    c = ff.constants["c"]
    for i, W in enumerate(ff.members):
        inner = [j for j in range(len(ff.members)) if j != i and fg.sub[j, i] and not fg.sub[i, j]]
        if not inner or not W.connected:
            out.append({"member": i, "size": len(inner), "pass": True, "c": 0})
            continue
        g, loc = ff.host.induced(W.vertices)
        pos = {int(v): k for k, v in enumerate(loc)}
        fam = [subspace(g, [pos[v] for v in ff.members[j].vertices], ff.members[j].name) for j in inner]
        sub = check_factor_system(g, fam)
        out.append({"member": i, "size": len(inner), "pass": sub.ok and sub.constants["c"] <= c - 1,
                    "c": sub.constants["c"], "failures": [f.to_json() for f in sub.failures]})
    return out
