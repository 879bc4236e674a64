"""Hierarchically hyperbolic structure of a factor family and measured
checks of its axioms.

The index set is the family plus the host (the last index).  Every CU is
the induced member graph coned off by the members strictly inside it;
for the host, the full cone-off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coarse_geometry import Violation
from .coning import ConedGraph, piece_constants
from .deelect_algo import good_quasigeodesic
from .errors import ArgumentError, UnverifiedFamilyError
from .factor_systems import FactorFamily, FamilyGeometry, boundary_room, family_gauge, host_delta
from .graph_core import MetricGraph, hyperbolicity, walk
from .rng import XorShift64Star

BIG = 1 << 28
LAMBDA_GRID = (1, 2, 4, 8)
THETA_GRID = (1, 2, 3, 4, 6, 8)


class HhsStructure:
    def __init__(self, host: MetricGraph, family: FactorFamily):
        self.host = host
        self.family = family
        self.members = list(family.members)
        m = len(self.members)
        self.top = m
        self.names = [W.name for W in self.members] + ["host"]
        self.fg = FamilyGeometry(host, self.members) if m else None
        nest = np.zeros((m + 1, m + 1), dtype=bool)
        if m:
            nest[:m, :m] = self.fg.sub
        nest[:, m] = True
        self.nested = nest                      # nested[u, w]: U inside W
        self.coned = []
        self.loc = []                           # per index: local -> global ids
        self.pos = []                           # per index: global -> local id or -1
        for u in range(m + 1):
            inner = [j for j in range(m) if j != u and nest[j, u] and not nest[u, j]]
            if u == m:
                g, loc = host, np.arange(host.n)
            else:
                g, loc = host.induced(self.members[u].vertices)
                loc = np.asarray(loc, dtype=np.int64)
            pos = np.full(host.n, -1, dtype=np.int64)
            pos[loc] = np.arange(len(loc))
            fam = [pos[self.members[j].arr] for j in inner]
            self.coned.append(ConedGraph(g, fam, self.names[u]))
            self.coned[-1].labels = inner
            self.loc.append(loc)
            self.pos.append(pos)
        self._pi = {}

    @property
    def size(self) -> int:
        return len(self.coned)

    def strictly_nested(self, u: int, w: int) -> bool:
        return bool(self.nested[u, w] and not self.nested[w, u])

    def transverse(self, u: int, w: int) -> bool:
        return u != w and not self.nested[u, w] and not self.nested[w, u]

    def pi_mask(self, u: int) -> np.ndarray:
        """(n, |U|) mask of π_U(x) in local ids."""
        if u not in self._pi:
            if u == self.top:
                self._pi[u] = np.eye(self.host.n, dtype=bool)
            else:
                sub = self.host.dist[:, self.members[u].arr]
                self._pi[u] = sub == sub.min(axis=1)[:, None]
        return self._pi[u]

    def rho_set(self, w: int, v: int) -> np.ndarray:
        """ρ^W_V as a local mask on V, for V not inside W: p_V(W)."""
        if self.nested[v, w]:
            raise ArgumentError("rho set needs V not nested in W")
        if w == self.top:
            raise ArgumentError("the host is nested in nothing")
        src = self.members[w].arr
        return self.pi_mask(v)[src].any(axis=0)

    def order_json(self) -> list:
        return [[int(a), int(b)] for a, b in np.argwhere(self.nested) if a != b]

    def to_json(self) -> dict:
        return {"index": self.names, "nesting": self.order_json(),
                "coned": [{"name": self.names[u], "size": int(len(self.loc[u])),
                           "inner": [int(j) for j in self.coned[u].labels]} for u in range(self.size)]}


def build_hhs(host: MetricGraph, family: FactorFamily) -> HhsStructure:
    if family.kind != "factor":
        raise UnverifiedFamilyError("build_hhs needs a verified factor family")
    s = HhsStructure(host, family)
    chain = s.nested & ~np.eye(s.size, dtype=bool)
    assert chain[:s.top, s.top].all()
    assert not chain[s.top].any()
    return s


@dataclass
class AxiomReport:
    delta_prime: float
    H_kr: float
    kappa0: float
    Theta: float
    E_bgi: float
    lll: dict
    uniqueness: dict
    complexity: int
    lipschitz: dict
    core: dict
    per_index: list = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def constants(self) -> dict:
        return {"delta_prime": self.delta_prime, "H_kr": self.H_kr, "kappa0": self.kappa0,
                "Theta": self.Theta, "E_bgi": self.E_bgi, "lll_lambda": self.lll.get("lambda"),
                "lll_E": self.lll.get("E"), "complexity": self.complexity,
                "lipschitz": self.lipschitz.get("K")}

    def to_json(self) -> dict:
        return {"schema": 1, "constants": dict(sorted(self.constants().items())),
                "lll": self.lll, "uniqueness": self.uniqueness, "lipschitz": self.lipschitz,
                "core": self.core, "per_index": self.per_index,
                "witnesses": {k: self.witnesses[k] for k in sorted(self.witnesses)},
                "violations": [v.to_json() for v in self.violations]}


def _set_dist(D: np.ndarray, A: np.ndarray, B: np.ndarray) -> int:
    if not len(A) or not len(B):
        return BIG
    return int(D[np.ix_(A, B)].min())


def _set_diam(D: np.ndarray, A: np.ndarray) -> int:
    return int(D[np.ix_(A, A)].max()) if len(A) else 0


def _union_diam_matrix(D: np.ndarray, P: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """diam(π x ∪ π y) over pts x pts, for a projection mask P."""
    sub = P[pts]
    counts = sub.sum(axis=1)
    k = int(counts.max())
    cum = np.cumsum(sub, axis=1)
    R = np.empty((len(pts), k), dtype=np.int64)
    for j in range(k):
        target = np.minimum(j, counts - 1) + 1
        R[:, j] = np.argmax(cum == target[:, None], axis=1)
    out = np.zeros((len(pts), len(pts)), dtype=np.int64)
    for i in range(k):
        for j in range(k):
            out = np.maximum(out, D[np.ix_(R[:, i], R[:, j])])
    own = np.array([_set_diam(D, np.flatnonzero(r)) for r in sub]) if k > 1 else np.zeros(len(pts), np.int64)
    return np.maximum(out, np.maximum(own[:, None], own[None, :]))


def core_points(s: HhsStructure, margin: float) -> tuple:
    room = boundary_room(s.host)
    core = np.flatnonzero(room >= margin)
    degenerate = False
    if not len(core):
        core = np.flatnonzero(room == room.max())
        degenerate = True
    return core, degenerate


def _sample_pairs(pts: np.ndarray, budget: int, seed: int) -> list:
    n = len(pts)
    total = n * (n - 1) // 2
    if total <= budget:
        return [(int(pts[i]), int(pts[j])) for i in range(n) for j in range(i + 1, n)]
    rng = XorShift64Star(seed)
    out, seen = [], set()
    while len(out) < budget:
        i, j = rng.below(n), rng.below(n)
        if i == j:
            continue
        key = (min(i, j), max(i, j))
        if key not in seen:
            seen.add(key)
            out.append((int(pts[key[0]]), int(pts[key[1]])))
    return out


def verify_axioms(s: HhsStructure, sample_budget: int = 2000, seed: int = 0,
                  theta_grid: Sequence[int] = THETA_GRID) -> AxiomReport:
    """Measure the HHS constants of the structure and record violations of
    every bound that is explicit."""
    if sample_budget <= 0:
        raise ArgumentError("sample_budget must be positive")
    host = s.host
    D = host.dist
    m = s.top
    fam = s.family
    delta = host_delta(host)
    K = family_gauge(host, s.members) if m else 0
    B = fam.constants.get("B", 0)
    xi_f = fam.constants.get("xi", 8 * delta + 2 * K + 1)
    Delta = math.ceil(piece_constants(delta)["D"] + 4 * delta)
    margin = 4 * delta + 2 * K + Delta
    core, degenerate = core_points(s, margin)
    viol = []
    wit = {}
    Dh = [cu.dist_hat for cu in s.coned]

    # (g) hyperbolicity of every CU and Kapovich-Rafi closeness
    per_index, dps, Hs = [], [], []
    pairs = _sample_pairs(core, sample_budget, seed)
    for u, cu in enumerate(s.coned):
        dp = hyperbolicity(cu.hat, four_point=False, seed=seed).delta_thin
        pos = s.pos[u]
        H, ladder = 0, {}
        local_pairs = pairs if u == m else _sample_pairs(s.members[u].arr, min(sample_budget, 500), seed)
        for x, y in local_pairs:
            a, b = int(pos[x]), int(pos[y])
            g1 = np.asarray(walk(cu.base, a, b), dtype=np.int64)
            g2 = np.asarray(walk(cu.hat, a, b), dtype=np.int64)
            sub = Dh[u][np.ix_(g1, g2)]
            h = int(max(sub.min(axis=1).max(), sub.min(axis=0).max()))
            dd = int(cu.base.dist[a, b])
            ladder[dd] = max(ladder.get(dd, 0), h)
            H = max(H, h)
        per_index.append({"index": s.names[u], "delta_prime": dp, "H": H,
                          "H_ladder": {str(k): ladder[k] for k in sorted(ladder)}})
        dps.append(dp)
        Hs.append(H)
    delta_prime = max(dps)
    H_kr = max(Hs)

    # (a) coarse Lipschitz projections over host edges
    E = np.asarray(host.edges, dtype=np.int64).reshape(-1, 2)
    lipK, proj_diam = 0, 0
    for u in range(m):
        P = s.pi_mask(u)
        Du = Dh[u]
        for x, y in E:
            S = np.flatnonzero(P[x] | P[y])
            lipK = max(lipK, _set_diam(Du, S))
        for x in range(host.n):
            proj_diam = max(proj_diam, _set_diam(Du, np.flatnonzero(P[x])))
    lipschitz = {"K": max(1, lipK), "edge_image_diam": lipK, "point_image_diam": proj_diam}
    for u in range(s.size):
        if u < m and not s.pi_mask(u).any(axis=1).all():
            viol.append(Violation("partial_realization_nonempty", None, None, [u]))

    # bounded projections: diam_F̂ p_F(W) <= Θ unless F inside W
    Theta = 2 * B + xi_f + 2
    theta_meas, theta_wit = 0, None
    for f in range(m):
        for w in range(m):
            if f == w or s.nested[f, w]:
                continue
            S = np.flatnonzero(s.rho_set(w, f))
            d = _set_diam(Dh[f], S)
            if d > theta_meas:
                theta_meas, theta_wit = d, [f, w]
            if d > Theta:
                viol.append(Violation("bounded_projections", Theta, d, [f, w]))
    wit["Theta"] = theta_wit

    # ρ^U_V ⊆ ρ^W_V for U inside W
    for v in range(m):
        for u in range(m):
            for w in range(m):
                if u == w or not s.nested[u, w] or s.nested[u, v] or s.nested[w, v] or v in (u, w):
                    continue
                if (s.rho_set(u, v) & ~s.rho_set(w, v)).any():
                    viol.append(Violation("rho_inclusion", None, None, [u, w, v]))

    # (b) consistency over the core
    kappa, kwit = 0, None
    to_rho = {}
    for v in range(m):
        P = s.pi_mask(v)[core]
        Dv = Dh[v]
        k = P.shape[1]
        dx = np.full((len(core), k), BIG, dtype=np.int64)
        for a in range(k):
            rows = P[:, a]
            dx[rows] = np.minimum(dx[rows], Dv[a][None, :])
        A = np.full((len(core), m), BIG, dtype=np.int64)
        for w in range(m):
            if w == v or s.nested[v, w]:
                continue
            r = s.rho_set(w, v)
            A[:, w] = dx[:, r].min(axis=1)
        to_rho[v] = A
    for v in range(m):
        for w in range(v + 1, m):
            if not s.transverse(v, w):
                continue
            mm = np.minimum(to_rho[v][:, w], to_rho[w][:, v])
            i = int(np.argmax(mm))
            if mm[i] > kappa:
                kappa, kwit = int(mm[i]), ["transverse", v, w, int(core[i])]
    # nested pairs V inside W, W possibly the host
    for v in range(m):
        PV = s.pi_mask(v)
        Dv = Dh[v]
        for w in range(s.size):
            if not s.strictly_nested(v, w):
                continue
            PW = s.pi_mask(w)
            Vw = s.pos[w][s.members[v].arr]
            best, bx = 0, None
            for x in core:
                pw = np.flatnonzero(PW[x])
                t1 = _set_dist(Dh[w], pw, Vw)
                img = PV[x] | PV[s.loc[w][pw]].any(axis=0)
                t2 = _set_diam(Dv, np.flatnonzero(img))
                val = min(t1, t2)
                if val > best:
                    best, bx = val, int(x)
            if best > kappa:
                kappa, kwit = best, ["nested", v, w, bx]
    # ρ^U_W and ρ^V_W close for U inside V
    for u in range(m):
        for v in range(m):
            if u == v or not s.nested[u, v]:
                continue
            for w in range(s.size):
                if w in (u, v):
                    continue
                if s.strictly_nested(v, w):
                    Uw, Vw = s.pos[w][s.members[u].arr], s.pos[w][s.members[v].arr]
                elif w < m and s.transverse(v, w) and not s.nested[u, w]:
                    Uw, Vw = np.flatnonzero(s.rho_set(u, w)), np.flatnonzero(s.rho_set(v, w))
                else:
                    continue
                d = _set_dist(Dh[w], Uw, Vw)
                if d > kappa:
                    kappa, kwit = d, ["rho_pair", u, v, w]
    wit["kappa0"] = kwit

    # (c) bounded geodesic image
    bgi_bound_diam = 8 * delta + K
    bgi_bound_dist = 2 * delta + K + H_kr
    E_bgi, ewit = 0, None
    for w in range(s.size):
        inner = [v for v in range(m) if s.strictly_nested(v, w)]
        if not inner:
            continue
        cu = s.coned[w]
        lp = pairs if w == m else _sample_pairs(s.members[w].arr, min(sample_budget, 500), seed)
        Vloc = {v: s.pos[w][s.members[v].arr] for v in inner}
        dV = {v: Dh[w][:, Vloc[v]].min(axis=1) for v in inner}
        for x, y in lp:
            a, b = int(s.pos[w][x]), int(s.pos[w][y])
            gam = np.asarray(walk(cu.hat, a, b), dtype=np.int64)
            gl = s.loc[w][gam]
            for v in inner:
                img = np.flatnonzero(s.pi_mask(v)[gl].any(axis=0))
                dia = _set_diam(Dh[v], img)
                dist = int(dV[v][gam].min())
                e = min(dia, dist)
                if e > E_bgi:
                    E_bgi, ewit = e, [w, v, x, y]
                if dia > bgi_bound_diam and dist > bgi_bound_dist:
                    viol.append(Violation("bounded_geodesic_image", bgi_bound_dist, dist, [w, v, x, y]))
    wit["E_bgi"] = ewit

    # (d) large links
    lll = _large_links(s, pairs, Dh, sample_budget, seed)
    if lll["lambda"] is None:
        viol.append(Violation("large_links", max(LAMBDA_GRID), lll["lambda_needed"], lll["witness"]))

    # (e) uniqueness
    uniq = _uniqueness(s, core, Dh, theta_grid)
    Ts = [uniq["T"][str(t)] for t in theta_grid]
    if any(b < a for a, b in zip(Ts, Ts[1:])):
        viol.append(Violation("uniqueness_monotone", None, None, Ts))

    # (f) complexity
    strict = s.nested & ~np.eye(s.size, dtype=bool)
    complexity = _longest(strict)
    cbound = fam.constants.get("c", 0) + 1
    if complexity > cbound:
        viol.append(Violation("complexity", cbound, complexity, []))

    core_info = {"margin": margin, "size": int(len(core)), "degenerate": degenerate,
                 "pairs_sampled": len(pairs)}
    return AxiomReport(delta_prime, H_kr, kappa, theta_meas, E_bgi, lll, uniq, complexity, lipschitz,
                       core_info, per_index, wit, viol)


def _longest(rel: np.ndarray) -> int:
    n = len(rel)
    memo = {}

    def depth(u):
        if u not in memo:
            memo[u] = 1 + max((depth(int(v)) for v in np.flatnonzero(rel[u])), default=0)
        return memo[u]

    return max((depth(u) for u in range(n)), default=0)


def _dV(s: HhsStructure, Dh, v: int, x: int, y: int) -> int:
    P = s.pi_mask(v)
    return _set_diam(Dh[v], np.flatnonzero(P[x] | P[y]))


def _large_links(s: HhsStructure, pairs, Dh, budget: int, seed: int) -> dict:
    """T_i are the members carrying components of the good quasi-geodesic
    between π_W(x) and π_W(y) in CW."""
    m = s.top
    E_need, lam_need, worst = 0, 1.0, None
    samples = 0
    for w in range(s.size):
        inner = [v for v in range(m) if s.strictly_nested(v, w)]
        if not inner:
            continue
        cu = s.coned[w]
        lp = pairs if w == m else _sample_pairs(np.arange(s.host.n), min(budget, 500), seed)
        PW = s.pi_mask(w)
        for x, y in lp:
            a = int(np.argmax(PW[x]))
            b = int(np.argmax(PW[y]))
            if a == b:
                continue
            res = good_quasigeodesic(cu, a, b, measure=False)
            cv = res.coned.vertices
            labels = sorted({cu.labels[lab] for k, l0 in enumerate(res.coned.component_labels) if l0 is not None
                             for lab in cu.edge_labels(cv[k], cv[k + 1])})
            samples += 1
            dW = _set_diam(Dh[w], np.flatnonzero(PW[x] | PW[y]))
            for v in inner:
                if any(s.nested[v, t] for t in labels):
                    continue
                E_need = max(E_need, _dV(s, Dh, v, x, y) + 1)
            far = 0
            px = np.flatnonzero(PW[x])
            for t in labels:
                Tw = s.pos[w][s.members[t].arr]
                far = max(far, _set_dist(Dh[w], px, Tw))
            need = max(far / (dW + 1), len(labels) / (dW + 1))
            if need > lam_need:
                lam_need, worst = need, [w, x, y]
    lam = next((l for l in LAMBDA_GRID if l >= lam_need), None)
    return {"lambda": lam, "lambda_needed": lam_need, "E": E_need, "samples": samples, "witness": worst,
            "grid": list(LAMBDA_GRID)}


def _uniqueness(s: HhsStructure, core: np.ndarray, Dh, theta_grid) -> dict:
    D = s.host.dist
    best = np.zeros((len(core), len(core)), dtype=np.int64)
    for u in range(s.size):
        if u == s.top:
            best = np.maximum(best, Dh[u][np.ix_(core, core)])
        else:
            best = np.maximum(best, _union_diam_matrix(Dh[u], s.pi_mask(u), core))
    Dc = D[np.ix_(core, core)].astype(np.int64)
    T = {}
    for t in theta_grid:
        low = best < t
        T[str(t)] = int(Dc[low].max()) + 1 if low.any() else 0
    return {"T": T, "theta_grid": list(theta_grid), "pairs": int(len(core) * len(core))}
