"""Closest-point projections, quasiconvexity gauges, coarse inclusion and
measured checks of the projection lemmas.

All projections are exact argmin sets.  ``diam`` is ambient unless a
report says otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ArgumentError
from .graph_core import MetricGraph, as_vertex_array, dist_to_set, interval_mask, walk


@dataclass(frozen=True, eq=False)
class SubspaceRef:
    graph: MetricGraph
    vertices: tuple
    name: str = ""
    connected: bool = True

    @property
    def arr(self) -> np.ndarray:
        a = self.__dict__.get("_arr")
        if a is None:
            a = np.asarray(self.vertices, dtype=np.int64)
            object.__setattr__(self, "_arr", a)
        return a

    @property
    def vset(self) -> frozenset:
        s = self.__dict__.get("_vset")
        if s is None:
            s = frozenset(self.vertices)
            object.__setattr__(self, "_vset", s)
        return s

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, v):
        return v in self.vset

    def issubset(self, other: "SubspaceRef") -> bool:
        return self.vset <= other.vset

    def __repr__(self):
        return f"SubspaceRef({self.name!r}, size={len(self.vertices)})"


def induced_connected(g: MetricGraph, vs) -> bool:
    vs = as_vertex_array(vs)
    if len(vs) <= 1:
        return True
    inside = np.zeros(g.n, dtype=bool)
    inside[vs] = True
    seen = {int(vs[0])}
    stack = [int(vs[0])]
    while stack:
        u = stack.pop()
        for w in g.neighbors(u):
            w = int(w)
            if inside[w] and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(vs)


def subspace(g: MetricGraph, vertices, name: str = "") -> SubspaceRef:
    vs = as_vertex_array(vertices)
    if not len(vs):
        raise ArgumentError(f"subspace {name!r} is empty")
    if vs[0] < 0 or vs[-1] >= g.n:
        raise ArgumentError(f"subspace {name!r} has vertices outside the graph")
    return SubspaceRef(g, tuple(int(v) for v in vs), name, induced_connected(g, vs))


def named_subspace(g: MetricGraph, name: str) -> SubspaceRef:
    return subspace(g, g.subspaces[name], name)


def _verts(Y):
    return Y.arr if isinstance(Y, SubspaceRef) else as_vertex_array(Y)


# ----------------------------------------------------------------------
# projections
# ----------------------------------------------------------------------

@dataclass
class ProjectionResult:
    source: object
    target: str
    image: tuple
    attained_distance: int


class Projector:
    """All closest-point projections onto Y at once."""

    def __init__(self, g: MetricGraph, Y):
        self.g = g
        self.Y = _verts(Y)
        if not len(self.Y):
            raise ArgumentError("projection onto an empty set")
        sub = g.dist[:, self.Y]
        self.dY = sub.min(axis=1).astype(np.int64)
        self.mask = sub == self.dY[:, None].astype(sub.dtype)

    def of(self, x: int) -> np.ndarray:
        return self.Y[self.mask[x]]

    def of_set(self, A) -> np.ndarray:
        A = _verts(A)
        return self.Y[self.mask[A].any(axis=0)]

    def canonical(self, x: int) -> int:
        return int(self.Y[np.argmax(self.mask[x])])

    def reps(self) -> np.ndarray:
        """(n, k) array of projection points; short rows repeat their last entry."""
        counts = self.mask.sum(axis=1)
        k = int(counts.max())
        out = np.empty((len(self.mask), k), dtype=np.int64)
        cum = np.cumsum(self.mask, axis=1)
        for j in range(k):
            # j-th true column per row, repeating the last when exhausted
            target = np.minimum(j, counts - 1) + 1
            col = np.argmax(cum == target[:, None], axis=1)
            out[:, j] = self.Y[col]
        return out


def project(g: MetricGraph, Y, x) -> ProjectionResult:
    P = Projector(g, Y)
    name = Y.name if isinstance(Y, SubspaceRef) else ""
    if np.ndim(x) == 0:
        x = int(x)
        return ProjectionResult(x, name, tuple(int(v) for v in P.of(x)), int(P.dY[x]))
    A = _verts(x)
    return ProjectionResult(tuple(int(a) for a in A), name,
                            tuple(int(v) for v in P.of_set(A)), int(P.dY[A].min()))


def project_set(g: MetricGraph, Y, A) -> np.ndarray:
    return Projector(g, Y).of_set(A)


# ----------------------------------------------------------------------
# gauges
# ----------------------------------------------------------------------

def interval_gauge(D_base: np.ndarray, measure: np.ndarray, Y: np.ndarray, chunk: int = 1 << 21):
    """max over y1, y2 in Y and v on some base geodesic between them of
    measure[v]; returns (value, witness (y1, y2, v)) or (0, None)."""
    Y = np.asarray(Y, dtype=np.int64)
    levels = np.unique(measure[measure > 0])[::-1]
    DYY = D_base[np.ix_(Y, Y)].astype(np.int32)
    for lv in levels:
        cand = np.flatnonzero(measure == lv)
        step = max(1, chunk // max(1, len(Y) * len(Y)))
        for s in range(0, len(cand), step):
            c = cand[s:s + step]
            DYc = D_base[np.ix_(Y, c)].astype(np.int32)       # |Y| x c
            hit = (DYc[:, None, :] + DYc[None, :, :]) == DYY[:, :, None]
            if hit.any():
                i, j, k = np.argwhere(hit)[0]
                return int(lv), (int(Y[i]), int(Y[j]), int(c[k]))
    return 0, None


def quasiconvexity_gauge(g: MetricGraph, Y, with_witness: bool = False):
    Yv = _verts(Y)
    K, w = interval_gauge(g.dist, dist_to_set(g, Yv), Yv)
    return (K, w) if with_witness else K


def coarse_inclusion(g: MetricGraph, A, B, R) -> str:
    """'holds' if A is within R of B, 'proper' if moreover B is not within R of A."""
    Av, Bv = _verts(A), _verts(B)
    if dist_to_set(g, Bv)[Av].max() > R:
        return "neither"
    if dist_to_set(g, Av)[Bv].max() > R:
        return "proper"
    return "holds"


def coarsely_included(g: MetricGraph, A, B, R) -> bool:
    return coarse_inclusion(g, A, B, R) != "neither"


# ----------------------------------------------------------------------
# violation records
# ----------------------------------------------------------------------

@dataclass
class Violation:
    check: str
    bound: float
    measured: float
    witnesses: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"check": self.check, "bound": self.bound, "measured": self.measured,
                "witnesses": list(self.witnesses)}


@dataclass
class MeasuredBound:
    """A measured constant against its contractual bound."""
    check: str
    measured: float
    bound: Optional[float]
    witness: Optional[list] = None
    violations: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"check": self.check, "measured": self.measured, "bound": self.bound,
                "witness": self.witness, "violations": [v.to_json() for v in self.violations],
                "extra": dict(sorted(self.extra.items()))}


# ----------------------------------------------------------------------
# lemma checks
# ----------------------------------------------------------------------

def check_quadrilateral(g: MetricGraph, H, a: int, a2: int, delta: float, K: float,
                        projector: Optional[Projector] = None) -> list:
    """Points of the canonical [b, b'] farther than 4δ+K from both ends must
    lie within 2δ of the geodesic interval of (a, a')."""
    P = projector or Projector(g, H)
    b, b2 = P.canonical(a), P.canonical(a2)
    D = g.dist
    seg = walk(g, b, b2)
    near = np.flatnonzero(interval_mask(g, a, a2))
    out = []
    for s in seg:
        if min(D[s, b], D[s, b2]) <= 4 * delta + K:
            continue
        m = int(D[s, near].min())
        if m > 2 * delta:
            out.append(Violation("quadrilateral", 2 * delta, m, [int(a), int(a2), int(b), int(b2), int(s)]))
    return out


def projection_lipschitz_defect(g: MetricGraph, H, delta: float, K: float, core=None) -> MeasuredBound:
    """max over x, y of max d(p_H x, p_H y) - d(x, y), representatives maximised."""
    P = Projector(g, H)
    D = g.dist
    pts = np.arange(g.n) if core is None else _verts(core)
    R = P.reps()[pts]
    best = np.full((len(pts), len(pts)), -1, dtype=np.int64)
    for i in range(R.shape[1]):
        for j in range(R.shape[1]):
            best = np.maximum(best, D[np.ix_(R[:, i], R[:, j])])
    defect = best - D[np.ix_(pts, pts)]
    k = int(np.argmax(defect))
    x, y = divmod(k, len(pts))
    val = int(defect.flat[k])
    bound = 12 * delta + 2 * K
    rep = MeasuredBound("projection_lipschitz", val, bound, [int(pts[x]), int(pts[y])])
    if val > bound:
        rep.violations.append(Violation("projection_lipschitz", bound, val, [int(pts[x]), int(pts[y])]))
    return rep


def _min_over_projection(P: Projector, values_on_Y: np.ndarray) -> np.ndarray:
    """For each x, min of values over p(x); values indexed like P.Y."""
    big = np.iinfo(np.int64).max
    return np.where(P.mask, values_on_Y[None, :], big).min(axis=1)


def behrstock_first(g: MetricGraph, V, W, delta: float, K: float, core=None) -> MeasuredBound:
    """Measured κ₁.  Hard check: whenever d(p_W x, p_W V) > 8δ+2K, the
    projection p_V(x) meets N_{K+2δ+1}(W)."""
    PV, PW = Projector(g, V), Projector(g, W)
    pVW = PV.of_set(PW.Y)
    pWV = PW.of_set(PV.Y)
    t1 = _min_over_projection(PV, dist_to_set(g, pVW)[PV.Y])
    t2 = _min_over_projection(PW, dist_to_set(g, pWV)[PW.Y])
    pts = np.arange(g.n) if core is None else _verts(core)
    m = np.minimum(t1, t2)[pts]
    k = int(np.argmax(m))
    rep = MeasuredBound("behrstock_first", int(m[k]), None, [int(pts[k])])
    thr = 8 * delta + 2 * K
    branch = pts[t2[pts] > thr]
    near_W = dist_to_set(g, PW.Y)[PV.Y] <= K + 2 * delta + 1
    kprime = 0
    for x in branch:
        if not (PV.mask[x] & near_W).any():
            rep.violations.append(Violation("behrstock_first_branch", K + 2 * delta + 1,
                                            int(dist_to_set(g, PW.Y)[PV.of(x)].min()), [int(x)]))
        kprime = max(kprime, int(t1[x]))
    rep.extra = {"branch_threshold": thr, "kappa_prime_measured": kprime, "branch_points": int(len(branch))}
    return rep


def behrstock_second(g: MetricGraph, V, W, delta: float, K: float, core=None) -> MeasuredBound:
    """max over x of diam(p_V(x) u p_V(p_W(x))); requires V inside W."""
    Vv, Wv = _verts(V), _verts(W)
    if not np.isin(Vv, Wv).all():
        raise ArgumentError("behrstock_second needs V contained in W")
    PV, PW = Projector(g, Vv), Projector(g, Wv)
    D = g.dist
    pts = np.arange(g.n) if core is None else _verts(core)
    # p_V of every point of W, as a |W| x |V| mask
    MW = PV.mask[PW.Y]
    best, wit = -1, None
    for x in pts:
        m = PV.mask[x] | (MW[PW.mask[x]].any(axis=0))
        S = PV.Y[m]
        dm = int(D[np.ix_(S, S)].max())
        if dm > best:
            best, wit = dm, [int(x)]
    bound = 12 * delta + 4 * K
    rep = MeasuredBound("behrstock_second", best, bound, wit)
    if best > bound:
        rep.violations.append(Violation("behrstock_second", bound, best, wit))
    return rep
