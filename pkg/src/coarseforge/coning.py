"""Cone-offs, de-electrification, interruption, COQC gauge and the
pigeonhole / piece-count checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coarse_geometry import SubspaceRef, Violation, interval_gauge, subspace
from .errors import ArgumentError, StructuralError
from .graph_core import MetricGraph, VPath, hyperbolicity, walk


class ConedGraph:
    """Base graph plus a family; the coned metric lives in ``hat``."""

    def __init__(self, base: MetricGraph, family: Sequence, name: str = ""):
        fam = []
        for i, H in enumerate(family):
            if not isinstance(H, SubspaceRef):
                H = subspace(base, H, f"H{i}")
            if not len(H):
                raise ArgumentError(f"family member {i} is empty")
            fam.append(H)
        self.base = base
        self.family = fam
        self.name = name
        self.hat = MetricGraph(base.n, base.edges,
                               cliques=list(base.cliques) + [H.vertices for H in fam])
        self.member_of = [[] for _ in range(base.n)]
        for i, H in enumerate(fam):
            for v in H.vertices:
                self.member_of[v].append(i)
        self._induced = {}
        self._nested = {}
        self._coqc = None
        self._delta = None

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def dist_hat(self) -> np.ndarray:
        return self.hat.dist

    def edge_labels(self, u: int, v: int) -> tuple:
        if self.base.d(u, v) == 1:
            return ()
        a, b = self.member_of[u], self.member_of[v]
        return tuple(sorted(set(a) & set(b)))

    def edge_label(self, u: int, v: int) -> Optional[int]:
        labs = self.edge_labels(u, v)
        return labs[0] if labs else None

    def cone_edges(self) -> list:
        pairs = set()
        for H in self.family:
            vs = H.vertices
            for i, u in enumerate(vs):
                for v in vs[i + 1:]:
                    pairs.add((u, v))
        out = []
        for u, v in sorted(pairs):
            labs = self.edge_labels(u, v)
            if labs:
                out.append((u, v, labs))
        return out

    def to_json(self) -> dict:
        obj = self.base.to_json()
        obj["cone_edges"] = [[u, v, list(l)] for u, v, l in self.cone_edges()]
        obj["family"] = [{"name": H.name, "vertices": list(H.vertices)} for H in self.family]
        return obj

    # ------------------------------------------------------------------

    def induced_member(self, i: int):
        """(graph, local->global) for the induced subgraph of member i."""
        if i not in self._induced:
            self._induced[i] = self.base.induced(self.family[i].vertices)
        return self._induced[i]

    def nested_cone(self, i: int):
        """Cone-off of member i by the members strictly inside it, with the
        local->global map and local->global family index map."""
        if i not in self._nested:
            W = self.family[i]
            g, loc2glob = self.induced_member(i)
            glob2loc = {int(v): k for k, v in enumerate(loc2glob)}
            inner, idx = [], []
            for j, U in enumerate(self.family):
                if j != i and U.vset < W.vset:
                    inner.append([glob2loc[v] for v in U.vertices])
                    idx.append(j)
            cg = ConedGraph(g, inner)
            self._nested[i] = (cg, loc2glob, idx)
        return self._nested[i]

    def base_delta(self) -> float:
        if self._delta is None:
            self._delta = hyperbolicity(self.base, four_point=False).delta_thin
        return self._delta

    def coqc_constant(self) -> int:
        if self._coqc is None:
            self._coqc = max((coqc_gauge(self, H) for H in self.family), default=0)
        return self._coqc

    def piece_path(self, u: int, v: int, label: int, mode: str = "total") -> tuple:
        if mode == "total":
            return tuple(walk(self.base, u, v))
        if mode == "embedded":
            g, loc2glob = self.induced_member(label)
            if not self.family[label].connected:
                raise StructuralError(f"member {label} induces a disconnected subgraph")
            loc = {int(w): k for k, w in enumerate(loc2glob)}
            return tuple(int(loc2glob[w]) for w in walk(g, loc[u], loc[v]))
        raise ArgumentError(f"unknown piece mode {mode!r}")


def cone_off(g: MetricGraph, family: Sequence, name: str = "") -> ConedGraph:
    return ConedGraph(g, family, name)


# ----------------------------------------------------------------------
# lockstep paths: a coned path and its de-electrification together
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    u: int
    v: int
    label: Optional[int]
    piece: tuple


def geodesic_runs(D: np.ndarray, verts: Sequence[int]) -> list:
    """Greedy split of a base path into maximal geodesic spans (i, j)."""
    out = []
    i, n = 0, len(verts)
    while i < n - 1:
        j = i + 1
        while j + 1 < n and D[verts[i], verts[j + 1]] == j + 1 - i:
            j += 1
        out.append((i, j))
        i = j
    return out


class Lockstep:
    """Steps of a coned path, each carrying its base piece."""

    def __init__(self, cg: ConedGraph, start: int, steps: list):
        self.cg = cg
        self.start = int(start)
        self.steps = list(steps)

    @classmethod
    def from_vertices(cls, cg: ConedGraph, verts: Sequence[int], mode: str = "total") -> "Lockstep":
        steps = []
        for u, v in zip(verts[:-1], verts[1:]):
            u, v = int(u), int(v)
            lab = cg.edge_label(u, v)
            piece = (u, v) if lab is None else cg.piece_path(u, v, lab, mode)
            steps.append(Step(u, v, lab, piece))
        return cls(cg, verts[0], steps)

    def coned_vertices(self) -> list:
        return [self.start] + [s.v for s in self.steps]

    def tilde(self) -> list:
        out = [self.start]
        for s in self.steps:
            out.extend(s.piece[1:])
        return out

    def anchors(self) -> list:
        """Index in tilde() of each coned vertex."""
        out, k = [0], 0
        for s in self.steps:
            k += len(s.piece) - 1
            out.append(k)
        return out

    def locate(self, pos: int):
        """(step index, offset inside its piece) of a tilde position."""
        k = 0
        for i, s in enumerate(self.steps):
            L = len(s.piece) - 1
            if pos <= k + L:
                return i, pos - k
            k += L
        raise ArgumentError(f"position {pos} beyond the path")

    def coned_vpath(self) -> VPath:
        verts = tuple(self.coned_vertices())
        return VPath(verts, "coned", tuple((i, i + 1) for i in range(len(self.steps))),
                     tuple(s.label for s in self.steps))

    def pieces(self) -> list:
        """(i, j, label) spans of tilde(); base runs split into maximal geodesics."""
        D = self.cg.base.dist
        out, k = [], 0
        run = None
        verts = self.tilde()
        for s in self.steps:
            L = len(s.piece) - 1
            if s.label is None:
                if run is None:
                    run = k
            else:
                if run is not None:
                    out.extend((run + a, run + b, None) for a, b in geodesic_runs(D, verts[run:k + 1]))
                    run = None
                out.append((k, k + L, s.label))
            k += L
        if run is not None:
            out.extend((run + a, run + b, None) for a, b in geodesic_runs(D, verts[run:k + 1]))
        return out

    def tilde_vpath(self) -> VPath:
        ps = self.pieces()
        return VPath(tuple(self.tilde()), "base", tuple((a, b) for a, b, _ in ps),
                     tuple(l for _, _, l in ps))

    def copy(self) -> "Lockstep":
        return Lockstep(self.cg, self.start, list(self.steps))


# ----------------------------------------------------------------------
# de-electrification
# ----------------------------------------------------------------------

@dataclass
class DeElectSpec:
    mode: str = "total"
    level: int = 0
    C: float = 1.0

    def __post_init__(self):
        if self.mode not in ("total", "embedded", "partial"):
            raise ArgumentError(f"unknown de-electrification mode {self.mode!r}")
        if self.mode == "partial" and self.level < 1:
            raise ArgumentError("partial de-electrification needs level >= 1")
        if self.C < 1:
            raise ArgumentError("quasi-geodesic constant C must be at least 1")


def _coned_steps(path: VPath, cg: ConedGraph):
    """(u, v, label) per edge, taking labels from the path when present."""
    verts = path.vertices
    labs = path.component_labels if (path.host == "coned" and
                                    len(path.component_labels) == len(verts) - 1) else None
    out = []
    for k, (u, v) in enumerate(zip(verts[:-1], verts[1:])):
        lab = labs[k] if labs is not None else cg.edge_label(u, v)
        if lab is not None and cg.base.d(u, v) == 1:
            lab = None
        if lab is None and cg.base.d(u, v) != 1:
            lab = cg.edge_label(u, v)
        if not cg.hat.adjacent(u, v):
            raise ArgumentError(f"({u},{v}) is not an edge of the coned graph")
        out.append((int(u), int(v), lab))
    return out


def _partial_round(cg: ConedGraph, edges: list) -> list:
    out = []
    for u, v, lab in edges:
        if lab is None:
            out.append((u, v, None))
            continue
        inner, loc2glob, idx = cg.nested_cone(lab)
        loc = {int(w): k for k, w in enumerate(loc2glob)}
        p = walk(inner.hat, loc[u], loc[v])
        for a, b in zip(p[:-1], p[1:]):
            labs = inner.edge_labels(a, b)
            out.append((int(loc2glob[a]), int(loc2glob[b]), idx[labs[0]] if labs else None))
    return out


def de_electrify(cg: ConedGraph, path: VPath, spec: DeElectSpec | str = "total") -> VPath:
    if isinstance(spec, str):
        spec = DeElectSpec(spec)
    if len(path.vertices) <= 1:
        return VPath(tuple(path.vertices), "base")
    edges = _coned_steps(path, cg)
    if spec.mode == "partial":
        for _ in range(spec.level):
            edges = _partial_round(cg, edges)
        verts = tuple([edges[0][0]] + [v for _, v, _ in edges])
        return VPath(verts, "coned", tuple((i, i + 1) for i in range(len(edges))),
                     tuple(l for _, _, l in edges))
    steps = [Step(u, v, lab, (u, v) if lab is None else cg.piece_path(u, v, lab, spec.mode))
             for u, v, lab in edges]
    return Lockstep(cg, edges[0][0], steps).tilde_vpath()


def coned_geodesic(cg: ConedGraph, x: int, y: int) -> VPath:
    return Lockstep.from_vertices(cg, walk(cg.hat, x, y)).coned_vpath() if x != y else \
        VPath((int(x),), "coned")


# ----------------------------------------------------------------------
# COQC and interruption
# ----------------------------------------------------------------------

def coqc_gauge(cg: ConedGraph, S) -> int:
    """max over s, t in S and z on a base geodesic between them of d^(z, S)."""
    Sv = S.arr if isinstance(S, SubspaceRef) else np.unique(np.asarray(list(S), dtype=np.int64))
    dh = cg.dist_hat[:, Sv].min(axis=1).astype(np.int64)
    K, _ = interval_gauge(cg.base.dist, dh, Sv)
    return K


def _anchor_point(cg: ConedGraph, z: int, label: int) -> int:
    H = cg.family[label].arr
    key = np.lexsort((H, cg.base.dist[z, H], cg.dist_hat[z, H]))
    return int(H[key[0]])


def _hat_steps(cg: ConedGraph, a: int, b: int) -> list:
    p = walk(cg.hat, a, b)
    out = []
    for u, v in zip(p[:-1], p[1:]):
        lab = cg.edge_label(u, v)
        out.append(Step(u, v, lab, (u, v) if lab is None else cg.piece_path(u, v, lab)))
    return out


def _link(cg: ConedGraph, a: int, b: int, label: int, sub: Optional[tuple]) -> list:
    """One step a -> b inside member ``label``; ``sub`` is a reusable piece."""
    if a == b:
        return []
    if cg.base.d(a, b) == 1:
        return [Step(a, b, None, (a, b))]
    return [Step(a, b, label, sub if sub is not None else cg.piece_path(a, b, label))]


def interrupt_lockstep(lk: Lockstep, positions: Sequence[int], K: Optional[int] = None,
                       with_index: bool = False, strict: bool = True):
    """Interruption at the given tilde positions; asserts the length bound.

    With ``with_index`` also returns {position: index of z in the new coned
    path}.
    """
    cg = lk.cg
    if K is None:
        K = cg.coqc_constant()
    anchors = lk.anchors()
    anchor_at = {a: k for k, a in enumerate(anchors)}
    by_step, at_anchor = {}, {}
    tl_len = anchors[-1] + 1
    for pos in sorted(set(int(p) for p in positions)):
        if pos < 0 or pos >= tl_len:
            raise ArgumentError(f"position {pos} outside the path")
        if pos in anchor_at:
            k = anchor_at[pos]
            near = [lk.steps[j] for j in (k - 1, k) if 0 <= j < len(lk.steps)]
            if strict and not any(s.label is not None for s in near):
                raise ArgumentError(f"position {pos} is not on an H-piece")
            at_anchor[pos] = k
            continue
        i, off = lk.locate(pos)
        if lk.steps[i].label is None:
            raise ArgumentError(f"position {pos} is not on an H-piece")
        by_step.setdefault(i, []).append((off, pos))
    new, start_of, where = [], [], {}
    for i, s in enumerate(lk.steps):
        start_of.append(len(new))
        if i not in by_step:
            new.append(s)
            continue
        prev, prev_off, prev_exact = s.u, 0, True
        for off, pos in sorted(by_step[i]):
            z = s.piece[off]
            zp = _anchor_point(cg, z, s.label)
            if zp == z:
                sub = s.piece[prev_off:off + 1] if prev_exact else None
                new.extend(_link(cg, prev, z, s.label, sub))
                where[pos] = len(new)
                prev, prev_off, prev_exact = z, off, True
            else:
                new.extend(_link(cg, prev, zp, s.label, None))
                new.extend(_hat_steps(cg, zp, z))
                where[pos] = len(new)
                new.extend(_hat_steps(cg, z, zp))
                prev, prev_off, prev_exact = zp, off, False
        sub = s.piece[prev_off:] if prev_exact else None
        new.extend(_link(cg, prev, s.v, s.label, sub))
    start_of.append(len(new))
    for pos, k in at_anchor.items():
        where[pos] = start_of[k]
    nS = sum(len(v) for v in by_step.values())
    if len(new) > len(lk.steps) + nS * (2 * K + 1):
        raise AssertionError(f"interruption grew the path by {len(new) - len(lk.steps)} > {nS}(2K+1)")
    res = Lockstep(cg, lk.start, new)
    return (res, where) if with_index else res


def splice_geodesic(lk: Lockstep, pa: int, pb: int):
    """Interrupt at tilde positions pa < pb where they sit inside H-pieces,
    then replace the stretch between them by the canonical base geodesic.

    Returns the new lockstep and the tilde position of the old pb point.
    """
    lk, where = interrupt_lockstep(lk, (pa, pb), with_index=True, strict=False)
    ia, ib = where[pa], where[pb]
    verts = lk.coned_vertices()
    geo = walk(lk.cg.base, verts[ia], verts[ib])
    mid = [Step(u, v, None, (u, v)) for u, v in zip(geo[:-1], geo[1:])]
    out = Lockstep(lk.cg, lk.start, lk.steps[:ia] + mid + lk.steps[ib:])
    pos_b = sum(len(s.piece) - 1 for s in lk.steps[:ia]) + len(geo) - 1
    return out, pos_b


def interrupt(cg: ConedGraph, gamma: VPath, S: Sequence[int], K: Optional[int] = None) -> VPath:
    """Interrupt a coned path at positions S of its total de-electrification."""
    if not S:
        return gamma
    lk = Lockstep.from_vertices(cg, gamma.vertices)
    return interrupt_lockstep(lk, S, K).coned_vpath()


# ----------------------------------------------------------------------
# constants and sweeps
# ----------------------------------------------------------------------

def piece_constants(delta: float) -> dict:
    xi = 8 * delta + 1
    Dp = delta * (xi + 1)
    p = xi * (math.floor(2 * delta * (xi + 1)) + 1)
    D = max(delta * (p + 1), Dp)
    return {"delta": delta, "xi": xi, "Dprime": Dp, "p": p, "D": D}


def enumerate_hat_geodesics(cg: ConedGraph, x: int, y: int, limit: int) -> list:
    """Up to ``limit`` coned geodesics x -> y in lexicographic order."""
    Dh = cg.dist_hat
    out = []
    stack = [[int(x)]]
    while stack and len(out) < limit:
        p = stack.pop()
        u = p[-1]
        if u == y:
            out.append(p)
            continue
        nb = cg.hat.neighbors(u)
        nb = nb[Dh[y, nb].astype(np.int64) == int(Dh[y, u]) - 1]
        for w in nb[::-1]:
            stack.append(p + [int(w)])
    return out


@dataclass
class SweepReport:
    check: str
    constants: dict
    measured: dict
    violations: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"check": self.check, "constants": dict(sorted(self.constants.items())),
                "measured": dict(sorted(self.measured.items())),
                "violations": [v.to_json() for v in self.violations],
                "counts": dict(sorted(self.counts.items()))}


def pigeonhole_check(cg: ConedGraph, theta: float, core=None, alternates: int = 64) -> SweepReport:
    """For core pairs with d >= 2θ², each checked coned geodesic has length
    >= θ or an H-piece of base length >= θ.

    Every coned geodesic between x and y has length d^(x, y), so pairs with
    d^ >= θ pass on length alone and only the others are enumerated.
    """
    if theta <= 1:
        raise ArgumentError("theta must exceed 1")
    T = 2 * theta * theta
    D, Dh = cg.base.dist, cg.dist_hat
    pts = np.arange(cg.n) if core is None else np.asarray(core, dtype=np.int64)
    sub = D[np.ix_(pts, pts)]
    far = sub >= T
    short = far & (Dh[np.ix_(pts, pts)] < theta)
    rep = SweepReport("pigeonhole", {"theta": theta, "T": T, "alternates": alternates},
                      {"min_hat_length": None, "min_max_piece": None})
    rep.counts = {"pairs": int(far.sum()), "pairs_by_length": int((far & ~short).sum()),
                  "pairs_enumerated": int(short.sum()), "paths_enumerated": 0}
    min_piece = None
    for i, j in np.argwhere(short):
        x, y = int(pts[i]), int(pts[j])
        for p in enumerate_hat_geodesics(cg, x, y, 1 + alternates):
            rep.counts["paths_enumerated"] += 1
            pieces = [int(D[u, v]) for u, v in zip(p[:-1], p[1:]) if cg.base.d(u, v) != 1]
            best = max(pieces, default=0)
            min_piece = best if min_piece is None else min(min_piece, best)
            if len(p) - 1 < theta and best < theta:
                rep.violations.append(Violation("pigeonhole", theta, best, [x, y] + p))
    if far.any():
        rep.measured["min_hat_length"] = int(Dh[np.ix_(pts, pts)][far].min())
    rep.measured["min_max_piece"] = min_piece
    return rep


def escaping_components(dseg: np.ndarray, bound: float) -> list:
    """Maximal index runs with dseg > bound, as (first, last)."""
    out, i, n = [], 0, len(dseg)
    while i < n:
        if dseg[i] > bound:
            j = i
            while j + 1 < n and dseg[j + 1] > bound:
                j += 1
            out.append((i, j))
            i = j + 1
        else:
            i += 1
    return out


def pieces_between(pieces: list, a: int, b: int) -> int:
    """Number of pieces sharing at least one edge with tilde[a..b]."""
    return sum(1 for s, e, _ in pieces if max(s, a) < min(e, b))


def nineteen_pieces_check(cg: ConedGraph, pairs: Sequence, delta: Optional[float] = None) -> SweepReport:
    if delta is None:
        delta = cg.base_delta()
    c = piece_constants(delta)
    D = cg.base.dist
    rep = SweepReport("nineteen_pieces", dict(c, endpoint_bound=2 * c["D"] + 8 * delta,
                                              cover_bound=10 * delta + c["D"]),
                      {"max_pieces": 0, "max_pieces_at_Dprime": 0, "max_endpoint_distance": 0,
                       "max_cover_distance": 0, "components": 0})
    for x, y in pairs:
        x, y = int(x), int(y)
        lk = Lockstep.from_vertices(cg, walk(cg.hat, x, y))
        tl = np.asarray(lk.tilde(), dtype=np.int64)
        seg = np.asarray(walk(cg.base, x, y), dtype=np.int64)
        pieces = lk.pieces()
        dseg = D[np.ix_(tl, seg)].min(axis=1).astype(np.int64)
        for bound, key in ((c["D"], "max_pieces"), (c["Dprime"], "max_pieces_at_Dprime")):
            for i, j in escaping_components(dseg, bound):
                a, b = i - 1, j + 1
                k = pieces_between(pieces, a, b)
                rep.measured[key] = max(rep.measured[key], k)
                if key == "max_pieces":
                    rep.measured["components"] += 1
                    if k > c["p"]:
                        rep.violations.append(Violation("pieces", c["p"], k, [x, y, int(tl[a]), int(tl[b])]))
                    e = int(D[tl[a], tl[b]])
                    rep.measured["max_endpoint_distance"] = max(rep.measured["max_endpoint_distance"], e)
                    if e > 2 * c["D"] + 8 * delta:
                        rep.violations.append(Violation("endpoints", 2 * c["D"] + 8 * delta, e,
                                                        [x, y, int(tl[a]), int(tl[b])]))
        cover = int(D[np.ix_(seg, tl)].min(axis=1).max())
        rep.measured["max_cover_distance"] = max(rep.measured["max_cover_distance"], cover)
        if cover > 10 * delta + c["D"]:
            rep.violations.append(Violation("cover", 10 * delta + c["D"], cover, [x, y]))
    rep.counts = {"pairs": len(pairs)}
    return rep


def hyperbolic_polygon_projection(g: MetricGraph, sigma: Sequence[int], eta: Sequence[int]) -> int:
    """diam of the projection of a path sigma onto a geodesic eta."""
    from .coarse_geometry import Projector
    P = Projector(g, eta)
    S = P.of_set(sigma)
    return int(g.dist[np.ix_(S, S)].max())
