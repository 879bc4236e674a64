"""Finite graph metric engine.

Distances come from a dense uint16 BFS table.  Geodesics are canonical:
walking from x toward y, each step goes to the smallest-id neighbour
that is one step closer to y.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from ._config import get_threads
from .errors import ArgumentError, DisconnectedGraphError, StructuralError
from .rng import XorShift64Star

UNREACH = 65535


def as_vertex_array(A) -> np.ndarray:
    """Sorted unique int64 array from any iterable of vertex ids."""
    if isinstance(A, np.ndarray):
        arr = A.astype(np.int64, copy=False).ravel()
    else:
        arr = np.fromiter((int(a) for a in A), dtype=np.int64)
    return np.unique(arr)


def _csr(n, pairs):
    """CSR adjacency (int32) from undirected sorted pairs."""
    if pairs:
        e = np.asarray(pairs, dtype=np.int64)
        r = np.concatenate([e[:, 0], e[:, 1]])
        c = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((c, r))
        r, c = r[order], c[order]
    else:
        r = c = np.zeros(0, dtype=np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, r + 1, 1)
    return np.cumsum(ptr).astype(np.int32), c.astype(np.int32)


class MetricGraph:
    """Connected unweighted graph with cached all-pairs distances.

    ``cliques`` are vertex sets whose members are pairwise adjacent; they are
    kept implicit so that cone-offs of large subspaces stay cheap.
    """

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = (), *,
                 cliques: Iterable[Iterable[int]] = (), subspaces: Optional[dict] = None,
                 name: str = ""):
        if n < 0:
            raise ArgumentError("vertex count must be nonnegative")
        self.n = int(n)
        seen = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise StructuralError(f"loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise StructuralError(f"edge ({u},{v}) out of range")
            seen.add((min(u, v), max(u, v)))
        self.edges = tuple(sorted(seen))
        self.cliques = tuple(tuple(int(v) for v in as_vertex_array(c)) for c in cliques)
        for c in self.cliques:
            if c and not (0 <= c[0] and c[-1] < n):
                raise StructuralError("clique vertex out of range")
        self.subspaces = {k: tuple(int(v) for v in as_vertex_array(s))
                          for k, s in (subspaces or {}).items()}
        self.name = name
        self.indptr, self.indices = _csr(self.n, list(self.edges))
        self._hubs = self._hub_arrays()
        self._dist = None
        self._nh = {}
        self._nh_full = None

    def _hub_arrays(self):
        cl = [c for c in self.cliques if len(c) > 1]
        h_ptr = np.zeros(len(cl) + 1, dtype=np.int32)
        for i, c in enumerate(cl):
            h_ptr[i + 1] = h_ptr[i] + len(c)
        h_idx = np.array([v for c in cl for v in c], dtype=np.int32)
        memb = [[] for _ in range(self.n)]
        for i, c in enumerate(cl):
            for v in c:
                memb[v].append(i)
        vh_ptr = np.zeros(self.n + 1, dtype=np.int32)
        for v in range(self.n):
            vh_ptr[v + 1] = vh_ptr[v] + len(memb[v])
        vh_idx = np.array([h for m in memb for h in m], dtype=np.int32)
        return vh_ptr, vh_idx, h_ptr, h_idx

    def _kernel_args(self):
        vh_ptr, vh_idx, h_ptr, h_idx = self._hubs
        return (self.n, self.indptr, self.indices, vh_ptr, vh_idx, h_ptr, h_idx)

    # ------------------------------------------------------------------
    # distances
    # ------------------------------------------------------------------

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            D = _kernels.all_pairs(*self._kernel_args(), get_threads())
            bad = np.argwhere(D == UNREACH)
            if len(bad):
                u, v = bad[0]
                raise DisconnectedGraphError(int(u), int(v))
            D.setflags(write=False)
            self._dist = D
        return self._dist

    def d(self, u: int, v: int) -> int:
        return int(self.dist[u, v])

    def neighbors(self, v: int) -> np.ndarray:
        parts = [self.indices[self.indptr[v]:self.indptr[v + 1]].astype(np.int64)]
        vh_ptr, vh_idx, h_ptr, h_idx = self._hubs
        for h in vh_idx[vh_ptr[v]:vh_ptr[v + 1]]:
            parts.append(h_idx[h_ptr[h]:h_ptr[h + 1]].astype(np.int64))
        nb = np.unique(np.concatenate(parts)) if parts else np.zeros(0, np.int64)
        return nb[nb != v]

    def adjacent(self, u: int, v: int) -> bool:
        return u != v and self.d(u, v) == 1

    def next_hops(self, y: int) -> np.ndarray:
        """For every v, the canonical next vertex on the way to y."""
        if self._nh_full is not None:
            return self._nh_full[y]
        row = self._nh.get(y)
        if row is None:
            row = _kernels.next_hop(*self._kernel_args(), self.dist,
                                    np.array([y], dtype=np.int32), 1)[0]
            row.setflags(write=False)
            self._nh[y] = row
        return row

    def next_hop_table(self) -> np.ndarray:
        """Full table NX[y, v]; memory n² int32."""
        if self._nh_full is None:
            NX = _kernels.next_hop(*self._kernel_args(), self.dist,
                                   np.arange(self.n, dtype=np.int32), get_threads())
            NX.setflags(write=False)
            self._nh_full = NX
        return self._nh_full

    @property
    def is_tree(self) -> bool:
        return not any(len(c) > 1 for c in self.cliques) and len(self.edges) == self.n - 1 \
            and self.n > 0 and self._connected()

    def _connected(self) -> bool:
        try:
            self.dist
        except DisconnectedGraphError:
            return False
        return True

    def induced(self, vertices) -> tuple["MetricGraph", np.ndarray]:
        """Induced subgraph on ``vertices`` (base edges and cliques), relabelled
        in ascending order; returns (graph, local->global array)."""
        vs = as_vertex_array(vertices)
        loc = -np.ones(self.n, dtype=np.int64)
        loc[vs] = np.arange(len(vs))
        edges = [(loc[u], loc[v]) for u, v in self.edges if loc[u] >= 0 and loc[v] >= 0]
        cl = []
        for c in self.cliques:
            sub = [loc[v] for v in c if loc[v] >= 0]
            if len(sub) > 1:
                cl.append(sub)
        return MetricGraph(len(vs), edges, cliques=cl), vs

    def explicit_edges(self):
        """All adjacent pairs (u<v), cliques expanded."""
        out = set(self.edges)
        for c in self.cliques:
            for i, u in enumerate(c):
                for v in c[i + 1:]:
                    out.add((u, v))
        return sorted(out)

    # ------------------------------------------------------------------
    # serialisation
    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        return {"vertices": self.n,
                "edges": [list(e) for e in self.explicit_edges()],
                "subspaces": {k: list(v) for k, v in sorted(self.subspaces.items())}}

    @classmethod
    def from_json(cls, obj) -> "MetricGraph":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        n = int(obj["vertices"])
        raw = [tuple(e) for e in obj.get("edges", [])]
        norm = [(min(u, v), max(u, v)) for u, v in raw]
        if len(set(norm)) != len(norm):
            raise StructuralError("duplicate edge in graph file")
        return cls(n, raw, subspaces=obj.get("subspaces") or {})

    def __repr__(self):
        return f"MetricGraph(n={self.n}, edges={len(self.edges)}, cliques={len(self.cliques)})"


def distances(g: MetricGraph) -> np.ndarray:
    return g.dist


@dataclass(frozen=True)
class VPath:
    """Vertex path.

    For base paths ``piece_marks`` are index spans (i, j) of maximal base
    geodesic pieces and ``component_labels[k]`` is the family index of the
    cone edge piece k replaces, or None.  For coned paths every edge is its
    own span and the label is that of the cone edge (None for base edges).
    """
    vertices: tuple
    host: str = "base"
    piece_marks: tuple = ()
    component_labels: tuple = ()

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "host": self.host,
                "piece_marks": [list(p) for p in self.piece_marks],
                "component_labels": list(self.component_labels)}


def walk(g: MetricGraph, x: int, y: int) -> list:
    nh = g.next_hops(y)
    path = [int(x)]
    u = int(x)
    while u != y:
        u = int(nh[u])
        path.append(u)
    return path


def geodesic(g: MetricGraph, x: int, y: int) -> VPath:
    g.dist
    p = walk(g, x, y)
    return VPath(tuple(p), "base", ((0, len(p) - 1),) if len(p) > 1 else (), (None,) if len(p) > 1 else ())


def geodesic_interval(g: MetricGraph, x: int, y: int) -> frozenset:
    D = g.dist
    mask = D[x].astype(np.int32) + D[y] == D[x, y]
    return frozenset(int(v) for v in np.flatnonzero(mask))


def interval_mask(g: MetricGraph, x: int, y: int) -> np.ndarray:
    D = g.dist
    return D[x].astype(np.int32) + D[y] == int(D[x, y])


def dist_to_set(g: MetricGraph, A) -> np.ndarray:
    A = as_vertex_array(A)
    if not len(A):
        raise ArgumentError("empty vertex set")
    return g.dist[:, A].min(axis=1).astype(np.int64)


def neighborhood(g: MetricGraph, A, r) -> np.ndarray:
    return np.flatnonzero(dist_to_set(g, A) <= r)


def hausdorff(g: MetricGraph, A, B) -> int:
    A, B = as_vertex_array(A), as_vertex_array(B)
    if not len(A) or not len(B):
        raise ArgumentError("hausdorff distance of an empty set")
    sub = g.dist[np.ix_(A, B)]
    return int(max(sub.min(axis=1).max(), sub.min(axis=0).max()))


def diam(g: MetricGraph, A) -> int:
    A = as_vertex_array(A)
    if len(A) < 2:
        return 0
    return int(g.dist[np.ix_(A, A)].max())


def set_distance(g: MetricGraph, A, B) -> int:
    A, B = as_vertex_array(A), as_vertex_array(B)
    return int(g.dist[np.ix_(A, B)].min())


def core_vertices(g: MetricGraph, margin: float, root: int = 0) -> np.ndarray:
    """Vertices at least ``margin`` away from the outermost sphere about root."""
    dr = g.dist[root].astype(np.int64)
    return np.flatnonzero(dr <= dr.max() - margin)


# ----------------------------------------------------------------------
# hyperbolicity
# ----------------------------------------------------------------------

@dataclass
class HypReport:
    delta_thin: float
    delta_4pt: float
    witness_thin: Optional[dict] = None
    witness_4pt: Optional[dict] = None
    exact_thin: bool = True
    exact_4pt: bool = True
    method_thin: str = "exhaustive"
    method_4pt: str = "exhaustive"
    thin_all_geodesics_upper: Optional[float] = None
    samples: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"delta_thin": self.delta_thin, "delta_4pt": self.delta_4pt,
                "witness_thin": self.witness_thin, "witness_4pt": self.witness_4pt,
                "exact_thin": self.exact_thin, "exact_4pt": self.exact_4pt,
                "method_thin": self.method_thin, "method_4pt": self.method_4pt,
                "thin_all_geodesics_upper": self.thin_all_geodesics_upper,
                "samples": dict(sorted(self.samples.items()))}


def _sorted_tuples(rng: XorShift64Star, n: int, k: int, m: int) -> np.ndarray:
    out = np.empty((m, k), dtype=np.int32)
    for i in range(m):
        out[i] = sorted(rng.sample(n, k))
    return out


def thin_defect(g: MetricGraph, x: int, y: int, z: int) -> int:
    """Thinness defect of the canonical triangle on {x, y, z}."""
    t = np.array([sorted((x, y, z))], dtype=np.int32)
    vals, _, _ = _kernels.thin_triples(g.dist, _partial_nx(g, t), t, 1)
    return int(vals[0])


def _partial_nx(g: MetricGraph, triples: np.ndarray) -> np.ndarray:
    """Next-hop rows for the targets used by the triples (others left -1)."""
    if g._nh_full is not None:
        return g._nh_full
    NX = np.full((g.n, g.n), -1, dtype=np.int32)
    for y in np.unique(triples[:, 1:]):
        NX[y] = g.next_hops(int(y))
    return NX


def hyperbolicity(g: MetricGraph, *, thin_exact_limit: int = 400, four_point_exact_limit: int = 160,
                  samples: int = 20000, seed: int = 0, tree_shortcut: bool = True,
                  four_point: bool = True) -> HypReport:
    """Thin-triangles and four-point constants with witnesses.

    Exhaustive below the size limits; above them, ``samples`` triples or
    quadruples drawn with xorshift64* (reported as non-exact).
    """
    n = g.n
    D = g.dist
    threads = get_threads()
    if tree_shortcut and g.is_tree:
        return HypReport(0.0, 0.0, None, None, True, True, "tree", "tree", 0.0)
    rng = XorShift64Star(seed)
    rep = HypReport(0.0, 0.0)
    if n <= thin_exact_limit:
        NX = g.next_hop_table()
        val, x, y, z, side, v = _kernels.thin_exact(D, NX, threads)
        rep.delta_thin = float(val)
        if val > 0:
            rep.witness_thin = {"triangle": [int(x), int(y), int(z)], "side": int(side), "vertex": int(v)}
    elif n >= 3:
        T = _sorted_tuples(rng, n, 3, samples)
        vals, sides, vs = _kernels.thin_triples(D, _partial_nx(g, T), T, threads)
        i = int(np.argmax(vals))
        rep.delta_thin = float(vals[i])
        rep.exact_thin = False
        rep.method_thin = "sampled"
        rep.samples["thin"] = samples
        if vals[i] > 0:
            rep.witness_thin = {"triangle": [int(a) for a in T[i]], "side": int(sides[i]), "vertex": int(vs[i])}
    if four_point:
        if n <= four_point_exact_limit:
            val, x, y, z, w = _kernels.four_point_exact(D, threads)
            rep.delta_4pt = val / 2
            if val > 0:
                rep.witness_4pt = {"quadruple": [int(x), int(y), int(z), int(w)]}
        elif n >= 4:
            Q = _sorted_tuples(rng, n, 4, samples)
            vals = _kernels.four_point_quads(D, Q, threads)
            i = int(np.argmax(vals))
            rep.delta_4pt = float(vals[i]) / 2
            rep.exact_4pt = False
            rep.method_4pt = "sampled"
            rep.samples["4pt"] = samples
            if vals[i] > 0:
                rep.witness_4pt = {"quadruple": [int(a) for a in Q[i]]}
        # triangles are 4*delta_4pt thin for every choice of geodesics
        rep.thin_all_geodesics_upper = 4 * rep.delta_4pt
    return rep
