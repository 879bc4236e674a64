"""Good coned quasi-geodesics whose de-electrifications are base
quasi-geodesics, and empirical quasi-geodesic constants."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coning import ConedGraph, Lockstep, escaping_components, piece_constants, pieces_between, \
    splice_geodesic
from .coarse_geometry import Projector
from .errors import StructuralError
from .graph_core import MetricGraph, VPath, walk

C_GRID = (1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)


@dataclass
class AlgoConstants:
    delta: float
    K: float
    xi: float
    Dprime: float
    p: float
    D: float
    Delta: int
    ball_radius: int
    tau1: Optional[tuple] = None
    tau2: Optional[tuple] = None

    @classmethod
    def from_delta(cls, delta: float, K: float) -> "AlgoConstants":
        c = piece_constants(delta)
        Delta = math.ceil(c["D"] + 4 * delta)
        return cls(delta, K, c["xi"], c["Dprime"], c["p"], c["D"], Delta, 3 * Delta)

    def to_json(self) -> dict:
        return {"delta": self.delta, "K": self.K, "xi": self.xi, "Dprime": self.Dprime, "p": self.p,
                "D": self.D, "Delta": self.Delta, "ball_radius": self.ball_radius,
                "tau1": list(self.tau1) if self.tau1 else None,
                "tau2": list(self.tau2) if self.tau2 else None}


@dataclass
class QGMeasure:
    C_grid: list
    eps: list
    best: tuple
    worst_subpath: Optional[tuple]

    def to_json(self) -> dict:
        return {"C_grid": list(self.C_grid), "eps": list(self.eps), "best": list(self.best),
                "worst_subpath": list(self.worst_subpath) if self.worst_subpath else None}


def _dist_of(host) -> np.ndarray:
    if isinstance(host, ConedGraph):
        return host.dist_hat
    if isinstance(host, MetricGraph):
        return host.dist
    return np.asarray(host)


def measure_qg(host, path, grid=C_GRID) -> QGMeasure:
    """Empirical (C, ε): ε(C) = max over i<j of (j-i) - C·d(γ_i, γ_j), floored at 0."""
    verts = np.asarray(path.vertices if isinstance(path, VPath) else path, dtype=np.int64)
    m = len(verts)
    if m < 2:
        return QGMeasure(list(grid), [0.0] * len(grid), (grid[0], 0.0), None)
    D = _dist_of(host)[np.ix_(verts, verts)].astype(np.float64)
    I, J = np.triu_indices(m, 1)
    L = (J - I).astype(np.float64)
    d = D[I, J]
    eps, wit = [], []
    for C in grid:
        v = L - C * d
        k = int(np.argmax(v))
        eps.append(max(0.0, float(v[k])))
        wit.append((int(I[k]), int(J[k])))
    b = len(grid) - 1
    for i in range(len(grid) - 1):
        if eps[i] <= eps[i + 1] + 1:
            b = i
            break
    return QGMeasure(list(grid), eps, (grid[b], eps[b]), wit[b] if eps[b] > 0 else None)


@dataclass
class AlgoResult:
    coned: VPath
    tilde: VPath
    constants: AlgoConstants
    step1: dict = field(default_factory=dict)
    step2: dict = field(default_factory=dict)
    qg_coned: Optional[QGMeasure] = None
    qg_tilde: Optional[QGMeasure] = None

    def __iter__(self):
        return iter((self.coned, self.tilde, self.constants))

    def to_json(self) -> dict:
        return {"coned": self.coned.to_json(), "tilde": self.tilde.to_json(),
                "constants": self.constants.to_json(),
                "step1": dict(sorted(self.step1.items())), "step2": dict(sorted(self.step2.items())),
                "qg_coned": self.qg_coned.to_json() if self.qg_coned else None,
                "qg_tilde": self.qg_tilde.to_json() if self.qg_tilde else None}


def _step1(lk: Lockstep, seg: np.ndarray, c: AlgoConstants) -> tuple:
    """Cut every component of tilde - N_D([x,y]) with >= 2 pieces."""
    D = lk.cg.base.dist
    cursor, cuts = 0, 0
    while True:
        tl = np.asarray(lk.tilde(), dtype=np.int64)
        dseg = D[np.ix_(tl, seg)].min(axis=1)
        pieces = lk.pieces()
        todo = None
        for i, j in escaping_components(dseg, c.D):
            if i - 1 >= cursor and pieces_between(pieces, i - 1, j + 1) >= 2:
                todo = (i - 1, j + 1)
                break
        if todo is None:
            break
        lk, cursor = splice_geodesic(lk, *todo)
        cuts += 1
    tl = np.asarray(lk.tilde(), dtype=np.int64)
    reach = int(D[np.ix_(tl, seg)].min(axis=1).max())
    return lk, {"cuts": cuts, "max_distance_to_segment": reach, "bound": c.Delta,
                "contained": reach <= c.Delta}


def _step2(lk: Lockstep, seg: np.ndarray, c: AlgoConstants, y: int) -> tuple:
    """Ball sweep removing backtracking; open balls of radius 3Δ."""
    D = lk.cg.base.dist
    R = c.ball_radius
    P = Projector(lk.cg.base, seg)
    seg_pos = {int(v): k for k, v in enumerate(seg)}
    proj = lambda v: seg_pos[P.canonical(int(v))]
    t, ts, splices = 0, [], 0
    limit = len(lk.tilde()) + 2
    while True:
        tl = np.asarray(lk.tilde(), dtype=np.int64)
        ts.append(int(tl[t]))
        if D[tl[t], y] < R:
            break
        if len(ts) > limit:
            raise StructuralError("ball sweep did not terminate")
        dball = D[tl[t], tl].astype(np.int64)
        pieces = lk.pieces()
        last = len(tl) - 1
        T = []
        for i, j in escaping_components(dball, R - 1):
            if i <= t:
                continue
            if j == last or pieces_between(pieces, i - 1, min(j + 1, last)) >= 2:
                T.append(i)
        if len(T) >= 2:
            lk, t = splice_geodesic(lk, T[0], T[-1])
            splices += 1
        else:
            t = T[0]
    adv = [proj(a) for a in ts]
    steps = [b - a for a, b in zip(adv[:-1], adv[1:])]
    bound = math.ceil(len(seg) / max(c.Delta, 1)) + 1
    return lk, {"t": ts, "splices": splices, "projection_advances": steps,
                "monotone": all(s >= c.Delta for s in steps), "iterations": len(ts) - 1,
                "iteration_bound": bound, "sphere_order": "position along the path"}


def good_quasigeodesic(cg: ConedGraph, x: int, y: int, delta: Optional[float] = None,
                       K: Optional[float] = None, measure: bool = True,
                       constants: Optional[AlgoConstants] = None) -> AlgoResult:
    """Coned path x -> y built by the cut-and-sweep construction.

    Starts from the canonical coned geodesic and its total
    de-electrification; Step 1 cuts far excursions made of several pieces,
    Step 2 removes backtracking with balls of radius 3Δ.  The
    quasi-geodesic constants of both outputs are measured.  ``constants``
    overrides the derived scales (used to exercise both steps on small
    graphs).
    """
    x, y = int(x), int(y)
    if constants is not None:
        c = constants
    else:
        if delta is None:
            delta = cg.base_delta()
        if K is None:
            K = cg.coqc_constant()
        c = AlgoConstants.from_delta(delta, K)
    lk = Lockstep.from_vertices(cg, walk(cg.hat, x, y))
    res = AlgoResult(lk.coned_vpath(), lk.tilde_vpath(), c)
    if x != y:
        seg = np.asarray(walk(cg.base, x, y), dtype=np.int64)
        lk, res.step1 = _step1(lk, seg, c)
        if c.Delta == 0 or cg.base.dist[x, y] < c.ball_radius:
            res.step2 = {"skipped": True, "monotone": True, "iterations": 0}
        else:
            lk, res.step2 = _step2(lk, seg, c, y)
            res.step2["skipped"] = False
        res.coned, res.tilde = lk.coned_vpath(), lk.tilde_vpath()
    if measure:
        res.qg_coned = measure_qg(cg, res.coned)
        res.qg_tilde = measure_qg(cg.base, res.tilde)
        c.tau1, c.tau2 = res.qg_coned.best, res.qg_tilde.best
    return res
