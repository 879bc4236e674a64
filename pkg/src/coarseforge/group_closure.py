"""Coset families of subgroups inside Cayley balls, proximal pairs and the
Prox closure of a subgroup family."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coarse_geometry import SubspaceRef, Violation, subspace
from .errors import ArgumentError
from .factor_systems import EquivClasses, FamilyGeometry, default_R, equivalence_classes, family_gauge, \
    host_delta
from .generators import CayleyBall, inverse_word


class Subgroup:
    """A subgroup known through its elements up to a word length."""

    label = "?"

    def __init__(self, spec):
        self.spec = spec
        self._cache = {}

    def elements(self, L: int) -> frozenset:
        if L not in self._cache:
            self._cache[L] = frozenset(self._elements(L))
        return self._cache[L]

    def _elements(self, L: int):
        raise NotImplementedError

    def __repr__(self):
        return f"Subgroup({self.label})"


class Generated(Subgroup):
    def __init__(self, spec, gens: Sequence[str]):
        super().__init__(spec)
        gens = [spec.reduce(w) for w in gens]
        gens = [w for w in gens if w]
        if not gens:
            raise ArgumentError("subgroup is trivial in the ball")
        self.gens = sorted(set(gens), key=spec.shortlex_key)
        self.label = "<" + ",".join(self.gens) + ">"

    def _elements(self, L):
        steps = self.gens + [inverse_word(w) for w in self.gens]
        cap = L + 2 * max(len(w) for w in steps)
        seen, frontier = {""}, [""]
        while frontier:
            nxt = []
            for u in frontier:
                for s in steps:
                    v = self.spec.multiply(u, s)
                    if len(v) <= cap and v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return (w for w in seen if len(w) <= L)


class Intersection(Subgroup):
    """H ∩ c J c⁻¹."""

    def __init__(self, H: Subgroup, c: str, J: Subgroup):
        super().__init__(H.spec)
        self.H, self.c, self.J = H, c, J
        self.label = f"({H.label}&{c or 'e'}{J.label}{inverse_word(c) or ''})" if c else f"({H.label}&{J.label})"

    def _elements(self, L):
        ci = inverse_word(self.c)
        J = self.J.elements(L + 2 * len(self.c))
        return (h for h in self.H.elements(L) if self.spec.multiply(ci, h, self.c) in J)


def as_subgroup(spec, s) -> Subgroup:
    if isinstance(s, Subgroup):
        return s
    if isinstance(s, str):
        s = [s]
    return Generated(spec, list(s))


@dataclass
class CosetFamily:
    ball: CayleyBall
    subgroups: list
    cosets: list
    tags: list
    xi_threshold: float
    core_radius: int
    delta: float
    K: float
    R_used: float
    _geometry: Optional[FamilyGeometry] = field(default=None, repr=False)

    @property
    def graph(self):
        return self.ball.graph

    def geometry(self) -> FamilyGeometry:
        if self._geometry is None:
            self._geometry = FamilyGeometry(self.graph, self.cosets)
        return self._geometry

    def to_json(self) -> dict:
        return {"subgroups": [s.label for s in self.subgroups], "xi": self.xi_threshold,
                "core_radius": self.core_radius, "delta": self.delta, "K": self.K, "R_used": self.R_used,
                "cosets": [{"subgroup": t[0], "rep": t[1], "vertices": list(c.vertices)}
                           for c, t in zip(self.cosets, self.tags)]}


def orbit(ball: CayleyBall, H: Subgroup, a: str = "") -> np.ndarray:
    """Vertices of aH inside the ball."""
    r = ball.radius
    vs = set()
    for h in H.elements(r + len(a)):
        w = ball.spec.multiply(a, h)
        if len(w) <= r:
            vs.add(ball.index[w])
    return np.array(sorted(vs), dtype=np.int64)


def coset_family(ball: CayleyBall, subgroups, xi: Optional[float] = None,
                 core_radius: Optional[int] = None, delta: Optional[float] = None) -> CosetFamily:
    """Every coset aH meeting the core ball, deduplicated by vertex set.

    The core radius defaults to r - R_used - 1 so that distinct truncated
    cosets stay more than R_used apart; R_used = 2K+8δ+2 with K the
    quasiconvexity gauge of the subgroup orbits.
    """
    subs = [as_subgroup(ball.spec, s) for s in subgroups]
    g = ball.graph
    if delta is None:
        delta = host_delta(g)
    orbits = [subspace(g, orbit(ball, H), H.label) for H in subs]
    for H, o in zip(subs, orbits):
        if len(o) < 2:
            raise ArgumentError(f"subgroup {H.label} is trivial in the ball")
    K = family_gauge(g, orbits)
    R = default_R(K, delta)
    if core_radius is None:
        core_radius = max(0, ball.radius - math.ceil(R) - 1)
    if xi is None:
        xi = 8 * delta + 2 * K + 1
    seen = {}
    cosets, tags = [], []
    core = [w for w in ball.words if len(w) <= core_radius]
    for si, H in enumerate(subs):
        for a in core:
            vs = orbit(ball, H, a)
            key = vs.tobytes()
            if key in seen:
                continue
            seen[key] = len(cosets)
            rep = ball.words[int(vs[0])]
            cosets.append(subspace(g, vs, f"{rep or 'e'}{H.label}"))
            tags.append((si, rep))
    return CosetFamily(ball, subs, cosets, tags, xi, core_radius, delta, K, R)


def proximal_pairs(family: CosetFamily) -> list:
    """Ordered pairs (i, j), i != j, with diam p_{C_i}(C_j) >= xi."""
    fg = family.geometry()
    out = []
    for i in range(len(family.cosets)):
        dia = fg.proj_diams(i)
        for j in np.flatnonzero(dia >= family.xi_threshold):
            if j != i:
                out.append((i, int(j), int(dia[j])))
    return out


@dataclass
class IntersectionResult:
    subgroup: Intersection
    coset: SubspaceRef
    conjugator: str
    projection_haus: int
    bound: float
    violations: list = field(default_factory=list)


def _closest_pair(ball: CayleyBall, A: np.ndarray, B: np.ndarray) -> tuple:
    sub = ball.graph.dist[np.ix_(A, B)]
    i, j = divmod(int(np.argmin(sub)), len(B))
    return int(A[i]), int(B[j])


def intersection_approx(family: CosetFamily, i: int, j: int, slack: Optional[float] = None) -> IntersectionResult:
    """p(H ∩ g J g⁻¹) for cosets C_i = pH, C_j = pgJ, where p, pg realise
    d(C_i, C_j); checked against p_{C_i}(C_j) in Hausdorff distance."""
    ball = family.ball
    fg = family.geometry()
    dia = fg.proj_diams(i)[j]
    if i == j or dia < family.xi_threshold:
        raise ArgumentError(f"cosets {i} and {j} are not a proximal pair")
    (si, _), (sj, _) = family.tags[i], family.tags[j]
    A, B = family.cosets[i].arr, family.cosets[j].arr
    p, q = _closest_pair(ball, A, B)
    pw, qw = ball.words[p], ball.words[q]
    c = ball.spec.multiply(inverse_word(pw), qw)
    K = Intersection(family.subgroups[si], c, family.subgroups[sj])
    vs = orbit(ball, K, pw)
    sub = subspace(ball.graph, vs, f"{pw or 'e'}{K.label}")
    proj = A[fg.projections(i)[j]]
    D = ball.graph.dist[np.ix_(vs, proj)]
    h = int(max(D.min(axis=1).max(), D.min(axis=0).max()))
    if slack is None:
        slack = 2 * family.xi_threshold
    bound = 2 * len(c) + slack
    res = IntersectionResult(K, sub, c, h, bound)
    if h > bound:
        res.violations.append(Violation("intersection_vs_projection", bound, h, [i, j]))
    return res


@dataclass
class ClosureTrace:
    levels: list
    stabilized_at: Optional[int]
    added_per_level: list
    family: CosetFamily
    classes: EquivClasses
    proximal_counts: list
    height_cap: int
    boundary_flags: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def stabilized(self) -> bool:
        return self.stabilized_at is not None

    @property
    def subgroups(self) -> list:
        return self.family.subgroups

    def to_json(self) -> dict:
        return {"levels": self.levels, "stabilized": self.stabilized, "stabilized_at": self.stabilized_at,
                "added_per_level": self.added_per_level, "proximal_counts": self.proximal_counts,
                "height_cap": self.height_cap, "boundary_flags": self.boundary_flags,
                "classes": self.classes.to_json(), "family": self.family.to_json(),
                "violations": [v.to_json() for v in self.violations]}


def prox_closure(ball: CayleyBall, subgroups, height_cap: int = 4, xi: Optional[float] = None,
                 core_radius: Optional[int] = None, R: Optional[float] = None) -> ClosureTrace:
    """Iterate F -> F + Prox(F) up to Hausdorff class until nothing new
    appears or height_cap rounds have run."""
    if height_cap < 1:
        raise ArgumentError("height_cap must be at least 1")
    subs = [as_subgroup(ball.spec, s) for s in subgroups]
    # duplicate entries collapse to one
    uniq, keys = [], set()
    for H in subs:
        k = orbit(ball, H).tobytes()
        if k not in keys:
            keys.add(k)
            uniq.append(H)
    subs = uniq
    fam = coset_family(ball, subs, xi, core_radius)
    xi, core_radius = fam.xi_threshold, fam.core_radius
    levels = [[H.label for H in subs]]
    added, counts, flags, viol = [], [], [], []
    stab = None
    r = ball.radius
    depth = ball.graph.dist[0]
    for level in range(height_cap + 1):
        Rl = fam.R_used if R is None else R
        pairs = proximal_pairs(fam)
        counts.append(len(pairs))
        fg = fam.geometry()
        new = []
        for i, j, _ in pairs:
            res = intersection_approx(fam, i, j)
            viol.extend(res.violations)
            vs = res.coset.arr
            if len(vs) < 2:
                continue
            # compare the identity translate with every existing coset and new orbit
            base = orbit(ball, res.subgroup)
            if len(base) < 2:
                continue
            known = False
            sup_to = fg.DT[:, base].max(axis=1)
            back = np.array([ball.graph.dist[np.ix_(c.arr, base)].min(axis=1).max() for c in fam.cosets])
            if (np.maximum(sup_to, back) <= Rl).any():
                known = True
            for _, o in new:
                D = ball.graph.dist[np.ix_(o, base)]
                if max(D.min(axis=0).max(), D.min(axis=1).max()) <= Rl:
                    known = True
                    break
            if not known:
                new.append((res.subgroup, base))
                if depth[base].max() >= r:
                    flags.append(res.subgroup.label)
        if not new:
            stab = level
            break
        if level == height_cap:
            break
        added.append([H.label for H, _ in new])
        subs = subs + [H for H, _ in new]
        levels.append([H.label for H in subs])
        fam = coset_family(ball, subs, xi, core_radius)
    classes = equivalence_classes(ball.graph, fam.cosets, fam.R_used if R is None else R, fam.geometry(),
                                  [ball.spec.shortlex_key(t[1]) for t in fam.tags])
    return ClosureTrace(levels, stab, added, fam, classes, counts, height_cap, flags, viol)


def _conjugate_orbit(ball: CayleyBall, H: Subgroup, g: str) -> frozenset:
    r = ball.radius
    gi = inverse_word(g)
    out = set()
    for h in H.elements(r + 2 * len(g)):
        w = ball.spec.multiply(g, h, gi)
        if len(w) <= r:
            out.add(ball.index[w])
    return frozenset(out)


def height_probe(ball: CayleyBall, subgroups, xi: Optional[float] = None, c_max: int = 4,
                 conj_radius: int = 2) -> dict:
    """Largest c <= c_max such that c distinct conjugates gHg⁻¹ (|g| <=
    conj_radius, H in the family) meet in a set of diameter >= xi."""
    if c_max < 1:
        raise ArgumentError("c_max must be at least 1")
    subs = [as_subgroup(ball.spec, s) for s in subgroups]
    D = ball.graph.dist
    if xi is None:
        fam = coset_family(ball, subs, core_radius=0)
        xi = fam.xi_threshold
    conj = {}
    for H in subs:
        for g in ball.words:
            if len(g) > conj_radius:
                break
            o = _conjugate_orbit(ball, H, g)
            conj.setdefault(o, f"{g or 'e'}{H.label}")
    orbits = list(conj)
    names = [conj[o] for o in orbits]

    def big(s):
        if len(s) < 2:
            return False
        a = np.fromiter(s, dtype=np.int64)
        return D[np.ix_(a, a)].max() >= xi

    best, wit = (1, [names[0]]) if orbits else (0, [])
    stack = [(k, orbits[k], [k]) for k in range(len(orbits))]
    while stack:
        k, common, chain = stack.pop()
        if len(chain) > best:
            best, wit = len(chain), [names[c] for c in chain]
        if len(chain) == c_max:
            continue
        for nk in range(k + 1, len(orbits)):
            cm = common & orbits[nk]
            if big(cm):
                stack.append((nk, cm, chain + [nk]))
    return {"height": best, "witness": wit, "xi": xi, "conjugates": len(orbits), "conj_radius": conj_radius}
