"""Graph producers: Cayley-graph balls from rewriting systems, approximation
graphs of finite metric spaces, and small fixtures."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, NonConfluentError, StructuralError
from .graph_core import MetricGraph
from .rng import XorShift64Star


def inverse_word(w: str) -> str:
    return w[::-1].swapcase()


@dataclass
class PresentationSpec:
    """Generators are lowercase letters; the uppercase letter is the inverse.

    Free reductions missing from ``rules`` are appended.  Rules are applied
    first-match in list order, leftmost occurrence.
    """
    generators: list
    rules: list = field(default_factory=list)
    radius: int = 1

    def __post_init__(self):
        gens = [str(g) for g in self.generators]
        for g in gens:
            if len(g) != 1 or not g.isalpha() or not g.islower():
                raise ArgumentError(f"generator {g!r} must be a single lowercase letter")
        if len(set(gens)) != len(gens):
            raise ArgumentError("duplicate generator")
        if self.radius < 0:
            raise ArgumentError("radius must be nonnegative")
        self.generators = gens
        self.alphabet = "".join(g + g.upper() for g in gens)
        self._rank = {c: i for i, c in enumerate(self.alphabet)}
        rules = [(str(l), str(r)) for l, r in self.rules]
        have = {l for l, _ in rules}
        for g in gens:
            for lhs in (g + g.upper(), g.upper() + g):
                if lhs not in have:
                    rules.append((lhs, ""))
        for l, r in rules:
            if any(c not in self._rank for c in l + r):
                raise ArgumentError(f"rule {l!r}->{r!r} uses letters outside the alphabet")
            if not self.shortlex_less(r, l):
                raise ArgumentError(f"rule {l!r}->{r!r} is not shortlex-reducing")
        self.rules = rules
        self._reduce = lru_cache(maxsize=None)(lambda w: self._reduce_with(w, self.rules))
        self._reduce_rev = lru_cache(maxsize=None)(lambda w: self._reduce_with(w, self.rules[::-1]))

    def shortlex_key(self, w: str):
        return (len(w), [self._rank[c] for c in w])

    def shortlex_less(self, a: str, b: str) -> bool:
        return self.shortlex_key(a) < self.shortlex_key(b)

    @staticmethod
    def _reduce_with(w: str, rules) -> str:
        changed = True
        while changed:
            changed = False
            for lhs, rhs in rules:
                i = w.find(lhs)
                if i >= 0:
                    w = w[:i] + rhs + w[i + len(lhs):]
                    changed = True
                    break
        return w

    def reduce(self, w: str) -> str:
        return self._reduce(w)

    def multiply(self, *words: str) -> str:
        out = ""
        for w in words:
            for c in w:
                out = self._reduce(out + c)
        return out

    def check_confluence(self, length: int | None = None):
        """Compare two normal forms of every word up to ``length`` letters.

        The forms are built letter by letter under the given rule order and
        its reverse; both are irreducible descendants of the word, so any
        disagreement is a witness of non-confluence.  Words sharing the
        same pair of forms behave identically, so one representative each
        is kept.
        """
        if length is None:
            length = min(2 * self.radius, 10)
        states = {("", ""): ""}
        for _ in range(length):
            nxt = {}
            for (ra, rb), w in states.items():
                for c in self.alphabet:
                    na, nb = self._reduce(ra + c), self._reduce_rev(rb + c)
                    if na != nb:
                        raise NonConfluentError(w + c, (na, nb))
                    nxt.setdefault((na, nb), w + c)
            states = nxt
        return True

    @classmethod
    def from_json(cls, obj) -> "PresentationSpec":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        return cls(list(obj.get("generators", [])), [tuple(r) for r in obj.get("rules", [])],
                   int(obj.get("radius", 1)))

    def to_json(self) -> dict:
        return {"generators": list(self.generators), "rules": [list(r) for r in self.rules],
                "radius": self.radius}


@dataclass
class CayleyBall:
    graph: MetricGraph
    words: list
    spec: PresentationSpec

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    @property
    def radius(self) -> int:
        return self.spec.radius

    def vertex(self, word: str) -> int:
        """Id of the group element spelled by ``word`` (KeyError outside the ball)."""
        return self.index[self.spec.reduce(word)]

    def word_length(self, v: int) -> int:
        return len(self.words[v])


def cayley_ball(spec: PresentationSpec, check: bool = True) -> CayleyBall:
    """Ball of radius ``spec.radius`` about the identity in the Cayley graph.

    Vertices are normal forms sorted shortlex, so the identity is 0.  An
    edge joins w and w·s when both lie in the ball.
    """
    if check:
        spec.check_confluence()
    r = spec.radius
    seen = {""}
    frontier = [""]
    while frontier:
        nxt = []
        for w in frontier:
            for c in spec.alphabet:
                v = spec.reduce(w + c)
                if len(v) <= r and v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    words = sorted(seen, key=spec.shortlex_key)
    index = {w: i for i, w in enumerate(words)}
    edges = set()
    for i, w in enumerate(words):
        for c in spec.alphabet:
            j = index.get(spec.reduce(w + c))
            if j is not None and j != i:
                edges.add((min(i, j), max(i, j)))
    g = MetricGraph(len(words), sorted(edges), name=f"cayley_r{r}")
    return CayleyBall(g, words, spec)


def free_group(rank: int, radius: int) -> PresentationSpec:
    return PresentationSpec(list("abcdefgh"[:rank]), [], radius)


def integers(radius: int) -> PresentationSpec:
    return PresentationSpec(["a"], [], radius)


def free_times_c2(radius: int) -> PresentationSpec:
    """F(a,b) x Z/2 with central involution t; shortlex alphabet a A b B t T."""
    rules = [("tt", ""), ("T", "t"), ("ta", "at"), ("tA", "At"), ("tb", "bt"), ("tB", "Bt")]
    return PresentationSpec(["a", "b", "t"], rules, radius)


# ----------------------------------------------------------------------
# approximation graphs
# ----------------------------------------------------------------------

@dataclass
class NetSpec:
    dist: np.ndarray
    zeta: float
    lam: float | None = None

    def __post_init__(self):
        D = np.asarray(self.dist, dtype=np.float64)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ArgumentError("distance table must be square")
        if self.zeta <= 0:
            raise ArgumentError("zeta must be positive")
        if (np.diag(D) != 0).any() or (D != D.T).any() or (D < 0).any():
            raise ArgumentError("distance table is not a metric")
        n = len(D)
        for k in range(n):
            if (D > D[:, k:k + 1] + D[k:k + 1, :] + 1e-9).any():
                raise ArgumentError("distance table violates the triangle inequality")
        self.dist = D
        if self.lam is None:
            self.lam = 5 * self.zeta

    @property
    def point_count(self) -> int:
        return len(self.dist)


@dataclass
class Approximation:
    graph: MetricGraph
    net: list
    omega: np.ndarray


def approximation_graph(spec: NetSpec) -> Approximation:
    """Greedy maximal zeta-net (points pairwise >= zeta apart, ascending ids)
    joined whenever the input distance is at most lambda."""
    D = spec.dist
    net = []
    for p in range(spec.point_count):
        if all(D[p, q] >= spec.zeta for q in net):
            net.append(p)
    sub = D[np.ix_(net, net)]
    edges = [(i, j) for i in range(len(net)) for j in range(i + 1, len(net)) if sub[i, j] <= spec.lam]
    g = MetricGraph(len(net), edges, name="approximation")
    if not g._connected():
        raise StructuralError(f"lambda={spec.lam} leaves the approximation graph disconnected")
    omega = np.argmin(D[:, net], axis=1).astype(np.int64)
    return Approximation(g, net, omega)


# ----------------------------------------------------------------------
# fixtures
# ----------------------------------------------------------------------

def path_graph(n: int) -> MetricGraph:
    return MetricGraph(n, [(i, i + 1) for i in range(n - 1)], name=f"P{n}")


def cycle_graph(n: int) -> MetricGraph:
    return MetricGraph(n, [(i, (i + 1) % n) for i in range(n)], name=f"C{n}")


def random_tree(n: int, seed: int = 0) -> MetricGraph:
    """Uniform attachment tree: vertex i joins a random earlier vertex."""
    rng = XorShift64Star(seed)
    return MetricGraph(n, [(rng.below(i), i) for i in range(1, n)], name=f"tree{n}")


def star_fixture(ray_count: int, ray_length: int) -> MetricGraph:
    """Rays I_0, ..., I_m (m = ray_count) of ray_length edges glued at the
    centre 0.  Vertex 1 + i*L + (k-1) sits at distance k on ray i.
    Subspaces: F_n = I_0 u I_n for n = 1..m, then I_0."""
    if ray_count < 1 or ray_length < 1:
        raise ArgumentError("ray_count and ray_length must be positive")
    m, L = ray_count, ray_length
    n = 1 + (m + 1) * L
    edges = []
    rays = []
    for i in range(m + 1):
        ray = [1 + i * L + k for k in range(L)]
        edges.append((0, ray[0]))
        edges.extend((ray[k], ray[k + 1]) for k in range(L - 1))
        rays.append(ray)
    subs = {}
    for j in range(1, m + 1):
        subs[f"F{j}"] = [0] + rays[0] + rays[j]
    subs["I0"] = [0] + rays[0]
    return MetricGraph(n, edges, subspaces=subs, name=f"star{m}x{L}")


def star_members(g: MetricGraph) -> list:
    """Subspace names of a star fixture in registration order F1..Fm, I0."""
    fs = sorted((k for k in g.subspaces if k.startswith("F")), key=lambda k: int(k[1:]))
    return fs + ["I0"]
