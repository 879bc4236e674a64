"""Command line entry point and experiment pipelines.

A config is a JSON object::

    {"seed": 0, "output_dir": "out",
     "pipeline": ["gen", "prox-close", "promote", "hhs-verify"],
     "gen": {"kind": "free", "rank": 2, "radius": 6},
     "prox-close": {"subgroups": [["a"]]}}

Every stage writes one JSON artifact; ``summary.csv`` collects the
measured constants.  Outputs carry no timings, so identical configs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import click
import numpy as np

from . import _config
from .coarse_geometry import named_subspace, subspace
from .coning import ConedGraph
from .deelect_algo import good_quasigeodesic
from .errors import ArgumentError, CoarseForgeError
from .factor_systems import check_factor_system, check_weak_factor_system, promote
from .generators import PresentationSpec, cayley_ball, cycle_graph, free_group, free_times_c2, integers, \
    path_graph, random_tree, star_fixture, star_members
from .graph_core import MetricGraph, hyperbolicity
from .group_closure import coset_family, prox_closure
from .hhs_verifier import build_hhs, verify_axioms
from .rng import XorShift64Star

STAGES = ("gen", "delta", "cone", "deelectrify", "factor-check", "prox-close", "promote", "hhs-verify")
NEEDS = {"gen": (), "delta": ("gen",), "cone": ("gen",), "deelectrify": ("cone",), "factor-check": ("gen",),
         "prox-close": ("gen",), "promote": ("prox-close|factor-check",),
         "hhs-verify": ("promote|factor-check",)}
ARTIFACT = {"gen": "graph.json", "delta": "delta.json", "cone": "cone.json", "deelectrify": "deelectrify.json",
            "factor-check": "factor_check.json", "prox-close": "closure.json", "promote": "promote.json",
            "hhs-verify": "hhs_verify.json"}
MAX_VERTICES = 20000
GRAPH_KINDS = ("free", "integers", "free_c2", "presentation", "star", "tree", "path", "cycle", "file")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isinf(f):
            return "inf"
        return int(f) if f.is_integer() else f
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if hasattr(obj, "to_json"):
        return _clean(obj.to_json())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1, ensure_ascii=False) + "\n"


@dataclass
class ExperimentConfig:
    pipeline: list
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        pipe = list(obj.get("pipeline", ["gen"]))
        params = {s: dict(obj.get(s, {})) for s in STAGES}
        cfg = cls(pipe, params, int(obj.get("seed", 0)), str(obj.get("output_dir", "out")))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def stage(self, name: str) -> dict:
        return self.params.setdefault(name, {})

    def validate(self):
        seen = []
        for s in self.pipeline:
            if s not in STAGES:
                raise ArgumentError(f"unknown stage {s!r}")
            if s in seen:
                raise ArgumentError(f"stage {s!r} listed twice")
            for need in NEEDS[s]:
                if not any(n in seen for n in need.split("|")):
                    raise ArgumentError(f"stage {s!r} needs {need.replace('|', ' or ')} earlier in the pipeline")
            seen.append(s)
        if self.seed < 0:
            raise ArgumentError("seed must be nonnegative")
        g = self.stage("gen")
        kind = g.get("kind", "free")
        if kind not in GRAPH_KINDS:
            raise ArgumentError(f"unknown graph kind {kind!r}")
        if int(g.get("radius", 1)) < 0:
            raise ArgumentError("radius must be nonnegative")
        est = estimated_vertices(g)
        if est > MAX_VERTICES:
            raise ArgumentError(f"the requested graph has about {est} vertices; dense distance tables "
                                f"are limited to {MAX_VERTICES}")
        if "prox-close" in self.pipeline:
            if kind not in ("free", "integers", "free_c2", "presentation"):
                raise ArgumentError("prox-close needs a Cayley ball")
            if not self.stage("prox-close").get("subgroups"):
                raise ArgumentError("prox-close needs subgroups")
            if int(self.stage("prox-close").get("height_cap", 4)) < 1:
                raise ArgumentError("height_cap must be at least 1")
        if "hhs-verify" in self.pipeline and int(self.stage("hhs-verify").get("sample_budget", 2000)) <= 0:
            raise ArgumentError("sample_budget must be positive")
        if "factor-check" in self.pipeline and self.stage("factor-check").get("weak") \
                and int(self.stage("factor-check").get("theta_max", 10)) < 1:
            raise ArgumentError("theta_max must be positive")


def estimated_vertices(p: dict) -> int:
    """Vertex count of a generated ball, before building it (0 if unknown)."""
    kind = p.get("kind", "free")
    r = int(p.get("radius", 3))
    if kind == "integers":
        return 2 * r + 1
    if kind in ("free", "free_c2"):
        k = 2 if kind == "free_c2" else int(p.get("rank", 2))

        def ball(r):
            if r < 0:
                return 0
            return 2 * r + 1 if k == 1 else 1 + 2 * k * ((2 * k - 1) ** r - 1) // (2 * k - 2)
        # F x C2: a reduced word, optionally followed by the central involution
        return ball(r) + ball(r - 1) if kind == "free_c2" else ball(r)
    if kind in ("tree", "path", "cycle"):
        return int(p.get("n", 0))
    if kind == "star":
        return 1 + (int(p.get("rays", 3)) + 1) * int(p.get("length", 5))
    return 0


class PipelineState:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.graph: Optional[MetricGraph] = None
        self.ball = None
        self.coned: Optional[ConedGraph] = None
        self.weak = None
        self.factor = None
        self.closure = None
        self.summary = []

    def record(self, stage: str, prefix: str, obj):
        for k, v in sorted(obj.items()):
            if isinstance(v, dict):
                self.record(stage, f"{prefix}{k}.", v)
            elif isinstance(v, (bool, np.bool_)):
                self.summary.append((stage, prefix + k, int(v)))
            elif isinstance(v, (int, float, np.integer, np.floating)) and v is not None:
                self.summary.append((stage, prefix + k, _clean(v)))


def build_graph(p: dict):
    kind = p.get("kind", "free")
    r = int(p.get("radius", 3))
    if kind in ("free", "integers", "free_c2", "presentation"):
        if kind == "free":
            spec = free_group(int(p.get("rank", 2)), r)
        elif kind == "integers":
            spec = integers(r)
        elif kind == "free_c2":
            spec = free_times_c2(r)
        else:
            spec = PresentationSpec(list(p["generators"]), [tuple(x) for x in p.get("rules", [])], r)
        ball = cayley_ball(spec)
        return ball.graph, ball
    if kind == "star":
        return star_fixture(int(p.get("rays", 3)), int(p.get("length", 5))), None
    if kind == "tree":
        return random_tree(int(p.get("n", 50)), int(p.get("seed", 0))), None
    if kind == "path":
        return path_graph(int(p.get("n", 10))), None
    if kind == "cycle":
        return cycle_graph(int(p.get("n", 6))), None
    with open(p["path"]) as fh:
        return MetricGraph.from_json(fh.read()), None


def build_family(st: PipelineState, spec: Optional[dict]) -> list:
    g = st.graph
    spec = spec or {}
    kind = spec.get("kind")
    if kind is None:
        kind = "named" if g.subspaces else ("closure" if st.closure is not None else "cosets")
    if kind == "named":
        names = spec.get("names") or (star_members(g) if any(k.startswith("F") for k in g.subspaces)
                                      else sorted(g.subspaces))
        return [named_subspace(g, k) for k in names]
    if kind == "vertices":
        return [subspace(g, vs, f"M{i}") for i, vs in enumerate(spec["members"])]
    if kind == "closure":
        if st.closure is None:
            raise ArgumentError("family kind 'closure' needs the prox-close stage")
        return list(st.closure.family.cosets)
    if kind == "cosets":
        if st.ball is None:
            raise ArgumentError("coset families need a Cayley ball")
        fam = coset_family(st.ball, spec.get("subgroups", [["a"]]), core_radius=spec.get("core_radius"))
        return list(fam.cosets)
    raise ArgumentError(f"unknown family kind {kind!r}")


def _pairs(st: PipelineState, p: dict, n: int) -> list:
    if "pairs" in p:
        return [(int(a), int(b)) for a, b in p["pairs"]]
    rng = XorShift64Star(st.cfg.seed)
    out = []
    for _ in range(int(p.get("samples", 10))):
        out.append((rng.below(n), rng.below(n)))
    return out


def stage_gen(st, p):
    st.graph, st.ball = build_graph(p)
    obj = st.graph.to_json()
    if st.ball is not None:
        obj["words"] = list(st.ball.words)
        obj["presentation"] = st.ball.spec.to_json()
    return obj, True, {"vertices": st.graph.n, "edges": len(obj["edges"])}


def stage_delta(st, p):
    rep = hyperbolicity(st.graph, four_point=bool(p.get("four_point", True)), seed=st.cfg.seed)
    obj = rep.to_json()
    return obj, True, {"delta_thin": rep.delta_thin, "delta_4pt": rep.delta_4pt}


def stage_cone(st, p):
    fam = build_family(st, p.get("family"))
    st.coned = ConedGraph(st.graph, fam, "cone")
    obj = st.coned.to_json()
    return obj, True, {"members": len(fam), "cone_edges": len(obj["cone_edges"])}


def stage_deelectrify(st, p):
    runs = []
    worst_c, worst_e, contained = 0.0, 0.0, True
    for x, y in _pairs(st, p, st.graph.n):
        res = good_quasigeodesic(st.coned, x, y)
        runs.append({"x": x, "y": y, "result": res.to_json()})
        contained &= bool(res.step1.get("contained", True))
        worst_c = max(worst_c, res.qg_tilde.best[0])
        worst_e = max(worst_e, res.qg_tilde.best[1])
    obj = {"runs": runs, "all_contained": contained}
    return obj, contained, {"runs": len(runs), "tilde_C_max": worst_c, "tilde_eps_max": worst_e,
                            "step1_contained": contained}


def stage_factor_check(st, p):
    fam = build_family(st, p.get("family"))
    if p.get("weak"):
        ff = check_weak_factor_system(st.graph, fam, int(p.get("theta_max", 10)), Dprime=p.get("Dprime"))
        st.weak = ff
    else:
        ff = check_factor_system(st.graph, fam)
        st.factor = ff
    return ff.to_json(), ff.ok, dict(ff.constants, ok=ff.ok)


def stage_prox_close(st, p):
    tr = prox_closure(st.ball, p["subgroups"], int(p.get("height_cap", 4)), p.get("xi"), p.get("core_radius"))
    st.closure = tr
    ok = tr.stabilized and not tr.violations
    return tr.to_json(), ok, {"stabilized": tr.stabilized,
                              "stabilized_at": tr.stabilized_at if tr.stabilized else -1,
                              "classes": len(tr.classes.classes), "cosets": len(tr.family.cosets),
                              "xi": tr.family.xi_threshold, "R_used": tr.family.R_used}


def stage_promote(st, p):
    weak = st.weak
    if weak is None:
        weak = check_weak_factor_system(st.graph, build_family(st, p.get("family")), int(p.get("theta_max", 10)))
        st.weak = weak
    if not weak.ok:
        return {"weak": weak.to_json(), "promoted": None}, False, {"weak_ok": False}
    ff = promote(st.graph, weak)
    st.factor = ff
    return {"weak": weak.to_json(), "promoted": ff.to_json()}, ff.ok, dict(ff.constants, ok=ff.ok)


def stage_hhs_verify(st, p):
    if st.factor is None or not st.factor.ok:
        raise ArgumentError("hhs-verify needs a verified factor family")
    s = build_hhs(st.graph, st.factor)
    rep = verify_axioms(s, int(p.get("sample_budget", 2000)), st.cfg.seed)
    obj = {"structure": s.to_json(), "report": rep.to_json()}
    return obj, rep.ok, dict(rep.constants(), violations=len(rep.violations))


RUNNERS = {"gen": stage_gen, "delta": stage_delta, "cone": stage_cone, "deelectrify": stage_deelectrify,
           "factor-check": stage_factor_check, "prox-close": stage_prox_close, "promote": stage_promote,
           "hhs-verify": stage_hhs_verify}


def failure_lines(obj: dict) -> list:
    """Human-readable witnesses from a failed stage result."""
    if "weak" in obj and "promoted" in obj:
        obj = obj["promoted"] or obj["weak"]
    out = []
    cond3 = obj.get("items", {}).get("3_anchored_geodesics", {})
    for f in cond3.get("failures", []):
        out.append(f"  condition (3) fails for {f['name']}: v={f['v']} theta={f['theta']}")
    for v in obj.get("failures", []):
        if v["check"] != "item3_anchored_geodesics":
            out.append(f"  {v['check']}: measured {v['measured']} against {v['bound']} at {v['witnesses']}")
    return out[:20]


def run(cfg: ExperimentConfig, echo=None) -> int:
    """Run the pipeline, writing artifacts; returns 0 on success, 1 when a
    stage fails (its report is still written and later stages are skipped)."""
    cfg.validate()
    os.makedirs(cfg.output_dir, exist_ok=True)
    st = PipelineState(cfg)
    status = []
    code = 0
    for name in cfg.pipeline:
        obj, ok, consts = RUNNERS[name](st, cfg.stage(name))
        with open(os.path.join(cfg.output_dir, ARTIFACT[name]), "w") as fh:
            fh.write(dumps({"stage": name, "ok": ok, "params": cfg.stage(name), "seed": cfg.seed,
                            "result": obj}))
        st.record(name, "", consts)
        status.append({"stage": name, "ok": ok, "artifact": ARTIFACT[name]})
        if echo:
            echo(f"{name}: {'ok' if ok else 'FAILED'} -> {ARTIFACT[name]}")
            if not ok:
                for line in failure_lines(obj):
                    echo(line)
        if not ok:
            code = 1
            break
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "field", "value"])
    for row in st.summary:
        w.writerow(row)
    with open(os.path.join(cfg.output_dir, "summary.csv"), "w") as fh:
        fh.write(buf.getvalue())
    with open(os.path.join(cfg.output_dir, "run.json"), "w") as fh:
        fh.write(dumps({"pipeline": cfg.pipeline, "seed": cfg.seed, "stages": status, "exit_code": code}))
    return code


# ----------------------------------------------------------------------
# click front end
# ----------------------------------------------------------------------

def _common(f):
    f = click.option("--out", "out", type=click.Path(file_okay=False), default=None, help="Output directory.")(f)
    f = click.option("--threads", type=int, default=None, help="Worker threads (COARSEFORGE_THREADS fallback).")(f)
    f = click.option("--seed", type=int, default=None, help="Seed for sampled sweeps.")(f)
    f = click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="JSON experiment config.")(f)
    return f


def _load(config, seed, threads, out) -> dict:
    obj = {}
    if config:
        with open(config) as fh:
            obj = json.load(fh)
    if seed is not None:
        obj["seed"] = seed
    if out is not None:
        obj["output_dir"] = out
    if threads is not None:
        if threads < 1:
            raise click.BadParameter("threads must be positive", param_hint="--threads")
        _config.set_threads(threads)
    return obj


def _chain(obj: dict, target: str) -> list:
    pipe = obj.get("pipeline") or []
    if target in pipe:
        return pipe[:pipe.index(target) + 1]
    chain, want = [], target
    defaults = {"deelectrify": "cone", "promote": "prox-close" if "prox-close" in obj else "factor-check",
                "hhs-verify": "promote" if ("promote" in obj or "prox-close" in obj) else "factor-check"}
    while True:
        chain.insert(0, want)
        if want == "gen":
            return chain
        want = defaults.get(want, "gen")


def _execute(obj: dict, target: Optional[str]) -> None:
    if target is not None:
        obj["pipeline"] = _chain(obj, target)
    try:
        cfg = ExperimentConfig.from_dict(obj)
        code = run(cfg, click.echo)
    except (ArgumentError, KeyError) as e:
        raise click.UsageError(str(e))
    except CoarseForgeError as e:
        click.echo(f"error: {e}", err=True)
        raise SystemExit(1)
    raise SystemExit(code)


@click.group()
def main():
    """Coarse-geometry experiments on graphs and Cayley balls."""


@main.command()
@_common
@click.option("--kind", type=click.Choice(GRAPH_KINDS), default=None)
@click.option("--radius", type=int, default=None)
@click.option("--rank", type=int, default=None)
def gen(config, seed, threads, out, kind, radius, rank):
    """Generate a graph."""
    obj = _load(config, seed, threads, out)
    g = obj.setdefault("gen", {})
    for k, v in (("kind", kind), ("radius", radius), ("rank", rank)):
        if v is not None:
            g[k] = v
    _execute(obj, "gen")


@main.command()
@_common
def delta(config, seed, threads, out):
    """Hyperbolicity constants of the generated graph."""
    _execute(_load(config, seed, threads, out), "delta")


@main.command()
@_common
def cone(config, seed, threads, out):
    """Cone off a family."""
    _execute(_load(config, seed, threads, out), "cone")


@main.command()
@_common
def deelectrify(config, seed, threads, out):
    """Good quasi-geodesics and their de-electrifications."""
    _execute(_load(config, seed, threads, out), "deelectrify")


@main.command("factor-check")
@_common
@click.option("--weak/--strict", default=None, help="Weak-factor-system check instead of the factor check.")
@click.option("--theta-max", type=int, default=None)
def factor_check(config, seed, threads, out, weak, theta_max):
    """Factor-system or weak-factor-system check."""
    obj = _load(config, seed, threads, out)
    p = obj.setdefault("factor-check", {})
    if weak is not None:
        p["weak"] = weak
    if theta_max is not None:
        p["theta_max"] = theta_max
    _execute(obj, "factor-check")


@main.command("prox-close")
@_common
@click.option("--presentation", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON presentation (generators, rules, radius).")
@click.option("--subgroups", default=None, help="Subgroup generators, e.g. 'a;b' or 'aa,aaa'.")
@click.option("--kind", type=click.Choice(("free", "integers", "free_c2")), default=None)
@click.option("--radius", type=int, default=None)
@click.option("--xi", type=float, default=None)
@click.option("--height-cap", type=int, default=None)
def prox_close(config, seed, threads, out, presentation, subgroups, kind, radius, xi, height_cap):
    """Prox closure of a subgroup family."""
    obj = _load(config, seed, threads, out)
    g = obj.setdefault("gen", {})
    if kind is not None:
        g["kind"] = kind
    if presentation:
        with open(presentation) as fh:
            pres = json.load(fh)
        g.update({"kind": "presentation", "generators": pres["generators"], "rules": pres.get("rules", []),
                  "radius": pres.get("radius", g.get("radius", 3))})
    if radius is not None:
        g["radius"] = radius
    p = obj.setdefault("prox-close", {})
    if subgroups:
        p["subgroups"] = [[w for w in grp.split(",") if w] for grp in subgroups.split(";")]
    if xi is not None:
        p["xi"] = xi
    if height_cap is not None:
        p["height_cap"] = height_cap
    _execute(obj, "prox-close")


@main.command("promote")
@_common
def promote_cmd(config, seed, threads, out):
    """Promote a weak factor system to a factor system."""
    _execute(_load(config, seed, threads, out), "promote")


@main.command("hhs-verify")
@_common
@click.option("--sample-budget", type=int, default=None)
def hhs_verify(config, seed, threads, out, sample_budget):
    """Build the hierarchical structure and verify its axioms."""
    obj = _load(config, seed, threads, out)
    if sample_budget is not None:
        obj.setdefault("hhs-verify", {})["sample_budget"] = sample_budget
    _execute(obj, "hhs-verify")


@main.command("run")
@_common
def run_cmd(config, seed, threads, out):
    """Run the configured pipeline."""
    if not config:
        raise click.UsageError("run needs --config")
    _execute(_load(config, seed, threads, out), None)


if __name__ == "__main__":
    main()
