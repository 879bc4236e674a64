import csv
import json
import os

import pytest
from click.testing import CliRunner

from coarseforge.cli import ExperimentConfig, main, run
from coarseforge.errors import ArgumentError

STAR = {"pipeline": ["gen", "factor-check"], "gen": {"kind": "star", "rays": 3, "length": 5},
        "factor-check": {"weak": True, "theta_max": 3}}
F2 = {"pipeline": ["gen", "prox-close", "promote", "hhs-verify"], "gen": {"kind": "free", "rank": 2, "radius": 5},
      "prox-close": {"subgroups": [["a"]]}, "promote": {"theta_max": 4}, "hhs-verify": {"sample_budget": 300}}


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _tree(d):
    return {f: open(os.path.join(d, f), "rb").read() for f in sorted(os.listdir(d))}


def test_gen_integers(tmp_path):
    out = tmp_path / "z5"
    r = CliRunner().invoke(main, ["gen", "--kind", "integers", "--radius", "5", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert sorted(os.listdir(out)) == ["graph.json", "run.json", "summary.csv"]
    g = json.loads((out / "graph.json").read_text())["result"]
    assert g["vertices"] == 11 and len(g["edges"]) == 10


def test_star_weak_check_fails_with_witness(tmp_path):
    out = tmp_path / "star"
    r = CliRunner().invoke(main, ["factor-check", "--config", _write(tmp_path, STAR), "--out", str(out)])
    assert r.exit_code == 1
    assert "condition (3) fails for I0: v=0 theta=1" in r.output
    rep = json.loads((out / "factor_check.json").read_text())
    assert rep["ok"] is False
    assert rep["result"]["items"]["3_anchored_geodesics"]["failures"][0]["name"] == "I0"
    assert json.loads((out / "run.json").read_text())["exit_code"] == 1


def test_star_strict_check_passes(tmp_path):
    r = CliRunner().invoke(main, ["factor-check", "--strict", "--config", _write(tmp_path, STAR),
                                  "--out", str(tmp_path / "o")])
    assert r.exit_code == 0, r.output


def test_full_pipeline(tmp_path):
    out = tmp_path / "f2"
    r = CliRunner().invoke(main, ["run", "--config", _write(tmp_path, F2), "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert set(os.listdir(out)) == {"graph.json", "closure.json", "promote.json", "hhs_verify.json",
                                    "summary.csv", "run.json"}
    rows = list(csv.reader(open(out / "summary.csv")))
    assert rows[0] == ["stage", "field", "value"]
    got = {(a, b): c for a, b, c in rows[1:]}
    assert got[("hhs-verify", "violations")] == "0"
    assert got[("hhs-verify", "complexity")] == "2"


def test_byte_identical_across_runs_and_threads(tmp_path):
    cfg = _write(tmp_path, F2)
    outs = []
    for k, threads in enumerate(["1", "8", "1"]):
        d = tmp_path / f"o{k}"
        r = CliRunner().invoke(main, ["run", "--config", cfg, "--threads", threads, "--out", str(d)])
        assert r.exit_code == 0, r.output
        outs.append(_tree(d))
    assert outs[0] == outs[1] == outs[2]


def test_subcommand_chains_prerequisites(tmp_path):
    out = tmp_path / "pc"
    r = CliRunner().invoke(main, ["prox-close", "--kind", "integers", "--subgroups", "aa,aaa", "--radius", "12",
                                  "--out", str(out)])
    assert r.exit_code == 0, r.output
    tr = json.loads((out / "closure.json").read_text())["result"]
    assert tr["stabilized"] and len(tr["classes"]["classes"]) == 1


@pytest.mark.parametrize("bad", [
    {"pipeline": ["gen", "gen"]},
    {"pipeline": ["promote"]},
    {"pipeline": ["gen"], "gen": {"kind": "torus"}},
    {"pipeline": ["gen", "prox-close"], "gen": {"kind": "star"}, "prox-close": {"subgroups": [["a"]]}},
    {"pipeline": ["gen", "prox-close"], "gen": {"kind": "free"}},
    {"pipeline": ["gen"], "gen": {"kind": "free", "radius": 12}},
])
def test_bad_config_is_a_usage_error(tmp_path, bad):
    with pytest.raises(ArgumentError):
        ExperimentConfig.from_dict(bad)
    r = CliRunner().invoke(main, ["run", "--config", _write(tmp_path, bad), "--out", str(tmp_path / "x")])
    assert r.exit_code == 2


def test_bad_threads(tmp_path):
    r = CliRunner().invoke(main, ["gen", "--threads", "0", "--out", str(tmp_path / "t")])
    assert r.exit_code == 2


def test_run_function_writes_summary(tmp_path):
    cfg = ExperimentConfig.from_dict({"pipeline": ["gen", "delta"], "gen": {"kind": "cycle", "n": 6},
                                      "output_dir": str(tmp_path / "c6")})
    assert run(cfg) == 0
    d = json.loads((tmp_path / "c6" / "delta.json").read_text())["result"]
    assert d["delta_4pt"] == 1
