import json
import subprocess
import sys

import pytest

from avseq.cli import main, parse_model, ConfigError

GOLDEN = "id parent prob e\n0 - . 1\n1 0 1/2 8/5\n2 0 1/2 1/5\n"


def run(*args, env=None):
    return subprocess.run([sys.executable, "-m", "avseq", *args], capture_output=True, text=True,
                          env=env)


def test_simulate_signwalk(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["simulate", "--model", "rademacher", "--instrument", "signwalk", "--alpha",
                 "0.05", "--T", "1000", "--seed", "7", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "path,t,value,reject" and len(lines) == 1001
    vals = [int(l.split(",")[2]) for l in lines[1:]]
    assert vals[0] in (0, 2) and all(0 <= v <= 20 for v in vals)


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for p in (a, b):
        main(["simulate", "--model", "gauss:0,1", "--instrument", "mixture-cs", "--alpha", "0.05",
              "--T", "50", "--seed", "3", "--output", str(p)])
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "path,t,center,radius"


def test_simulate_jsonl(tmp_path):
    out = tmp_path / "a.jsonl"
    main(["simulate", "--model", "cauchy", "--instrument", "dyadic-p", "--alpha", "0.1", "--T",
          "5", "--N", "2", "--format", "jsonl", "--output", str(out)])
    recs = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(recs) == 10 and set(recs[0]) == {"path", "t", "p", "reject"}


def test_missing_alpha_exits_2():
    r = run("simulate", "--model", "rademacher", "--instrument", "signwalk")
    assert r.returncode == 2 and "usage" in r.stderr


def test_bad_model_and_instrument_exit_2():
    assert main(["simulate", "--model", "nope", "--alpha", "0.1"]) == 2
    assert main(["simulate", "--instrument", "nope", "--alpha", "0.1"]) == 2
    with pytest.raises(ConfigError):
        parse_model("gauss:a,b")


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha": 0.5, "T": 3, "model": "rademacher",
                               "instrument": "signwalk"}))
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", str(cfg), "--T", "4", "--output", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 5


def test_env_seed(tmp_path, monkeypatch):
    outs = []
    for seed in ("1", "1", "2"):
        monkeypatch.setenv("AVSEQ_SEED", seed)
        p = tmp_path / f"o{len(outs)}"
        main(["simulate", "--alpha", "0.05", "--T", "5", "--output", str(p)])
        outs.append(p.read_text())
    assert outs[0] == outs[1] != outs[2]


def test_verify_tree_exact(tmp_path):
    out, csv = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["verify", "tree-exact", "--quick", "--seed", "1", "--output", str(out),
                 "--csv", str(csv)]) == 0
    d = json.loads(out.read_text())
    assert d["passed"] and d["suite"] == "tree-exact"
    assert csv.read_text().startswith("suite,name,kind")


def test_verify_domination_mentions_strict(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "domination", "--quick", "--output", str(out)]) == 0
    names = [c["name"] for c in json.loads(out.read_text())["checks"]]
    assert any("strict improvement" in n for n in names)


def test_verify_unknown_suite():
    assert run("verify", "nosuch").returncode == 2


def test_tree_snell_golden(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text(GOLDEN)
    r = run("tree", "snell", str(f))
    assert r.returncode == 0
    rows = [l.split() for l in r.stdout.splitlines()]
    assert rows[0][-3:] == ["L", "M", "A"]
    assert rows[2][-3:] == ["8/5", "17/10", "1/10"] and rows[3][-3:] == ["1/5", "3/10", "1/10"]


def test_tree_implied_identity(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("id parent prob M\n0 - . 1\n1 0 1/3 1\n2 0 2/3 1\n")
    r = run("tree", "implied", str(f))
    rows = [l.split() for l in r.stdout.splitlines()]
    assert r.returncode == 0 and [x[2] for x in rows[1:]] == ["1", "1/3", "2/3"]


def test_tree_admissibilize(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text(GOLDEN)
    r = run("tree", "admissibilize", str(f))
    assert r.returncode == 0 and r.stdout.splitlines()[2].split()[-1] == "17/10"
    f.write_text("id parent prob e\n0 - . 0\n1 0 1/2 3\n2 0 1/2 0\n")
    r = run("tree", "admissibilize", str(f))
    assert r.returncode == 1 and "3/2" in r.stdout


def test_tree_format_error_line(tmp_path):
    f = tmp_path / "b.txt"
    f.write_text("id parent prob e\n0 - . 1\n1 0 1/2 8/5\n2 0 oops 1/5\n")
    r = run("tree", "snell", str(f))
    assert r.returncode == 2 and "line 4" in r.stderr


def test_schema_and_help():
    for cmd in ("simulate", "verify", "tree"):
        r = run(cmd, "--schema")
        assert r.returncode == 0 and json.loads(r.stdout)
        assert run(cmd, "--help").returncode == 0
