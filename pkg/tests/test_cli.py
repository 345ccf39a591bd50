import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from ellf.cli import main, svg_point
from ellf.path_space import classify, load_jsonl


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_params(capsys):
    code, out, _ = run(capsys, "params", "--u", "1")
    d = json.loads(out)
    assert code == 0
    assert d["x_u"] == pytest.approx(0.25) and d["lambda_tilde"] == pytest.approx(5.0)
    assert len(d["p"]) == len(d["q"]) == 10
    assert {"mean_matrix", "lambda", "nu", "hausdorff_dim"} <= set(d)
    _, out, _ = run(capsys, "params", "--u", "0")
    assert json.loads(out)["x_u"] == pytest.approx(0.618034, abs=1e-6)
    _, out, _ = run(capsys, "params", "--u", "3/2")
    d = json.loads(out)
    assert abs(sum(d["p"]) - 1) < 1e-12 and 2 < d["lambda"] < 3


@pytest.mark.parametrize("argv", [
    ["params", "--u", "abc"],
    ["params", "--u", "-1"],
    ["params", "--bogus"],
    ["verify", "--targets", "zeta"],
    ["sample", "lerw", "--level", "25"],
    ["sample", "lerw", "--reps", "0"],
    ["sample", "lerw", "--kind", "other"],
    ["render"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--u", "1", "--max-len", "12", "--targets", "p,q")
    d = json.loads(out)
    assert code == 0 and d["all_equal"] and len(d["results"]) == 20
    code, out, _ = run(capsys, "verify", "--u", "1/2", "--max-len", "30", "--targets", "phi,xi")
    assert code == 0 and all(r["status"] == "equal" for r in json.loads(out)["results"])


def test_sample_srw_classifies(capsys):
    code, out, _ = run(capsys, "sample", "srw", "--u", "0", "--level", "4", "--reps", "20", "--seed", "3")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 20
    for line in lines:
        d = json.loads(line)
        assert classify([tuple(v) for v in d["vertices"]], 4).kind in ("W", "Gamma")


def test_sample_lerw_deterministic(capsys, tmp_path):
    argv = ["sample", "lerw", "--u", "1", "--level", "6", "--reps", "100", "--seed", "7"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    _, c, _ = run(capsys, *argv, "--threads", "4")
    assert a == b == c
    _, d, _ = run(capsys, *argv[:-1], "8")
    assert a != d


def test_sample_coupled_exit_times(capsys):
    code, out, _ = run(capsys, "sample", "coupled", "--u", "1", "--level", "8", "--reps", "3", "--seed", "1")
    assert code == 0
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) == 24
    for r in recs:
        t = r["exit_times"]
        assert all(a < b for a, b in zip(t, t[1:]))


def test_env_seed_and_config(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("ELLF_SEED", "11")
    _, a, _ = run(capsys, "sample", "lerw", "--level", "4", "--reps", "5")
    _, b, _ = run(capsys, "sample", "lerw", "--level", "4", "--reps", "5", "--seed", "11")
    assert a == b
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nu = 1/2\nlevel = 3\nreps = 4\nseed = 5\n")
    _, c, _ = run(capsys, "sample", "lerw", "--config", str(cfg))
    _, d, _ = run(capsys, "sample", "lerw", "--u", "1/2", "--level", "3", "--reps", "4", "--seed", "5")
    assert c == d and len(c.splitlines()) == 4
    _, e, _ = run(capsys, "sample", "lerw", "--config", str(cfg), "--level", "2")
    assert json.loads(e.splitlines()[0])["level"] == 2
    cfg.write_text("nonsense\n")
    assert run(capsys, "params", "--config", str(cfg))[0] == 2


def test_limit_outputs(capsys):
    code, out, _ = run(capsys, "limit", "laplace", "--u", "1", "--format", "csv", "--points", "5")
    assert code == 0 and out.splitlines()[0] == "t,g1,g2,h1,h2" and len(out.splitlines()) == 6
    code, out, _ = run(capsys, "limit", "bprocess", "--u", "1", "--level", "6", "--reps", "200", "--seed", "2")
    assert code == 0 and json.loads(out)
    code, out, _ = run(capsys, "limit", "exponent", "--u", "1", "--level", "7", "--reps", "300",
                       "--format", "csv", "--seed", "2")
    assert code == 0 and out.startswith("t,moment,fit\n")
    code, out, _ = run(capsys, "limit", "lil", "--u", "1", "--level", "8", "--reps", "100", "--seed", "2")
    assert code == 0 and "max_ratio" in json.loads(out)


def test_render_cases(capsys, tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    code, out, _ = run(capsys, "render", "--input", str(empty))
    root = ET.fromstring(out)
    ns = "{http://www.w3.org/2000/svg}"
    assert code == 0 and root.findall(f".//{ns}polyline") == [] and root.findall(f".//{ns}polygon")

    one = tmp_path / "one.jsonl"
    one.write_text(json.dumps({"level": 1, "class": "Gamma", "vertices": [[0, 0], [1, 0], [2, 0]]}) + "\n")
    _, out, _ = run(capsys, "render", "--input", str(one))
    lines = ET.fromstring(out).findall(f".//{ns}polyline")
    assert len(lines) == 1
    pts = [float(c) for p in lines[0].get("points").split() for c in p.split(",")]
    want = [svg_point(0, 0), svg_point(0.25, math.sqrt(3) / 4), svg_point(0.5, math.sqrt(3) / 2)]
    assert pts == pytest.approx([c for xy in want for c in xy], abs=1e-3)

    dump = tmp_path / "many.jsonl"
    main(["sample", "lerw", "--level", "5", "--reps", "100", "--seed", "4", "--out", str(dump)])
    assert len(load_jsonl(open(dump))) == 100
    _, out, _ = run(capsys, "render", "--input", str(dump))
    assert len(ET.fromstring(out).findall(f".//{ns}polyline")) == 100

    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert run(capsys, "render", "--input", str(bad))[0] == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "ellf.cli", "params", "--u", "1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["lambda_tilde"] == pytest.approx(5.0)


def test_verify_mismatch_exit_code(capsys, monkeypatch):
    import ellf.cli as cli

    monkeypatch.setattr(cli, "verify_target", lambda t, u, L: [
        {"target": t, "u": str(u), "L": L, "status": "mismatch", "first_mismatch": 3}])
    code, out, _ = run(capsys, "verify", "--targets", "phi")
    assert code == 1 and json.loads(out)["results"][0]["first_mismatch"] == 3
