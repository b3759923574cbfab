import json
import subprocess
import sys

import numpy as np
import pytest

from tllverify.cli import main
from tllverify.compiler import LayerNet, eval_layers
from tllverify.io import save_property, save_tll
from tllverify.model import OutputBox, Polytope, TLLSpec, eval_scalar


@pytest.fixture
def abs_files(tmp_path, abs_spec):
    net = tmp_path / "abs.net.json"
    save_tll(abs_spec, net)

    def prop(lower, upper):
        path = tmp_path / f"p_{lower}_{upper}.json"
        save_property(Polytope.cube(1, 2.0), OutputBox([lower], [upper]), path)
        return str(path)

    return str(net), prop


def test_verify_exit_codes(abs_files, capsys):
    net, prop = abs_files
    assert main(["verify", net, prop(0.5, 2.5), "--workers", "1"]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "UNSAT" and out["violated"] == {"output": 0, "side": "lower"}
    assert "stats" not in out
    assert main(["verify", net, prop(-0.5, 2.5), "--stats"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["status"] == "SAT" and "lp_calls" in out["stats"]


def test_verify_missing_file(tmp_path, abs_files):
    net, prop = abs_files
    assert main(["verify", str(tmp_path / "nope.json"), prop(0, 1)]) == 2


def test_verify_timeout(tmp_path, capsys):
    rng = np.random.default_rng(0)
    spec = TLLSpec(rng.normal(size=(12, 3)), rng.normal(size=12), [[0, 1, 2], [3, 4, 5], [6, 7, 8, 9]])
    save_tll(spec, tmp_path / "n.json")
    save_property(Polytope.cube(3), OutputBox([-100.0], [np.inf]), tmp_path / "p.json")
    assert main(["verify", str(tmp_path / "n.json"), str(tmp_path / "p.json"), "--timeout-s", "0"]) == 3
    assert json.loads(capsys.readouterr().out) == {"status": "TIMEOUT"}


def test_generate_count_zero_and_determinism(tmp_path):
    assert main(["generate", "--n", "2", "--N", "8", "--M", "8", "--count", "0", str(tmp_path / "empty")]) == 0
    assert list((tmp_path / "empty").iterdir()) == []
    for d in ("a", "b"):
        assert main(["generate", "--n", "2", "--N", "8", "--M", "8", "--count", "3", "--seed", "7",
                     "--samples", "500", str(tmp_path / d)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(names) == 6
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_export(abs_files, tmp_path, abs_spec, capsys):
    net, _ = abs_files
    for flag in ([], ["--flatten"]):
        out = tmp_path / "layers.json"
        assert main(["export", net, "-o", str(out)] + flag) == 0
        layered = LayerNet.load(out)
        for x in np.linspace(-3, 3, 13):
            assert abs(eval_layers(layered, [x])[0] - eval_scalar(abs_spec, [x])) <= 1e-9
    assert main(["export", net]) == 0
    assert "layers" in json.loads(capsys.readouterr().out)


def test_export_invalid_spec(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 1, "outputs": [{"W": [[1.0]], "b": [0.0], "selectors": [[]]}]}))
    assert main(["export", str(bad)]) == 2


def test_oracle_check(tmp_path, capsys):
    d = tmp_path / "batch"
    assert main(["generate", "--n", "2", "--N", "6", "--M", "6", "--count", "4", "--samples", "500", str(d)]) == 0
    capsys.readouterr()
    assert main(["oracle-check", str(d)]) == 0
    report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert report["instances"] == 4 and report["disagreements"] == 0


def test_bench_resume_and_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"groups": [{"n": 2, "N": 4, "count": 2}], "workers": 1, "samples": 200}))
    out = tmp_path / "res.csv"
    table = tmp_path / "t.dat"
    assert main(["bench", "--config", str(cfg), "--out", str(out), "--table", str(table)]) == 0
    before = out.read_text()
    assert len(before.splitlines()) == 3
    assert main(["bench", "--config", str(cfg), "--out", str(out), "--resume"]) == 0
    assert out.read_text() == before
    assert table.read_text().startswith("#")
    capsys.readouterr()
    assert main(["summarize", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["groups"][0]["count"] == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"groups": [{"n": 2}]}')
    assert main(["bench", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2


def test_regions_dump(abs_files, capsys):
    net, prop = abs_files
    assert main(["regions", net, prop(0, 1), "--level", "0.5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "level,signs,witness"
    # x - 0.5 and -x - 0.5 cut [-2, 2] into three intervals
    assert len(lines) == 4


def test_version_entry_point():
    res = subprocess.run([sys.executable, "-m", "tllverify.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "tll=" in res.stdout and "property=" in res.stdout
