import json
import subprocess
import sys

import pytest

from adiqp.circuit import make_circuit, CZ
from adiqp.cli import main
from adiqp.f2poly import PolyF2Deg3


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("TOOL_SEED", raising=False)
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def manifest_of(err):
    return json.loads(err.strip().splitlines()[-1])


class TestExitCodes:
    def test_gap_empty_poly(self, workdir, capsys):
        (workdir / "f.txt").write_text(PolyF2Deg3(3).to_text())
        code, out, _ = run(capsys, "gap", "--poly", "f.txt")
        assert (code, out) == (0, "8\n")

    def test_validate_monochrome(self, workdir, capsys):
        (workdir / "bad.json").write_text(make_circuit("ww", [CZ(0, 1)]).dumps())
        code, out, _ = run(capsys, "validate", "--circuit", "bad.json")
        assert code == 1
        assert "CZ_MONOCHROME" in out

    def test_lemma2_all_n3(self, workdir, capsys):
        code, _, _ = run(capsys, "lemma2-check", "--n", "3", "--all")
        assert code == 0

    def test_usage_errors(self, workdir, capsys):
        assert run(capsys, "frobnicate")[0] == 2
        assert run(capsys, "gap")[0] == 2
        assert run(capsys, "gap", "--poly", "missing.txt")[0] == 2

    def test_resource_limit(self, workdir, capsys):
        assert run(capsys, "not-search", "--max-blacks", "5", "--max-whites", "6")[0] == 3

    def test_bad_noise_is_usage(self, workdir, capsys):
        (workdir / "g.json").write_text(json.dumps({"q": 2, "edges": [[0, 1]], "coloring": [0, 1]}))
        assert run(capsys, "verify", "--graph", "g.json", "--noise", "amplitude:0.1", "--seed", "1")[0] == 2

    def test_console_script(self, workdir):
        proc = subprocess.run([sys.executable, "-m", "adiqp.cli", "--version"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.strip()


class TestManifest:
    def test_emitted_on_stderr(self, workdir, capsys):
        code, _, err = run(capsys, "gen-poly", "--n", "4", "--seed", "3")
        m = manifest_of(err)
        assert m["command"] == "gen-poly" and m["seeds"] == {"seed": 3}
        assert "<stdout>" in m["outputs"]

    def test_generated_seed_recorded(self, workdir, capsys):
        _, _, err = run(capsys, "gen-poly", "--n", "4")
        m = manifest_of(err)
        assert m["resolved_argv"][-2] == "--seed"
        assert int(m["resolved_argv"][-1]) == m["seeds"]["seed"]

    def test_tool_seed(self, workdir, capsys, monkeypatch):
        monkeypatch.setenv("TOOL_SEED", "17")
        _, out_env, err = run(capsys, "gen-poly", "--n", "5")
        assert manifest_of(err)["seeds"]["seed"] == 17
        _, out_flag, _ = run(capsys, "gen-poly", "--n", "5", "--seed", "17")
        assert out_env == out_flag

    def test_rerun_reproduces(self, workdir, capsys):
        code, _, _ = run(capsys, "--manifest", "m.json", "gen-poly", "--n", "6", "--out", "f.txt")
        assert code == 0
        first = (workdir / "f.txt").read_bytes()
        code, out, _ = run(capsys, "rerun", "--manifest", "m.json")
        assert code == 0
        assert json.loads(out)["mismatched"] == []
        assert (workdir / "f.txt").read_bytes() == first

    def test_rerun_detects_tampering(self, workdir, capsys):
        run(capsys, "--manifest", "m.json", "gen-poly", "--n", "6", "--seed", "2", "--out", "f.txt")
        m = json.loads((workdir / "m.json").read_text())
        m["outputs"]["f.txt"] = "0" * 64
        (workdir / "m.json").write_text(json.dumps(m))
        code, out, _ = run(capsys, "rerun", "--manifest", "m.json")
        assert code == 1
        assert json.loads(out)["mismatched"] == ["f.txt"]


class TestPipeline:
    def test_compile_simulate_lazy(self, workdir, capsys):
        run(capsys, "gen-poly", "--n", "3", "--seed", "4", "--out", "f.txt")
        code, _, _ = run(capsys, "compile", "--poly", "f.txt", "--target", "adiqp", "--out", "c.json", "--trace", "t.json")
        assert code == 0
        assert run(capsys, "validate", "--circuit", "c.json")[0] == 0
        code, out, _ = run(capsys, "simulate", "--circuit", "c.json", "--mode", "lazy", "--trace", "t.json")
        assert code == 0
        amp = json.loads(out)
        _, gap_out, _ = run(capsys, "gap", "--poly", "f.txt")
        assert 2 ** (amp["log2_abs"] + 3 + 139 / 2) == pytest.approx(abs(int(gap_out)), rel=1e-9)

    def test_strongsim_matches_dense(self, workdir, capsys):
        c = make_circuit("wwb", [CZ(1, 2)], outputs=(0, 1))
        (workdir / "c.json").write_text(c.dumps())
        run(capsys, "simulate", "--circuit", "c.json", "--out", "dense.csv")
        run(capsys, "strongsim", "--circuit", "c.json", "--out", "strong.csv")
        code, out, _ = run(capsys, "metrics", "--p", "dense.csv", "--q", "strong.csv")
        assert code == 0
        assert json.loads(out)["l1"] < 1e-12

    def test_gadgets_verify(self, workdir, capsys):
        code, out, _ = run(capsys, "gadgets", "verify")
        assert code == 0
        assert len(out.strip().splitlines()) == 1 + 7 + 7

    def test_verify_plot(self, workdir, capsys):
        (workdir / "g.json").write_text(json.dumps({"q": 3, "edges": [[0, 1], [1, 2]], "coloring": [0, 1, 0]}))
        code, out, err = run(capsys, "verify", "--graph", "g.json", "--k", "50", "--seed", "1", "--plot", "v.png")
        assert code == 0
        assert json.loads(out)["failures"] == 0
        assert (workdir / "v.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        assert "v.png" in manifest_of(err)["outputs"]

    def test_anticoncentration_plot(self, workdir, capsys):
        code, _, _ = run(capsys, "anticoncentration", "--n", "5", "--samples", "50", "--seed", "1", "--plot", "a.png")
        assert code == 0
        assert (workdir / "a.png").stat().st_size > 0
