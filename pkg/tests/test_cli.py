import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from selftest.cli import main
from selftest.correlations import probability_table, tables_from_csv, tables_from_json
from selftest.strategies import load, noise_mix, save

DATA = Path(__file__).parent / "data"


@pytest.fixture
def ghz_file(tmp_path):
    path = tmp_path / "ghz.json"
    assert main(["gen-ideal", "ghz", "--n", "3", "--theta", "0.5", "--out", str(path)]) == 0
    return path


def test_gen_ideal_then_verify(ghz_file, tmp_path):
    s = load(ghz_file)
    assert s.family == "ghz" and s.params == {"n": 3, "theta": 0.5}
    report = tmp_path / "report.json"
    assert main(["verify", str(ghz_file), "--out", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["passed"] and data["fidelity"] >= 1 - 1e-9
    assert data["junk_dims"] == [2, 2, 2]
    assert all(row["residual"] <= 1e-9 for row in data["conditions"]["rows"])


def test_gen_ideal_graph_file(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gen-ideal", "--family", "graph", "--graph", str(DATA / "path3.json"), "--out", str(out)]) == 0
    assert main(["verify", str(out), "--out", str(tmp_path / "r.json")]) == 0


def test_gen_ideal_other_families(tmp_path):
    cases = [
        ["schmidt", "--n", "3", "--coeffs", "0.8,0.6"],
        ["schmidt", "--n", "3", "--d", "3", "--coeffs", "0.6,0.64,0.48"],
        ["w", "--n", "4"],
        ["dicke", "--n", "5", "--k", "2"],
        ["tilted_chsh", "--theta", "0.3"],
    ]
    for i, args in enumerate(cases):
        out = tmp_path / f"s{i}.json"
        assert main(["gen-ideal", *args, "--out", str(out)]) == 0
        assert main(["verify", str(out), "--format", "csv", "--out", str(tmp_path / f"r{i}.csv")]) == 0


@pytest.mark.parametrize("args", [
    ["gen-ideal", "ghz", "--n", "3", "--theta", "0"],
    ["gen-ideal", "ghz", "--n", "3"],
    ["gen-ideal"],
    ["gen-ideal", "schmidt", "--n", "3", "--d", "3", "--coeffs", "0.8,0.6"],
    ["gen-ideal", "graph", "--graph", "not json"],
    ["nonsense"],
])
def test_usage_errors(args, capsys):
    assert main(args) == 2
    assert capsys.readouterr().err


def test_noisy_file_rejected(ghz_file, tmp_path, capsys):
    noisy = tmp_path / "noisy.json"
    save(noise_mix(load(ghz_file), 0.01), noisy)
    report = tmp_path / "report.json"
    assert main(["verify", str(noisy), "--out", str(report)]) == 1
    data = json.loads(report.read_text())
    assert not data["passed"]
    assert any(lab.startswith("ghz.") for lab in data["failing"])
    assert "ghz." in capsys.readouterr().err


def test_wrong_family_is_usage_error(ghz_file):
    assert main(["verify", str(ghz_file), "--family", "w", "--n", "4"]) == 2


def test_verify_needs_family(tmp_path):
    s = load(ghz_file_path := DATA / "bell.json")
    raw = tmp_path / "raw.json"
    data = json.loads(ghz_file_path.read_text())
    del data["family"]
    raw.write_text(json.dumps(data))
    assert main(["verify", str(raw)]) == 2
    assert main(["verify", str(raw), "--family", "tilted_chsh", "--theta", str(np.pi / 4),
                 "--out", str(tmp_path / "r.json")]) == 0
    assert s.family == "tilted_chsh"


def test_verify_bad_inputs(ghz_file, tmp_path):
    assert main(["verify", str(tmp_path / "missing.json")]) == 2
    assert main(["verify", str(ghz_file), "--tol", "0"]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text(ghz_file.read_text()[:100])
    assert main(["verify", str(broken)]) == 2


def test_verify_csv_to_stdout(ghz_file, capsys):
    assert main(["verify", str(ghz_file), "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("section,label,measured,target,residual,passed")
    assert "isometry,fidelity" in out


def test_emit_bell_table(tmp_path):
    out = tmp_path / "t.json"
    assert main(["emit-correlations", str(DATA / "bell.json"), "--questions", "0,0", "--out", str(out)]) == 0
    tables = tables_from_json(out.read_text())
    assert len(tables) == 1 and tables[0].probs.size == 4
    assert tables[0].probs.sum() == pytest.approx(1.0)


def test_emit_all_questions_csv_roundtrip(ghz_file, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["emit-correlations", str(ghz_file), "--format", "csv", "--out", str(out)]) == 0
    tables = tables_from_csv(out.read_text())
    assert len(tables) == 8
    s = load(ghz_file)
    for t in tables:
        assert np.array_equal(t.probs, probability_table(s, t.question).probs)


def test_emit_bad_question(ghz_file):
    assert main(["emit-correlations", str(ghz_file), "--questions", "0,5,0"]) == 2
    assert main(["emit-correlations", str(ghz_file), "--questions", "a,b"]) == 2


def test_adversarial_roundtrip(ghz_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["adversarial", str(ghz_file), "--seed", "42", "--junk-dims", "2", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert load(a).dims == (4, 4, 4)
    assert main(["verify", str(a), "--out", str(tmp_path / "r.json")]) == 0


def test_adversarial_guard(ghz_file):
    assert main(["adversarial", str(ghz_file), "--junk-dims", "20"]) == 2
    assert main(["adversarial", str(ghz_file), "--junk-dims", "2,2"]) == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "gen-ideal" in capsys.readouterr().out


def test_module_entry_point(ghz_file):
    proc = subprocess.run([sys.executable, "-m", "selftest", "verify", str(ghz_file), "--format", "csv"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "summary,passed" in proc.stdout
