import csv
import json
from pathlib import Path

import numpy as np
import pytest

from wienerfim.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def _reference_doc():
    return json.loads((CONFIGS / "reference.json").read_text())


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_fim_report(tmp_path):
    out = tmp_path / "fim.json"
    assert main(["fim", "--config", str(CONFIGS / "reference.json"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    for key in ("J", "det_direct", "det_factored", "r1", "r2", "f", "identifiable", "config_sha256", "version"):
        assert key in doc
    J = np.array(doc["J"])
    assert J.shape == (8, 8) and np.array_equal(J, J.T)
    assert doc["identifiable"] is True


def test_fim_to_stdout(capsys):
    assert main(["fim", "--config", str(CONFIGS / "reference.json")]) == 0
    assert json.loads(capsys.readouterr().out)["command"] == "fim"


def test_unidentifiable_constraint_reports_zero_det(tmp_path):
    doc = _reference_doc()
    doc["nonlinearity"]["alpha_bar"] = [1.0, 1.0, 0.3, 0.1]
    doc["constraint"] = {"upsilon": [1, 0, 0, 0]}
    out = tmp_path / "fim.json"
    assert main(["fim", "--config", str(_write(tmp_path, doc)), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["identifiable"] is False
    assert rep["det_factored"] == 0.0
    assert abs(rep["det_direct"]) < 1e-8 * np.linalg.norm(rep["J"]) ** 8


def test_unstable_exit_code(tmp_path, capsys):
    doc = _reference_doc()
    doc["linear"]["a"] = [-2.5, 1.0]
    assert main(["fim", "--config", str(_write(tmp_path, doc))]) == 3
    assert _error(capsys)["error"] == "unstable"


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["linear"].pop("g0"),
    lambda d: d["input"].update(kind="pink"),
    lambda d: d["options"].update(samples=0),
])
def test_config_errors(tmp_path, capsys, mutate):
    doc = _reference_doc()
    mutate(doc)
    assert main(["fim", "--config", str(_write(tmp_path, doc))]) == 2
    assert _error(capsys)["exit_code"] == 2


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["fim", "--config", str(path)]) == 2


def test_io_errors(tmp_path, capsys):
    assert main(["fim", "--config", str(tmp_path / "missing.json")]) == 4
    assert _error(capsys)["error"] == "io"
    out = tmp_path / "no_such_dir" / "fim.json"
    assert main(["fim", "--config", str(CONFIGS / "reference.json"), "--out", str(out)]) == 4


def test_det_report(tmp_path):
    out = tmp_path / "det.json"
    assert main(["det", "--config", str(CONFIGS / "reference.json"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["det_rel_diff"] < 1e-8
    assert doc["schur"]["branch"] == "r2_nonzero"
    assert doc["schur"]["residual_closed_form"] < 1e-9
    assert "J" not in doc


def test_verify_passes_and_is_byte_identical(tmp_path):
    cfg = str(CONFIGS / "reference.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", "--config", cfg, "--out", str(a), "--streams", "2"]) == 0
    assert main(["verify", "--config", cfg, "--out", str(b), "--streams", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["passed"] is True and doc["rel_err_J"] < 0.02
    assert doc["grad_max_rel_err"] < 1e-5
    assert doc["samples"] == 1_000_000 and doc["seed"] == 7


def test_verify_tolerance_exit(tmp_path, capsys):
    cfg = str(CONFIGS / "reference.json")
    out = tmp_path / "v.json"
    assert main(["verify", "--config", cfg, "--samples", "100", "--tolerance", "0.001", "--out", str(out)]) == 5
    assert _error(capsys)["error"] == "tolerance"
    assert json.loads(out.read_text())["passed"] is False


def test_verify_dump_samples(tmp_path):
    cfg = str(CONFIGS / "reference.json")
    dump = tmp_path / "samples.csv"
    main(["verify", "--config", cfg, "--samples", "50", "--tolerance", "10", "--out", str(tmp_path / "v.json"),
          "--dump-samples", str(dump)])
    rows = list(csv.reader(dump.open()))
    assert rows[0] == ["t", "u", "x0", "x1", "x2", "x3", "x4", "w", "y"]
    assert len(rows) == 51


def test_scan_linear_fir(tmp_path):
    out = tmp_path / "scan.csv"
    assert main(["scan", "--config", str(CONFIGS / "linear_fir.json"), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s,sigma,gamma,f,detSigma,detJ,feasible"
    summary = json.loads(out.with_suffix(".json").read_text())
    assert summary["best"]["s"] == 10.0
    assert summary["argmax"] == len(lines) - 2


def test_scan_flags_and_infeasible(tmp_path, capsys):
    cfg = str(CONFIGS / "linear_fir.json")
    assert main(["scan", "--config", cfg, "--scales", "0.5,1,2", "--budget", "1"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[-1].endswith(",false")
    assert main(["scan", "--config", cfg, "--budget", "0.01"]) == 6
    assert _error(capsys)["error"] == "infeasible"
    assert main(["scan", "--config", cfg, "--scales", "2,1"]) == 2


def test_simulate(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", str(CONFIGS / "shaped.json"), "--samples", "20", "--seed", "3",
                 "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 21
    again = tmp_path / "sim2.csv"
    main(["simulate", "--config", str(CONFIGS / "shaped.json"), "--samples", "20", "--seed", "3", "--out", str(again)])
    assert out.read_bytes() == again.read_bytes()
    w = np.array([float(r[-2]) for r in rows[1:]])
    y = np.array([float(r[-1]) for r in rows[1:]])
    np.testing.assert_allclose(y, 0.1 + w + 0.3 * w ** 2 + 0.1 * w ** 3, rtol=1e-12)
