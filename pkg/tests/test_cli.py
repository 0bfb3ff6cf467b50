import json
import shutil
import subprocess
import sys

import pytest

from psicross.cli import main
from psicross.exact import TrigPolynomial
from psicross.symbols import MatrixSymbol, compose, symbol_from_json, symbol_to_json

Z1 = (0,)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), err


def write_symbol(tmp_path, name, sym):
    path = tmp_path / name
    path.write_text(json.dumps(symbol_to_json(sym)))
    return str(path)


def test_compose_dispatch(tmp_path, capsys):
    a = MatrixSymbol.from_terms(1, [(1, (1,), (1,), 0)])
    b = MatrixSymbol.from_terms(1, [(2, Z1, (1,), 0), (1, (-1,), Z1, 0)])
    code, doc, _ = run(capsys, "compose", "--lhs", write_symbol(tmp_path, "a.json", a),
                       "--rhs", write_symbol(tmp_path, "b.json", b), "--depth", "3")
    assert code == 0
    assert symbol_from_json(doc["result"]["symbol"]).same_terms(compose(a, b, 3))
    meta = doc["metadata"]
    assert meta["command"] == "compose" and meta["options"]["depth"] == 3
    assert "normalization" in meta and "precision_digits" in meta


def test_residue(tmp_path, capsys):
    s = write_symbol(tmp_path, "s.json", MatrixSymbol.from_terms(1, [(1, Z1, Z1, 1)]))
    code, doc, _ = run(capsys, "residue", "--symbol", s)
    assert code == 0
    assert doc["result"]["value"] == "2" and doc["result"]["pi_half_power"] == 0
    s2 = write_symbol(tmp_path, "s2.json", MatrixSymbol.from_terms(2, [(1, (0, 0), (0, 0), 2)]))
    assert run(capsys, "residue", "--symbol", s2)[1]["result"]["exact"] == "2*pi"


def test_index_demo(capsys):
    code, doc, _ = run(capsys, "index-demo", "--case", "circle-rotation", "--f", "2cos")
    assert code == 0 and doc["result"] == {"index": "2"}
    assert run(capsys, "index-demo", "--case", "dx-rotation", "--f", "1+2cos")[1]["result"]["index"] == "0"


def test_constants(capsys):
    code, doc, _ = run(capsys, "constants", "--parity", "even", "--max-m", "2", "--max-k", "2")
    assert code == 0
    rows = {(r["m"], tuple(r["k"]), r["q"]): r["value"] for r in doc["result"]["table"]}
    assert rows[(1, (0, 0), 0)] == "1/2" and rows[(1, (0, 0), 1)] == "0"
    odd = run(capsys, "constants", "--parity", "odd", "--max-m", "0", "--max-k", "0")[1]["result"]
    assert odd["table"][0]["value"].startswith("1.77245385090551602729")


def test_cocycle_command(tmp_path, capsys):
    inputs = tmp_path / "a.json"
    from psicross.crossed import trig_to_json

    fs = [TrigPolynomial.mode((-1, -1)), TrigPolynomial.mode((1, 0)), TrigPolynomial.mode((0, 1))]
    inputs.write_text(json.dumps([trig_to_json(f) for f in fs]))
    dirac = tmp_path / "D.json"
    dirac.write_text(json.dumps({"flat_torus": 2}))
    code, doc, _ = run(capsys, "cocycle", "--m", "1", "--inputs", str(inputs), "--dirac", str(dirac))
    assert code == 0
    re, im = doc["result"]["value"].rstrip("*i").split("+")
    assert abs(float(re)) < 1e-12 and abs(float(im) - 6.283185307179586) < 1e-12
    assert doc["result"]["terms"][0]["constant"] == "1/2"


def test_property_check(capsys):
    code, doc, _ = run(capsys, "--seed", "7", "property-check", "--count", "5")
    assert code == 0 and doc["result"] == {"checked": 5, "failures": 0}


def test_heat_with_fit_and_csv(tmp_path, capsys):
    s = write_symbol(tmp_path, "lap.json", MatrixSymbol.from_terms(1, [(1, Z1, (2,), 0), (1, Z1, Z1, 0)]))
    csv_path = tmp_path / "heat.csv"
    code, doc, _ = run(capsys, "heat", "--symbol", s, "--radius", "200", "--t", "1/100,1/50,1/20,1/10",
                       "--csv", str(csv_path))
    assert code == 0 and len(doc["result"]["samples"]) == 4
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t,value,error" and lines[1].startswith("1/100,")


def test_exit_codes(tmp_path, capsys):
    # schema: unreadable file
    assert run(capsys, "residue", "--symbol", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dim": 1}))
    code, _, err = run(capsys, "residue", "--symbol", str(bad))
    assert code == 2 and "error" in json.loads(err)
    # precondition: non-elliptic symbol handed to the Neumann parametrix
    p = write_symbol(tmp_path, "p.json", MatrixSymbol.from_terms(2, [(1, (0, 0), (0, 0), 0), (1, (0, 0), (0, 2), 0)]))
    code, _, err = run(capsys, "parametrix", "--symbol", p)
    assert code == 3 and json.loads(err)["error"]["module"] == "parametrix"
    # precondition: zero eigenvalue; numeric: Weyl window too small
    lap = write_symbol(tmp_path, "lap.json", MatrixSymbol.from_terms(1, [(1, Z1, (2,), 0)]))
    assert run(capsys, "weyl", "--symbol", lap, "--radius", "20", "--t", "10000")[0] == 3
    lap1 = write_symbol(tmp_path, "lap1.json", MatrixSymbol.from_terms(1, [(1, Z1, (2,), 0), (1, Z1, Z1, 0)]))
    assert run(capsys, "weyl", "--symbol", lap1, "--radius", "20", "--t", "10000")[0] == 4
    # unsupported index case
    assert run(capsys, "index-demo", "--case", "sphere", "--f", "1")[0] == 3


def test_output_is_deterministic(tmp_path, capsys):
    a = MatrixSymbol.from_terms(1, [(1, (1,), (2,), 0), (3, Z1, Z1, 1)])
    path = write_symbol(tmp_path, "a.json", a)
    outs = []
    for i in range(2):
        target = tmp_path / f"out{i}.json"
        assert main(["--out", str(target), "adjoint", "--symbol", path, "--depth", "4"]) == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    capsys.readouterr()


@pytest.mark.skipif(shutil.which("psicross") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["psicross", "index-demo", "--case", "circle-rotation", "--f", "1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["index"] == "1"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "psicross.cli", "constants", "--max-m", "1", "--max-k", "0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["parity"] == "even"
