import json
import subprocess
import sys
from pathlib import Path

import pytest

from fwrobust.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"
TROP = str(DATA / "tropical2.json")
QUANT = str(DATA / "quantile025.json")
SQUARE = str(DATA / "square.json")
EUCLID = str(DATA / "euclidean2.json")
HEX = str(DATA / "hexagon.csv")
LINE = str(DATA / "line5.csv")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gauge_info(capsys):
    code, out, _ = run(capsys, "gauge-info", "--gauge", TROP)
    info = json.loads(out)
    assert code == 0 and info["sigma"] == 2 and len(info["skew_dirs"]) == 3
    assert json.loads(run(capsys, "gauge-info", "--gauge", QUANT)[1])["sigma"] == 3
    sq = json.loads(run(capsys, "gauge-info", "--gauge", SQUARE)[1])
    assert sq["sigma"] == 1 and sq["is_norm"]


def test_solve(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--gauge", TROP, "--sample", HEX, "--out", str(tmp_path))
    sol = json.loads(out)
    assert code == 0 and sol["optimizer"] == [0, 0] and sol["unique"] == "yes"
    assert (tmp_path / "solve.json").read_text() == out
    one = tmp_path / "one.csv"
    one.write_text("x1,x2,weight\n2.5,-1,3\n")
    assert json.loads(run(capsys, "solve", "--gauge", TROP, "--sample", str(one))[1])["optimizer"] == [2.5, -1]
    q = json.loads(run(capsys, "solve", "--gauge", QUANT, "--sample", LINE)[1])
    assert q["optimizer"][0] == pytest.approx(1.0)
    e = json.loads(run(capsys, "solve", "--gauge", EUCLID, "--sample", HEX, "--iters", "2000")[1])
    assert e["method"] == "weiszfeld" and e["unique"] == "unknown"


def test_robust_modes(capsys, tmp_path):
    code, out, _ = run(capsys, "robust", "--gauge", TROP, "--sample", HEX, "--kappa", "3")
    k = json.loads(out)
    assert code == 0 and k["kappa"] > 0
    code, _, err = run(capsys, "robust", "--gauge", TROP, "--sample", HEX, "--kappa", "4")
    assert code == 3 and "precondition" in err
    code, out, _ = run(capsys, "robust", "--gauge", TROP, "--sample", HEX, "--fraction", "0.25", "--trials", "40")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"] == "pass" and len(rep["trials"]) == 40
    code, out, _ = run(capsys, "robust", "--gauge", TROP, "--sample", HEX, "--fraction", "0.75", "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["escaped"]
    assert (tmp_path / "escape_trace.csv").read_text().startswith("M,distance\n")
    code, out, _ = run(capsys, "robust", "--gauge", QUANT, "--sample", LINE, "--breakdown", "--resolution", "0.05")
    assert code == 0 and json.loads(out)["brackets_threshold"]


def test_hull(capsys, tmp_path):
    svg = tmp_path / "fig.svg"
    code, out, _ = run(capsys, "hull", "--gauge", TROP, "--sample", HEX, "--cl", "--svg", str(svg))
    cl = json.loads(out)
    assert code == 0 and sum(c["dim"] == 1 for c in cl["accepted"]) == 3
    text = svg.read_text()
    assert text.startswith("<?xml") and 'version="1.1"' in text and text.count("<circle") >= 6
    code, out, _ = run(capsys, "hull", "--gauge", TROP, "--sample", HEX, "--ehull")
    assert code == 0 and len(json.loads(out)["hull_vertices"]) == 6
    code, out, _ = run(capsys, "hull", "--gauge", QUANT, "--sample", LINE, "--ehull")
    assert json.loads(out)["interval"] == [0, 4]
    code, out, _ = run(capsys, "hull", "--gauge", QUANT, "--sample", LINE, "--cl")
    assert json.loads(out)["interval"] == [0, 1]


@pytest.mark.parametrize("ident", ["fig2-cl", "appendix-w5", "appendix-w6", "quantile-cl", "skew-line", "fig3-cells"])
def test_reproduce(capsys, ident):
    code, out, _ = run(capsys, "reproduce", ident)
    assert code == 0 and out.splitlines()[0].endswith("PASS")


def test_reproduce_rho(capsys):
    code, out, _ = run(capsys, "reproduce", "euclid-3pt", "--rho", "100")
    assert code == 0 and "PASS" in out


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "gauge-info", "--gauge", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "gauge-info", "--gauge", str(bad))[0] == 2
    skewed = tmp_path / "skewed.json"
    skewed.write_text('{"type":"polyhedral","dim":2,"primal_vertices":[[1,0],[0,1],[1,1]]}')
    assert run(capsys, "gauge-info", "--gauge", str(skewed))[0] == 2
    header = tmp_path / "h.csv"
    header.write_text("a,b,c\n1,2,3\n")
    assert run(capsys, "solve", "--gauge", TROP, "--sample", str(header))[0] == 2
    assert run(capsys, "solve", "--gauge", TROP)[0] == 2
    assert run(capsys, "hull", "--gauge", EUCLID, "--sample", HEX, "--ehull")[0] == 2
    assert run(capsys, "robust", "--gauge", TROP, "--sample", HEX, "--fraction", "1.5")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "no-such-example"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_determinism(tmp_path):
    args = [sys.executable, "-m", "fwrobust", "robust", "--gauge", TROP, "--sample", HEX,
            "--fraction", "0.25", "--trials", "30", "--seed", "7"]
    a = subprocess.run(args, capture_output=True, check=True).stdout
    b = subprocess.run(args + ["--threads", "3"], capture_output=True, check=True).stdout
    assert a == b
    c = subprocess.run(args[:-1] + ["8"], capture_output=True, check=True).stdout
    assert a != c
