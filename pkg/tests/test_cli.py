import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from qperiods._bruteforce import cst_by_walk_counting
from qperiods.catalog import CATALOG, get
from qperiods.cli import main
from qperiods.conifold import find_conifold
from qperiods.exceptions import DomainValidationError
from qperiods.laurent import cst_sequence, detect_index


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_body(text):
    return list(csv.reader(line for line in text.splitlines() if not line.startswith("#")))


def footer(text):
    return dict(line[2:].split("=", 1) for line in text.splitlines() if line.startswith("# "))


# ------------------------------------------------------------ catalog


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_bootstrap_regenerates(name):
    entry = CATALOG[name]
    exp = entry.expected
    cst = cst_sequence(entry.model, 60, method="auto")
    assert detect_index(cst) == exp["index_r"]
    for n, v in exp["nfact_G"]:
        assert Fraction(cst[n]) == v
    assert cst[: len(cst_by_walk_counting(entry.model, 24))] == cst_by_walk_counting(entry.model, 24)
    res = find_conifold(entry.model)
    assert float(res.value) == pytest.approx(exp["T_con"], rel=1e-9)


def test_catalog_unknown():
    with pytest.raises(DomainValidationError):
        get("p7")


# ------------------------------------------------------------ period


def test_period_p2(capsys):
    code, out, _ = run(["period", "--catalog", "p2", "--n-max", "30", "--out", "csv"], capsys)
    assert code == 0
    rows = csv_body(out)
    assert rows[0] == ["n", "G_num", "G_den", "nfact_G"]
    assert ["3", "1", "1", "6"] in rows
    assert len(rows) == 32
    meta = footer(out)
    assert meta["index_r"] == "3"
    assert meta["tool"].startswith("qperiods ")
    assert len(meta["model_sha256"]) == 64
    assert meta["precision"] == "256"


def test_period_n_max_zero(capsys):
    code, out, _ = run(["period", "--catalog", "p1", "--n-max", "0"], capsys)
    assert code == 0
    assert csv_body(out)[1:] == [["0", "1", "1", "1"]]


def test_period_json(capsys):
    code, out, _ = run(["period", "--catalog", "p1", "--n-max", "4", "--out", "json"], capsys)
    doc = json.loads(out)
    assert doc["schema"] == "v1"
    assert doc["rows"][4] == [4, 1, 4, "6"]


def test_period_missing_model(capsys, tmp_path):
    code, _, err = run(["period", "--model", str(tmp_path / "missing.json")], capsys)
    assert code == 1 and "missing.json" in err


def test_period_malformed_model(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"num_vars": 1, "terms": [{"exp": [1]}]}))
    code, _, err = run(["period", "--model", str(path)], capsys)
    assert code == 1 and "coeff" in err


def test_period_negative_coefficient(capsys, tmp_path):
    path = tmp_path / "neg.json"
    path.write_text(json.dumps({"num_vars": 1, "terms": [{"exp": [1], "coeff": "-1"}, {"exp": [-1], "coeff": "1"}]}))
    code, _, _ = run(["period", "--model", str(path)], capsys)
    assert code == 2


def test_period_model_file_matches_catalog(capsys, tmp_path):
    path = tmp_path / "p2.json"
    path.write_text(json.dumps(CATALOG["p2"].model.to_json_dict()))
    _, a, _ = run(["period", "--model", str(path), "--n-max", "9"], capsys)
    _, b, _ = run(["period", "--catalog", "p2", "--n-max", "9"], capsys)
    assert csv_body(a) == csv_body(b)
    assert footer(a)["model_sha256"] == footer(b)["model_sha256"]


# ------------------------------------------------------------ conifold


def test_conifold_p2(capsys):
    code, out, _ = run(["conifold", "--catalog", "p2"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert [float(v) for v in doc["point"]] == pytest.approx([1, 1])
    assert float(doc["value"]) == pytest.approx(3)
    assert {"hessian_log_det", "iterations"} <= set(doc)


def test_conifold_p1_high_precision(capsys):
    _, out, _ = run(["conifold", "--catalog", "p1", "--precision", "512"], capsys)
    value = json.loads(out)["value"]
    digits = value.replace(".", "")
    assert digits.startswith("2" + "0" * 150)


def test_conifold_non_convenient(capsys, tmp_path):
    path = tmp_path / "xy.json"
    path.write_text(json.dumps({"num_vars": 2, "terms": [{"exp": [1, 0], "coeff": "1"}, {"exp": [0, 1], "coeff": "1"}]}))
    code, _, err = run(["conifold", "--model", str(path)], capsys)
    assert code == 2 and "NotConvenient" in err


# ------------------------------------------------------------ concentrate


def test_concentrate_p2(capsys):
    code, out, _ = run(["concentrate", "--catalog", "p2", "--nu", "0.25", "--grid", "20:160:geom4"], capsys)
    assert code == 0
    rows = csv_body(out)
    assert rows[0] == ["x", "n_minus", "n_plus", "peak_index", "head_ratio", "tail_ratio"]
    assert len(rows) == 5
    heads = [float(r[4]) for r in rows[1:]]
    tails = [float(r[5]) for r in rows[1:]]
    assert all(b < a for a, b in zip(heads, heads[1:]))
    assert all(b < a for a, b in zip(tails, tails[1:]))
    assert footer(out)["verdict"] == "consistent-with-exponential"


def test_concentrate_nu_guard(capsys):
    code, _, _ = run(["concentrate", "--catalog", "p1", "--nu", "0.6"], capsys)
    assert code == 2
    code, _, _ = run(["concentrate", "--catalog", "p1", "--nu", "0.6", "--exploratory", "--grid", "10:80:geom4"], capsys)
    assert code == 0


def test_concentrate_hypergeom(capsys, tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"upper": [["1", "1"]], "lower": [["1", "1"], ["1", "1"]], "T": "1"}))
    code, out, _ = run(["concentrate", "--hypergeom", str(path), "--nu", "0.25", "--out", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["summary"]["verdict"] == "consistent-with-exponential"
    assert len(doc["rows"]) == 8


def test_concentrate_bad_grid(capsys):
    code, _, _ = run(["concentrate", "--catalog", "p1", "--nu", "0.25", "--grid", "20:10:geom4"], capsys)
    assert code == 2
    code, _, _ = run(["concentrate", "--catalog", "p1", "--nu", "0.25", "--grid", "20:40:cubic4"], capsys)
    assert code == 2


# ------------------------------------------------------------ walk


def test_walk_p1(capsys):
    code, out, _ = run(["walk", "--catalog", "p1", "--n-max", "400"], capsys)
    assert code == 0
    meta = footer(out)
    assert abs(float(meta["c_hat"]) - 0.564190) <= 1e-3
    assert meta["index_r"] == "2"


def test_walk_p2(capsys):
    _, out, _ = run(["walk", "--catalog", "p2", "--n-max", "300", "--out", "json"], capsys)
    doc = json.loads(out)
    assert abs(float(doc["m_over_2_check"]) + 1) <= 0.05
    assert doc["lattice_rank"] == 2


def test_walk_monte_carlo(capsys):
    _, out, _ = run(["walk", "--catalog", "p1", "--n-max", "40", "--trials", "20000", "--seed", "3", "--out", "json"], capsys)
    mc = json.loads(out)["monte_carlo"]
    assert abs(float(mc["estimate"]) - float(mc["exact"])) <= 4 * float(mc["stderr"])
    assert json.loads(out)["header"]["seed"] == 3


# ------------------------------------------------------------ contracts


@pytest.mark.parametrize(
    "argv",
    [
        ["period", "--catalog", "p3", "--n-max", "40"],
        ["conifold", "--catalog", "p1xp1", "--out", "json"],
        ["concentrate", "--catalog", "p1", "--nu", "0.25", "--grid", "10:80:lin4"],
        ["walk", "--catalog", "p1", "--n-max", "100", "--trials", "100000", "--seed", "7"],
    ],
)
def test_byte_identical_reruns(argv, tmp_path):
    a, b = tmp_path / "a.out", tmp_path / "b.out"
    assert main(argv + ["-o", str(a)]) == 0
    assert main(argv + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["period", "--catalog", "nope"])
    assert info.value.code == 2


def test_catalog_and_model_together(capsys, tmp_path):
    code, _, _ = run(["period", "--catalog", "p1", "--model", str(tmp_path / "x.json")], capsys)
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qperiods.cli", "period", "--catalog", "p1", "--n-max", "2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert csv_body(proc.stdout)[-1] == ["2", "1", "1", "2"]
