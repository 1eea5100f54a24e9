import json
import random
import subprocess
import sys

import pytest

from sparkforge import cli
from sparkforge.cech_models import MODEL_FIXTURES, TRIPLE_FIXTURES
from sparkforge.chern_weil import unipotent_scenario

ALL_FIXTURES = sorted(TRIPLE_FIXTURES) + sorted(MODEL_FIXTURES)


def run_json(capsys, *argv):
    code = cli.main(["--json", *map(str, argv)])
    return code, json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("name", ALL_FIXTURES)
def test_fixture_round_trip(name):
    doc = cli.fixture_document(name)
    text = cli.dumps(doc)
    again = cli.export(cli.ingest(json.loads(text)))
    assert cli.dumps(again) == text


def test_fixtures_export_and_reload(tmp_path, capsys):
    code, rep = run_json(capsys, "fixtures", "export", "all", "--out", tmp_path)
    assert code == 0 and len(rep["written"]) == len(ALL_FIXTURES)
    for path in rep["written"]:
        doc = cli.load_document(path)
        assert cli.dumps(cli.export(cli.ingest(doc))) == cli.dumps(doc)
    code, rep = run_json(capsys, "fixtures", "list")
    assert set(rep["triples"]) == set(TRIPLE_FIXTURES) and set(rep["cech-models"]) == set(MODEL_FIXTURES)


def test_scenario_round_trip():
    sc = unipotent_scenario(random.Random(0), 2, 2)
    doc = cli.export(sc)
    back = cli.ingest(json.loads(cli.dumps(doc)))
    assert cli.dumps(cli.export(back)) == cli.dumps(doc)


def test_spark_group_example(tmp_path, capsys):
    cli.main(["fixtures", "export", "synthetic-T1", "--out", str(tmp_path)])
    capsys.readouterr()
    code, rep = run_json(capsys, "spark-group", tmp_path / "synthetic-T1.json", "--degree", 0)
    assert code == 0 and rep["invariants"] == "Q/Z + Z"
    # bare fixture names work too
    code, rep = run_json(capsys, "spark-group", "point", "--degree", 0)
    assert rep["invariants"] == "Q/Z"


def test_deligne_example(capsys):
    code, rep = run_json(capsys, "deligne", "torus1", "--level", 0, "--degree", 1)
    assert code == 0 and rep["invariants"] == "Z^2"


def test_nadel_example(capsys):
    code, rep = run_json(capsys, "nadel", "--k", 2, "--dim", 2, "--trunc", 2, "--seed", 7)
    assert code == 0
    assert rep["match"] is True and rep["coefficient"] == "-1/3" and rep["seed"] == 7


def test_nadel_non_vacuous(capsys):
    code, rep = run_json(capsys, "nadel", "--k", 2, "--dim", 3, "--seed", 1, "--terms", 3)
    assert code == 0 and rep["match"] and not rep["vacuous"] and rep["form_terms"] > 0


def test_transgress_reports(tmp_path, capsys):
    code, rep = run_json(capsys, "transgress", "unipotent-normalized", "--k", 2, "--dim", 2, "--seed", 3)
    assert code == 0 and rep["all_passed"]
    assert set(rep["checks"]) == {"low-type-vanishing", "dbar-exact-component"}
    code, rep = run_json(capsys, "transgress", "bott-pair", "--k", 2, "--dim", 2, "--seed", 3)
    assert code == 0 and set(rep["checks"]) == {"type-vanishing"}
    path = tmp_path / "sc.json"
    path.write_text(cli.dumps(cli.export(unipotent_scenario(random.Random(4), 2, 2))))
    code, rep = run_json(capsys, "transgress", path, "--k", 2, "--dim", 2, "--seed", 0)
    assert code == 0 and set(rep["checks"]) == {"low-type-vanishing"}


def test_other_commands(capsys):
    code, rep = run_json(capsys, "validate", "synthetic-T1")
    assert code == 0 and rep["passed"]
    code, rep = run_json(capsys, "validate", "torus1", "--tier", "model")
    assert code == 0 and rep["tier"] == "model"
    code, rep = run_json(capsys, "cohomology", "synthetic-T1", "--degree", 0)
    assert code == 0 and rep["H(I)"] == "Z"
    code, rep = run_json(capsys, "grid", "synthetic-T1", "--degree", 0)
    assert code == 0 and rep["exact"]
    code, rep = run_json(capsys, "product", "torus1", "--alpha", "0:0", "--beta", "0:0")
    assert code == 0 and rep["is_spark"] and rep["degree"] == 1
    code, rep = run_json(capsys, "deligne-compare", "torus1-poly", "--trials", 3, "--seed", 2)
    assert code == 0 and rep["all_passed"] and len(rep["results"]) == 3


@pytest.mark.parametrize("argv", [
    ["deligne-compare", "torus1-poly", "--trials", "4", "--seed", "9"],
    ["nadel", "--k", "1", "--dim", "2", "--seed", "5"],
    ["transgress", "hermitian-pair", "--k", "2", "--dim", "2", "--seed", "5"],
])
def test_reports_are_deterministic(argv, capsys):
    outs = []
    for _ in range(2):
        assert cli.main(["--json", *argv]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


@pytest.mark.parametrize("name", ["synthetic-T1-e1", "synthetic-T1-no-e", "synthetic-T1-psi0"])
def test_falsified_validation_exits_2(name, tmp_path, capsys):
    out = tmp_path / "residual.json"
    code, rep = run_json(capsys, "--residual-out", out, "validate", name)
    assert code == 2 and rep["status"] == "falsified"
    saved = json.loads(out.read_text())
    assert saved == rep and saved["violations"]


def test_malformed_inputs_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_json(capsys, "validate", bad)[0] == 1
    bad.write_text(json.dumps({"format": "other", "version": 1, "kind": "complex", "payload": {}}))
    assert run_json(capsys, "validate", bad)[0] == 1
    bad.write_text(json.dumps(cli.wrap("complex", {"ring": "ZZ"})))
    code, rep = run_json(capsys, "validate", bad)
    assert code == 1 and "degrees" in rep["error"]
    doc = cli.fixture_document("synthetic-T1")
    doc["payload"]["F"]["diff"]["0"] = [[0, 0, "1/0"]]
    bad.write_text(json.dumps(doc))
    assert run_json(capsys, "validate", bad)[0] == 1
    assert run_json(capsys, "validate", tmp_path / "missing.json")[0] == 1
    assert run_json(capsys, "spark-group", "point")[0] == 1
    assert run_json(capsys, "product", "torus1", "--alpha", "0:99", "--beta", "0:0")[0] == 1


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "sparkforge", "--json", "spark-group", "synthetic-T1",
                          "--degree", "0"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["invariants"] == "Q/Z + Z"
