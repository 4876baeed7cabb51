import json

import pytest

from lacelab.cli import main


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


def test_dist_check_uniform_passes(capsys):
    code, doc = run_cli(capsys, ["dist-check", "--family", "uniform",
                                 "--d", "2", "--L", "2"])
    assert code == 0
    assert doc["result"]["ok"]
    assert doc["subcommand"] == "dist-check"


def test_dist_check_nn_fails_bipartite_bound(capsys):
    code, doc = run_cli(capsys, ["dist-check", "--family", "nn", "--d", "2"])
    assert code == 2  # condition check failed, report still emitted
    assert doc["result"]["ok"] is False


def test_rw_beta_divergent_low_dimension(capsys):
    code, doc = run_cli(capsys, ["rw-beta", "--family", "nn", "--d", "1",
                                 "--s", "2", "--M", "8,16,32"])
    assert code == 0
    assert doc["result"]["divergent"] is True
    assert doc["result"]["consistency_error"] < 1e-9


def test_beta_table_with_csv(tmp_path, capsys):
    out = tmp_path / "table.json"
    csv_path = tmp_path / "table.csv"
    code = main(["beta-table", "--family", "nn", "--s", "2",
                 "--d-values", "9,10", "--M", "8",
                 "--out", str(out), "--csv", str(csv_path)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["result"]["rows"]) == 2
    assert (tmp_path / "table.json.meta.json").exists()
    header = csv_path.read_text().splitlines()[0]
    assert "beta" in header and "scaled" in header


def test_saw_subcommand(capsys):
    code, doc = run_cli(capsys, ["saw", "--family", "nn", "--d", "2",
                                 "--nmax", "5", "--z", "0.3"])
    assert code == 0
    masses = doc["result"]["masses"]
    assert masses[1] == pytest.approx(1.0)  # 4 walks * (1/4)
    assert doc["result"]["pi_masses"]["2"] == pytest.approx(-0.25)


def test_perc_subcommand_checks_exact(capsys):
    code, doc = run_cli(capsys, ["perc", "--family", "nn", "--d", "1",
                                 "--M", "6", "--z", "0.8", "--R", "1",
                                 "--replicas", "4000", "--seed", "3"])
    assert code == 0
    assert doc["result"]["within_4se"] is True
    assert doc["seed"] == 3


def test_perc_deterministic_output(capsys):
    argv = ["perc", "--family", "nn", "--d", "1", "--M", "6", "--z", "0.5",
            "--R", "1", "--replicas", "200", "--seed", "9"]
    _, doc_a = run_cli(capsys, argv)
    _, doc_b = run_cli(capsys, argv)
    assert doc_a == doc_b


def test_ising_subcommand(capsys):
    code, doc = run_cli(capsys, ["ising", "--d", "1", "--M", "6",
                                 "--z", "0.4", "--sweeps", "6000",
                                 "--burn-in", "500", "--seed", "2"])
    assert code == 0
    assert doc["result"]["within_4se"] is True
    assert doc["result"]["equilibrated"] is True


def test_diag_subcommand_and_input_file(tmp_path, capsys):
    code, doc = run_cli(capsys, ["diag", "--family", "nn", "--d", "2",
                                 "--M", "8", "--z", "0.5"])
    assert code == 0
    assert doc["result"]["infrared_sup"] < 1e-12

    # round-trip a serialized input through --input
    from lacelab import diagnostics as dg
    from lacelab.steps import StepDistribution
    from lacelab.torus import TorusGrid
    inp = dg.free_two_point(StepDistribution("nn", 1), TorusGrid(1, 8), 0.4)
    path = tmp_path / "inp.json"
    path.write_text(json.dumps(dg.serialize_input(inp)))
    code, doc2 = run_cli(capsys, ["diag", "--input", str(path)])
    assert code == 0
    assert doc2["result"]["f1"] == pytest.approx(0.4)


def test_diag_requires_some_input(capsys):
    code = main(["diag"])
    capsys.readouterr()
    assert code == 1


def test_infrared_assert_flag(capsys):
    code, doc = run_cli(capsys, ["infrared", "--family", "nn", "--d", "2",
                                 "--M", "8", "--z", "0.3", "--assert-free"])
    assert code == 0
    assert doc["result"]["sup_deviation"] < 1e-12


def test_invalid_configuration_exit_code(capsys):
    # z outside [0, 1/sup_D]
    code = main(["perc", "--family", "nn", "--d", "1", "--M", "6",
                 "--z", "3.0", "--R", "1", "--replicas", "10",
                 "--seed", "1"])
    capsys.readouterr()
    assert code == 1


def test_unknown_arguments_exit_code(capsys):
    code = main(["rw-beta", "--family", "nn", "--d", "1", "--s", "7"])
    capsys.readouterr()
    assert code == 1


def test_out_dir_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("LACELAB_OUT_DIR", str(tmp_path))
    code = main(["rw-beta", "--family", "nn", "--d", "1", "--s", "2",
                 "--M", "8,16,32"])
    capsys.readouterr()
    assert code == 0
    assert (tmp_path / "rw-beta.json").exists()
    assert (tmp_path / "rw-beta.json.meta.json").exists()
