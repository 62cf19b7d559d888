import csv
import json
import math

import jsonschema
import pytest

from prethermal import cli


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def test_config_round_trip(tmp_path):
    data = {"experiment": "evolve", "n_spins": 2, "alpha": 0.9, "beta_omega0": 1.5,
            "initial_state": {"preset": "up"}, "integrator": {"t_max": 2.0}}
    cfg = cli.ScenarioConfig.from_dict(data)
    again = cli.ScenarioConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert cfg.rates().alpha == 0.9
    assert cfg.integrator_config().t_max == 2.0


@pytest.mark.parametrize("bad", [
    {"n_spins": 9},
    {"alpha": 1.5},
    {"beta_omega0": -1},
    {"unknown_key": 1},
    {"model": "mean_field"},
    {"integrator": {"rel_tol": 0}},
])
def test_schema_rejects(bad):
    with pytest.raises(jsonschema.ValidationError):
        cli.ScenarioConfig.from_dict(bad)


def test_semantic_rejects():
    with pytest.raises(ValueError):
        cli.ScenarioConfig.from_dict({"initial_state": {"preset": "dicke"}})
    with pytest.raises(ValueError):
        cli.ScenarioConfig.from_dict({"integrator": {"spacing": "log", "t_first": 5.0,
                                                     "t_max": 1.0}})


def test_spatial_model_sets_alpha():
    cfg = cli.ScenarioConfig.from_dict({"spatial": {"kind": "exponential", "r": 1.0, "xi": 1.0}})
    assert cfg.resolved_alpha() == pytest.approx(math.exp(-1.0))


def test_invalid_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_spins": 0}))
    assert cli.main(["spectrum", "--config", str(path)]) == 2
    assert "invalid configuration" in capsys.readouterr().err
    assert run(tmp_path, "spectrum", "--n-spins", "2") == 2  # alpha missing


def test_flags_override_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n_spins": 3, "alpha": 0.2}))
    args = cli.make_parser().parse_args(["spectrum", "--config", str(path), "--alpha", "1.0"])
    cfg = cli.build_config(args, "spectrum")
    assert (cfg.n_spins, cfg.alpha) == (3, 1.0)


@pytest.mark.parametrize("zero_count,adr,expected", [
    (2, 0.0, "integrable"),
    (1, 5e-5, "nearly-integrable"),
    (1, 0.5, "non-integrable"),
])
def test_classification(zero_count, adr, expected):
    assert cli.classify(zero_count, adr, 1.0, 0.01) == expected


@pytest.mark.parametrize("n,alpha,zeros,cls", [
    (2, 1.0, 2, "integrable"), (3, 1.0, 5, "integrable"),
    (2, 0.9999, 1, "nearly-integrable"), (3, 0.5, 1, "non-integrable")])
def test_spectrum_command(tmp_path, n, alpha, zeros, cls):
    assert run(tmp_path, "spectrum", "--n-spins", str(n), "--alpha", str(alpha)) == 0
    reg = json.loads((tmp_path / "regime.json").read_text())
    assert (reg["zero_count"], reg["classification"]) == (zeros, cls)
    if alpha == 1.0:
        assert reg["conserved_pairs"] == n * (n - 1) // 2
    payload = json.loads((tmp_path / "spectrum.json").read_text())
    assert len(payload["eigenvalues"]) == 4**n


def test_evolve_is_deterministic(tmp_path):
    args = ["evolve", "--n-spins", "2", "--alpha", "1.0", "--initial", "up", "--t-max", "30"]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert a == (tmp_path / "b" / "trajectory.csv").read_bytes()
    rows = list(csv.DictReader(a.decode().splitlines()))
    assert float(rows[-1]["purity"]) == pytest.approx(0.8022, abs=1e-4)
    plateau = json.loads((tmp_path / "a" / "plateau.json").read_text())
    assert plateau["stable"] is True
    assert (tmp_path / "a" / "trajectory.gp").exists()


@pytest.mark.parametrize("model,n", [("two_spin_reduced", 2), ("two_spin_nine", 2),
                                     ("three_spin_reduced", 3)])
def test_evolve_reduced_models(tmp_path, model, n):
    assert run(tmp_path, "evolve", "--n-spins", str(n), "--alpha", "0.5", "--model", model,
               "--initial", "up", "--t-max", "5") == 0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "t" and "Mz" in header
    assert run(tmp_path, "evolve", "--n-spins", "4", "--alpha", "0.5", "--model", model,
               "--t-max", "1") == 2


def test_sweep_alpha(tmp_path):
    assert run(tmp_path, "sweep-alpha", "--n-spins", "2", "--alphas", "0", "0.5", "1") == 0
    rows = list(csv.DictReader((tmp_path / "adr_sweep.csv").read_text().splitlines()))
    assert [r["classification"] for r in rows] == ["non-integrable"] * 2 + ["integrable"]
    assert float(rows[0]["adr"]) == pytest.approx(1.0)


def test_entropy_scaling(tmp_path):
    assert run(tmp_path, "entropy-scaling", "--beta-omega0", str(math.log(4)),
               "--n-range", "1", "6") == 0
    rows = list(csv.DictReader((tmp_path / "entropy_scaling.csv").read_text().splitlines()))
    thermal = [float(r["S"]) for r in rows if r["regime"] == "thermal_alpha_lt1"]
    principal = [float(r["S"]) for r in rows if r["regime"] == "principal_block_alpha_eq1"]
    assert len(thermal) == len(principal) == 6
    assert thermal[-1] == pytest.approx(6 * 0.5004, abs=6e-4)
    assert principal[-1] < 0.75


@pytest.mark.slow
def test_reproduce_paper(tmp_path, capsys):
    code = run(tmp_path, "reproduce-paper")
    out = capsys.readouterr().out
    report = json.loads((tmp_path / "acceptance.json").read_text())
    failed = {r["criterion"] for r in report if not r["passed"]}
    # the only failure is the quoted large-N principal-block entropy
    assert failed == {6}
    assert code == 1
    assert out.count("[PASS]") == 9


@pytest.mark.slow
@pytest.mark.parametrize("argv,must_fail", [
    (["--alpha", "0.99"], {1, 3, 8}),
    (["--zero-tol", "1e-3"], {1}),
])
def test_reproduce_paper_negative_controls(tmp_path, argv, must_fail):
    assert run(tmp_path, "reproduce-paper", *argv) == 1
    report = json.loads((tmp_path / "acceptance.json").read_text())
    failed = {r["criterion"] for r in report if not r["passed"]}
    assert must_fail <= failed
