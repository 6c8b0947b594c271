import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from ymblowup import cli


def run(tmp_path, *args):
    return cli.main([*args, "--output-dir", str(tmp_path)])


def load(tmp_path, name):
    doc = json.loads((tmp_path / name).read_text())
    schema = json.loads(cli.schema_path(name).read_text())
    jsonschema.validate(doc, schema)
    return doc


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def test_validate_default(tmp_path):
    assert run(tmp_path, "validate") == 0
    doc = load(tmp_path, "validate.json")
    assert doc["results"]["all_passed"]
    assert all(r["max_abs_error"] <= 1e-11 for r in doc["results"]["identities"])
    assert header(tmp_path / "identity_suite.csv") == ["identity", "grid_size", "max_abs_error", "passed"]
    assert doc["config"]["params"]["tol"] == 1e-11 and doc["version"]


def test_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.main(["linear-decay", "--N", "32", "--tau-max", "3", "--n-seeds", "3",
                         "--output-dir", str(tmp_path / "out")]) == 0
        d.mkdir()
        for f in ("linear_decay.json", "linear_trace.csv"):
            (d / f).write_bytes((tmp_path / "out" / f).read_bytes())
    strip = lambda p: {k: v for k, v in json.loads(p.read_text()).items() if k != "timestamp"}
    assert strip(a / "linear_decay.json") == strip(b / "linear_decay.json")
    assert (a / "linear_trace.csv").read_bytes() == (b / "linear_trace.csv").read_bytes()


def test_spectrum_small_rectangle(tmp_path):
    assert run(tmp_path, "spectrum", "--re-min", "-0.8", "--re-max", "1.6", "--im-min", "-3",
               "--im-max", "3", "--n-re", "2", "--n-im", "1", "--heatmap-re", "5", "--heatmap-im", "5") == 0
    doc = load(tmp_path, "spectrum.json")
    lams = [complex(e["re"], e["im"]) for e in doc["results"]["eigenvalues"]]
    assert any(abs(l - 1) < 1e-8 for l in lams)
    assert any(abs(l + 0.5889) < 0.01 for l in lams)
    assert header(tmp_path / "connection_heatmap.csv")[0] == "re"


def test_linear_decay_g_and_fit_rate(tmp_path):
    assert run(tmp_path, "linear-decay", "--N", "64", "--tau-max", "4", "--init", "g") == 0
    doc = load(tmp_path, "linear_decay.json")
    assert abs(doc["results"]["fit_total"]["slope"] - 1) < 1e-3
    assert cli.main(["fit-rate", "--input", str(tmp_path / "linear_trace.csv"), "--y", "norm_total",
                     "--output-dir", str(tmp_path / "fit")]) == 0
    fit = load(tmp_path / "fit", "fit.json")
    assert abs(fit["results"]["fit"]["slope"] - 1) < 1e-3


def test_evolve_sim_and_tune(tmp_path):
    assert run(tmp_path, "evolve-sim", "--tau-max", "2", "--data", "psiT0", "--T0", "1.05",
               "--T", "1.05") == 0
    doc = load(tmp_path, "evolve_sim.json")
    # U(psi^T0 data, T0) vanishes; the H-norm reads nodal rounding as ~1e-7
    assert doc["results"]["final_norm"] < 1e-6
    assert abs(doc["results"]["final_unstable_amplitude"]) < 1e-12
    assert run(tmp_path, "tune-T", "--data", "zero", "--tau-max", "4", "--window-hi", "4") == 0
    doc = load(tmp_path, "tuning.json")
    assert doc["results"]["T_star"] == 1.0
    assert header(tmp_path / "tune_iterations.csv") == ["T", "unstable_amplitude"]


def test_evolve_phys_small(tmp_path):
    assert run(tmp_path, "evolve-phys", "--n", "600", "--record-every", "0.005") == 0
    doc = load(tmp_path, "blowup_report.json")
    assert doc["results"]["blowup"]
    assert 0.5 < doc["results"]["report"]["T_fit"] < 1.5
    assert header(tmp_path / "phys_snapshots.csv") == ["t", "r", "psi", "psi_t"]


@pytest.mark.parametrize("args", [
    ["validate", "--n", "2"],
    ["linear-decay", "--N", "16"],
    ["spectrum", "--re-min", "-1.6"],
    ["tune-T", "--set", "bogus=1"],
    ["tune-T", "--set", "novalue"],
    ["evolve-sim", "--set", "T=abc"],
    ["evolve-sim", "--data", "csv"],
    ["linear-decay", "--window-lo", "2", "--window-hi", "3"],
])
def test_config_errors_exit_2(tmp_path, args, capsys):
    assert run(tmp_path, *args) == 2


def test_numerical_breakdown_exits_3(tmp_path):
    assert run(tmp_path, "linear-decay", "--N", "32", "--tau-max", "1", "--dtau", "0.05",
               "--n-seeds", "2") == 3


def test_out_of_regime_exits_4(tmp_path):
    assert run(tmp_path, "tune-T", "--data", "psiT0", "--T0", "1.45") == 4


def test_config_file_layering_and_roundtrip(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"N": 48, "tau_max": 3.0, "n_seeds": 2}))
    args = cli.build_parser().parse_args(["linear-decay", "--config", str(cfg_file), "--tau-max", "2",
                                          "--set", "seed=7", "--output-dir", str(tmp_path)])
    rc = cli.config_from_args(args)
    assert rc.params["N"] == 48 and rc.params["tau_max"] == 2.0 and rc.params["seed"] == 7
    again = cli.RunConfig.from_json(rc.to_json())
    assert again == rc
    schema = json.loads((cli.schema_path("validate.json").parent / "run_config.schema.json").read_text())
    jsonschema.validate(rc.to_dict(), schema)
    full = tmp_path / "full.json"
    full.write_text(rc.to_json())
    args = cli.build_parser().parse_args(["linear-decay", "--config", str(full)])
    assert cli.config_from_args(args) == rc


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUTPUT, str(tmp_path / "env"))
    assert cli.main(["validate", "--n-oracle", "3"]) == 0
    assert (tmp_path / "env" / "validate.json").exists()


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ymblowup.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "ymblowup" in out.stdout
