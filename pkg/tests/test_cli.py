import json

import pytest

from pafmsm import Cohort, cohort_to_csv
from pafmsm.cli import run

from conftest import integer_cohort

SPEC = {
    "alpha01": 0.08,
    "alpha02": [{"until": 5, "rate": 0.12}, {"until": 40, "rate": 0.06}],
    "alpha03": 0.04,
    "alpha14": 0.05,
    "alpha15": 0.05,
    "tau": 40,
    "round_days": True,
}


@pytest.fixture
def cohort_file(tmp_path):
    path = tmp_path / "cohort.csv"
    path.write_text(cohort_to_csv(integer_cohort(3, n=150)))
    return str(path)


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(SPEC))
    return str(path)


def test_validate_ok(cohort_file, capsys):
    assert run(["validate", "--input", cohort_file]) == 0
    assert "ok: n=" in capsys.readouterr().out


def test_validate_bad_row_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,inf_time,end_time,end_status\nA,9,5,death\n")
    assert run(["validate", "--input", str(bad)]) == 2
    assert "row 2" in capsys.readouterr().err


def test_summary_output(cohort_file, capsys):
    assert run(["summary", "--input", cohort_file]) == 0
    out = capsys.readouterr().out
    assert out.startswith("field,value\nn,150")


def test_estimate_at_a_time_point(cohort_file, capsys):
    assert run(["estimate", "--input", cohort_file, "--estimand", "paf_o", "--at", "20"]) == 0
    float(capsys.readouterr().out)  # a single parsable number


def test_estimate_curve_to_directory(cohort_file, tmp_path):
    out = tmp_path / "out"
    assert run([
        "estimate", "--input", cohort_file, "--estimand", "paf_c",
        "--grid", "days", "--out", str(out),
    ]) == 0
    text = (out / "paf_c_multistate.csv").read_text()
    assert text.splitlines()[0] == "t,value"


def test_estimate_invalid_pair_is_usage_error(cohort_file, capsys):
    code = run(["estimate", "--input", cohort_file, "--estimand", "paf_o", "--estimator", "ipw"])
    assert code == 1
    assert "usage error" in capsys.readouterr().err


def test_missing_input_is_data_error(capsys):
    assert run(["estimate", "--input", "nope.csv", "--estimand", "paf_o"]) == 2


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == 1


def test_bootstrap_deterministic_output(cohort_file, capsys):
    args = ["bootstrap", "--input", cohort_file, "--estimand", "paf_c",
            "--B", "30", "--seed", "5"]
    assert run(args) == 0
    first = capsys.readouterr().out
    assert run(args) == 0
    assert capsys.readouterr().out == first
    assert first.splitlines()[0] == "t,estimate,lower,upper,defined"


def test_bootstrap_manifest_written(cohort_file, tmp_path):
    out = tmp_path / "boot"
    assert run(["bootstrap", "--input", cohort_file, "--estimand", "paf_o",
                "--B", "20", "--seed", "1", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["B"] == 20 and manifest["seed"] == 1
    assert (out / "paf_o_multistate_bands.csv").exists()


def test_cox_table(cohort_file, capsys):
    assert run(["cox", "--input", cohort_file, "--outcome", "discharge"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("outcome,term,coef,hr,se,ci_low,ci_high,p,n_events")
    assert "discharge,exposure," in out


def test_cox_markov_test(cohort_file, capsys):
    assert run(["cox", "--input", cohort_file, "--outcome", "death", "--markov-test"]) == 0
    assert "death_after,inf_time," in capsys.readouterr().out


def test_simulate_and_check_pipeline(spec_file, tmp_path, capsys):
    assert run(["simulate", "--spec", spec_file, "--n", "200", "--seed", "4"]) == 0
    csv_text = capsys.readouterr().out
    # check requires an uncensored cohort
    lines = csv_text.strip().splitlines()
    kept = [lines[0]] + [l for l in lines[1:] if not l.endswith("censored")]
    path = tmp_path / "sim.csv"
    path.write_text("\n".join(kept) + "\n")

    assert run(["check", "--input", str(path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3
    assert "all equivalences hold" in out


def test_check_rejects_non_integer_times(tmp_path, capsys):
    path = tmp_path / "frac.csv"
    path.write_text("id,inf_time,end_time,end_status\nA,,1.5,death\n")
    assert run(["check", "--input", str(path)]) == 2


def test_simulate_determinism_bytes(spec_file, capsys):
    args = ["simulate", "--spec", spec_file, "--n", "50", "--seed", "8"]
    assert run(args) == 0
    first = capsys.readouterr().out
    assert run(args) == 0
    assert capsys.readouterr().out == first


def test_oracle_csv(spec_file, capsys):
    assert run(["oracle", "--spec", spec_file, "--step", "10"]) == 0
    out = capsys.readouterr().out
    header = out.splitlines()[0].split(",")
    assert header[0] == "t"
    for name in ("p00", "p030", "overall_death", "cpf", "paf_o", "paf_c"):
        assert name in header


def test_threads_env_var_validated(cohort_file, monkeypatch, capsys):
    monkeypatch.setenv("PAF_MSM_THREADS", "zero")
    assert run(["summary", "--input", cohort_file]) == 1
    monkeypatch.setenv("PAF_MSM_THREADS", "2")
    assert run(["summary", "--input", cohort_file]) == 0
