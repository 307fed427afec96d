import json
import math

import pandas as pd
import pytest

from app import EXIT_CODES, TASKS, build_parser, main

SMALL_RUN = """
[system]
name = "diag-hyperbolic"

[rate]
name = "poly"

[grid]
span = 4.0
step = 0.5

[sphere]
samples = 4000
restarts = 4
max_iter = 100
refine_top = 4
"""


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(SMALL_RUN, encoding="utf-8")
    return str(path)


def _report(out, command):
    with open(out / f"{command}.json", encoding="utf-8") as fh:
        return json.load(fh)


def test_every_subcommand_is_registered():
    parser = build_parser()
    for name in TASKS:
        assert parser.parse_args([name]).command == name
    assert set(EXIT_CODES.values()) == {0, 1, 2}


def test_pipeline_on_a_dichotomic_system(run_config, tmp_path):
    out = tmp_path / "out"
    assert main(["pipeline", "--config", run_config, "--out", str(out)]) == 0
    report = _report(out, "pipeline")
    assert report["status"] == "dichotomic"
    assert report["results"]["pipeline"]["rescaled_verdict"] == "dichotomic"
    assert report["inputs"]["rate"]["name"] == "poly"
    assert report["provenance"]["tool"] == "hdichotomy"


def test_reports_are_reproducible(run_config, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    argv = ["check-noncritical", "--config", run_config, "--C", "1.0", "--format", "csv"]
    assert main([*argv, "--out", str(first)]) == 0
    assert main([*argv, "--out", str(second)]) == 0
    for name in ("check-noncritical.json", "noncritical_profile.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_rotation_is_critical(run_config, tmp_path):
    out = tmp_path / "out"
    code = main(["check-noncritical", "--config", run_config, "--system", "rotation", "--rate", "exp", "--C", "1",
                 "--out", str(out)])
    assert code == 1
    assert _report(out, "check-noncritical")["results"]["constants"]["theta"] == pytest.approx(1.0)


def test_rotation_has_no_projections(run_config, tmp_path):
    code = main(["check-dichotomy", "--config", run_config, "--system", "rotation", "--out", str(tmp_path)])
    assert code == 2


def test_given_constants_are_verified(run_config, tmp_path):
    argv = ["check-dichotomy", "--config", run_config, "--D", "1", "--lambda", "1", "--format", "csv",
            "--out", str(tmp_path)]
    assert main(argv) == 0
    norms = pd.read_csv(tmp_path / "dichotomy_norms.csv")
    assert (norms["stable_norm"] <= norms["bound"] * (1 + 1e-9)).all()
    assert main([*argv[:-2], "--lambda", "1.5", "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("command", ["check-growth", "check-decay"])
def test_growth_and_decay(command, run_config, tmp_path):
    assert main([command, "--config", run_config, "--out", str(tmp_path)]) == 0
    bound = _report(tmp_path, command)["results"]["bound"]
    assert bound["K"] == pytest.approx(1.0)
    assert bound["mu"] == pytest.approx(1.0)


def test_expansive_rotation_diverges(run_config, tmp_path):
    argv = ["check-expansive", "--config", run_config, "--out", str(tmp_path), "--beta", "1"]
    assert main(argv) == 0
    assert main([*argv, "--system", "rotation"]) == 1


def test_expansive_slow_contraction_passes(tmp_path):
    path = tmp_path / "slow.toml"
    path.write_text(SMALL_RUN.replace("diag-hyperbolic", "scalar-stable").replace("poly", "exp")
                    .replace("span = 4.0", "span = 6.0"), encoding="utf-8")
    argv = ["check-expansive", "--config", str(path), "--out", str(tmp_path), "--param", "lam=0.3", "--beta", "0.3"]
    assert main(argv) == 0
    constants = _report(tmp_path, "check-expansive")["results"]["constants"]
    assert not constants["diverging"]


def test_construct(run_config, tmp_path):
    assert main(["construct", "--config", run_config, "--out", str(tmp_path), "--C", "1"]) == 0
    derived = _report(tmp_path, "construct")["results"]["derived"]
    assert derived["alpha"] == pytest.approx(0.5 * math.log(math.cosh(2.0)), rel=1e-3)
    assert derived["C"] == 1.0


def test_rescaled_config_reproduces_the_verdict(run_config, tmp_path):
    first, second = tmp_path / "direct", tmp_path / "rescaled"
    assert main(["rescale", "--config", run_config, "--out", str(first)]) == 0
    emitted = first / "rescaled_family.json"
    assert json.loads(emitted.read_text())["rate"]["name"] == "exp"
    assert main(["pipeline", "--config", str(emitted), "--out", str(second)]) == 0
    assert _report(second, "pipeline")["status"] == "dichotomic"


@pytest.mark.parametrize("argv", [
    ["pipeline", "--system", "pendulum"],
    ["pipeline", "--param", "lam"],
    ["check-noncritical", "--C", "-1"],
])
def test_configuration_errors_exit_64(argv, run_config, tmp_path):
    assert main([*argv, "--config", run_config, "--out", str(tmp_path)]) == 64


def test_bad_config_file_exits_64(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[grid]\nstep = -1\n", encoding="utf-8")
    assert main(["pipeline", "--config", str(path), "--out", str(tmp_path)]) == 64


def test_numerical_errors_exit_70(run_config, tmp_path):
    code = main(["check-noncritical", "--config", run_config, "--C", "10", "--out", str(tmp_path)])
    assert code == 70


def test_out_dir_from_environment(run_config, tmp_path, monkeypatch):
    monkeypatch.setenv("HDICHOTOMY_OUT_DIR", str(tmp_path / "env"))
    assert main(["check-growth", "--config", run_config]) == 0
    assert (tmp_path / "env" / "check-growth.json").exists()


def test_demo(run_config, tmp_path, capsys):
    assert main(["demo", "--config", run_config, "--out", str(tmp_path)]) == 0
    table = pd.read_csv(tmp_path / "demo.csv")
    assert table["match"].all()
    assert len(table) == 8
    assert "theta(C=1)" in capsys.readouterr().out
