import json

import pytest
import yaml

from heislab.cli import ConfigError, ExperimentConfig, load_config, main

FLOW = ["--set", "psi.radius=1.5", "--set", "params.points=4", "--set", "params.horizon=0.2",
        "--set", "params.step=0.002"]


def _run(tmp_path, name, *args):
    out = tmp_path / name
    return main([*args, "--out", str(out)]), out


def test_identities_pass(tmp_path, capsys):
    code, out = _run(tmp_path, "id", "identities", "--seed", "3")
    assert code == 0
    assert "identities: PASS" in capsys.readouterr().out
    d = json.loads((out / "identities.json").read_text())
    assert d["schema_version"] == 1 and d["passed"] and d["meta"]["seed"] == 3


def test_reruns_are_bit_identical(tmp_path):
    for name in ("a", "b"):
        assert _run(tmp_path, name, "flow", "--seed", "5", *FLOW)[0] == 0
    for f in ("flow.csv", "trajectories.csv", "flow.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert main(["compare", str(tmp_path / "a" / "flow.json"), str(tmp_path / "b" / "flow.json")]) == 0


def test_seed_changes_output(tmp_path):
    _run(tmp_path, "a", "flow", "--seed", "5", *FLOW)
    _run(tmp_path, "b", "flow", "--seed", "6", *FLOW)
    assert (tmp_path / "a" / "trajectories.csv").read_bytes() != (tmp_path / "b" / "trajectories.csv").read_bytes()
    assert main(["compare", str(tmp_path / "a" / "flow.json"), str(tmp_path / "b" / "flow.json")]) == 1


def test_failed_check_sets_exit_status(tmp_path, capsys):
    # a coarse step cannot keep log det on the divergence integral within 1e-8
    code, _ = _run(tmp_path, "f", "flow", "--set", "psi.radius=1.5", "--set", "params.points=4",
                   "--set", "params.horizon=0.2", "--set", "params.step=0.01")
    assert code == 1
    assert "FAIL: logdet_tracks_divergence" in capsys.readouterr().out


def test_control_flow_asserts_defect(tmp_path):
    code, out = _run(tmp_path, "c", "flow", "--set", "psi.radius=1.5", "--set", "vertical_factor=1.0",
                     "--set", "params.points=4", "--set", "params.step=0.002", "--set", "params.horizon=0.5",
                     "--set", "params.control_min_defect=0.1")
    assert code == 0
    assert json.loads((out / "flow.json").read_text())["checks"]["control_defect_positive"]


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(yaml.safe_dump({"kind": "quotients", "ladder": [0.2, 0.1], "region": 0.3, "h": 0.1,
                                   "params": {"w": [1, 0, 0], "order": "2"}}))
    code, out = _run(tmp_path, "q", "quotients", "--config", str(cfg))
    assert code == 0
    assert (out / "quotients.csv").read_text().startswith("eps,")


def test_deformation_and_counterexample_runs(tmp_path):
    assert _run(tmp_path, "d", "deformation", "--set", "params.trials=2", "--set", "h=0.1")[0] == 0
    code, out = _run(tmp_path, "x", "counterexample", "--set", "params.cells=24")
    assert code == 0
    assert json.loads((out / "counterexample.json").read_text())["verdict"] == "SEPARATED"


def test_transport_run(tmp_path):
    code, out = _run(tmp_path, "t", "transport", "--set", "psi=linear-x", "--set", "datum=linear-y",
                     "--set", "box=3.0", "--set", "region=1.2", "--set", "ladder=[0.1,0.05]",
                     "--set", "params.exact=y-plus-tau")
    assert code == 0
    checks = json.loads((out / "transport.json").read_text())["checks"]
    assert checks["exact_solution"] and checks["control_separated"]


@pytest.mark.parametrize("args,needle", [
    (["--set", "ladder=[0.1,0.2]"], "ladder"),
    (["--set", "h=-1"], "h:"),
    (["--set", "region=3.0"], "region"),
    (["--set", "bogus=1"], "bogus"),
    (["--set", "params.nope=1"], "nope"),
    (["--set", "datum.name=nothing"], "datum"),
    (["--set", "noequals"], "key=value"),
])
def test_config_errors(tmp_path, capsys, args, needle):
    code, _ = _run(tmp_path, "e", "quotients", *args)
    assert code == 2
    assert needle in capsys.readouterr().err


def test_admissibility_before_allocation(tmp_path, capsys):
    code, out = _run(tmp_path, "adm", "quotients", "--set", "ladder=[5.0,1.0]")
    assert code == 2
    assert "AdmissibilityError" in capsys.readouterr().err
    assert not (out / "quotients.csv").exists()


def test_kind_mismatch(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("kind: flow\n")
    with pytest.raises(ConfigError):
        load_config(str(cfg), kind="quotients")


def test_config_dataclass_defaults():
    cfg = ExperimentConfig("flow")
    assert cfg.psi == {"name": "bump"} and cfg.region_.dim == 3
    with pytest.raises(ConfigError):
        ExperimentConfig("flow", n=0)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "flow", "unknown": 1})


def test_compare_rejects_other_schema(tmp_path, capsys):
    _run(tmp_path, "id", "identities")
    _run(tmp_path, "d", "deformation", "--set", "params.trials=1", "--set", "h=0.1")
    assert main(["compare", str(tmp_path / "id" / "identities.json"), str(tmp_path / "d" / "deformation.json")]) == 2
