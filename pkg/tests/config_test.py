"""Test config loading, the generated argparser and the CLI entrypoint."""

import json
import os

import pytest

import main
from common.args import convert_args_to_dict, init_argparser
from common.gaussnet_config import GaussNetConfig, generate_config_file
from gaussnet.model import (
    ActivationKind,
    ActivationSpec,
    ConfigValidationError,
    NetworkConfig,
    dump_config,
)


@pytest.fixture(autouse=True)
def isolated_workdir(tmp_path, monkeypatch):
    """No stray config.yml or GAUSSNET_* variables leak into a test."""

    monkeypatch.chdir(tmp_path)
    for name in list(os.environ):
        if name.startswith("GAUSSNET_") and name != "GAUSSNET_LOG_LEVEL":
            monkeypatch.delenv(name)

    monkeypatch.setattr(main, "install_signal_handlers", lambda: None)


def write_config(path, text: str) -> str:
    path.write_text(text, encoding="utf8")
    return str(path)


def test_defaults_without_a_config_file():
    config = GaussNetConfig().load()

    assert config.network.n == 100
    assert config.network.inputs == [[1.0]]
    assert config.activation.kind == "tanh"
    assert config.experiment.metrics == ["KS", "TV", "W1"]
    assert config.developer.threads == 1


def test_sources_merge_in_order(tmp_path, monkeypatch):
    """File, then environment, then arguments."""

    path = write_config(
        tmp_path / "custom.yml",
        "network:\n  n: 4\n  sigma_w: 2.0\nexperiment:\n  seed: 7\n",
    )
    arguments = {"config": {"config": path}}

    from_file = GaussNetConfig().load(arguments)
    assert from_file.network.n == 4
    assert from_file.network.sigma_w == 2.0

    monkeypatch.setenv("GAUSSNET_NETWORK_N", "16")
    from_env = GaussNetConfig().load(arguments)
    assert from_env.network.n == 16
    assert from_env.network.sigma_w == 2.0

    arguments["network"] = {"n": "32"}
    from_args = GaussNetConfig().load(arguments)
    assert from_args.network.n == 32
    assert from_args.experiment.seed == 7


def test_json_documents_load_as_config(tmp_path):
    document = {
        "activation": {"kind": "cubic"},
        "network": {"d": 2, "n": 8, "sigma_w": 1.0, "inputs": [[1.0, 0.0]]},
    }
    path = write_config(tmp_path / "run.json", json.dumps(document))

    config = GaussNetConfig().load({"config": {"config": path}})
    cfg, act = config.network_and_activation()

    assert cfg.input_dim == 2
    assert cfg.inputs == [[1.0, 0.0]]
    assert act.kind == ActivationKind.CUBIC


def test_environment_text_is_parsed(monkeypatch):
    monkeypatch.setenv("GAUSSNET_EXPERIMENT_METRICS", "ks,w1")
    monkeypatch.setenv("GAUSSNET_NETWORK_INPUTS", "[[0.5], [-1.0]]")

    config = GaussNetConfig().load()

    assert config.experiment.metrics == ["KS", "W1"]
    assert config.network.inputs == [[0.5], [-1.0]]


def test_invalid_configs(tmp_path):
    with pytest.raises(ConfigValidationError):
        GaussNetConfig().load({"network": {"n": "many"}})

    with pytest.raises(ConfigValidationError):
        GaussNetConfig().load({"network": {"width": 3}})

    broken = write_config(tmp_path / "broken.yml", "network: [unclosed\n")
    with pytest.raises(ConfigValidationError):
        GaussNetConfig().load({"config": {"config": broken}})

    with pytest.raises(FileNotFoundError):
        GaussNetConfig().load({"config": {"config": str(tmp_path / "missing.yml")}})

    negative = GaussNetConfig().load({"network": {"sigma_w": -1.0}})
    with pytest.raises(ConfigValidationError):
        negative.network_and_activation()


@pytest.mark.parametrize("section", ["config", "experiment", "logging", "developer"])
def test_unknown_keys_are_rejected_in_every_section(tmp_path, section):
    with pytest.raises(ConfigValidationError):
        GaussNetConfig().load({section: {"bogus_key": 1}})

    path = write_config(tmp_path / "extra.yml", f"{section}:\n  bogus_key: 1\n")
    with pytest.raises(ConfigValidationError):
        GaussNetConfig().load({"config": {"config": path}})


def test_experiment_config_mapping():
    config = GaussNetConfig().load(
        {
            "experiment": {
                "widths": "1,8,27",
                "reps": 3,
                "points": 200,
                "metrics": ["W1"],
                "seed": 5,
                "interplay_check": False,
            }
        }
    )
    ec = config.experiment_config()

    assert ec.widths == [1, 8, 27]
    assert ec.replications == 3
    assert ec.points_per_replication == 200
    assert ec.master_seed == 5
    assert ec.interplay_check is False
    assert ec.network.width == 100

    config.experiment.fast = True
    fast = config.experiment_config()
    assert fast.replications == 50
    assert fast.points_per_replication == 1000


def test_experiment_config_rejects_bad_widths():
    config = GaussNetConfig().load({"experiment": {"widths": "8,1"}})

    with pytest.raises(ConfigValidationError):
        config.experiment_config()


def test_generated_sample_loads_back(tmp_path):
    path = tmp_path / "sample.yml"
    generate_config_file(filename=str(path))

    text = path.read_text()
    assert text.startswith("# Sample YAML file")
    assert "inputs: [[1.0]]" in text

    config = GaussNetConfig().load({"config": {"config": str(path)}})
    assert config.network.n == 100
    assert config.experiment.metrics == ["KS", "TV", "W1"]


def test_argparser_groups_config_sections():
    parser = init_argparser()
    args = parser.parse_args(
        [
            "sweep",
            "--n",
            "8",
            "--metrics",
            "KS",
            "W1",
            "--fast",
            "--inputs",
            "[[0.5]]",
        ]
    )
    arguments = convert_args_to_dict(args, parser)

    assert args.actions == "sweep"
    assert arguments["network"] == {"n": "8", "inputs": ["[[0.5]]"]}
    assert arguments["experiment"] == {"metrics": ["KS", "W1"], "fast": True}
    assert arguments["activation"] == {}

    config = GaussNetConfig().load(arguments)
    assert config.network.n == 8
    assert config.network.inputs == [[0.5]]
    assert config.experiment.fast is True


def test_subcommand_is_required():
    with pytest.raises(SystemExit):
        init_argparser().parse_args([])


def run_cli(argv):
    parser = init_argparser()
    return main.entrypoint(parser.parse_args(argv), parser)


def test_bound_command_prints_json(capsys):
    code = run_cli(["bound", "--n", "16", "--kind", "cubic", "--metric", "ks"])
    report = json.loads(capsys.readouterr().out)

    assert code == 0
    assert report["metric"] == "KS"
    assert report["width"] == 16
    assert report["source"] == "closed-form-unit"


def test_distances_command_reads_a_sample(tmp_path, capsys):
    sample = tmp_path / "draws.txt"
    sample.write_text("\n".join(str(x / 10) for x in range(-20, 21)))

    code = run_cli(["distances", "--sample", str(sample), "--metrics", "KS", "W1"])
    payload = json.loads(capsys.readouterr().out)

    assert code == 0
    assert payload["sample_size"] == 41
    assert [item["metric"] for item in payload["estimates"]] == ["KS", "W1"]


def test_exit_codes(capsys):
    assert run_cli(["bound", "--sigma-w", "-1"]) == 2
    assert run_cli(["bound", "--config", "missing.yml"]) == 2
    assert run_cli(["bound", "--metric", "L2"]) == 1
    assert capsys.readouterr().out == ""


def test_dumped_documents_load_as_config(tmp_path):
    cfg = NetworkConfig(d=1, n=12, sigma_w=0.5, sigma_b=0.1, inputs=[[2.0]])
    act = ActivationSpec.builtin("softplus-approx", m=4)
    path = write_config(tmp_path / "dumped.json", dump_config(cfg, act))

    config = GaussNetConfig().load({"config": {"config": path}})

    assert config.network_and_activation() == (cfg, act)


def test_file_writing_commands(tmp_path, capsys):
    out = str(tmp_path / "out")

    assert run_cli(["simulate", "--count", "5", "--out", out]) == 0
    assert len((tmp_path / "out" / "samples.txt").read_text().splitlines()) == 5

    growth = ["relu-growth", "--family", "sau-approx", "--ms", "1", "2", "--out", out]
    assert run_cli(growth) == 0
    table = json.loads(capsys.readouterr().out)
    assert [row["m"] for row in table["rows"]] == [1.0, 2.0]
    assert (tmp_path / "out" / "relu_growth_sau-approx.csv").exists()

    sweep = ["sweep", "--widths", "1,8", "--reps", "2", "--points", "100", "--out", out]
    assert run_cli(sweep + ["--metrics", "KS"]) == 0
    assert (tmp_path / "out" / "sweep.csv").read_text().startswith("width,metric")
    assert (tmp_path / "out" / "sweep.meta.json").exists()

    sample = tmp_path / "exported.yml"
    assert run_cli(["export-config", "--export-path", str(sample)]) == 0
    assert "quadrature_order: 200" in sample.read_text()
