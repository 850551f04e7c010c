import json
import math

import numpy as np
import pytest

from stablesde import cli


def write_config(tmp_path, payload, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


BASE = {
    "seed": 77,
    "threads": 2,
    "process": {"alpha": 1.6, "sphere": {"kind": "cylindrical", "d": 1}},
    "euler": {"n": 8, "T": 1.0, "x0": [0.0], "N": 4000},
    "drift": {"kind": "sine", "amplitude": 1.0, "wavenumber": 1.0},
}


def test_unknown_key_is_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"seed": 1, "bogus": 2})
    code = cli.dispatch(["euler", "--config", cfg,
                         "--output-root", str(tmp_path / "runs")])
    captured = capsys.readouterr()
    assert code == 2
    assert "bogus" in captured.err


def test_unknown_nested_key_named(tmp_path, capsys):
    cfg = write_config(tmp_path, {"euler": {"n": 8, "oops": 1}})
    code = cli.dispatch(["euler", "--config", cfg,
                         "--output-root", str(tmp_path / "runs")])
    assert code == 2
    assert "euler.'oops'" in capsys.readouterr().err


def test_unknown_subcommand_is_exit_2(capsys):
    assert cli.dispatch(["frobnicate"]) == 2


def test_validate_quick(capsys):
    assert cli.dispatch(["validate", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out


def test_euler_run_and_replay(tmp_path, capsys):
    cfg = write_config(tmp_path, BASE)
    root = str(tmp_path / "runs")
    assert cli.dispatch(["euler", "--config", cfg, "--output-root", root]) == 0
    manifest = sorted((tmp_path / "runs").glob("*/manifest.json"))[0]
    stored = json.loads(manifest.read_text())
    assert stored["outputs"]
    assert cli.dispatch(["replay", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "byte-identical" in out


def test_replay_multithreaded_matches(tmp_path):
    cfg = write_config(tmp_path, dict(BASE, threads=1))
    root = str(tmp_path / "runs")
    assert cli.dispatch(["euler", "--config", cfg, "--output-root", root]) == 0
    manifest = sorted((tmp_path / "runs").glob("*/manifest.json"))[0]
    assert cli.dispatch(["replay", str(manifest), "--threads", "2"]) == 0


def test_config_round_trip_identity(tmp_path):
    cfg_path = write_config(tmp_path, BASE)
    loaded = cli.load_config(cfg_path)
    rewritten = write_config(tmp_path, loaded, name="cfg2.json")
    assert cli.load_config(rewritten) == loaded


def test_rate_gamma_auto(tmp_path, capsys):
    payload = {
        "seed": 5,
        "threads": 2,
        "rate": {
            "experiment": "distributional",
            "alpha": 1.8,
            "beta": 0.1,
            "gamma": "auto",
            "ladder": [4, 8, 16, 32],
            "N": 2000,
            "ref_factor": 8,
            "levels": 6,
        },
    }
    cfg = write_config(tmp_path, payload)
    code = cli.dispatch(["rate", "--config", cfg,
                         "--output-root", str(tmp_path / "runs")])
    assert code == 0
    run_dir = sorted((tmp_path / "runs").glob("*"))[0]
    report = json.loads((run_dir / "distributional.json").read_text())
    # gamma auto resolves to 1/alpha
    assert report["config"]["gamma"] == pytest.approx(1 / 1.8)


def test_sample_command(tmp_path):
    payload = {"seed": 9, "process": BASE["process"],
               "sample": {"t": 1.0, "count": 5000}}
    cfg = write_config(tmp_path, payload)
    assert cli.dispatch(["sample", "--config", cfg,
                         "--output-root", str(tmp_path / "runs")]) == 0
    bin_path = sorted((tmp_path / "runs").glob("*/laws/samples.bin"))[0]
    samples = np.frombuffer(bin_path.read_bytes(), dtype=np.float64)
    assert len(samples) == 5000


def test_besov_command(tmp_path, capsys):
    payload = {
        "seed": 3,
        "analyzer": {"dim": 1, "L": 2 * math.pi, "grid_size": 1024},
        "drift": {"kind": "lacunary", "beta": 0.2, "J": 7, "a0": 1.0, "seed": 3},
        "besov": {"s": -0.2},
    }
    cfg = write_config(tmp_path, payload)
    assert cli.dispatch(["besov", "--config", cfg,
                         "--output-root", str(tmp_path / "runs")]) == 0
    out = capsys.readouterr().out
    assert "norm" in out
    csv = sorted((tmp_path / "runs").glob("*/besov.csv"))[0].read_text()
    assert csv.startswith("level,weighted_block_sup")


def test_heatkernel_command(tmp_path, capsys):
    payload = {
        "seed": 3,
        "process": {"alpha": 1.5, "sphere": {"kind": "cylindrical", "d": 1}},
        "analyzer": {"dim": 1, "L": 1024.0, "grid_size": 65536},
        "heatkernel": {"times": [0.05, 0.1, 0.2, 0.4], "levels": [-1, 3],
                       "moment_pairs": [[1, 0.0]]},
    }
    cfg = write_config(tmp_path, payload)
    assert cli.dispatch(["heatkernel", "--config", cfg,
                         "--output-root", str(tmp_path / "runs")]) == 0
    out = capsys.readouterr().out
    assert "slope" in out


def test_env_var_overrides_output_root(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, BASE)
    env_root = tmp_path / "elsewhere"
    monkeypatch.setenv(cli.ENV_OUTPUT_ROOT, str(env_root))
    assert cli.dispatch(["euler", "--config", cfg,
                         "--output-root", str(tmp_path / "ignored")]) == 0
    assert list(env_root.glob("*/manifest.json"))
    assert not (tmp_path / "ignored").exists()
