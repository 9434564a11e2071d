import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from cpsim import dense
from cpsim.cli import cli, main
from cpsim.reduction import AlsDegenerateError
from cpsim.state import CPState


@pytest.fixture
def runner():
    return CliRunner()


def test_run_qft_basis_json(runner, tmp_path):
    out = tmp_path / "log.json"
    res = runner.invoke(cli, ["run", "--alg", "qft", "--qubits", "24",
                              "--input", "basis:0", "--rank-limit", "1",
                              "--out", str(out)])
    assert res.exit_code == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["fidelity_estimate"] == 1.0
    assert doc["result"]["rank"] == 1
    assert "wall_ms" in doc["result"]


def test_run_grover_direct(runner):
    res = runner.invoke(cli, ["run", "--alg", "grover", "--qubits", "10",
                              "--marked-count", "1", "--strategy", "direct",
                              "--rank-limit", "2", "--format", "json"])
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["result"]["marked_probability"] == pytest.approx(1.0, abs=1e-3)


def test_run_walk_bipartite(runner):
    res = runner.invoke(cli, ["run", "--alg", "walk", "--graph", "bipartite",
                              "--qubits", "8", "--strategy", "direct",
                              "--rank-limit", "4"])
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["result"]["marked_probability"] == pytest.approx(0.781,
                                                               abs=1e-2)


def test_run_csv_deterministic(runner):
    args = ["run", "--alg", "qft-random", "--qubits", "8", "--rank-limit",
            "8", "--strategy", "als", "--seed", "5", "--format", "csv"]
    a = runner.invoke(cli, args)
    b = runner.invoke(cli, args)
    assert a.exit_code == 0 and b.exit_code == 0
    assert a.output == b.output
    assert a.output.splitlines()[0].startswith("section,layer,rank_in")
    assert "wall" not in a.output


def test_run_dump_state_and_circuit(runner, tmp_path):
    st_path = tmp_path / "state.json"
    circ_path = tmp_path / "circ.json"
    res = runner.invoke(cli, ["run", "--alg", "qft", "--qubits", "4",
                              "--input", "basis:9",
                              "--dump-state", str(st_path),
                              "--dump-circuit", str(circ_path),
                              "--out", str(tmp_path / "log.json")])
    assert res.exit_code == 0
    state = CPState.from_json(json.loads(st_path.read_text()))
    want = dense.dft_matrix(4)[:, 9]
    assert np.allclose(dense.materialize(state), want, atol=1e-10)
    circ = json.loads(circ_path.read_text())
    assert circ["name"] == "qft" and circ["n"] == 4


def test_run_verify_dense(runner):
    res = runner.invoke(cli, ["run", "--alg", "qft", "--qubits", "6",
                              "--input", "random-rank1", "--verify-dense"])
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["result"]["dense_fidelity"] == pytest.approx(1.0, abs=1e-10)


def test_run_phase_default_theta(runner):
    res = runner.invoke(cli, ["run", "--alg", "phase", "--qubits", "10",
                              "--rank-limit", "20", "--strategy", "als"])
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["result"]["fidelity_estimate"] >= 0.997
    assert doc["config"]["experiment"]["theta"] == pytest.approx(
        0.5 * (1 + 2.0 ** -10))


def test_config_file_with_flag_override(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alg": "qft", "qubits": 4,
                               "input": "basis:3", "rank-limit": 1}))
    res = runner.invoke(cli, ["run", "--config", str(cfg)])
    assert res.exit_code == 0
    assert json.loads(res.output)["config"]["experiment"]["qubits"] == 4
    res = runner.invoke(cli, ["run", "--config", str(cfg), "--qubits", "5",
                              "--input", "basis:0"])
    assert res.exit_code == 0
    assert json.loads(res.output)["config"]["experiment"]["qubits"] == 5


def test_config_file_unknown_key(runner, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alg": "qft", "qubits": 4, "turbo": True}))
    res = runner.invoke(cli, ["run", "--config", str(cfg)])
    assert res.exit_code != 0


def test_usage_errors_exit_one():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--qubits", "4"])  # missing --alg
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["run", "--alg", "qft"])  # missing --qubits
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["run", "--alg", "qft", "--qubits", "4", "--bogus"])
    assert exc.value.code == 1


def test_als_failure_exits_two(monkeypatch):
    import cpsim.cli as cli_mod

    def boom(*args, **kwargs):
        raise AlsDegenerateError("no usable restart")

    monkeypatch.setattr(cli_mod, "simulate", boom)
    with pytest.raises(SystemExit) as exc:
        main(["run", "--alg", "qft", "--qubits", "4", "--strategy", "als",
              "--rank-limit", "2"])
    assert exc.value.code == 2


def test_help_exits_zero():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--help"])
    assert exc.value.code == 0


def test_reproduce_t2(runner, tmp_path):
    res = runner.invoke(cli, ["reproduce", "t2", "--out", str(tmp_path)])
    assert res.exit_code == 0
    csv_path = tmp_path / "t2.csv"
    png_path = tmp_path / "t2.png"
    assert csv_path.exists() and png_path.exists()
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "qubits,rank_limit,fidelity_estimate"
    assert len(lines) == 11
    for line in lines[1:]:
        assert line.endswith(",1.0")


def test_reproduce_deterministic_no_figure(runner, tmp_path):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    for d in (a_dir, b_dir):
        res = runner.invoke(cli, ["reproduce", "t2", "--out", str(d),
                                  "--no-figure"])
        assert res.exit_code == 0
        assert not (d / "t2.png").exists()
    assert (a_dir / "t2.csv").read_bytes() == (b_dir / "t2.csv").read_bytes()


def test_reproduce_unknown_table(runner, tmp_path):
    res = runner.invoke(cli, ["reproduce", "t99", "--out", str(tmp_path)])
    assert res.exit_code != 0
