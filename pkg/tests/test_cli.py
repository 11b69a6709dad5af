"""Command-line interface: outputs, determinism, exit codes."""

import csv
import json
import subprocess
import sys

import pytest

from carpnet import load_network, load_panel
from carpnet.cli import run


def _generate(tmp_path, seed=11, nodes=10, edges=20, panel_length=40):
    network = tmp_path / "net.json"
    panel = tmp_path / "panel.csv"
    code = run(
        [
            "generate",
            "--nodes", str(nodes),
            "--edges", str(edges),
            "--likelihood-range", "0.45", "0.8",
            "--alpha", "6e-3",
            "--beta", "3e-3",
            "--gamma", "2.5",
            "--panel-length", str(panel_length),
            "--seed", str(seed),
            "--initial-state", "active",
            "--network-out", str(network),
            "--panel-out", str(panel),
        ]
    )
    assert code == 0
    return network, panel


def _read_csv(path):
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


PARAM_FLAGS = ["--alpha", "6e-3", "--beta", "3e-3", "--gamma", "2.5"]


class TestGenerate:
    def test_writes_loadable_network_panel_and_sidecar(self, tmp_path):
        network, panel = _generate(tmp_path)
        net = load_network(network)
        loaded = load_panel(panel)
        assert net.size == 10
        assert net.edge_count == 20
        assert loaded.states.shape == (10, 40)
        meta = json.loads((tmp_path / "panel.csv.meta.json").read_text())
        assert meta["tool"] == "carpnet"
        assert meta["command"] == "generate"
        assert meta["options"]["seed"] == 11

    def test_start_label_is_applied(self, tmp_path):
        network = tmp_path / "net.json"
        panel = tmp_path / "panel.csv"
        code = run(
            [
                "generate",
                "--nodes", "4", "--edges", "3",
                *PARAM_FLAGS,
                "--panel-length", "3",
                "--start-label", "2016-12",
                "--network-out", str(network),
                "--panel-out", str(panel),
            ]
        )
        assert code == 0
        header, _ = _read_csv(panel)
        assert header == ["2016-12", "2017-01", "2017-02"]

    def test_infeasible_edge_count_exits_1(self, tmp_path, capsys):
        code = run(
            [
                "generate",
                "--nodes", "4", "--edges", "100",
                *PARAM_FLAGS,
                "--panel-length", "3",
                "--network-out", str(tmp_path / "n.json"),
                "--panel-out", str(tmp_path / "p.csv"),
            ]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestSteadyState:
    def test_output_and_reruns_are_bit_identical(self, tmp_path):
        network, _ = _generate(tmp_path)
        out = tmp_path / "steady.csv"
        argv = [
            "steady-state", "--network", str(network), *PARAM_FLAGS, "--output", str(out),
        ]
        assert run(argv) == 0
        first = out.read_bytes()
        first_meta = (tmp_path / "steady.csv.meta.json").read_bytes()
        assert run(argv) == 0
        assert out.read_bytes() == first
        assert (tmp_path / "steady.csv.meta.json").read_bytes() == first_meta
        header, rows = _read_csv(out)
        assert header == ["risk", "name", "p_hat"]
        assert len(rows) == 10
        assert all(0.0 < float(row[2]) < 1.0 for row in rows)

    def test_sidecar_reports_convergence(self, tmp_path):
        network, _ = _generate(tmp_path)
        out = tmp_path / "steady.csv"
        assert run(["steady-state", "--network", str(network), *PARAM_FLAGS, "--output", str(out)]) == 0
        meta = json.loads((tmp_path / "steady.csv.meta.json").read_text())
        assert meta["result"]["converged"] is True
        assert meta["result"]["stationarity_residual"] <= 1e-9
        assert "network" in meta["inputs"]

    def test_exhausted_iterations_exit_3(self, tmp_path, capsys):
        network, _ = _generate(tmp_path)
        code = run(
            [
                "steady-state", "--network", str(network), *PARAM_FLAGS,
                "--max-iter", "1", "--output", str(tmp_path / "s.csv"),
            ]
        )
        assert code == 3
        assert "error:" in capsys.readouterr().err

    def test_json_format(self, tmp_path):
        network, _ = _generate(tmp_path)
        out = tmp_path / "steady.json"
        assert run(
            ["steady-state", "--network", str(network), *PARAM_FLAGS, "--output", str(out), "--format", "json"]
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["columns"] == ["risk", "name", "p_hat"]
        assert len(payload["rows"]) == 10


class TestTransitions:
    def test_fractions_sum_to_one_per_row(self, tmp_path):
        network, _ = _generate(tmp_path)
        out = tmp_path / "transitions.csv"
        assert run(["transitions", "--network", str(network), *PARAM_FLAGS, "--output", str(out)]) == 0
        header, rows = _read_csv(out)
        a_int, a_ext, a_rec = header.index("a_int"), header.index("a_ext"), header.index("a_rec")
        for row in rows:
            total = float(row[a_int]) + float(row[a_ext]) + float(row[a_rec])
            assert total == pytest.approx(1.0, abs=1e-12)
        meta = json.loads((tmp_path / "transitions.csv.meta.json").read_text())
        assert 0.0 < meta["result"]["mean_internal_share"] < 1.0


class TestSimulate:
    def _argv(self, network, out, threads=None):
        argv = [
            "simulate", "--network", str(network), *PARAM_FLAGS,
            "--runs", "60", "--horizon", "25", "--seed", "5",
            "--initial-state", "active", "--output", str(out),
        ]
        if threads is not None:
            argv += ["--threads", str(threads)]
        return argv

    def test_thread_counts_and_reruns_are_bit_identical(self, tmp_path):
        network, _ = _generate(tmp_path)
        out_serial = tmp_path / "sim1.csv"
        out_again = tmp_path / "sim2.csv"
        out_threaded = tmp_path / "sim3.csv"
        assert run(self._argv(network, out_serial, threads=1)) == 0
        assert run(self._argv(network, out_again, threads=1)) == 0
        assert run(self._argv(network, out_threaded, threads=4)) == 0
        assert out_serial.read_bytes() == out_again.read_bytes()
        assert out_serial.read_bytes() == out_threaded.read_bytes()

    def test_final_row_is_the_mean_field_point(self, tmp_path):
        network, _ = _generate(tmp_path)
        out = tmp_path / "sim.csv"
        assert run(self._argv(network, out)) == 0
        header, rows = _read_csv(out)
        assert header[0] == "t"
        assert rows[-1][0] == "inf"
        values = [float(v) for v in rows[-1][1:]]
        assert all(0.0 < v < 1.0 for v in values)
        assert rows[0][0] == "0"
        assert all(float(v) == 1.0 for v in rows[0][1:])  # started all active

    def test_env_variable_sets_default_threads(self, tmp_path, monkeypatch):
        network, _ = _generate(tmp_path)
        out_env = tmp_path / "sim_env.csv"
        out_flag = tmp_path / "sim_flag.csv"
        monkeypatch.setenv("CARPNET_THREADS", "3")
        assert run(self._argv(network, out_env)) == 0
        monkeypatch.delenv("CARPNET_THREADS")
        assert run(self._argv(network, out_flag, threads=3)) == 0
        assert out_env.read_bytes() == out_flag.read_bytes()
        # thread count changes execution, never outputs, so it stays out of the sidecar
        meta = json.loads((tmp_path / "sim_env.csv.meta.json").read_text())
        assert "threads" not in meta["options"]

    def test_bad_env_variable_exits_1(self, tmp_path, monkeypatch, capsys):
        network, _ = _generate(tmp_path)
        monkeypatch.setenv("CARPNET_THREADS", "many")
        assert run(self._argv(network, tmp_path / "sim.csv")) == 1
        assert "CARPNET_THREADS" in capsys.readouterr().err


class TestFit:
    def test_writes_result_document(self, tmp_path):
        network, panel = _generate(tmp_path, panel_length=60)
        out = tmp_path / "fit.json"
        code = run(
            [
                "fit", "--network", str(network), "--panel", str(panel),
                "--starts", "1", "--max-iter", "600", "--seed", "3",
                "--output", str(out),
            ]
        )
        assert code in (0, 3)
        doc = json.loads(out.read_text())
        assert set(doc["result"]) >= {
            "alpha", "beta", "gamma", "log_likelihood", "iterations", "converged", "degenerate",
        }
        assert doc["result"]["alpha"] > 0.0
        assert doc["inputs"].keys() == {"network", "panel"}

    def test_deterministic_given_seed(self, tmp_path):
        network, panel = _generate(tmp_path, panel_length=60)
        out_a = tmp_path / "fit_a.json"
        out_b = tmp_path / "fit_b.json"
        argv = [
            "fit", "--network", str(network), "--panel", str(panel),
            "--starts", "1", "--max-iter", "600", "--seed", "3",
        ]
        run(argv + ["--output", str(out_a)])
        run(argv + ["--output", str(out_b)])
        a = json.loads(out_a.read_text())
        b = json.loads(out_b.read_text())
        assert a["result"] == b["result"]


class TestInfluenceCommands:
    def test_influence_emits_all_ordered_pairs(self, tmp_path):
        network, _ = _generate(tmp_path, nodes=6, edges=8)
        out = tmp_path / "influence.csv"
        assert run(["influence", "--network", str(network), *PARAM_FLAGS, "--output", str(out)]) == 0
        header, rows = _read_csv(out)
        assert header == ["source", "target", "influence"]
        assert len(rows) == 36
        diag = [row for row in rows if row[0] == row[1]]
        assert all(float(row[2]) == 0.0 for row in diag)

    def test_category_influence_covers_present_categories(self, tmp_path):
        network, _ = _generate(tmp_path, nodes=10, edges=20)
        out = tmp_path / "cats.csv"
        assert run(["category-influence", "--network", str(network), *PARAM_FLAGS, "--output", str(out)]) == 0
        header, rows = _read_csv(out)
        assert header == ["source_category", "target_category", "raw", "normalized"]
        assert len(rows) == 25  # ten risks split over all five categories
        assert all(0.0 <= float(row[3]) <= 1.0 for row in rows)


class TestTemporalInfluence:
    def test_curves_are_written(self, tmp_path):
        network, _ = _generate(tmp_path)
        out = tmp_path / "temporal.csv"
        code = run(
            [
                "temporal-influence", "--network", str(network), *PARAM_FLAGS,
                "--source", "0", "--runs", "40", "--horizon", "15", "--seed", "2",
                "--output", str(out),
            ]
        )
        assert code == 0
        header, rows = _read_csv(out)
        assert header == ["t", "one_hop", "two_hop"]
        assert len(rows) == 15
        assert float(rows[0][1]) == 0.0
        meta = json.loads((tmp_path / "temporal.csv.meta.json").read_text())
        assert meta["result"]["one_hop_ids"]


class TestExitCodes:
    def test_missing_network_file_exits_1(self, tmp_path, capsys):
        code = run(
            ["steady-state", "--network", str(tmp_path / "nope.json"), *PARAM_FLAGS,
             "--output", str(tmp_path / "o.csv")]
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_invalid_network_file_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        code = run(
            ["steady-state", "--network", str(bad), *PARAM_FLAGS, "--output", str(tmp_path / "o.csv")]
        )
        assert code == 1
        capsys.readouterr()

    def test_unknown_command_exits_2(self, capsys):
        assert run(["explode"]) == 2
        capsys.readouterr()

    def test_missing_required_flag_exits_2(self, capsys):
        assert run(["steady-state"]) == 2
        capsys.readouterr()

    def test_nonpositive_params_exit_1(self, tmp_path, capsys):
        network, _ = _generate(tmp_path, nodes=4, edges=3)
        code = run(
            ["steady-state", "--network", str(network), "--alpha", "-1", "--beta", "1e-3",
             "--gamma", "2.0", "--output", str(tmp_path / "o.csv")]
        )
        assert code == 1
        capsys.readouterr()

    def test_version_flag_exits_0(self, capsys):
        assert run(["--version"]) == 0
        assert "carpnet" in capsys.readouterr().out


class TestConsoleEntryPoint:
    def test_module_invocation_works(self):
        result = subprocess.run(
            [sys.executable, "-m", "carpnet", "--version"],
            capture_output=True,
            text=True,
            check=False,
        )
        assert result.returncode == 0
        assert "carpnet" in result.stdout
