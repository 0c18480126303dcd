import json

import pytest

from noisygates.cli import main

DEVICE = {
    "qubits": [
        {"t1_s": 100e-6, "t2_s": 80e-6, "p_readout": 0.02},
        {"t1_s": 90e-6, "t2_s": 70e-6, "p_readout": 0.025},
    ],
    "gates": {"t_1q_s": 35e-9, "t_2q_s": 300e-9, "p_1q": 5e-4, "p_2q": 0.04},
}


@pytest.fixture
def device_file(tmp_path):
    path = tmp_path / "device.json"
    path.write_text(json.dumps(DEVICE))
    return path


def compare_args(device_file, out, **overrides):
    args = {
        "--experiment": "repeat_x",
        "--reps": "20",
        "--checkpoints": "5",
        "--shots": "256",
        "--runs": "2",
        "--seed": "7",
        "--device": str(device_file),
        "--out": str(out),
        "--parallel": "1",
    }
    args.update(overrides)
    flat = ["compare"]
    for k, v in args.items():
        flat += [k, v]
    return flat


class TestExitCodes:
    def test_usage_error_is_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["compare"])  # --device missing
        assert exc.value.code == 1

    def test_unknown_flag_is_one(self):
        with pytest.raises(SystemExit) as exc:
            main(["compare", "--frobnicate"])
        assert exc.value.code == 1

    def test_missing_device_file_is_two(self, tmp_path, capsys):
        rc = main(compare_args(tmp_path / "absent.json", tmp_path / "out"))
        assert rc == 2

    def test_invalid_calibration_is_two(self, tmp_path, capsys):
        bad = json.loads(json.dumps(DEVICE))
        bad["qubits"][0]["t2_s"] = 1.0  # T2 > 2 T1
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(bad))
        rc = main(compare_args(path, tmp_path / "out"))
        captured = capsys.readouterr()
        assert rc == 2
        assert "T2 exceeds" in captured.err

    def test_shots_zero_is_usage_error(self, device_file, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(compare_args(device_file, tmp_path / "out", **{"--shots": "0"}))
        assert exc.value.code == 1

    def test_checkpoints_above_reps_is_two(self, device_file, tmp_path, capsys):
        rc = main(compare_args(device_file, tmp_path / "out", **{"--checkpoints": "50"}))
        assert rc == 2

    def test_forced_tolerance_failure_is_three(self, monkeypatch, capsys):
        monkeypatch.setenv("NOISYGATES_TOL_SCALE", "0.0")
        rc = main(["validate", "--criteria", "9"])
        captured = capsys.readouterr()
        assert rc == 3
        assert "FAIL" in captured.out


class TestCompareOutputs:
    def test_files_written_and_deterministic(self, device_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(compare_args(device_file, out)) == 0
        rundir = next(p for p in out.iterdir() if p.is_dir())
        names = {p.name for p in rundir.iterdir()}
        assert {
            "metadata.json",
            "distributions.csv",
            "density_diagonals.csv",
            "hellinger.csv",
            "summary.csv",
            "lindblad_rho.csv",
        } <= names
        before = {p.name: p.read_bytes() for p in rundir.iterdir()}
        assert main(compare_args(device_file, out)) == 0
        after = {p.name: p.read_bytes() for p in rundir.iterdir()}
        assert before == after

    def test_metadata_is_self_describing(self, device_file, tmp_path, capsys):
        out = tmp_path / "out"
        main(compare_args(device_file, out))
        rundir = next(p for p in out.iterdir() if p.is_dir())
        meta = json.loads((rundir / "metadata.json").read_text())
        assert meta["command"] == "compare"
        assert meta["seed"] == 7
        assert meta["device"]["gates"]["t_1q_s"] == 35e-9
        assert "params_hash" in meta and "git_revision" in meta
        header = (rundir / "distributions.csv").read_text().splitlines()[0]
        assert header.startswith("backend,run,checkpoint_gates,time_s,")

    def test_summary_row_count(self, device_file, tmp_path, capsys):
        out = tmp_path / "out"
        main(compare_args(device_file, out))
        rundir = next(p for p in out.iterdir() if p.is_dir())
        rows = (rundir / "summary.csv").read_text().splitlines()
        assert len(rows) == 1 + 5  # header + checkpoints


class TestSimulate:
    def test_simulate_writes_distributions(self, device_file, tmp_path, capsys):
        argv = ["simulate"] + compare_args(device_file, tmp_path / "out")[1:]
        assert main(argv) == 0
        rundir = next(p for p in (tmp_path / "out").iterdir() if p.is_dir())
        assert (rundir / "distributions.csv").exists()
        assert (rundir / "density_diagonals.csv").exists()

    def test_custom_circuit(self, device_file, tmp_path, capsys):
        circuit = {
            "n_qubits": 2,
            "ops": [{"gate": "X", "q": [0]}, {"gate": "CNOT", "q": [0, 1]}],
            "measure": [0, 1],
        }
        cpath = tmp_path / "circ.json"
        cpath.write_text(json.dumps(circuit))
        argv = ["simulate"] + compare_args(
            device_file,
            tmp_path / "out",
            **{"--experiment": "custom_circuit", "--circuit": str(cpath)},
        )[1:]
        assert main(argv) == 0

    def test_custom_circuit_requires_file(self, device_file, tmp_path, capsys):
        argv = ["simulate"] + compare_args(
            device_file, tmp_path / "out", **{"--experiment": "custom_circuit"}
        )[1:]
        assert main(argv) == 2
