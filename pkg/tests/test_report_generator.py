import csv
import json

import pytest

from rydgate.config import load_config, preset_spec
from rydgate.hamiltonian import ModelConfig, assemble
from rydgate.hilbert import basis_vector
from rydgate.interactions import InteractionTable
from rydgate.propagator import IntegratorOptions, evolve
from rydgate.report_generator import (
    SWEEP_COLUMNS,
    metadata,
    save_csv,
    save_json,
    save_sweep,
    save_txt,
    trajectory_rows,
    versions,
)
from rydgate.sweep import SweepRecord
from rydgate.units import MHZ_2PI


class TestWriters:
    def test_csv_creates_parent_and_keeps_columns(self, tmp_path):
        path = save_csv([{"a": 1, "b": 2.5}, {"a": 3, "b": None}], str(tmp_path / "out" / "x.csv"))
        with open(path, encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows == [["a", "b"], ["1", "2.5"], ["3", ""]]

    def test_json_and_txt(self, tmp_path):
        json_path = save_json({"F": 0.97}, str(tmp_path / "x.json"))
        assert json.loads(open(json_path, encoding="utf-8").read()) == {"F": 0.97}
        txt_path = save_txt({"fidelity": 0.97, "gate": "cnotn"}, str(tmp_path / "x.txt"))
        assert open(txt_path, encoding="utf-8").read() == "fidelity: 0.97\ngate: cnotn\n"

    def test_same_input_same_bytes(self, tmp_path):
        rows = [{"R_um": 6.8, "fidelity": 0.971}]
        a = save_csv(rows, str(tmp_path / "a.csv"))
        b = save_csv(rows, str(tmp_path / "b.csv"))
        assert open(a, "rb").read() == open(b, "rb").read()


class TestMetadata:
    def test_versions(self):
        assert set(versions()) == {"rydgate", "numpy", "scipy", "pydantic"}

    def test_metadata_identifies_config(self):
        a = metadata(load_config())
        b = metadata(preset_spec("c2not2"), name="sweep")
        assert a["config_hash"] != b["config_hash"]
        assert b["name"] == "sweep" and b["gate"] == "c2not2"


class TestSweepOutput:
    def test_csv_and_json(self, tmp_path):
        records = [
            SweepRecord(index=0, R_um=6.8, ratio=3.0, fidelity=0.97, leak=0.01, norm_final=0.99, duration_us=1.3),
            SweepRecord(index=1, R_um=1.0, ratio=3.0, status="validity-warning", message="below R_LR"),
        ]
        csv_path, json_path = save_sweep(records, load_config(), str(tmp_path))
        with open(csv_path, encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0]) == SWEEP_COLUMNS
        assert rows[1]["status"] == "validity-warning" and rows[1]["fidelity"] == ""

        data = json.loads(open(json_path, encoding="utf-8").read())
        assert data["points"] == 2
        assert data["config"]["gate"] == "cnotn"
        assert data["records"][0]["fidelity"] == 0.97


class TestTrajectoryRows:
    def test_columns(self):
        config = ModelConfig(
            k=1, N=1,
            omega_p_max=300 * MHZ_2PI, delta=1200 * MHZ_2PI, omega_c=900 * MHZ_2PI,
            interactions=InteractionTable.zeros(1, 1),
        )
        traj = evolve(assemble(config), basis_vector("0|A"), opts=IntegratorOptions(record_stride=10**9))
        rows = trajectory_rows(traj, ["0|A", "0|*"])
        assert list(rows[0]) == ["time_us", "P(0|A)", "P(0|*)", "norm", "leaked"]
        assert rows[0]["P(0|A)"] == 1.0 and rows[0]["time_us"] == 0.0
        assert rows[-1]["P(0|*)"] == pytest.approx(1.0, abs=1e-4)
