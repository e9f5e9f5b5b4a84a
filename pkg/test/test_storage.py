import csv

import orjson
import pytest

from vesim.errors import OutputError
from vesim.models.models import RunDiagnostics, StepRecord
from vesim.simulation.driver import run_fixed
from vesim.storage import SNAPSHOT_COLUMNS, STEP_COLUMNS, format_float, summarize, write_outputs


def read_rows(path):
    with path.open(newline="") as handle:
        return list(csv.reader(handle))


def record(t, dt, accepted=True):
    return StepRecord(t=t, dt=dt, accepted=accepted, e_A=1e-9, e_L=2e-9, gmres_iters=3, matvecs_cum=10, wall_time=0.1)


# Test an empty run gives header-only tables and a valid summary
def test_zero_step_outputs(tmp_path):
    directory = write_outputs(RunDiagnostics(mode="fixed"), tmp_path / "run")
    assert read_rows(directory / "steps.csv") == [STEP_COLUMNS]
    assert read_rows(directory / "snapshots.csv") == [SNAPSHOT_COLUMNS]
    summary = orjson.loads((directory / "summary.json").read_bytes())
    assert summary["mode"] == "fixed"
    assert summary["accepts"] == 0 and summary["rejects"] == 0


# Test a fixed run writes one accepted row per step
def test_fixed_run_rows(tmp_path, resting_circle):
    final, diagnostics = run_fixed(resting_circle, 3, 0.3, n_sdc=0, p=3)
    write_outputs(diagnostics, tmp_path, summarize(diagnostics, 3, None, final.t))
    rows = read_rows(tmp_path / "steps.csv")[1:]
    assert len(rows) == 3
    assert [row[2] for row in rows] == ["1", "1", "1"]
    snapshots = read_rows(tmp_path / "snapshots.csv")[1:]
    assert len(snapshots) == 2 * 32
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["steps"] == 3
    assert summary["accepts"] == 3
    assert summary["final_time"] == pytest.approx(0.3)


# Test accepts and rejects add up to the row count
def test_adaptive_bookkeeping(tmp_path):
    diagnostics = RunDiagnostics(mode="adaptive", records=[record(0.0, 0.1), record(0.1, 0.2, False), record(0.1, 0.12)])
    write_outputs(diagnostics, tmp_path, summarize(diagnostics, tolerance=1e-2, final_time=0.22))
    rows = read_rows(tmp_path / "steps.csv")[1:]
    summary = orjson.loads((tmp_path / "summary.json").read_bytes())
    assert summary["accepts"] + summary["rejects"] == len(rows) == 3
    assert summary["rejects"] == 1
    assert summary["tolerance"] == 1e-2
    assert rows[1] == ["0.10000000000000001", "0.20000000000000001", "0", "1.0000000000000001e-09",
                       "2.0000000000000001e-09", "3", "10"]


# Test write failures carry the path
def test_output_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("occupied")
    with pytest.raises(OutputError) as excinfo:
        write_outputs(RunDiagnostics(mode="fixed"), blocker)
    assert excinfo.value.path == str(blocker)


# Test floats keep seventeen significant digits
def test_format_float():
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1 / 3)) == 1 / 3
    assert format_float(2.0) == "2"
