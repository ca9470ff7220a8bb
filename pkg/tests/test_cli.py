import json

import numpy as np
import pytest

from shiftadd.cli import main
from shiftadd.serialize import import_dag


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestDecompose:
    def test_generated_target(self, capsys, tmp_path):
        dag_path = tmp_path / "dag.json"
        code, out, _ = run(
            capsys,
            "decompose",
            "--algorithm", "ma",
            "--rows", "8", "--cols", "3",
            "--seed", "3",
            "--target-sqnr-db", "15",
            "--dmax", "0",
            "--out", str(dag_path),
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["converged"] is True
        assert summary["rows"] == 8
        dag = import_dag(dag_path.read_text())
        assert dag.num_inputs == 3

    def test_matrix_file(self, capsys, tmp_path):
        m = tmp_path / "t.txt"
        m.write_text("3 0\n0 1\n")
        code, out, _ = run(capsys, "decompose", str(m), "--algorithm", "fs",
                           "--target-sqnr-db", "100")
        assert code == 0
        summary = json.loads(out)
        assert summary["sqnr_db"] == "inf"
        assert summary["n_add"] == 1

    def test_nonconvergence_exit_code(self, capsys):
        code, out, _ = run(
            capsys,
            "decompose",
            "--algorithm", "fp",
            "--rows", "2", "--cols", "2",
            "--seed", "1",
            "--target-sqnr-db", "400",
        )
        assert code == 3

    def test_csd_algorithm(self, capsys):
        code, out, _ = run(capsys, "decompose", "--algorithm", "csd",
                           "--rows", "4", "--cols", "2", "--seed", "5",
                           "--target-sqnr-db", "30")
        assert code == 0
        assert json.loads(out)["algorithm"] == "csd"


class TestSweep:
    def test_csv_output(self, capsys, tmp_path):
        out_path = tmp_path / "r.csv"
        code, _, _ = run(
            capsys,
            "sweep",
            "--algorithm", "fs,ma",
            "--dmax", "0,inf",
            "--rows", "6", "--cols", "3",
            "--trials", "2", "--seed", "11",
            "--target-sqnr-db", "10,14",
            "--out", str(out_path),
        )
        assert code == 0
        lines = out_path.read_text().strip().split("\n")
        assert lines[0].startswith("algorithm,")
        # fs once (dmax ignored) + ma twice (dmax 0 and inf), 2 grid points,
        # 2 trials, plus aggregates.
        data_rows = [l for l in lines[1:] if ",mean," not in l]
        assert len(data_rows) == 3 * 2 * 2

    def test_bad_algorithm_is_usage_error(self, capsys):
        code, _, err = run(capsys, "sweep", "--algorithm", "quantum")
        assert code == 1
        assert "usage error" in err


class TestEvalExport:
    @pytest.fixture
    def dag_file(self, capsys, tmp_path):
        path = tmp_path / "dag.json"
        run(
            capsys,
            "decompose",
            "--algorithm", "fs",
            "--rows", "4", "--cols", "2",
            "--seed", "2",
            "--target-sqnr-db", "20",
            "--out", str(path),
        )
        return path

    def test_eval_vector(self, capsys, dag_file):
        code, out, _ = run(capsys, "eval", str(dag_file), "--x", "1.0,2.0")
        assert code == 0
        summary = json.loads(out)
        assert len(summary["y"]) == 4

    def test_eval_schema_error_exit_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"k": 0, "vertices": [], "outputs": []}')
        code, _, err = run(capsys, "eval", str(bad))
        assert code == 2
        assert "error" in err

    def test_export_dot(self, capsys, dag_file, tmp_path):
        out_path = tmp_path / "dag.dot"
        code, _, _ = run(capsys, "export", str(dag_file), "--format", "dot",
                         "--out", str(out_path))
        assert code == 0
        assert out_path.read_text().startswith("digraph")

    def test_missing_file_exit_2(self, capsys):
        code, _, _ = run(capsys, "eval", "/nonexistent/dag.json")
        assert code == 2


class TestUsage:
    def test_no_command(self, capsys):
        code, _, _ = run(capsys)
        assert code == 1

    def test_schedule_parse_error(self, capsys):
        code, _, err = run(capsys, "decompose", "--s-schedule", "banana",
                           "--rows", "2", "--cols", "2")
        assert code == 1

    def test_schedule_accepted(self, capsys):
        code, out, _ = run(
            capsys,
            "decompose",
            "--algorithm", "ma",
            "--rows", "6", "--cols", "3",
            "--seed", "8",
            "--target-sqnr-db", "12",
            "--dmax", "0",
            "--s-schedule", "2:dmp@0.5/6,3:rs:8",
        )
        assert code == 0
