import io
import json

import numpy as np
import pytest

from sogl import dumps_canonical, generate_instance
from sogl.cli import run_cli

MINIMAL = '{"v": [1.0], "groups": [[0]], "s": 1, "lambda0": 0, "lambda1": 0, "lambda": 0}\n'


def write_instance(tmp_path, name="inst.json", **overrides):
    instf = generate_instance(seed=overrides.pop("seed", 5), n=overrides.pop("n", 6),
                              m=overrides.pop("m", 2), **overrides)
    path = tmp_path / name
    path.write_text(dumps_canonical(instf.to_dict()))
    return path


class TestSolve:
    def test_minimal_instance(self, tmp_path, capsys):
        path = tmp_path / "min.json"
        path.write_text(MINIMAL)
        assert run_cli(["solve", str(path)]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["report"]["objective"] == 0.0
        assert record["report"]["converged"] is True
        assert record["algorithm"] == "admm"

    def test_out_file_and_flags(self, tmp_path, capsys):
        inst = write_instance(tmp_path)
        out = tmp_path / "rec.json"
        code = run_cli(["solve", str(inst), "--rho", "1.5", "--eps-abs",
                        "1e-10", "--out", str(out)])
        assert code == 0
        assert capsys.readouterr().out == ""
        record = json.loads(out.read_text())
        assert record["config"]["rho"] == 1.5
        assert record["seed"] == 5
        assert record["timestamp"] is None
        assert record["report"]["wall_time"] is None

    def test_dual_algorithm_labelled(self, tmp_path, capsys):
        inst = write_instance(tmp_path)
        assert run_cli(["solve", str(inst), "--algorithm", "dual"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["algorithm"] == "dual"
        assert record["report"]["algorithm"] == "dual"

    def test_stdin_dash(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin", io.StringIO(MINIMAL))
        assert run_cli(["solve", "-"]) == 0
        assert json.loads(capsys.readouterr().out)["report"]["converged"]

    def test_trace_rows_equal_iters(self, tmp_path, capsys):
        inst = write_instance(tmp_path, lambda0=0.1, lambda1=0.3)
        trace_path = tmp_path / "trace.csv"
        assert run_cli(["solve", str(inst), "--trace", str(trace_path)]) == 0
        record = json.loads(capsys.readouterr().out)
        lines = trace_path.read_text().strip().split("\n")
        assert lines[0] == "iter,objective,r_norm,s_norm"
        assert len(lines) - 1 == record["report"]["iters"]

    def test_stamp_fills_timing(self, tmp_path, capsys):
        inst = write_instance(tmp_path)
        assert run_cli(["solve", str(inst), "--stamp"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["timestamp"] is not None
        assert record["report"]["wall_time"] > 0

    def test_batch_writes_records(self, tmp_path, capsys):
        a = write_instance(tmp_path, name="a.json", seed=1)
        b = write_instance(tmp_path, name="b.json", seed=2)
        out_dir = tmp_path / "records"
        code = run_cli(["solve", str(a), str(b), "--batch", "--out-dir",
                        str(out_dir)])
        assert code == 0
        for stem in ("a", "b"):
            record = json.loads((out_dir / f"{stem}.record.json").read_text())
            assert record["report"]["converged"] is True
        assert "a.json: ok" in capsys.readouterr().out

    def test_batch_requires_out_dir(self, tmp_path):
        a = write_instance(tmp_path, name="a.json")
        assert run_cli(["solve", str(a), "--batch"]) == 1

    def test_batch_propagates_validation_failures(self, tmp_path):
        good = write_instance(tmp_path, name="good.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        out_dir = tmp_path / "records"
        code = run_cli(["solve", str(good), str(bad), "--batch", "--out-dir",
                        str(out_dir)])
        assert code == 2
        assert (out_dir / "good.record.json").exists()


class TestExitCodes:
    def test_usage_unknown_command(self):
        assert run_cli(["frobnicate"]) == 1

    def test_usage_no_command(self):
        assert run_cli([]) == 1

    def test_usage_bad_rho(self, tmp_path):
        inst = write_instance(tmp_path)
        assert run_cli(["solve", str(inst), "--rho", "-1"]) == 1

    def test_validation_missing_file(self):
        assert run_cli(["solve", "/definitely/not/here.json"]) == 2

    def test_validation_bad_schema(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"v": [1.0], "groups": [[4]], "s": 1, "lambda0": 0, '
                        '"lambda1": 0, "lambda": 0}')
        assert run_cli(["solve", str(path)]) == 2

    def test_non_finite_solver(self, tmp_path):
        path = tmp_path / "inf.json"
        path.write_text('{"v": [1e999], "groups": [[0]], "s": 1, "lambda0": 0, '
                        '"lambda1": 0.1, "lambda": 0}')
        with np.errstate(invalid="ignore"):
            assert run_cli(["solve", str(path)]) == 3

    def test_oracle_too_large(self, tmp_path):
        instf = generate_instance(seed=0, n=13, m=2)
        path = tmp_path / "big.json"
        path.write_text(dumps_canonical(instf.to_dict()))
        assert run_cli(["oracle", str(path), "--limit", "12"]) == 4

    def test_help_exits_zero(self, capsys):
        assert run_cli(["--help"]) == 0
        assert "solve" in capsys.readouterr().out


class TestBounds:
    @pytest.mark.parametrize("variant", ["plain", "l1", "l0"])
    def test_sandwich_with_oracle(self, tmp_path, capsys, variant):
        inst = write_instance(tmp_path, lambda0=0.2, lambda1=0.3, lambda_=0.4)
        assert run_cli(["bounds", str(inst), "--variant", variant,
                        "--with-oracle"]) == 0
        record = json.loads(capsys.readouterr().out)
        rep = record["report"]
        assert rep["lower_value"] - 1e-9 <= rep["oracle_value"] <= \
            rep["upper_value"] + 1e-9

    def test_without_oracle_field_is_null(self, tmp_path, capsys):
        inst = write_instance(tmp_path)
        assert run_cli(["bounds", str(inst)]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["report"]["oracle_value"] is None


class TestCheckAndPipelines:
    def test_check_accepts_solve_record(self, tmp_path, capsys):
        inst = write_instance(tmp_path, lambda0=0.0, lambda1=0.2)
        rec = tmp_path / "rec.json"
        assert run_cli(["solve", str(inst), "--eps-abs", "1e-12", "--eps-rel",
                        "1e-10", "--out", str(rec)]) == 0
        assert run_cli(["check", str(inst), "--point", str(rec)]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["report"]["stationary"] is True

    def test_check_accepts_bare_array(self, tmp_path, capsys):
        path = tmp_path / "min.json"
        path.write_text(MINIMAL)
        point = tmp_path / "pt.json"
        point.write_text("[1.0]\n")
        assert run_cli(["check", str(path), "--point", str(point)]) == 0
        assert json.loads(capsys.readouterr().out)["report"]["stationary"]

    def test_check_accepts_x_object(self, tmp_path, capsys):
        path = tmp_path / "min.json"
        path.write_text(MINIMAL)
        point = tmp_path / "pt.json"
        point.write_text('{"x": [0.5]}\n')
        assert run_cli(["check", str(path), "--point", str(point)]) == 0
        assert json.loads(capsys.readouterr().out)["report"]["stationary"] is False

    def test_check_length_mismatch(self, tmp_path):
        path = tmp_path / "min.json"
        path.write_text(MINIMAL)
        point = tmp_path / "pt.json"
        point.write_text("[1.0, 2.0]\n")
        assert run_cli(["check", str(path), "--point", str(point)]) == 2

    def test_gen_solve_check_pipeline(self, tmp_path, capsys):
        inst = tmp_path / "inst.json"
        rec = tmp_path / "rec.json"
        assert run_cli(["gen", "--seed", "7", "--n", "6", "--m", "2",
                        "--out", str(inst)]) == 0
        assert run_cli(["solve", str(inst), "--out", str(rec)]) == 0
        assert run_cli(["check", str(inst), "--point", str(rec)]) == 0
        capsys.readouterr()

    def test_piped_gen_to_solve(self, capsys, monkeypatch):
        assert run_cli(["gen", "--seed", "7", "--n", "5", "--m", "2"]) == 0
        gen_text = capsys.readouterr().out
        monkeypatch.setattr("sys.stdin", io.StringIO(gen_text))
        assert run_cli(["solve"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["instance"] == "chain-n5-m2-seed7"
        assert record["seed"] == 7

    def test_deterministic_bytes_across_runs(self, tmp_path, capsys):
        inst = write_instance(tmp_path, lambda0=0.1, lambda1=0.2)
        outputs = []
        for _ in range(2):
            assert run_cli(["solve", str(inst)]) == 0
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]


class TestGen:
    def test_gen_writes_parseable_instance(self, tmp_path, capsys):
        out = tmp_path / "g.json"
        assert run_cli(["gen", "--seed", "3", "--n", "9", "--m", "3", "--mode",
                        "nested", "--lambda0", "0.2", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["seed"] == 3
        assert data["lambda0"] == 0.2
        assert len(data["v"]) == 9

    def test_gen_usage_error(self):
        assert run_cli(["gen", "--n", "0"]) == 1
