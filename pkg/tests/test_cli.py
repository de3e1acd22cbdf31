import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from adareg.cli import main

HEADER = "t,loss,cum_loss,cum_regret,delta_t,bound_prefix"


def run_cli(*argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:  # argparse errors
        code = exc.code
    return code


def quick_run(tmp_path, name="run.csv", *extra):
    out = tmp_path / name
    code = run_cli(
        "run", "--algo", "adagrad-full", "--problem", "adv-linear",
        "--dim", "4", "--horizon", "40", "--seed", "3",
        "--set", "ball", "--radius", "1", "--out", str(out), *extra,
    )
    return code, out


class TestUsageErrors:
    def test_missing_required_flag(self, tmp_path):
        assert run_cli("run", "--problem", "adv-linear", "--horizon", "5",
                       "--out", str(tmp_path / "x.csv")) == 2

    def test_bad_horizon(self, tmp_path):
        assert run_cli(
            "run", "--algo", "adagrad-full", "--problem", "adv-linear",
            "--horizon", "0", "--out", str(tmp_path / "x.csv"),
        ) == 2

    def test_unconstrained_needs_diameter(self, tmp_path):
        assert run_cli(
            "run", "--algo", "adagrad-full", "--problem", "adv-linear",
            "--horizon", "5", "--set", "none", "--out", str(tmp_path / "x.csv"),
        ) == 2

    def test_unknown_algorithm_choice(self, tmp_path):
        assert run_cli(
            "run", "--algo", "nope", "--problem", "adv-linear",
            "--horizon", "5", "--out", str(tmp_path / "x.csv"),
        ) == 2

    def test_zero_trials(self):
        assert run_cli("verify", "--suite", "lemmas", "--trials", "0") == 2

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"algo": "adagrad-full", "bogus": 1}))
        assert run_cli("run", "--config", str(cfg), "--out", str(tmp_path / "x.csv")) == 2

    def test_unreadable_config(self, tmp_path):
        assert run_cli(
            "run", "--config", str(tmp_path / "missing.json"),
            "--out", str(tmp_path / "x.csv"),
        ) == 2


class TestRun:
    def test_successful_run_writes_csv_and_summary(self, tmp_path, capsys):
        code, out = quick_run(tmp_path)
        assert code == 0
        captured = capsys.readouterr().out
        assert "certificate: satisfied" in captured
        lines = out.read_text().splitlines()
        assert lines[0] == HEADER
        assert len(lines) == 41  # header + one row per round
        first = lines[1].split(",")
        assert first[0] == "1"
        assert len(first) == 6

    def test_seventeen_digit_rendering(self, tmp_path):
        _, out = quick_run(tmp_path)
        with open(out, newline="") as fh:
            row = next(csv.DictReader(fh))
        # values survive a text round trip exactly
        assert float(row["bound_prefix"]) == float(repr(float(row["bound_prefix"])))

    def test_summary_json_block_parses(self, tmp_path, capsys):
        code, _ = quick_run(tmp_path)
        assert code == 0
        captured = capsys.readouterr().out
        json_line = [l for l in captured.splitlines() if l.startswith("json: ")][0]
        payload = json.loads(json_line[len("json: "):])
        assert payload["algo"] == "adagrad-full"
        assert payload["certificate"] == "satisfied"
        assert payload["horizon"] == 40

    def test_summary_out_matches_stdout(self, tmp_path, capsys):
        summary_path = tmp_path / "summary.txt"
        code, _ = quick_run(tmp_path, "run.csv", "--summary-out", str(summary_path))
        assert code == 0
        assert capsys.readouterr().out == summary_path.read_text()

    def test_byte_identical_reruns(self, tmp_path):
        _, first = quick_run(tmp_path, "a.csv")
        _, second = quick_run(tmp_path, "b.csv")
        assert first.read_bytes() == second.read_bytes()

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "algo": "adagrad-diag", "problem": "adv-linear", "dim": 3,
            "horizon": 30, "seed": 5, "set": "box",
        }))
        out_a = tmp_path / "a.csv"
        assert run_cli("run", "--config", str(cfg), "--out", str(out_a)) == 0
        payload = json.loads(
            [l for l in capsys.readouterr().out.splitlines() if l.startswith("json: ")][0][6:]
        )
        assert payload["algo"] == "adagrad-diag"
        assert payload["seed"] == 5
        out_b = tmp_path / "b.csv"
        assert run_cli("run", "--config", str(cfg), "--seed", "9",
                       "--out", str(out_b)) == 0
        payload = json.loads(
            [l for l in capsys.readouterr().out.splitlines() if l.startswith("json: ")][0][6:]
        )
        assert payload["seed"] == 9
        assert out_a.read_bytes() != out_b.read_bytes()

    @pytest.mark.parametrize("algo,extra", [
        ("adagrad-diag", ()),
        ("adaptive-ogd", ()),
        ("pnorm", ("--p", "2")),
        ("sc-ogd", ()),
    ])
    def test_other_presets_run(self, tmp_path, algo, extra):
        out = tmp_path / "r.csv"
        problem = "rot-quad" if algo == "sc-ogd" else "adv-linear"
        code = run_cli(
            "run", "--algo", algo, "--problem", problem, "--dim", "3",
            "--horizon", "40", "--set", "ball", "--radius", "1",
            "--out", str(out), *extra,
        )
        assert code == 0

    def test_ons_on_matched_problem(self, tmp_path):
        out = tmp_path / "r.csv"
        code = run_cli(
            "run", "--algo", "ons-full", "--problem", "sq-loss", "--dim", "3",
            "--horizon", "40", "--set", "ball", "--radius", "1", "--out", str(out),
        )
        assert code == 0


class TestCurves:
    def test_header_only_input(self, tmp_path):
        src = tmp_path / "empty.csv"
        src.write_text(HEADER + "\n")
        out = tmp_path / "curves.csv"
        assert run_cli("curves", "--in", str(src), "--out", str(out)) == 0
        assert out.read_text() == "run,t,regret,bound\n"

    def test_two_run_merge_tags_rows(self, tmp_path):
        _, a = quick_run(tmp_path, "first.csv")
        _, b = quick_run(tmp_path, "second.csv")
        out = tmp_path / "curves.csv"
        assert run_cli("curves", "--in", str(a), str(b), "--out", str(out)) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "run,t,regret,bound"
        tags = {r.split(",")[0] for r in rows[1:]}
        assert tags == {"first", "second"}
        assert len(rows) == 1 + 2 * 40

    def test_bound_column_monotone_for_adagrad(self, tmp_path):
        _, src = quick_run(tmp_path)
        out = tmp_path / "curves.csv"
        assert run_cli("curves", "--in", str(src), "--out", str(out)) == 0
        bounds = [float(r.split(",")[3]) for r in out.read_text().splitlines()[1:]]
        assert all(b2 >= b1 - 1e-12 for b1, b2 in zip(bounds, bounds[1:]))


class TestVerify:
    def test_small_clean_pass(self, capsys):
        assert run_cli("verify", "--suite", "matrix", "--trials", "40") == 0
        assert "suite matrix: ok" in capsys.readouterr().out

    def test_fault_injection_fails_with_manifest(self, capsys):
        code = run_cli(
            "verify", "--suite", "bounds", "--trials", "1",
            "--inject-fault", "bound-shrink",
        )
        assert code == 1
        out = capsys.readouterr().out
        assert "FAIL suite=bounds" in out
        assert "seed=" in out


class TestList:
    def test_lists_registries(self, capsys):
        assert run_cli("list") == 0
        out = capsys.readouterr().out
        for name in ("adagrad-full", "ons-diag", "sc-ogd",
                     "adv-linear", "coord-sq", "lemmas", "bounds"):
            assert name in out


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "r.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "adareg.cli", "run", "--algo", "adagrad-full",
         "--problem", "adv-linear", "--dim", "3", "--horizon", "20",
         "--set", "ball", "--radius", "1", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "certificate: satisfied" in proc.stdout
