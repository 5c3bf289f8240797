import csv
import io
import json
import math
import subprocess
import sys

import pytest

from khintchine.cli import main
from khintchine.config import ConfigError, load_config, parse_config
from khintchine.report import Case, VerificationReport, dumps, fmt_float, render
from khintchine.suites import SUITES


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def verify_json(capsys, *argv):
    code, out, _ = run(capsys, "verify", *argv)
    return code, json.loads(out)


class TestConstant:
    def test_trivial(self, capsys):
        code, out, _ = run(capsys, "constant", "--p", "4", "--q", "4", "--dim", "5")
        assert code == 0 and "= 1.0" in out

    def test_szarek(self, capsys):
        code, out, _ = run(capsys, "constant", "--p", "2", "--q", "1", "--dim", "2",
                           "--method", "bruteforce", "--format", "json")
        rec = json.loads(out)
        assert code == 0 and rec["value"] == pytest.approx(math.sqrt(2), abs=1e-9)
        assert list(rec) == ["value", "lower", "upper", "argmax", "p", "q", "dim", "method",
                             "at_one", "argmax_distance", "heuristic"]

    def test_reduced_below_ceiling(self, capsys):
        code, out, _ = run(capsys, "constant", "--p", "6", "--q", "4", "--dim", "10",
                           "--method", "reduced", "--format", "json")
        rec = json.loads(out)
        assert code == 0 and rec["value"] <= 15 ** (1 / 6) / 3 ** 0.25
        assert rec["at_one"] is True

    def test_heuristic_note(self, capsys):
        _, out, _ = run(capsys, "constant", "--p", "4.5", "--dim", "3")
        assert "heuristic" in out

    @pytest.mark.parametrize("argv", [
        ["--p", "3", "--q", "4", "--dim", "3", "--method", "reduced"],
        ["--p", "6", "--dim", "0"],
        ["--p", "nan", "--dim", "3"],
        ["--p", "6", "--q", "2", "--dim", "20", "--method", "bruteforce"],
    ])
    def test_invalid(self, capsys, argv):
        code, _, err = run(capsys, "constant", *argv)
        assert code == 2 and "error" in err


class TestExtremal:
    def test_half(self, capsys):
        code, out, _ = run(capsys, "extremal", "--alpha", "1", "--beta4", "0.5", "--n", "3")
        assert code == 0
        assert "P+ = (0.81650, 0.40825, 0.40825)" in out
        assert "P- = (0.70711, 0.70711, 0.00000)" in out

    def test_degenerate(self, capsys):
        _, out, _ = run(capsys, "extremal", "--alpha", "1", "--beta4", "1", "--n", "4")
        assert out.count("(1.00000, 0.00000, 0.00000, 0.00000)") == 2

    def test_equal(self, capsys):
        _, out, _ = run(capsys, "extremal", "--alpha", "1", "--beta4", "0.25", "--n", "4")
        assert out.count("(0.50000, 0.50000, 0.50000, 0.50000)") == 2

    def test_json_moments(self, capsys):
        _, out, _ = run(capsys, "extremal", "--beta", str(0.5 ** 0.25), "--n", "3", "--p", "5",
                        "--format", "json")
        rec = json.loads(out)
        assert rec["P+"]["moments"]["5.0"] >= rec["P-"]["moments"]["5.0"]

    def test_infeasible(self, capsys):
        code, _, err = run(capsys, "extremal", "--alpha", "1", "--beta4", "0.2", "--n", "4")
        assert code == 2 and "alpha^4/beta^4" in err


class TestCurve:
    def test_two_point_row(self, capsys):
        code, out, _ = run(capsys, "curve", "--n", "1", "--p", "8", "--q", "4", "--x-max", "1e6",
                           "--points", "7")
        lines = [l for l in out.splitlines() if not l.startswith("#")]
        rows = list(csv.reader(lines))
        assert rows[0] == ["x", "f"]
        xs = [float(r[0]) for r in rows[1:]]
        fs = [float(r[1]) for r in rows[1:]]
        assert code == 0 and xs == sorted(xs)
        assert xs[0] == 1.0 and fs[0] == pytest.approx(2 ** 0.125, rel=1e-14)
        assert xs[-1] == 1e6 and abs(fs[-1] - 1) < 1e-6

    def test_equal_exponents(self, capsys):
        _, out, _ = run(capsys, "curve", "--n", "4", "--p", "4", "--q", "4", "--format", "json")
        rec = json.loads(out)
        assert set(rec["f"]) == {1.0}

    def test_header_documents_parameters(self, capsys):
        _, out, _ = run(capsys, "curve", "--n", "3", "--p", "6", "--spacing", "linear", "--x-min", "0")
        assert "# n: 3" in out and "# p: 6.0" in out and "# spacing: linear" in out

    @pytest.mark.parametrize("argv", [["--x-min", "5", "--x-max", "2"], ["--x-min", "0"],
                                      ["--points", "1"]])
    def test_bad_range(self, capsys, argv):
        code, _, _ = run(capsys, "curve", "--n", "3", "--p", "6", *argv)
        assert code == 2


class TestVerify:
    def test_ko2_example(self, capsys):
        code, rec = verify_json(capsys, "ko2", "--samples", "100000", "--seed", "7", "--workers", "1")
        assert code == 0 and rec["summary"]["failed"] == 0
        assert sum(c["inputs"]["samples"] for c in rec["cases"]) == 100000

    def test_np_sign_example(self, capsys):
        code, rec = verify_json(capsys, "np-sign", "--y", "1", "--q", "4", "--workers", "1")
        count = [c for c in rec["cases"] if c["inputs"]["check"] == "count"]
        assert code == 0 and count[0]["lhs"] == 1.0 and count[0]["passed"]

    def test_thm_example(self, capsys):
        code, rec = verify_json(capsys, "thm-cp4", "--p", "8", "--dim-max", "14", "--workers", "1")
        ceiling = [c for c in rec["cases"] if c["inputs"]["check"] == "ceiling"]
        assert code == 0 and len(ceiling) == 13
        assert all(c["lhs"] <= 105 ** 0.125 / 3 ** 0.25 + 1e-9 for c in ceiling)

    def test_report_shape(self, capsys):
        _, rec = verify_json(capsys, "lower-bound", "--p", "4", "--n", "1", "2", "--workers", "1")
        assert list(rec) == ["suite", "statement", "summary", "metadata", "cases"]
        assert list(rec["summary"]) == ["cases", "passed", "failed", "worst_slack"]
        assert list(rec["cases"][0]) == ["inputs", "lhs", "relation", "rhs", "tol", "slack",
                                         "asserted", "passed"]
        assert "timestamp" not in rec["metadata"]
        assert rec["metadata"]["settings"]["grid_points"] == 512

    def test_byte_identical(self, capsys, tmp_path):
        outs = []
        for i, workers in enumerate(["1", "1", "2"]):
            path = tmp_path / f"r{i}.json"
            code = main(["verify", "stability", "--samples", "2000", "--seed", "3",
                         "--workers", workers, "-o", str(path)])
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1] == outs[2]
        assert b"\r\n" not in outs[0]

    def test_seed_changes_output(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["verify", "ko2", "--samples", "500", "--seed", "1", "--workers", "1", "-o", str(a)])
        main(["verify", "ko2", "--samples", "500", "--seed", "2", "--workers", "1", "-o", str(b)])
        assert a.read_bytes() != b.read_bytes()

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "verify", "x-gauss", "--y", "0", "1", "--format", "csv", "--workers", "1")
        meta = [l for l in out.splitlines() if l.startswith("#")]
        body = [l for l in out.splitlines() if not l.startswith("#")]
        assert code == 0 and out.splitlines()[0] == "# suite: x-gauss"
        assert any(l.startswith("# settings.") for l in meta)
        rows = list(csv.DictReader(io.StringIO("\n".join(body))))
        assert len(rows) == 8 and all(r["passed"] == "true" for r in rows)

    def test_timestamp_from_epoch(self, capsys, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
        _, rec = verify_json(capsys, "lower-bound", "--p", "3", "--n", "4", "--workers", "1")
        assert rec["metadata"]["timestamp"] == "1970-01-01T00:00:00Z"

    def test_failure_exit_code(self, capsys, tmp_path):
        strict = tmp_path / "strict.conf"
        strict.write_text("ko2_tol = -1.0\n")
        code, rec = verify_json(capsys, "ko2", "--samples", "100", "--workers", "1")
        assert code == 0
        code = main(["--config", str(strict), "verify", "ko2", "--samples", "100", "--workers", "1"])
        assert code == 1

    def test_report_only_oracle_below_5(self, capsys):
        code, rec = verify_json(capsys, "prop-x-oracle", "--p", "4.5", "--dim-max", "2", "--workers", "1")
        assert code == 0 and rec["cases"][0]["asserted"] is False

    @pytest.mark.parametrize("argv", [
        ["thm-cp4", "--p", "3"],
        ["np-sign", "--p", "5"],
        ["np-sign", "--y", "-1"],
        ["extremal", "--p", "4"],
        ["extremal", "--n", "3", "--gamma", "0.2"],
        ["x-gauss", "--p", "2", "--q", "4"],
        ["ko2", "--samples", "0"],
        ["doubling", "--n", "3000"],
        ["ko1", "--workers", "0", "--samples", "5"],
    ])
    def test_invalid(self, capsys, argv):
        code, _, err = run(capsys, "verify", *argv)
        assert code == 2 and "error" in err

    def test_unknown_suite(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "nope"])
        assert exc.value.code == 2


class TestHelp:
    def test_lists_every_suite(self, capsys):
        with pytest.raises(SystemExit):
            main(["verify", "--help"])
        out = capsys.readouterr().out
        for name, suite in SUITES.items():
            assert name in out
        assert "§" not in out

    def test_statements_unique(self):
        assert len({s.statement for s in SUITES.values()}) == len(SUITES)


class TestConfig:
    def test_defaults(self):
        s = load_config()
        assert s["legendre_nodes"] == 64 and s["tail_eps"] == 1e-8

    def test_parse(self):
        assert parse_config("a = 1\n# c\nb=2.5  # x\nc = yes\n") == {"a": 1, "b": 2.5, "c": "yes"}
        with pytest.raises(ConfigError):
            parse_config("novalue\n")

    def test_env_override(self, tmp_path, monkeypatch):
        path = tmp_path / "p.conf"
        path.write_text("grid_points = 1024\ntail_eps = 1\n")
        monkeypatch.setenv("KHINTCHINE_CONFIG", str(path))
        s = load_config()
        assert s["grid_points"] == 1024 and s["tail_eps"] == 1.0

    @pytest.mark.parametrize("text", ["bogus = 1\n", "grid_points = 1.5\n"])
    def test_rejects(self, tmp_path, text, capsys):
        path = tmp_path / "bad.conf"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_config(path)
        assert main(["--config", str(path), "curve", "--n", "1", "--p", "6"]) == 2

    def test_missing_file(self, capsys):
        assert main(["--config", "/nonexistent/x.conf", "curve", "--n", "1", "--p", "6"]) == 2


class TestReport:
    def test_float_format(self):
        assert fmt_float(0.1) == "0.10000000000000001"
        assert fmt_float(1.0) == "1.0" and fmt_float(1e-20) == "9.9999999999999995e-21"
        assert dumps({"x": [1.0, math.nan], "b": True}) == '{\n  "x": [1.0, null],\n  "b": true\n}\n'

    def test_case_semantics(self):
        assert Case((), {}, 1.0, 2.0).passed
        assert not Case((), {}, 2.0, 1.0).passed
        assert Case((), {}, 1.0, 1.0 + 1e-13, relation="==", tol=1e-12).passed
        assert Case((), {}, 5.0, 1.0, asserted=False).passed
        assert not Case((), {}, math.nan, 1.0).passed
        with pytest.raises(ValueError):
            Case((), {}, 1.0, 1.0, relation=">")

    def test_exit_code(self):
        rep = VerificationReport("s", "t", [Case((), {}, 2.0, 1.0)])
        assert rep.exit_code == 1 and rep.fail_count == 1
        assert json.loads(render(rep, "json"))["summary"]["failed"] == 1


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "khintchine.cli", "constant", "--p", "4", "--dim", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "= 1.0" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "khintchine.cli", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2
