import csv
import io
import shutil
import subprocess
import sys

import pytest

from eisenlab.cli import RunConfig, load_config, main, parse_config
from eisenlab.exceptions import ParseError
from eisenlab.maass import hecke_record_from_primes, write_maass_record

from conftest import T_PHI


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


class TestConfig:
    def test_parse(self):
        text = "# run\nprecision.base_bits = 96\nsegment.a = 0.5  # lower end\n\nmoments.T_grid = 10, 20\n"
        cfg = RunConfig().updated(parse_config(text))
        assert cfg.precision__base_bits == 96
        assert cfg.segment__a == 0.5
        assert cfg.moments__T_grid == (10.0, 20.0)

    @pytest.mark.parametrize("text", ["nonsense", "a.b = 1", "segment.a = 1\nsegment.a = 2", "segment.a = x"])
    def test_rejects(self, text):
        with pytest.raises(ParseError):
            RunConfig().updated(parse_config(text))

    def test_range_checks(self):
        with pytest.raises(ValueError):
            RunConfig().updated({"segment.a": "3", "segment.b": "2"})
        with pytest.raises(ValueError):
            RunConfig().updated({"moments.k": "3"})

    def test_keys_cover_fields(self):
        assert "segment.x0_num" in RunConfig.keys()
        assert "output.path" in RunConfig.keys()

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(tmp_path / "absent.cfg")


class TestEval:
    def test_one_line(self, capsys):
        code, out, _ = run(capsys, "eval", "--t", "14", "--x", "0", "--y", "1.2")
        assert code == 0
        table = rows(out)
        assert table[0] == ["value", "abs_error"] and len(table) == 2
        _, again, _ = run(capsys, "eval", "--t", "14", "--x", "0", "--y", "1.2")
        assert again == out

    def test_reflection(self, capsys):
        _, a, _ = run(capsys, "eval", "--t", "14", "--x", "0.3", "--y", "1.1")
        _, b, _ = run(capsys, "eval", "--t", "14", "--x", "-0.3", "--y", "1.1")
        assert rows(a)[1][0] == rows(b)[1][0]

    @pytest.mark.parametrize("y", ["0", "-1"])
    def test_bad_y(self, capsys, y):
        code, out, err = run(capsys, "eval", "--t", "14", "--x", "0", "--y", y)
        assert code == 2 and out == "" and "error" in err

    def test_missing_flag(self, capsys):
        assert run(capsys, "eval", "--t", "14")[0] == 2


class TestGrid:
    def test_single_point(self, capsys):
        code, out, _ = run(capsys, "grid", "--t", "14", "--nx", "1", "--ny", "1")
        assert code == 0 and len(rows(out)) == 2

    def test_symmetric_and_row_major(self, capsys):
        code, out, _ = run(capsys, "grid", "--t", "14", "--nx", "21", "--ny", "7")
        table = rows(out)[1:]
        assert len(table) == 147
        assert float(table[0][1]) == float(table[20][1]) < float(table[21][1])
        field = {(float(x), float(y)): int(s) for x, y, s, _ in table}
        assert all(field[(-x, y)] == s for (x, y), s in field.items())
        assert {1, -1} <= set(field.values())


class TestSegmentCommands:
    def test_signs(self, capsys, tmp_path):
        path = tmp_path / "br.csv"
        code, out, _ = run(capsys, "signs", "--t", "14", "--a", "1", "--b", "2.5", "--brackets-out", str(path))
        assert code == 0
        header, row = rows(out)
        count = int(row[header.index("count")])
        assert count >= 1
        assert len(rows(path.read_text())) == count + 1

    def test_source_required(self, capsys):
        assert run(capsys, "signs", "--a", "1", "--b", "2")[0] == 2

    def test_norms(self, capsys):
        code, out, _ = run(capsys, "norms", "--t", "14", "--p", "1,2,4", "--measure", "hyperbolic")
        table = rows(out)
        values = [float(r[table[0].index("value")]) for r in table[1:]]
        assert code == 0 and values == sorted(values)

    def test_jfun_margin(self, capsys):
        code, _, err = run(capsys, "jfun", "--t", "14", "--eta", "0.1", "--margin", "0.05")
        assert code == 2 and "margin" in err
        code, out, _ = run(capsys, "jfun", "--t", "14", "--eta", "0.1")
        assert code == 0 and len(rows(out)) == 2

    def test_certify_failure_still_writes(self, capsys, tmp_path):
        path = tmp_path / "cert.csv"
        code, out, _ = run(capsys, "certify", "--t", "14", "--N", "4", "--out", str(path))
        assert code == 1 and out == ""
        header, row = rows(path.read_text())
        assert header == ["a", "b", "N", "eta", "M1", "M2", "c", "J", "threshold", "hypotheses_hold", "lower_bound"]
        assert row[header.index("hypotheses_hold")] == "false"

    def test_half_line(self, capsys):
        code, out, _ = run(capsys, "signs", "--t", "14", "--x0", "1/2")
        assert code == 0 and rows(out)[1][1] == "1/2"

    def test_maass_file(self, capsys, tmp_path, synthetic_record):
        path = tmp_path / "form.txt"
        write_maass_record(synthetic_record, path)
        code, out, _ = run(capsys, "signs", "--maass-file", str(path), "--a", "0.7", "--b", "2")
        assert code == 0 and int(rows(out)[1][6]) > 0
        code, _, _ = run(capsys, "samples", "--maass-file", str(path), "--a", "0.7", "--b", "2", "--n-points", "5")
        assert code == 0

    def test_bad_maass_file(self, capsys, tmp_path):
        bad = hecke_record_from_primes(T_PHI, {p: 0.5 for p in range(2, 60)}, 60)
        bad.hecke[4] += 0.1
        path = tmp_path / "bad.txt"
        write_maass_record(bad, path)
        code, _, err = run(capsys, "signs", "--maass-file", str(path))
        assert code == 2 and "Hecke" in err

    def test_truncation_failure_is_numeric(self, capsys, tmp_path, synthetic_record):
        path = tmp_path / "form.txt"
        write_maass_record(synthetic_record, path)
        code, _, err = run(capsys, "signs", "--maass-file", str(path), "--a", "0.02", "--b", "0.5")
        assert code == 3 and "numerical" in err


class TestOtherCommands:
    def test_budget(self, capsys):
        code, out, _ = run(capsys, "budget", "--epsilon", "0.01", "--p", "4", "--kappa", "8.5")
        assert code == 0
        assert out.splitlines()[1] == "0.01,4,8.5,0.12,0.83"

    def test_budget_kappa(self, capsys):
        assert run(capsys, "budget", "--epsilon", "0.01", "--p", "4", "--kappa", "8.5", "--regime", "cusp")[0] == 2

    def test_moments(self, capsys):
        code, out, _ = run(capsys, "moments", "--k", "1", "--T-grid", "20,40")
        table = rows(out)
        assert code == 0 and table[0] == ["T", "k", "value", "quad_error"] and len(table) == 3

    def test_scan_small(self, capsys):
        code, out, _ = run(capsys, "scan", "--t-min", "20", "--t-max", "30", "--t-step", "10")
        table = rows(out)
        assert code == 0 and table[0] == ["t", "K", "M1", "M2", "J"] and len(table) == 3

    def test_config_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("segment.a = 1.0\nsegment.b = 1.5\noutput.path = {}\n".format(tmp_path / "o.csv"))
        code, out, _ = run(capsys, "signs", "--t", "14", "--config", str(cfg), "--b", "2.5")
        assert code == 0 and out == ""
        assert rows((tmp_path / "o.csv").read_text())[1][3] == "2.5"

    def test_unknown_config_key_writes_nothing(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        out_path = tmp_path / "never.csv"
        cfg.write_text(f"segment.c = 1\noutput.path = {out_path}\n")
        assert run(capsys, "signs", "--t", "14", "--config", str(cfg))[0] == 2
        assert not out_path.exists()

    def test_byte_identical(self, capsys):
        a = run(capsys, "norms", "--t", "20")[1]
        b = run(capsys, "norms", "--t", "20")[1]
        assert a == b

    @pytest.mark.skipif(shutil.which("eisenlab") is None, reason="console script not installed")
    def test_console_script(self):
        res = subprocess.run(["eisenlab", "budget", "--epsilon", "0.01", "--p", "4", "--kappa", "9.5",
                              "--regime", "cusp"], capture_output=True, text=True, check=False)
        assert res.returncode == 0 and res.stdout.splitlines()[1].startswith("0.01,4,9.5,0.13,")

    def test_module_entry(self):
        res = subprocess.run([sys.executable, "-m", "eisenlab.cli", "--version"], capture_output=True, text=True)
        assert res.returncode == 0 and "eisenlab" in res.stdout
