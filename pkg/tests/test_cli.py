import argparse
import csv
import io
import subprocess
import sys
from pathlib import Path

import pytest

from stabdistill.cli import SUBCOMMANDS, parse_grid, run_cli
from stabdistill.csvio import format_value, render_csv

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = run_cli(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestHelpers:
    def test_grid(self):
        assert parse_grid("0.1:0.3:0.1") == pytest.approx([0.1, 0.2, 0.3])
        assert parse_grid("0.1,0.25") == [0.1, 0.25]
        assert parse_grid("0.5") == [0.5]
        with pytest.raises(argparse.ArgumentTypeError):
            parse_grid("0.3:0.1:0.1")

    def test_format(self):
        assert format_value(1 / 3) == "0.333333"
        assert format_value(True) == "true"
        assert render_csv([{"a": 1, "b": "x,y"}], ["a", "b"]) == 'a,b\n1,"x,y"\n'


class TestCommands:
    @pytest.mark.parametrize("cmd", SUBCOMMANDS)
    def test_help(self, capsys, cmd):
        code, out, _ = run(capsys, cmd, "--help")
        assert code == 0 and "usage" in out

    def test_missing_seed(self, capsys):
        code, _, err = run(capsys, "distill", "--code", "five_one_three", "--p", "0.1", "--trials", "10")
        assert code == 2 and "--seed" in err

    def test_bad_probability(self, capsys):
        code, _, err = run(capsys, "distill", "--code", "five_one_three", "--p", "1.5", "--seed", "1")
        assert code == 1 and "outside" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "distill", "--code", "/nonexistent/code.txt", "--p", "0.1", "--seed", "1")
        assert code == 1 and "error" in err

    def test_distill_deterministic(self, capsys, tmp_path):
        argv = ["distill", "--code", "five_one_three", "--p", "0.02:0.06:0.02", "--trials", "2000", "--seed", "5"]
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv, "--workers", "2")
        assert a == b
        rs = rows(a)
        assert len(rs) == 3 and rs[0]["protocol"] == "block:five_one_three"
        out = tmp_path / "r.csv"
        assert run(capsys, *argv, "--out", str(out))[0] == 0
        assert out.read_text() == a

    def test_fidelity_option(self, capsys):
        _, out, _ = run(capsys, "recurrence", "--n", "2", "--iterations", "1", "--fidelity", "0.9",
                        "--trials", "500", "--seed", "1")
        assert rows(out)[0]["p_in"] == "0.1"

    def test_classical(self, capsys, tmp_path):
        h1, h2 = tmp_path / "h1", tmp_path / "h2"
        h1.write_text("1 1 0\n0 1 1\n")
        h2.write_text("1 1\n")
        code, out, _ = run(capsys, "classical", "--h1", str(h1), "--h2", str(h2), "--mode", "correct,detect",
                           "--p", "0.05", "--trials", "500", "--seed", "2")
        assert code == 0 and rows(out)[0]["n"] == "6"

    def test_conv_and_assist(self, capsys):
        _, out, _ = run(capsys, "conv", "--code", "rate_one_third", "--p", "0.0", "--trials", "50", "--seed", "1")
        r = rows(out)[0]
        assert (r["n"], r["k"], r["F_out"]) == ("36", "9", "1")
        _, out, _ = run(capsys, "conv", "--assist", "1+D+D^2", "--p", "0.0", "--trials", "50", "--seed", "1")
        assert rows(out)[0]["overhead"] == "0.222222"

    def test_surface(self, capsys):
        _, out, _ = run(capsys, "surface", "--L", "6", "--meas-flip", "0.02", "--trials", "5000", "--seed", "2")
        r = rows(out)[0]
        assert float(r["P_L_analytic"]) == pytest.approx(0.176105, rel=1e-5)
        assert abs(float(r["P_L_mc"]) - 0.176105) < 0.03

    def test_threshold_row(self, capsys):
        _, out, _ = run(capsys, "threshold", "--lmin", "23", "--lmax", "23")
        assert rows(out) == [{"L": "23", "n_qubits": "1013", "p_threshold": "0.0196353"}]

    def test_standard_form_golden(self, capsys):
        _, out, _ = run(capsys, "standard-form", "--code", "five_one_three")
        assert out == (GOLDEN / "five_one_three_standard.txt").read_text()

    def test_standard_form_conv(self, capsys):
        _, out, _ = run(capsys, "standard-form", "--conv", "--code", "rate_one_third")
        assert (GOLDEN / "rate_one_third_standard.txt").read_text().split("\n", 1)[1] in out

    def test_metrics(self, capsys, tmp_path):
        net = tmp_path / "net.txt"
        _, out, _ = run(capsys, "metrics", "--conv", "--netlist", str(net))
        rs = rows(out)
        assert rs[0]["depth2q"] == "6" and rs[0]["gates2q_per_frame"] == "12" and rs[0]["span_frames"] == "2"
        assert rs[1]["circuit"] == "unitary_reference"
        assert "CNOT" in net.read_text() or "CZ" in net.read_text()
        code, _, _ = run(capsys, "metrics")
        assert code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "stabdistill", "threshold", "--lmax", "2"],
                         capture_output=True, text=True, check=True)
    assert out.stdout == "L,n_qubits,p_threshold\n2,5,0.292893\n"
