import os
import subprocess
import sys

import pytest

from projann.algebra import SparsePoly
from projann.annihilator import ExplicitMap, format_map
from projann.cli import run
from projann.circuit.textfmt import parse_circuit

z = SparsePoly.var(1, 1)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_selftest_exit_zero(capsys):
    assert run(["selftest"]) == 0


def test_unknown_subcommand_is_input_error(capsys):
    assert run(["frobnicate"]) == 2


def test_square_map_annihilator(tmp_path):
    m = write(tmp_path, "g.map", format_map(ExplicitMap.from_polys([z, z * z])))
    poly, rep = tmp_path / "a.poly", tmp_path / "r.txt"
    assert run(["annihilate", "--map", m, "--out-poly", str(poly), "--report", str(rep),
                "--out-circuit", str(tmp_path / "a.circ")]) == 0
    from projann.algebra.poly import parse_poly
    A = parse_poly(poly.read_text())
    c = A.terms[(2, 0)]
    assert A == (SparsePoly.var(2, 1) * SparsePoly.var(2, 1) - SparsePoly.var(2, 2)).scale(c)
    report = dict(line.split("=", 1) for line in rep.read_text().splitlines())
    assert report["K"] == "4" and report["circuit_checked"] == "true"


def test_malformed_circuit_reports_line(tmp_path, capsys):
    bad = write(tmp_path, "bad.circ", "vars 1\ng0 = input x1\ng1 = add g0 g7\noutputs g1\n")
    assert run(["eval", "--circuit", bad, "--point", "1"]) == 2
    assert "line 3" in capsys.readouterr().err


def test_resource_ceiling_exit_code(tmp_path, monkeypatch, capsys):
    text = "vars 2\ng0 = input x1\ng1 = input x2\ng2 = add g0 g1\ng3 = mul g2 g2\n" \
           "g4 = mul g3 g3\ng5 = mul g4 g4\noutputs g5\n"
    c = write(tmp_path, "big.circ", text)
    monkeypatch.setenv("PROJANN_CEILING", "5")
    assert run(["expand", "--circuit", c]) == 3


def test_det_compile_numeric_matrix(tmp_path, capsys):
    m = write(tmp_path, "m.txt", "3 7\n2 5\n")
    out, rep = tmp_path / "d.circ", tmp_path / "r.txt"
    assert run(["det-compile", "--matrix", m, "--out", str(out), "--report", str(rep)]) == 0
    report = dict(line.split("=", 1) for line in rep.read_text().splitlines())
    assert report["det_exact"] == report["det_circuit_value"] == "1"
    parse_circuit(out.read_text())


def test_eval_and_expand(tmp_path, capsys):
    c = write(tmp_path, "c.circ", "vars 2\ng0 = input x1\ng1 = input x2\ng2 = mul g0 g1\n"
                                  "g3 = proj x2 1 g2\noutputs g3\n")
    assert run(["eval", "--circuit", c, "--point", "5,9"]) == 0
    assert capsys.readouterr().out.strip() == "5"
    assert run(["eval", "--circuit", c, "--point", "5,9", "--prime", "3"]) == 0
    assert capsys.readouterr().out.strip() == "2"
    assert run(["expand", "--circuit", c]) == 0
    assert "1 : 1 0" in capsys.readouterr().out


def test_coeff_query(tmp_path, capsys):
    c = write(tmp_path, "c.circ", "vars 1\ng0 = input x1\ng1 = minusone\ng2 = mul g0 g1\n"
                                  "outputs g2\n")
    assert run(["coeff", "--circuit", c, "--exponent", "1", "--bit", "0"]) == 0
    assert capsys.readouterr().out.strip() == "1"
    assert run(["coeff", "--circuit", c, "--exponent", "1"]) == 0
    assert capsys.readouterr().out.strip() == "-1"


def test_coeff_table_then_from_coeff(tmp_path, capsys):
    c = write(tmp_path, "c.circ", "vars 1\ng0 = input x1\ng1 = one\ng2 = add g0 g1\n"
                                  "g3 = mul g2 g2\noutputs g3\n")
    t = tmp_path / "t.circ"
    assert run(["coeff-table", "--circuit", c, "--out", str(t)]) == 0
    dbits, cbits = None, None
    err = capsys.readouterr().err
    for tok in err.split():
        if tok.startswith("dbits="):
            dbits = tok.split("=")[1]
        if tok.startswith("cbits="):
            cbits = tok.split("=")[1]
    assert dbits and cbits
    f = tmp_path / "f.circ"
    assert run(["from-coeff", "--cf-circuit", str(t), "--n", "1", "--dbits", dbits,
                "--cbits", cbits, "--out", str(f)]) == 0
    assert run(["expand", "--circuit", str(f)]) == 0
    out = capsys.readouterr().out
    assert "2 : 1" in out and "1 : 2" in out


def test_qbf_subcommand(tmp_path, capsys):
    q = write(tmp_path, "q.txt", "free x\nexists y\nmatrix and y x\n")
    out = tmp_path / "q.circ"
    assert run(["qbf", "--formula", q, "--out", str(out)]) == 0
    parse_circuit(out.read_text())
    bad = write(tmp_path, "bad.txt", "forall y1\nmatrix and y1 y2\n")
    assert run(["qbf", "--formula", bad]) == 2
    assert "unbound variable y2" in capsys.readouterr().err


def test_gadget_subcommand(capsys):
    assert run(["gadget", "--kind", "eq", "--width", "3"]) == 0
    c = parse_circuit(capsys.readouterr().out)
    assert c.nvars == 6
    assert run(["gadget", "--kind", "nope"]) == 2


def test_abp_eval(tmp_path, capsys):
    text = ("vars 1\ng0 = input x1\ng1 = one\n"
            "source (1,1,1)\nsink (3,1,1)\n"
            "edge (1,1,1) (2,1,1) = g0\nedge (1,1,1) (2,1,2) = g1\n"
            "edge (2,1,1) (3,1,1) = g0\nedge (2,1,2) (3,1,1) = g1\n")
    a = write(tmp_path, "a.abp", text)
    assert run(["abp-eval", "--abp", a, "--point", "4"]) == 0
    assert capsys.readouterr().out.strip() == "17"


def test_fixed_seed_runs_are_byte_identical(tmp_path):
    m = write(tmp_path, "g.map", format_map(ExplicitMap.from_polys([z, z * z, z + 1])))
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        assert run(["annihilate", "--map", m, "--verify", "both", "--seed", "7",
                    "--out-poly", str(d / "a.poly"), "--out-circuit", str(d / "a.circ")]) == 0
        outs.append(((d / "a.poly").read_bytes(), (d / "a.circ").read_bytes()))
    assert outs[0] == outs[1]


def test_emitted_circuit_reparses(tmp_path):
    m = write(tmp_path, "g.map", format_map(ExplicitMap.from_polys([z, z])))
    out = tmp_path / "a.circ"
    assert run(["annihilate", "--map", m, "--out-circuit", str(out),
                "--out-poly", str(tmp_path / "a.poly")]) == 0
    parse_circuit(out.read_text())


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "projann.cli", "annihilate", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    for flag in ("--map", "--D", "--multilinear", "--verify", "--out-poly", "--report"):
        assert flag in res.stdout
