import json
import subprocess
import sys

import pytest

from ecorbit.cli import _glue_negative_values, main, parse_alpha
from ecorbit.errors import ValidationError

X3P1 = ["--curve", "short:0,1", "--point", "-0.406:+"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_periods_report(capsys):
    code, out, _ = run(capsys, "periods", "--curve", "classical:4,0")
    assert code == 0
    rep = json.loads(out)
    assert rep["omega1"] == pytest.approx(2.6220575542921198, rel=1e-14)
    assert rep["shape"] == "rectangular" and rep["quadrature_rel_diff"] < 1e-10


def test_orbit_csv_and_report(capsys, tmp_path):
    out = tmp_path / "orbit.csv"
    code, stdout, _ = run(capsys, "orbit", *X3P1, "--nmax", "1000", "--every", "100", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,x,y,log_x_plus_2,growth_bound"
    assert len(lines) == 11 and lines[1].startswith("100,")
    rep = json.loads(stdout)
    assert rep["witness_count"] >= 3 and "tail_constant" in rep


def test_orbit_empty_range(capsys):
    code, out, _ = run(capsys, "orbit", *X3P1, "--nmax", "0")
    assert code == 0 and out == "n,x,y,log_x_plus_2,growth_bound\n"


def test_output_is_byte_stable(tmp_path, capsys):
    paths = []
    for threads in ("1", "4"):
        p = tmp_path / f"o{threads}.csv"
        assert main(["orbit", *X3P1, "--nmax", "5000", "--every", "7", "--threads", threads,
                     "--out", str(p), "--report", str(tmp_path / f"r{threads}.json")]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r4.json").read_bytes()


def test_density_command(capsys):
    code, out, _ = run(capsys, "density", "--curve", "long:0,0,1,-1,0", "--point", "0,0", "--nmax", "20000",
                       "--at", "2.0:-", "--eps", "0.1", "--interval", "-1,0")
    assert code == 0
    rep = json.loads(out)
    assert rep["p_component"] == "bounded"
    assert rep["point_density"]["empirical_share"] == pytest.approx(rep["point_density"]["value"], rel=0.2)
    assert rep["interval"]["empirical"] == pytest.approx(rep["interval"]["model"], abs=0.02)
    assert rep["cdf_sup_distance"] < 0.05


def test_spacing_command(capsys, tmp_path):
    code, out, _ = run(capsys, "spacing", *X3P1, "--q", "-0.406:+", "--nmax", "20000", "--bins", "10",
                       "--report", str(tmp_path / "r.json"))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "bin_lo,bin_hi,empirical,model,f_mid" and len(lines) == 11
    assert json.loads((tmp_path / "r.json").read_text())["sup_error"] < 0.2


def test_fruit_commands(capsys, caplog):
    code, out, _ = run(capsys, "fruit", "--N", "4")
    assert code == 0
    assert json.loads(out)["density"] == pytest.approx(0.0680948, abs=1e-6)
    code, out, _ = run(capsys, "fruit", "--N", "1:5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "N,A,B,flagged,density,conjecture_residual"
    assert [l.split(",")[0] for l in lines[1:]] == ["2", "3", "4", "5"]
    assert "skipping N=1" in caplog.text


def test_dioph_command(capsys):
    code, out, _ = run(capsys, "dioph", "--alpha", "golden", "--psi", "hurwitz", "--nmax", "1000")
    assert code == 0
    ns = [int(l.split(",")[0]) for l in out.splitlines()[1:]]
    assert ns and all(n in (1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987) for n in ns)
    code, out, _ = run(capsys, "dioph", "--alpha", "0", "--psi", "quadratic", "--nmax", "3", "--construct", "3")
    assert code == 0 and json.loads(out)["quotients"][:2] == ["0", "2"]


def test_exit_codes(capsys):
    assert run(capsys, "periods", "--curve", "short:-3,2")[0] == 2
    assert run(capsys, "orbit", "--curve", "short:0,1", "--point", "1,1", "--nmax", "5")[0] == 2
    assert run(capsys, "orbit", *X3P1)[0] == 2
    assert run(capsys, "orbit", *X3P1, "--nmax", "5", "--every", "0")[0] == 2
    code, _, err = run(capsys, "dioph", "--alpha", "pi", "--nmax", str(10 ** 60))
    assert code == 3 and "precision" in err


def test_negative_values_are_glued():
    assert _glue_negative_values(["--point", "-0.4:+", "--nmax", "5"]) == ["--point=-0.4:+", "--nmax", "5"]
    assert _glue_negative_values(["--curve", "short:-16,16"]) == ["--curve", "short:-16,16"]


def test_parse_alpha():
    assert float(parse_alpha("pi")) == pytest.approx(3.141592653589793, rel=1e-16)
    assert float(parse_alpha("e")) == pytest.approx(2.718281828459045, rel=1e-16)
    assert float(parse_alpha("sqrt:2")) == pytest.approx(2 ** 0.5)
    assert parse_alpha("3/7").value.denominator == 7
    with pytest.raises(ValidationError):
        parse_alpha("sqrt:-1")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ecorbit", "periods", "--curve", "short:0,1"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["shape"] == "rhombic"
