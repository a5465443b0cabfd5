"""Command-line behaviour: artifacts, piping and the 0/1/2 exit contract."""
import csv
import io
import json
import subprocess
import sys
from fractions import Fraction as F

import mpmath
import pytest

from bergerkit.cli import main
from bergerkit.measure import Atom, Measure, lebesgue, monomial
from bergerkit.shift import WeightSequence, agler_shift, bergman_shift, constant_shift, pth_power_shift


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(obj.to_json() if hasattr(obj, "to_json") else json.dumps(obj))
        return str(path)
    return write


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_square_lebesgue(files, capsys):
    code, out, _ = run(capsys, "measure", "square", "--in", files("leb.json", lebesgue()))
    assert code == 0 and Measure.from_json(out) == monomial(1, 0, 1)


def test_catalog_pipes_into_moments(capsys, monkeypatch):
    code, out, _ = run(capsys, "measure", "catalog", "pth-lebesgue", "--q", "0.5")
    assert code == 0
    code, table, _ = run(capsys, "measure", "moments", "-n", "10", stdin=out, monkeypatch=monkeypatch)
    assert code == 0
    rows = [line.split("\t") for line in table.splitlines() if line[0].isdigit()]
    assert len(rows) == 11
    for n, value in rows:
        assert abs(mpmath.mpf(value) - 1 / mpmath.sqrt(int(n) + 1)) < 1e-18
    assert table.startswith("# working precision")


def test_sqrt_atomic_two_atoms_exit_one(files, capsys):
    two = Measure((Atom.at(F(1, 2), F(1, 2)), Atom.at(1, F(1, 2))))
    code, out, err = run(capsys, "measure", "sqrt-atomic", "--in", files("two.json", two))
    assert code == 1 and out == ""
    assert json.loads(err)["reason"] == "support mismatch"


def test_sqrt_atomic_success(files, capsys):
    mu = Measure((Atom.at(F(1, 4), F(1, 4)), Atom.at(F(1, 2), F(1, 2)), Atom.at(1, F(1, 4))))
    code, out, _ = run(capsys, "measure", "sqrt-atomic", "--in", files("mu.json", mu))
    assert code == 0
    assert Measure.from_json(out) == Measure((Atom.at(F(1, 2), F(1, 2)), Atom.at(1, F(1, 2))))


def test_aluthge_of_bergman_squared(files, capsys):
    src = files("bergman_sq.json", pth_power_shift(bergman_shift(), 2))
    code, out, _ = run(capsys, "shift", "transform", "--op", "aluthge", "--in", src)
    assert code == 0
    assert WeightSequence.from_json(out).squares(20) == agler_shift(3).squares(20)


def test_other_transforms(files, capsys):
    src = files("b.json", bergman_shift())
    code, out, _ = run(capsys, "shift", "transform", "--op", "pow", "--p", "2", "--in", src)
    assert WeightSequence.from_json(out).squares(3) == [F(1, 4), F(4, 9), F(9, 16)]
    code, out, _ = run(capsys, "shift", "transform", "--op", "restrict", "--n", "1", "--in", src)
    assert WeightSequence.from_json(out).squares(2) == [F(2, 3), F(3, 4)]
    code, out, _ = run(capsys, "shift", "transform", "--op", "schur", "--with", src, "--in", src)
    assert WeightSequence.from_json(out).squares(2) == [F(1, 4), F(4, 9)]
    code, out, _ = run(capsys, "shift", "transform", "--op", "backstep", "--x", "1/2", "--in", src)
    assert WeightSequence.from_json(out).squares(2) == [F(1, 4), F(1, 2)]


def test_backstep_measure(files, capsys):
    twot = files("twot.json", monomial(2, 1))
    code, out, err = run(capsys, "shift", "transform", "--op", "backstep", "--x", "0.5", "--in", twot)
    assert code == 0 and "feasible" in err
    assert Measure.from_json(out) == Measure(terms=lebesgue().scaled(F(1, 2)).terms, zero_mass=F(1, 2))
    code, out, err = run(capsys, "shift", "transform", "--op", "backstep", "--x", "0.5",
                         "--in", files("leb.json", lebesgue()))
    assert code == 1 and "not integrable" in err


def test_shift_test_pass_and_fail(files, capsys):
    code, out, _ = run(capsys, "shift", "test", "--khypo", "1", "--mmax", "5",
                       "--in", files("c.json", constant_shift()))
    assert code == 0 and out.strip().endswith("PASS")
    nu = Measure((Atom.at(F(1, 2), F(1, 2)), Atom.at(1, F(1, 2))))
    moments = {"moments": [{"dec": str(mpmath.sqrt(sum(a.mass * a.position ** n for a in nu.atoms)))}
                           for n in range(60)]}
    code, out, _ = run(capsys, "shift", "test", "--khypo", "2", "--ncontr", "8", "--mmax", "20",
                       "--json", "--in", files("root.json", moments))
    report = json.loads(out)
    assert code == 1 and not report["pass"]
    failing = [t for t in report["tests"] if not t["pass"]]
    assert failing and failing[0]["witness"] is not None


def test_verify_square_round_trip(files, capsys, tmp_path):
    nu = files("nu.json", Measure((Atom.at(F(1, 3), F(1, 4)),), (monomial(F(3, 2), 2).terms[0],)))
    sq = tmp_path / "sq.json"
    assert main(["measure", "square", "--in", nu, "--out", str(sq)]) == 0
    report = tmp_path / "report.json"
    code, out, _ = run(capsys, "measure", "verify-square", str(sq), nu, "-N", "15", "--report", str(report))
    assert code == 0 and "pass" in out
    data = json.loads(report.read_text())
    assert data["pass"] and data["N_checked"] == 16
    code, out, _ = run(capsys, "measure", "verify-square", nu, nu, "-N", "3")
    assert code == 1


def test_square_outside_family(files, capsys):
    code, out, err = run(capsys, "measure", "catalog", "pth-lebesgue", "--q", "1/2",
                         "--out", "-")
    code, _, err = run(capsys, "measure", "square", "--in", files("root.json", json.loads(out)))
    assert code == 1 and json.loads(err)["numeric_only"] is True


def test_plotdata_log_density(files, capsys):
    code, out, _ = run(capsys, "plotdata", "--in", files("sq.json", monomial(1, 0, 1)), "--samples", "5")
    assert code == 0
    rows = list(csv.reader(line for line in out.splitlines() if not line.startswith("#")))
    assert rows[0] == ["t", "density", "cumulative"]
    for i, (t, d, c) in enumerate(rows[1:], start=1):
        assert float(t) == pytest.approx(i / 6)
        assert float(d) == pytest.approx(-mpmath.log(i / 6.0), abs=1e-12)
        # int_0^t -ln s ds = t - t ln t
        assert float(c) == pytest.approx(i / 6 - i / 6 * float(mpmath.log(i / 6.0)), abs=1e-9)


def test_plotdata_atomic(files, capsys):
    mu = Measure((Atom.at(F(1, 2), F(1, 2)), Atom.at(1, F(1, 2))))
    code, out, _ = run(capsys, "plotdata", "--in", files("a.json", mu), "--samples", "3")
    assert code == 0
    body = [line for line in out.splitlines() if line and not line.startswith("#")]
    assert all(row.split(",")[1] == "" for row in body[1:])
    assert "# 1/2,1/2" in out and "# 1,1/2" in out


def test_decimal_flag(files, capsys):
    code, out, _ = run(capsys, "measure", "moments", "-n", "2", "--decimal", "--in", files("l.json", lebesgue()))
    assert "0.33333333333333333333" in out
    code, out, _ = run(capsys, "measure", "moments", "-n", "2", "--in", files("l.json", lebesgue()))
    assert "1/3" in out


def test_usage_errors(capsys, files, tmp_path):
    assert main(["shift", "show", "--in", str(tmp_path / "missing.json")]) == 2
    assert main(["measure", "moments", "--in", files("b.json", bergman_shift())]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["measure", "square", "--in", str(bad)]) == 2
    assert main(["measure", "catalog", "nothing"]) == 2
    assert main(["shift", "transform", "--op", "pow", "--in", files("c.json", constant_shift())]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["shift", "transform", "--op", "nope"])
    assert exc.value.code == 2


def test_unknown_rule_is_usage_error(files, capsys):
    path = files("r.json", {"weights_sq": [], "rule": {"name": "mystery", "params": []}})
    assert main(["shift", "show", "--in", path, "-n", "3"]) == 2


def test_console_script_pipe():
    cat = subprocess.run([sys.executable, "-m", "bergerkit.cli", "measure", "catalog", "lebesgue"],
                         capture_output=True, text=True, check=True)
    sq = subprocess.run([sys.executable, "-m", "bergerkit.cli", "measure", "square"],
                        input=cat.stdout, capture_output=True, text=True)
    assert sq.returncode == 0 and Measure.from_json(sq.stdout) == monomial(1, 0, 1)
    determinism = subprocess.run([sys.executable, "-m", "bergerkit.cli", "measure", "square"],
                                 input=cat.stdout, capture_output=True, text=True)
    assert determinism.stdout == sq.stdout
