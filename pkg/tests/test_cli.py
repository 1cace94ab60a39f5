import json
import math

import mpmath
import pytest

from heatlab.cli import main


def test_eval_circle(capsys):
    assert main(["eval", "--space", "circle(1.0)", "--x", "0.0", "--y", "0.0", "--t", "1.0", "--tol", "1e-12"]) == 0
    out = json.loads(capsys.readouterr().out)
    exact = float(mpmath.nsum(lambda j: mpmath.exp(-j * j), [-mpmath.inf, mpmath.inf])) / (2 * math.pi)
    assert out["value"] == pytest.approx(exact, abs=1e-12)
    assert out["cert"]["tail_bound"] <= 1e-12


def test_eval_cone_point(capsys):
    argv = ["eval", "--space", "cone(circle(1.0))", "--x", "[1.0, 0.0]", "--y", "[1.0, 1.5707963267948966]",
            "--t", "0.5"]
    assert main(argv) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(math.exp(-1) / (2 * math.pi), abs=1e-9)


def test_spectrum(capsys):
    assert main(["spectrum", "--space", "sphere(2,1.0)", "--levels", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["level\tmu\tmultiplicity", "0\t0\t1", "1\t2\t3", "2\t6\t5"]


def test_run_to_stdout(capsys):
    assert main(["run", "ihki-sphere", "--t-grid", "0.1:5:5"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["verdict"] == "pass"
    assert len(report["grids"]["t"]) == 5


def test_run_files(tmp_path, capsys):
    out, csv_path = tmp_path / "r.json", tmp_path / "r.csv"
    code = main(["run", "cone-flatness", "--param", "pairs=5", "--out", str(out), "--csv", str(csv_path)])
    assert code == 0
    assert capsys.readouterr().out.strip() == "cone-flatness: pass"
    assert json.loads(out.read_text())["params"]["pairs"] == 5
    assert csv_path.read_text().startswith("pair,r1,r2,t,cone,gaussian,abs_error\n")


def test_run_failing_scenario_exits_1(capsys):
    code = main(["run", "ihki-product", "--space", "product(circle(0.5),sphere(2,0.75))"])
    assert code == 1
    assert json.loads(capsys.readouterr().out)["verdict"] == "fail"


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--space", "torus(1)"],
        ["eval", "--space", "circle(1.0)", "--x", "0", "--y", "0", "--t", "-1"],
        ["run", "ihki-sphere", "--t-grid", "0:1:3"],
        ["spectrum", "--space", "euclidean(2)"],
    ],
)
def test_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("heatlab:")


def test_unknown_scenario_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["run", "nope"])
    assert info.value.code == 2
