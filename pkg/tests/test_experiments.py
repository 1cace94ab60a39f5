import json
import math

import mpmath
import pytest

from heatlab import pullback
from heatlab.errors import CalibrationFailed, DomainError
from heatlab.experiments import (
    SCENARIOS,
    calibrate_sphere_radius,
    calibration_gap,
    circle_calibration_value,
    example_4_5,
    diagonal_power_defect,
    parse_grid,
    run_scenario,
    s1xr_blocks_by_quadrature,
    to_csv,
    to_json,
    torus_vs_sphere_theta,
)
from heatlab.spaces import Circle, Euclidean, Product, Sphere


@pytest.fixture(scope="module")
def example():
    return example_4_5(0.5)


class TestCircleTimesSphere:
    def test_calibration(self, example):
        assert example.calibration_residual <= 1e-10
        assert abs(calibration_gap(0.5, example.s)) <= 1e-10
        assert 0.5 < example.s < 1.0

    def test_single_time(self, example):
        assert example.t_star == 1.0
        assert example.product_deviation_at_t_star <= 1e-8
        assert example.verdict == pullback.VERDICT_SINGLE

    def test_not_ihki(self, example):
        assert example.witness_defect > 1e-3
        assert dict(example.probes)[example.witness_t] == example.witness_defect
        bad = [d for t, d in example.grid_deviations if t != 1.0]
        assert min(bad) > 1e-8

    def test_equal_spheres_control(self, example):
        assert example.control_defect <= 1e-10

    def test_diagonal_power_defect_by_hand(self):
        left, right = Circle(0.5), Sphere(2, 0.75)
        t = 0.5
        a = 2 * math.log(pullback.diagonal_2t(left, t / 2))
        b = math.log(pullback.diagonal_2t(right, t / 2))
        assert diagonal_power_defect(left, right, t) == pytest.approx(1 - math.exp(-abs(a - b)), rel=1e-10)

    def test_blow_up_as_radius_shrinks(self):
        vals = [circle_calibration_value(r) for r in (0.6, 0.5, 0.4)]
        assert vals[0] < vals[1] < vals[2]

    def test_circle_calibration_closed_form(self):
        # c rho_{2t} = vol Z(2t) / (n E(2t)) with n = 1
        r, t = 0.5, 1.0
        q = lambda j: mpmath.exp(-2 * t * j * j / r**2)
        z = 1 + 2 * mpmath.nsum(q, [1, mpmath.inf])
        e = 2 * mpmath.nsum(lambda j: j * j / r**2 * q(j), [1, mpmath.inf])
        assert circle_calibration_value(r, t) == pytest.approx(float(z / e), rel=1e-10)

    def test_calibration_failure_carries_scan(self):
        # a wide circle has no matching sphere radius in [r/10, 10 r]
        with pytest.raises(CalibrationFailed) as info:
            calibrate_sphere_radius(2.0)
        assert len(info.value.scan) == 64
        assert all(g < 0 or math.isnan(g) for _, g in info.value.scan) or all(
            g > 0 or math.isnan(g) for _, g in info.value.scan
        )

    @pytest.mark.parametrize("r", [0.0, -0.1, 0.9])
    def test_domain(self, r):
        with pytest.raises(DomainError):
            example_4_5(r)


@pytest.fixture(scope="module")
def table():
    return {round(row["tau"], 12): row for row in torus_vs_sphere_theta(1.0)}


class TestTheta:
    def test_sphere_scaled_at_tau5(self, table):
        s = table[5.0]["sphere_scaled"]
        assert 3.0 < s < 3.0 + 1e-6

    def test_torus_scaled_exceeds_e5(self, table):
        assert table[5.0]["torus_scaled"] > math.exp(5.0)

    def test_per_volume_close_at_small_tau(self, table):
        row = table[1e-3]
        a, b = row["torus_per_volume"], row["sphere_per_volume"]
        assert abs(a - b) / max(a, b) < 0.03

    def test_against_brute_force(self, table):
        for tau in (1e-2, 1.0):
            torus = mpmath.nsum(lambda j: mpmath.exp(-j * j * tau), [-mpmath.inf, mpmath.inf]) ** 2 - 1
            sphere = mpmath.nsum(lambda l: (2 * l + 1) * mpmath.exp(-l * (l + 1) * tau), [1, mpmath.inf])
            assert table[tau]["torus_sum"] == pytest.approx(float(torus), rel=1e-12)
            assert table[tau]["sphere_sum"] == pytest.approx(float(sphere), rel=1e-12)


def test_s1xr_quadrature_matches_closed_form():
    space = Product(Circle(1.0), Euclidean(1))
    for t in (0.25, 1.0):
        diag = pullback.pullback_matrix(space, t).matrix.diagonal()
        qc, ql = s1xr_blocks_by_quadrature(1.0, t)
        assert diag[0] == pytest.approx(qc, rel=1e-8)
        assert diag[1] == pytest.approx(ql, rel=1e-8)


class TestRunner:
    @pytest.mark.parametrize("name", SCENARIOS)
    def test_scenarios_pass(self, name, tmp_path):
        out, csv_path = tmp_path / "r.json", tmp_path / "r.csv"
        report = run_scenario(name, output_path=out, csv_path=csv_path)
        assert report["verdict"] == "pass", report.get("witness")
        assert "witness" not in report
        saved = json.loads(out.read_text())
        assert saved["scenario"] == name
        assert {"params", "grids", "values", "certificates", "invariants", "timestamp"} <= saved.keys()
        assert csv_path.read_text() == report["csv_text"]

    def test_csv_is_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_scenario("cone-flatness", {"pairs": 20}, csv_path=a)
        run_scenario("cone-flatness", {"pairs": 20}, csv_path=b)
        assert a.read_bytes() == b.read_bytes()

    def test_failure_names_witness(self):
        report = run_scenario("ihki-product", {"space": "product(circle(0.5),sphere(2,0.75))"})
        assert report["verdict"] == "fail"
        assert report["witness"]["name"] == "sup_deviation"

    def test_unknown_scenario(self):
        with pytest.raises(DomainError):
            run_scenario("nope")

    def test_wrong_space_for_scenario(self):
        with pytest.raises(DomainError):
            run_scenario("cone-flatness", {"space": "sphere(2,1.0)"})


class TestSerialization:
    def test_floats_round_trip(self):
        x = 0.1 + 0.2
        assert json.loads(to_json({"x": x}))["x"] == x
        assert json.loads(to_json({"a": math.nan, "b": [1, True, None]})) == {"a": "nan", "b": [1, True, None]}

    def test_csv(self):
        assert to_csv(("a", "b"), [(1, 0.5)]) == "a,b\n1,0.5\n"


class TestParseGrid:
    def test_log(self):
        g = parse_grid("0.05:20:33")
        assert len(g) == 33 and g[0] == pytest.approx(0.05) and g[-1] == pytest.approx(20.0)
        assert g[1] / g[0] == pytest.approx(g[-1] / g[-2])
        assert parse_grid("0.05:20:33log") == g
        assert parse_grid("0.05:20:33:log") == g

    def test_lin(self):
        assert parse_grid("1:3:3lin") == [1.0, 2.0, 3.0]

    @pytest.mark.parametrize("text", ["1:2", "0:1:3", "2:1:3", "1:2:0", "1:2:3:cubic"])
    def test_rejects(self, text):
        with pytest.raises(DomainError):
            parse_grid(text)
