import math

import mpmath
import numpy as np
import pytest

from heatlab import pullback
from heatlab.errors import BudgetExceeded, DomainError, HypothesisViolated, UnsupportedSpace
from heatlab.experiments import calibrate_sphere_radius, diagonal_power_defect
from heatlab.heat_kernel import diagonal
from heatlab.pullback import (
    c_of_t,
    eigenspace_immersion,
    flat_constant,
    ihki_check,
    large_time_ratio,
    pullback_matrix,
    pullback_scalar,
    small_t_asymptotics,
    trace_derivative_check,
)
from heatlab.spaces import Circle, Cone, Euclidean, HalfSpace, Product, Rescaled, Sphere, volume


def series_lambda(mus_mults, n, vol, t):
    """(1 / (n vol)) sum m mu e^{-2 mu t} in extended precision."""
    return float(sum(m * mu * mpmath.exp(-2 * mu * t) for mu, m in mus_mults) / (n * vol))


class TestScalar:
    def test_sphere_large_time_two_terms(self):
        t = 3.0
        two_terms = (6 * math.exp(-4 * t) + 30 * math.exp(-12 * t)) / (2 * 4 * math.pi)
        assert pullback_scalar(Sphere(2, 1.0), t) == pytest.approx(two_terms, rel=1e-12)
        assert pullback_scalar(Sphere(2, 1.0), 8.0) == pytest.approx(3 / (4 * math.pi) * math.exp(-32), rel=1e-12)

    def test_euclidean_closed_form(self):
        for n in (1, 2, 3):
            assert pullback_scalar(Euclidean(n), 0.7) == pytest.approx(
                0.7 ** (-(n + 2) / 2) / (4 * (8 * math.pi) ** (n / 2)), rel=1e-15
            )

    def test_circle_series(self):
        mpmath.mp.dps = 30
        levels = [(j * j, 2) for j in range(1, 30)]
        assert pullback_scalar(Circle(1.0), 1.0) == pytest.approx(
            series_lambda(levels, 1, 2 * math.pi, 1.0), rel=1e-12
        )
        three_terms = (math.exp(-2) + 4 * math.exp(-8) + 9 * math.exp(-18)) / math.pi
        assert pullback_scalar(Circle(1.0), 1.0) == pytest.approx(three_terms, rel=1e-11)

    def test_point_independent(self):
        space = Sphere(2, 1.3)
        ref = pullback_scalar(space, 0.4)
        for p in pullback.sample_points(space, 5):
            assert pullback_matrix(space, 0.4, point=p).scalar == pytest.approx(ref, rel=1e-10)

    def test_non_homogeneous_rejected(self):
        with pytest.raises(UnsupportedSpace):
            pullback_scalar(Product(Circle(1.0), Sphere(2, 1.0)), 1.0)


class TestC:
    def test_times_lambda_is_one(self):
        for space in (Circle(1.0), Sphere(2, 1.0), Sphere(3, 0.5), Product(Sphere(2, 1.0), Sphere(2, 1.0))):
            for t in np.geomspace(0.01, 50, 20):
                # c(t) overflows double range at large t on small spheres; compare in log space there
                matrix, _ = pullback.normalized_pullback(space, t)
                assert np.diag(matrix) == pytest.approx(np.ones(matrix.shape[0]), rel=1e-10)
                if t <= 5:
                    lam = np.diag(pullback_matrix(space, t).matrix)[0]
                    assert c_of_t(space, t) * lam == pytest.approx(1.0, rel=1e-10)

    def test_rescaled_sphere_identity(self):
        for n, k in [(2, 0.5), (3, 2.0), (2, 1.7)]:
            lhs = c_of_t(Sphere(n, k), 1.0)
            rhs = k ** (n + 2) * c_of_t(Sphere(n, 1.0), k**-2)
            assert lhs == pytest.approx(rhs, rel=1e-11)

    def test_series_oracle(self):
        mpmath.mp.dps = 30
        levels = [(l * (l + 1), 2 * l + 1) for l in range(1, 30)]
        e = sum(m * mu * mpmath.exp(-mu) for mu, m in levels)
        assert c_of_t(Sphere(2, 1.0), 0.5) == pytest.approx(float(2 * 4 * mpmath.pi / e), rel=1e-12)

    def test_large_time_is_finite(self):
        assert math.isfinite(pullback.log_c_of_t(Sphere(2, 1.0), 200.0))

    def test_requires_compact(self):
        with pytest.raises(UnsupportedSpace):
            c_of_t(Euclidean(2), 1.0)


class TestMatrix:
    def test_torus_blocks_equal(self):
        space = Product(Circle(1.0), Circle(1.0))
        for t in (0.3, 1.0, 4.0):
            blocks = np.diag(pullback_matrix(space, t).matrix)
            expected = diagonal(Circle(1.0), t=2 * t) * pullback_scalar(Circle(1.0), t)
            assert blocks == pytest.approx([expected, expected], rel=1e-11)

    def test_block_formula_mixed(self):
        left, right = Circle(0.8), Sphere(2, 1.2)
        t = 0.6
        sample = pullback_matrix(Product(left, right), t)
        d = np.diag(sample.matrix)
        assert d[0] == pytest.approx(diagonal(right, t=2 * t) * pullback_scalar(left, t), rel=1e-11)
        assert d[1] == pytest.approx(diagonal(left, t=2 * t) * pullback_scalar(right, t), rel=1e-11)
        assert d[1] == d[2]
        assert sample.frame == ("circle(0.8)", "sphere(2,1.2)", "sphere(2,1.2)")
        assert np.allclose(sample.matrix, sample.matrix.T)
        assert sample.scalar is None

    def test_example_calibration_blocks_equal(self):
        s, _, _ = calibrate_sphere_radius(0.5)
        d = np.diag(pullback_matrix(Product(Circle(0.5), Sphere(2, s)), 1.0).matrix)
        assert d[1] == pytest.approx(d[0], rel=1e-8)
        assert d[0] == pytest.approx(diagonal(Circle(0.5), t=2.0) * pullback_scalar(Sphere(2, s), 1.0), rel=1e-8)

    def test_circle_times_line(self):
        t = 0.8
        d = np.diag(pullback_matrix(Product(Circle(1.0), Euclidean(1)), t).matrix)
        line_block = diagonal(Circle(1.0), t=2 * t) * flat_constant(1) * t**-1.5
        circle_block = (8 * math.pi * t) ** -0.5 * pullback_scalar(Circle(1.0), t)
        assert d == pytest.approx([circle_block, line_block], rel=1e-12)

    def test_nested_product(self):
        space = Product(Product(Circle(1.0), Circle(1.0)), Circle(1.0))
        d = np.diag(pullback_matrix(space, 0.5).matrix)
        assert d == pytest.approx([d[0]] * 3, rel=1e-12)

    def test_rescaled_factor(self):
        space = Product(Rescaled(Sphere(2, 1.0), 2.0, 1.0), Sphere(2, 2.0))
        d = np.diag(pullback_matrix(space, 0.7).matrix)
        assert d == pytest.approx([d[0]] * 4, rel=1e-11)

    @pytest.mark.parametrize("factor", [HalfSpace(1), Cone(Circle(0.5))], ids=str)
    def test_hypothesis_violated(self, factor):
        with pytest.raises(HypothesisViolated):
            pullback_matrix(Product(Circle(1.0), factor), 1.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            pullback_matrix(Sphere(2, 1.0), 0.0)


class TestIHKI:
    @pytest.mark.parametrize(
        "space", [Sphere(2, 1.0), Sphere(3, 0.5), Product(Sphere(2, 1.0), Sphere(2, 1.0)), Circle(0.3)], ids=str
    )
    def test_consistent(self, space):
        rep = ihki_check(space)
        assert rep.verdict == pullback.VERDICT_OK
        assert rep.sup_deviation <= 1e-9
        assert len(rep.t_grid) == 33 and rep.witness is None

    def test_example_single_time(self):
        s, _, _ = calibrate_sphere_radius(0.5)
        space = Product(Circle(0.5), Sphere(2, s))
        rep = ihki_check(space, [0.5, 1.0, 2.0])
        assert rep.verdict == pullback.VERDICT_SINGLE
        assert rep.deviations[1] <= 1e-8
        assert rep.witness is not None and rep.witness[0] != 1.0
        assert ihki_check(space, [1.0]).verdict == pullback.VERDICT_OK

    def test_fails(self):
        rep = ihki_check(Product(Circle(1.0), Sphere(2, 1.0)), [0.5, 1.0, 2.0])
        assert rep.verdict == pullback.VERDICT_FAIL
        assert rep.sup_deviation > 1e-3

    def test_verdict_threshold_equivalence(self):
        rep = ihki_check(Product(Circle(1.0), Sphere(2, 1.0)), [0.5, 1.0])
        assert (rep.verdict == pullback.VERDICT_FAIL) == all(d > rep.threshold for d in rep.deviations)

    def test_diagonal_power_identity(self):
        for space in (Product(Sphere(2, 1.0), Sphere(2, 1.0)), Product(Circle(0.7), Circle(0.7))):
            rep = ihki_check(space)
            assert rep.verdict == pullback.VERDICT_OK
            for t in rep.t_grid:
                assert diagonal_power_defect(space.left, space.right, t) <= 1e-8

    @pytest.mark.parametrize("a,b", [(2.0, 1.0), (0.5, 3.0)])
    def test_scaling_covariance(self, a, b):
        s, _, _ = calibrate_sphere_radius(0.5)
        grid = [0.5, 1.0, 2.0]
        for space in (Product(Circle(0.5), Sphere(2, s)), Sphere(2, 1.0), Product(Circle(1.0), Sphere(2, 1.0))):
            base = ihki_check(space, grid).verdict
            scaled = ihki_check(Rescaled(space, a, b), [t * a * a for t in grid]).verdict
            assert scaled == base

    def test_bad_grid(self):
        with pytest.raises(DomainError):
            ihki_check(Sphere(2, 1.0), [2.0, 1.0])
        with pytest.raises(DomainError):
            ihki_check(Sphere(2, 1.0), [])


class TestEigenmaps:
    def test_sphere_level_one(self):
        rep = eigenspace_immersion(Sphere(2, 1.0), 1)
        assert rep.lam == 2 and rep.multiplicity == 3
        assert rep.on_sphere_deviation <= 1e-9 and rep.metric_deviation <= 1e-9

    def test_circle_level_one(self):
        rep = eigenspace_immersion(Circle(1.0), 1)
        assert rep.lam == 1 and rep.multiplicity == 2
        assert rep.on_sphere_deviation <= 1e-12 and rep.metric_deviation <= 1e-12

    def test_three_sphere(self):
        rep = eigenspace_immersion(Sphere(3, 1.0), 1)
        assert rep.lam == 3 and rep.multiplicity == 4

    @pytest.mark.parametrize("space", [Sphere(2, 1.0), Sphere(3, 1.0), Sphere(2, 0.6), Sphere(3, 1.7)], ids=str)
    @pytest.mark.parametrize("lvl", [1, 2, 3])
    def test_takahashi_levels(self, space, lvl):
        rep = eigenspace_immersion(space, lvl)
        assert rep.on_sphere_deviation <= 1e-9
        assert rep.metric_deviation <= 1e-9 * max(1.0, rep.lam)
        assert rep.fd_metric_deviation <= 1e-6

    def test_unsupported(self):
        with pytest.raises(UnsupportedSpace):
            eigenspace_immersion(Product(Circle(1.0), Circle(1.0)), 1)
        with pytest.raises(DomainError):
            eigenspace_immersion(Sphere(2, 1.0), 0)


class TestAsymptotics:
    def test_two_sphere(self):
        fit = small_t_asymptotics(Sphere(2, 1.0))
        assert fit.constant == pytest.approx(1.0, abs=0.01)
        assert abs(fit.slope) <= 0.05 and fit.expected_slope == 0.0

    def test_three_sphere(self):
        fit = small_t_asymptotics(Sphere(3, 1.0))
        assert fit.constant == pytest.approx(1.0, abs=0.01)
        assert fit.slope == pytest.approx(2 / 3, rel=0.05)

    def test_scaled_sphere(self):
        fit = small_t_asymptotics(Sphere(3, 2.0))
        assert fit.slope == pytest.approx(2 / (3 * 4.0), rel=0.05)

    def test_euclidean_exact(self):
        fit = small_t_asymptotics(Euclidean(3))
        assert fit.constant == pytest.approx(1.0, abs=1e-13)
        assert abs(fit.slope) <= 1e-10

    def test_window_out_of_regime(self):
        with pytest.raises(BudgetExceeded):
            small_t_asymptotics(Sphere(2, 1.0), t_window=(1e-5, 1e-3))
        with pytest.raises(DomainError):
            small_t_asymptotics(Sphere(2, 1.0), fit_points=3)


class TestTraceIdentities:
    @pytest.mark.parametrize("space", [Circle(1.0), Sphere(2, 1.0), Sphere(3, 0.5)], ids=str)
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_derivative_identity(self, space, t):
        assert trace_derivative_check(space, t, 1e-4) <= 1e-6

    def test_second_order_rate(self):
        # defect ~ C h^2 until rounding takes over
        space = Sphere(2, 1.0)
        d1 = trace_derivative_check(space, 0.3, 1e-2)
        d2 = trace_derivative_check(space, 0.3, 5e-3)
        assert d1 / d2 == pytest.approx(4.0, rel=0.05)

    def test_large_time_decay(self):
        ts = [1, 2, 5, 10, 20, 50]
        vals = [large_time_ratio(Sphere(2, 1.0), t) for t in ts]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-6

    def test_domain(self):
        with pytest.raises(DomainError):
            trace_derivative_check(Sphere(2, 1.0), 1e-4, 1e-4)


def test_volumes_carried_explicitly():
    # rho_{2t} c(t) = n Z / E is volume free; rho_{2t} alone is not
    space, scaled = Sphere(2, 1.0), Rescaled(Sphere(2, 1.0), 1.0, 7.0)
    assert pullback.diagonal_2t(scaled, 0.5) == pytest.approx(pullback.diagonal_2t(space, 0.5) / 7.0, rel=1e-13)
    assert pullback.log_c_rho(scaled, 0.5) == pytest.approx(pullback.log_c_rho(space, 0.5), rel=1e-13)
    assert volume(scaled) == pytest.approx(7 * 4 * math.pi)
