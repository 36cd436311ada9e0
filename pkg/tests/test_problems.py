import numpy as np
import pytest
from numpy.testing import assert_allclose

from saddlesim.problems import (
    NotStrictSaddle,
    NotStrictSaddleAtZero,
    ProblemConstants,
    SaddleProblem,
    cubic_test,
    estimate_constants,
    phase_retrieval,
    quadratic_saddle,
    validate_assumptions,
)


def central_diff_gradient(problem, x, h):
    g = np.empty(problem.dim)
    for i in range(problem.dim):
        e = np.zeros(problem.dim)
        e[i] = h
        g[i] = (problem.value(x + e) - problem.value(x - e)) / (2.0 * h)
    return g


class TestQuadratic:
    def test_fields(self):
        prob = quadratic_saddle([1.0, -1.0])
        assert prob.dim == 2
        assert_allclose(prob.saddle, [0.0, 0.0])
        x = np.array([0.2, 0.1])
        assert prob.value(x) == pytest.approx(0.5 * (0.04 - 0.01))
        assert_allclose(prob.gradient(x), [0.2, -0.1])
        assert_allclose(prob.hessian(x), np.diag([1.0, -1.0]))
        assert "quadratic" in prob.label

    def test_rejects_definite_spectra(self):
        with pytest.raises(NotStrictSaddle):
            quadratic_saddle([1.0, 2.0])
        with pytest.raises(NotStrictSaddle):
            quadratic_saddle([-1.0, -2.0])

    def test_rejects_short_input(self):
        with pytest.raises(ValueError):
            quadratic_saddle([1.0])

    def test_constants_have_no_curvature_drift(self):
        prob = quadratic_saddle([1.0, -1.0])
        constants = estimate_constants(prob, 0.1, samples=100)
        assert constants.big_l == pytest.approx(1.0)
        assert constants.beta == pytest.approx(1.0)
        assert constants.delta == pytest.approx(2.0)
        assert constants.big_m == 0.0
        assert constants.eps_max == np.inf


class TestCubic:
    def test_saddle_is_critical(self):
        prob = cubic_test()
        assert_allclose(prob.gradient(prob.saddle), [0.0, 0.0])
        assert_allclose(prob.hessian(prob.saddle), np.diag([1.0, -1.0]))

    def test_hessian_bends_with_position(self):
        prob = cubic_test()
        assert_allclose(prob.hessian([0.0, 0.1]), [[1.2, 0.0], [0.0, -1.0]])
        x = np.array([0.3, -0.2])
        assert_allclose(prob.gradient(x), [0.3 - 0.12, 0.2 + 0.09])
        assert_allclose(prob.hessian(x), [[0.6, 0.6], [0.6, -1.0]])

    def test_lipschitz_estimate_brackets_true_constant(self):
        # the Hessian is linear in x, so the Frobenius-norm Lipschitz constant
        # is exactly sup_d ||H'(d)||_F = 2 sqrt(2)
        prob = cubic_test()
        constants = estimate_constants(prob, 0.1, samples=2000)
        assert 2.6 <= constants.big_m <= 2.0 * np.sqrt(2.0)
        repeat = estimate_constants(prob, 0.1, samples=2000)
        assert repeat.big_m == constants.big_m

    def test_eps_max_positive_and_finite(self):
        constants = estimate_constants(cubic_test(), 0.1, samples=500)
        assert 0.0 < constants.eps_max < np.inf


class TestPhaseRetrieval:
    def test_injected_rows_give_known_hessian(self):
        prob = phase_retrieval(2, 2, a_matrix=np.eye(2))
        assert_allclose(prob.hessian(np.zeros(2)), np.diag([-0.5, 0.5]))
        assert_allclose(prob.gradient(np.zeros(2)), [0.0, 0.0])

    def test_square_only(self):
        with pytest.raises(ValueError):
            phase_retrieval(4, 6)

    def test_seeded_instances_are_identical(self):
        p1 = phase_retrieval(6, 6, seed=3)
        p2 = phase_retrieval(6, 6, seed=3)
        x = np.random.default_rng(0).standard_normal(6) * 0.01
        assert np.array_equal(p1.hessian(x), p2.hessian(x))
        assert np.array_equal(p1.gradient(x), p2.gradient(x))
        p3 = phase_retrieval(6, 6, seed=4)
        assert not np.array_equal(p1.hessian(x), p3.hessian(x))

    def test_zero_is_strict_saddle(self):
        prob = phase_retrieval(10, 10, seed=0)
        h0 = prob.hessian(prob.saddle)
        lam = np.linalg.eigvalsh(h0)
        assert lam.min() < 0 < lam.max()

    def test_degenerate_measurements_rejected(self):
        # both rows equal, so the positive and negative halves cancel at zero
        a = np.array([[0.0, 1.0], [0.0, 1.0]])
        with pytest.raises(NotStrictSaddleAtZero):
            phase_retrieval(2, 2, a_matrix=a)


class TestConstantsValidation:
    def test_beta_cannot_exceed_big_l(self):
        with pytest.raises(ValueError):
            ProblemConstants(big_l=1.0, beta=2.0, delta=1.0, big_m=0.0, eps_max=1.0)

    def test_negative_lipschitz_rejected(self):
        with pytest.raises(ValueError):
            ProblemConstants(big_l=1.0, beta=1.0, delta=1.0, big_m=-0.5, eps_max=1.0)

    def test_eps_max_must_be_positive(self):
        with pytest.raises(ValueError):
            ProblemConstants(big_l=1.0, beta=1.0, delta=1.0, big_m=0.0, eps_max=0.0)


class TestDerivativeConsistency:
    @pytest.mark.parametrize("factory", [cubic_test, lambda: quadratic_saddle([1.5, -0.7])])
    def test_gradient_matches_value(self, factory):
        prob = factory()
        rng = np.random.default_rng(7)
        for _ in range(20):
            x = 0.2 * rng.standard_normal(prob.dim)
            coarse = np.max(np.abs(central_diff_gradient(prob, x, 1e-3) - prob.gradient(x)))
            fine = np.max(np.abs(central_diff_gradient(prob, x, 5e-4) - prob.gradient(x)))
            # second-order stencil: quartering the step shrinks the error 4x,
            # unless both errors already sit at the rounding floor
            assert fine <= max(coarse / 3.5, 1e-10)

    def test_hessian_matches_gradient(self):
        prob = cubic_test()
        rng = np.random.default_rng(8)
        for _ in range(10):
            x = 0.2 * rng.standard_normal(2)
            h = 1e-5
            cols = []
            for i in range(2):
                e = np.zeros(2)
                e[i] = h
                cols.append((prob.gradient(x + e) - prob.gradient(x - e)) / (2.0 * h))
            assert_allclose(np.column_stack(cols), prob.hessian(x), atol=1e-8)


class TestValidateAssumptions:
    def test_cubic_passes_everything(self):
        report = validate_assumptions(cubic_test(), 0.05, samples=200)
        assert report["is_morse"] and report["is_strict_saddle"]
        assert report["is_critical_point"]
        assert report["hessian_symmetric"] and report["hessian_symmetric_at_samples"]
        assert report["beta_ge_half_delta"]
        assert report["gradient_growth_ok"]
        assert report["constants"]["big_l"] == pytest.approx(1.0)

    def test_quadratic_growth_bound_is_tight(self):
        report = validate_assumptions(quadratic_saddle([1.0, -1.0]), 0.1, samples=200)
        assert report["gradient_growth_ok"]
        assert report["max_gradient_growth"] == pytest.approx(1.0, rel=1e-9)

    def test_degenerate_problem_reported_not_raised(self):
        h = np.diag([1.0, 0.0, -1.0])
        prob = SaddleProblem(
            dim=3,
            value=lambda x: 0.5 * float(x @ (h @ x)),
            gradient=lambda x: h @ np.asarray(x, dtype=float),
            hessian=lambda x: h.copy(),
            saddle=np.zeros(3),
            label="degenerate",
        )
        report = validate_assumptions(prob, 0.1, samples=10)
        assert report["is_morse"] is False
        assert report["constants"] is None
        assert report["gradient_growth_ok"] is None
