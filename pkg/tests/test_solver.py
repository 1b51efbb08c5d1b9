import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonance_tracer.continuation import ContinuationSettings, frequency_response
from resonance_tracer.hbm import hbm_jacobians, hbm_residual, linear_response
from resonance_tracer.solver import (
    MAX_HALVINGS,
    NewtonSettings,
    NoConvergenceError,
    SingularJacobianError,
    fd_jacobian,
    jacobian_discrepancy,
    newton_solve,
    verify_jacobian,
)


def sq(x):
    return np.array([x[0] ** 2 - 4.0])


def dsq(x):
    return np.array([[2.0 * x[0]]])


class TestNewtonExamples:
    def test_square_root_first_iterate(self):
        rep = newton_solve(sq, dsq, [3.0], NewtonSettings(max_iterations=1, epsilon=10.0))
        assert rep.iterations == 0  # already within the loose tolerance
        with pytest.raises(NoConvergenceError) as exc:
            newton_solve(sq, dsq, [3.0], NewtonSettings(max_iterations=1))
        assert exc.value.report.x[0] == pytest.approx(13 / 6, rel=1e-15)

    def test_square_root_converges(self):
        rep = newton_solve(sq, dsq, [3.0])
        assert rep.converged and rep.x[0] == pytest.approx(2.0, abs=1e-9)
        assert rep.history[0] == 5.0

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30)
    def test_affine_one_step(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        b = rng.normal(size=4)
        rep = newton_solve(lambda x: A @ x - b, lambda x: A, rng.normal(size=4) * 10,
                           NewtonSettings(epsilon=1e-9))
        assert rep.iterations <= 1

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_damping_rescues_overshoot(self):
        # plain Newton on arctan diverges from |x0| > 1.39; halving keeps it on track
        f = lambda x: np.array([np.arctan(x[0])])
        J = lambda x: np.array([[1.0 / (1.0 + x[0] ** 2)]])
        with pytest.raises((NoConvergenceError, SingularJacobianError)):
            newton_solve(f, J, [3.0], NewtonSettings(damping=False, max_iterations=10))
        assert newton_solve(f, J, [3.0]).converged

    def test_singular(self):
        with pytest.raises(SingularJacobianError):
            newton_solve(sq, lambda x: np.zeros((1, 1)), [3.0])

    def test_line_search_exhaustion(self):
        # wrong-sign Jacobian: every damped step increases the residual
        with pytest.raises(NoConvergenceError, match="stalled"):
            newton_solve(sq, lambda x: -dsq(x), [3.0])
        assert MAX_HALVINGS == 8

    def test_non_finite_residual(self):
        with pytest.raises(NoConvergenceError, match="finite"):
            newton_solve(lambda x: np.array([np.nan]), None, [1.0])

    def test_missing_jacobian_uses_fd(self):
        rep = newton_solve(sq, None, [3.0])
        assert rep.converged and rep.x[0] == pytest.approx(2.0)

    @pytest.mark.parametrize("kw", [dict(epsilon=0.0), dict(max_iterations=0),
                                    dict(jacobian_mode="broyden")])
    def test_settings_validation(self, kw):
        with pytest.raises(ValueError):
            NewtonSettings(**kw)


class TestBenchmarkSystem:
    def test_linear_guess_at_small_lambda(self, model_m1, grid3):
        w, lam = 1.0, 0.1
        rep = newton_solve(lambda q: hbm_residual(q, w, lam, model_m1, grid3),
                           lambda q: hbm_jacobians(q, w, lam, model_m1, grid3)[0],
                           linear_response(model_m1, w, 3))
        assert rep.converged and rep.iterations <= 5
        assert rep.residual_norm < 1e-8

    @pytest.fixture
    def near_solution(self, model_m1, grid3):
        w, lam = 1.0, 0.1
        br = frequency_response(model_m1, lam, (0.5, 2.5), 2,
                                ContinuationSettings(window=(0.5, 2.5), max_step=2e-2), 3, grid3)
        Q = br.points[int(np.argmin(np.abs(br.omegas - w)))].x
        return w, lam, Q

    def test_converges_from_response_neighbour(self, model_m1, grid3, near_solution):
        w, lam, Q = near_solution
        rep = newton_solve(lambda q: hbm_residual(q, w, lam, model_m1, grid3),
                           lambda q: hbm_jacobians(q, w, lam, model_m1, grid3)[0], Q)
        assert rep.converged and rep.iterations <= 5

    def test_fd_and_analytical_agree(self, model_m1, grid3, near_solution):
        w, lam, Q = near_solution
        res = lambda q: hbm_residual(q, w, lam, model_m1, grid3)
        jac = lambda q: hbm_jacobians(q, w, lam, model_m1, grid3)[0]
        a = newton_solve(res, jac, Q)
        b = newton_solve(res, jac, Q, NewtonSettings(jacobian_mode="finite-difference"))
        assert np.linalg.norm(a.x - b.x) < 1e-6

    def test_damped_norm_never_increases(self, model_m1, grid3, rng):
        for _ in range(10):
            w, lam = rng.uniform(0.5, 2.5), rng.uniform(0, 2)
            x0 = linear_response(model_m1, w, 3) * rng.uniform(0.2, 3)
            try:
                rep = newton_solve(lambda q: hbm_residual(q, w, lam, model_m1, grid3),
                                   lambda q: hbm_jacobians(q, w, lam, model_m1, grid3)[0], x0)
            except NoConvergenceError as exc:
                rep = exc.report
            assert np.all(np.diff(rep.history) < 0)


class TestFiniteDifferences:
    def test_fd_jacobian_polynomial(self):
        f = lambda x: np.array([x[0] ** 2 * x[1], np.sin(x[1])])
        x = np.array([1.5, 0.3])
        exact = np.array([[2 * 1.5 * 0.3, 1.5 ** 2], [0.0, np.cos(0.3)]])
        np.testing.assert_allclose(fd_jacobian(f, x), exact, atol=1e-8)

    def test_relative_step(self):
        # central differences are exact on quadratics regardless of the step
        f = lambda x: x ** 2
        np.testing.assert_allclose(fd_jacobian(f, np.array([1e6]), 1e-3), [[2e6]], rtol=1e-12)

    def test_verify_exact_jacobian(self, model_m1, grid3, rng):
        Q = rng.normal(size=14)
        err = verify_jacobian(lambda q: hbm_residual(q, 1.2, 1.0, model_m1, grid3),
                              lambda q: hbm_jacobians(q, 1.2, 1.0, model_m1, grid3)[0], Q)
        assert err < 1e-6

    def test_fault_injection_localizes(self, model_m1, grid3, rng):
        Q = rng.normal(size=14)
        res = lambda q: hbm_residual(q, 1.2, 1.0, model_m1, grid3)

        def bad(q):
            J = hbm_jacobians(q, 1.2, 1.0, model_m1, grid3)[0].copy()
            J[4, 7] = 1.1 * J[4, 7] + 0.1
            return J

        d = jacobian_discrepancy(res, bad, Q)
        assert np.unravel_index(np.argmax(d), d.shape) == (4, 7)
        assert d[4, 7] > 1e-3
        mask = np.ones_like(d, dtype=bool)
        mask[4, 7] = False
        assert d[mask].max() < 1e-6
