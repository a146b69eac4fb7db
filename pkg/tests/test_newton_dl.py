import numpy as np
import pytest

from hammerstein import (
    DLSettings,
    DLState,
    FUNCTIONS,
    HammersteinProblem,
    dl_assemble,
    dl_newton_step,
    dl_solve,
    get_nonlinearity,
    log_kernel,
    make_grid,
    moment0,
    natural_extension,
    smooth_kernel,
)
from hammerstein.problem import L_one, L_zero

FAST = DLSettings(sample_count=41)


def ones_kernel():
    return smooth_kernel(
        lambda s, t: np.full(np.broadcast_shapes(np.shape(s), np.shape(t)), 1.0)
    )


class TestAssemble:
    def test_trapezoid_rows(self):
        prob = HammersteinProblem(
            0.0, 1.0, ones_kernel(), L_one, get_nonlinearity("zero"), FUNCTIONS["one"]
        )
        grid = make_grid(0, 1, 2)
        A, Y = dl_assemble(prob, grid)
        for row in A:
            np.testing.assert_allclose(row, [0.25, 0.5, 0.25], rtol=0, atol=2e-16)
        np.testing.assert_array_equal(Y, 1.0)

    def test_row_sums_equal_kernel_moment(self, benchmark_problem):
        grid = make_grid(0, 1, 50)
        A, _ = dl_assemble(benchmark_problem, grid)
        m0 = np.array([moment0(log_kernel(), s, 0.0, 1.0) for s in grid.nodes])
        assert np.max(np.abs(A.sum(axis=1) - m0) / (1 + np.abs(m0))) <= 1e-12

    def test_zero_smooth_factor_gives_zero_matrix(self):
        prob = HammersteinProblem(
            0.0, 1.0, log_kernel(), L_zero, get_nonlinearity("zero"), FUNCTIONS["one"]
        )
        grid = make_grid(0, 1, 5)
        A, _ = dl_assemble(prob, grid)
        np.testing.assert_array_equal(A, 0.0)


class TestNewtonStep:
    def test_benchmark_all_ones_is_discrete_solution(self, benchmark_problem):
        grid = make_grid(0, 1, 10)
        A, Y = dl_assemble(benchmark_problem, grid)
        state = DLState(X=np.ones(11), k=0, A=A, Y=Y)
        new = dl_newton_step(state, benchmark_problem, grid)
        assert np.max(np.abs(new.X - 1.0)) <= 1e-14
        assert new.k == 1

    def test_zero_nonlinearity_one_step(self):
        prob = HammersteinProblem(
            0.0, 1.0, log_kernel(), L_one, get_nonlinearity("zero"), np.cos
        )
        grid = make_grid(0, 1, 8)
        A, Y = dl_assemble(prob, grid)
        state = DLState(X=np.zeros(9), k=0, A=A, Y=Y)
        new = dl_newton_step(state, prob, grid)
        np.testing.assert_allclose(new.X, Y, rtol=0, atol=1e-15)

    def test_quadratic_residual_decay(self, cosine_problem):
        grid = make_grid(0, 1, 16)
        settings = DLSettings(tol=1e-30, max_iter=8, sample_count=41)
        _, report = dl_solve(cosine_problem, grid, settings)
        resid = np.array([r.residual_norm for r in report.records])
        # fit log r_{k+1} against log r_k over steps that are locally
        # convergent but still well above the roundoff floor
        floor = resid.min()
        usable = [
            (np.log(resid[i]), np.log(resid[i + 1]))
            for i in range(len(resid) - 1)
            if resid[i + 1] > max(1e3 * floor, 1e-13) and resid[i] < 0.5
        ]
        assert len(usable) >= 2
        xs = np.array([u[0] for u in usable])
        ys = np.array([u[1] for u in usable])
        slope = np.polyfit(xs, ys, 1)[0]
        assert 1.7 <= slope <= 2.3


class TestSolve:
    def test_benchmark_converges_to_ones(self, benchmark_problem):
        grid = make_grid(0, 1, 50)
        fn, report = dl_solve(benchmark_problem, grid, FAST)
        assert report.status == "converged"
        assert report.records[-1].residual_norm <= 1e-12
        assert report.records[-1].true_error <= 1e-12
        nodes_vals = fn(grid.nodes)
        assert np.max(np.abs(nodes_vals - 1.0)) <= 1e-12

    def test_plateau_unchanged_by_extra_iterations(self, cosine_problem):
        grid = make_grid(0, 1, 12)
        _, short = dl_solve(cosine_problem, grid, DLSettings(tol=1e-30, max_iter=7,
                                                             sample_count=41))
        _, long = dl_solve(cosine_problem, grid, DLSettings(tol=1e-30, max_iter=14,
                                                            sample_count=41))
        e_short = short.records[-1].true_error
        e_long = long.records[-1].true_error
        assert e_long > 0
        assert abs(e_short - e_long) <= 0.01 * e_long

    def test_plateau_shrinks_with_n(self, cosine_problem):
        errs = {}
        for n in (8, 16):
            _, rep = dl_solve(cosine_problem, make_grid(0, 1, n),
                              DLSettings(tol=1e-30, max_iter=10, sample_count=41))
            errs[n] = rep.records[-1].true_error
        assert errs[16] < errs[8]

    def test_natural_extension_interpolates_discrete_solution(self, benchmark_problem):
        grid = make_grid(0, 1, 10)
        X = np.ones(11)
        ext = natural_extension(benchmark_problem, grid, X, grid.nodes)
        # at the nodes the extension satisfies the discrete equation
        np.testing.assert_allclose(ext, X, rtol=0, atol=1e-12)

    def test_callable_start(self, benchmark_problem):
        grid = make_grid(0, 1, 10)
        fn, report = dl_solve(benchmark_problem, grid, FAST, x0=FUNCTIONS["one"])
        assert report.status == "converged"

    def test_report_is_dense_in_k(self, cosine_problem):
        grid = make_grid(0, 1, 8)
        _, report = dl_solve(cosine_problem, grid, DLSettings(max_iter=5, sample_count=41))
        assert [r.k for r in report.records] == list(range(len(report.records)))
        report.validate()


class TestSettings:
    @pytest.mark.parametrize("kwargs", [{"tol": -1.0}, {"max_iter": 0}, {"sample_count": 0}])
    def test_rejects_bad_settings(self, kwargs):
        with pytest.raises(ValueError):
            DLSettings(**kwargs)
