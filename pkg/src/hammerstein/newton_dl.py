"""Discretize-then-linearize solver (classical baseline).

The nonlinear equation is discretized once by the product trapezoidal rule
into the finite system X - A F(X) = Y on the grid nodes, which is then
solved by finite-dimensional Newton. The iteration converges to the
solution of the *discrete* system, so its accuracy plateaus at the
discretization error of the grid no matter how many Newton steps run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import SingularSystemError, solve_dense
from .newton_ld import SingularOperatorError
from .problem import Grid, HammersteinProblem, SampledFunction
from .quadrature import weight_matrix
from .reports import IterationRecord, SolveReport


@dataclass(frozen=True)
class DLSettings:
    tol: float = 1e-12
    max_iter: int = 30
    sample_count: int = 201

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.sample_count < 2:
            raise ValueError(f"sample_count must be at least 2, got {self.sample_count}")


@dataclass(frozen=True)
class DLState:
    """Newton iterate of the discrete system; A and Y are assembled once."""

    X: np.ndarray
    k: int
    A: np.ndarray
    Y: np.ndarray


def dl_assemble(problem: HammersteinProblem, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Discrete operator matrix and right-hand side vector on the grid nodes.

    A[i, j] = w_j(t_i) * L(t_i, t_j); Y[i] = y(t_i).
    """
    nodes = grid.nodes
    W = weight_matrix(grid, problem.kernel, nodes)
    A = W * np.asarray(problem.L(nodes[:, None], nodes[None, :]), dtype=float)
    Y = np.broadcast_to(np.asarray(problem.y(nodes), dtype=float), nodes.shape).copy()
    return A, Y


def _residual(state: DLState, problem: HammersteinProblem, nodes) -> np.ndarray:
    fx = np.asarray(problem.nonlin.F(nodes, state.X), dtype=float)
    return state.X - state.A @ fx - state.Y


def dl_newton_step(state: DLState, problem: HammersteinProblem, grid: Grid) -> DLState:
    """One Newton step on X - A F(X) = Y."""
    nodes = grid.nodes
    res = _residual(state, problem, nodes)
    df = np.asarray(problem.nonlin.dF(nodes, state.X), dtype=float)
    J = np.eye(nodes.size) - state.A * df[None, :]
    delta = solve_dense(J, -res)
    return DLState(X=state.X + delta, k=state.k + 1, A=state.A, Y=state.Y)


def natural_extension(
    problem: HammersteinProblem, grid: Grid, X, points
) -> np.ndarray:
    """Off-grid values defined by the discrete equation itself.

    psi(s) = y(s) + sum_j w_j(s) L(s, t_j) F(t_j, X_j).
    """
    points = np.atleast_1d(np.asarray(points, dtype=float))
    nodes = grid.nodes
    WL = weight_matrix(grid, problem.kernel, points) * np.asarray(
        problem.L(points[:, None], nodes[None, :]), dtype=float
    )
    fx = np.asarray(problem.nonlin.F(nodes, np.asarray(X, dtype=float)), dtype=float)
    yv = np.broadcast_to(np.asarray(problem.y(points), dtype=float), points.shape)
    return yv + WL @ fx


def dl_solve(
    problem: HammersteinProblem,
    grid: Grid,
    settings: DLSettings = DLSettings(),
    x0=None,
) -> tuple[SampledFunction, SolveReport]:
    """Newton on the discretized system, reported like the LD solver.

    The true-error column measures the natural extension of the current
    nodal vector against the exact solution on the output sample grid.
    """
    nodes = grid.nodes
    A, Y = dl_assemble(problem, grid)
    if x0 is None:
        X = Y.copy()
    elif callable(x0):
        X = np.broadcast_to(np.asarray(x0(nodes), dtype=float), nodes.shape).copy()
    else:
        X = np.broadcast_to(np.asarray(x0, dtype=float), nodes.shape).astype(float)

    sample_points = np.linspace(problem.a, problem.b, settings.sample_count)
    out_points = np.unique(np.concatenate([sample_points, nodes]))
    WL_out = weight_matrix(grid, problem.kernel, out_points) * np.asarray(
        problem.L(out_points[:, None], nodes[None, :]), dtype=float
    )
    y_out = np.broadcast_to(np.asarray(problem.y(out_points), dtype=float), out_points.shape)
    sample_sel = np.searchsorted(out_points, sample_points)
    exact_samples = None
    if problem.exact is not None:
        exact_samples = np.asarray(problem.exact(sample_points), dtype=float)

    def extension(Xv) -> np.ndarray:
        fx = np.asarray(problem.nonlin.F(nodes, Xv), dtype=float)
        return y_out + WL_out @ fx

    def true_error(ext) -> Optional[float]:
        if exact_samples is None:
            return None
        return float(np.max(np.abs(ext[sample_sel] - exact_samples)))

    state = DLState(X=X, k=0, A=A, Y=Y)
    report = SolveReport(method="dl", n=grid.n, n_fine=None, mode=None)
    tic = time.perf_counter()
    ext = extension(state.X)
    report.records.append(
        IterationRecord(
            k=0,
            step_norm=None,
            residual_norm=float(np.max(np.abs(_residual(state, problem, nodes)))),
            true_error=true_error(ext),
            wall_ms=(time.perf_counter() - tic) * 1e3,
        )
    )
    report.status = "max_iter"
    for k in range(1, settings.max_iter + 1):
        tic = time.perf_counter()
        try:
            new_state = dl_newton_step(state, problem, grid)
        except SingularSystemError as exc:
            report.status = "singular"
            raise SingularOperatorError(
                f"Newton Jacobian singular at iteration {k}: {exc}", report
            ) from exc
        step_norm = float(np.max(np.abs(new_state.X - state.X)))
        state = new_state
        ext = extension(state.X)
        report.records.append(
            IterationRecord(
                k=k,
                step_norm=step_norm,
                residual_norm=float(np.max(np.abs(_residual(state, problem, nodes)))),
                true_error=true_error(ext),
                wall_ms=(time.perf_counter() - tic) * 1e3,
            )
        )
        if step_norm <= settings.tol:
            report.status = "converged"
            break
    return SampledFunction(out_points, extension(state.X)), report
