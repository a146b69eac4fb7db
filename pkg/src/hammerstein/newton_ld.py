"""Linearize-then-discretize solver.

Newton is applied to the operator equation itself; each linear operator
equation is then discretized by the product trapezoidal rule. Every step
solves an (n+1) x (n+1) system for the nodal values and recovers the next
iterate on a frozen evaluation point set (grid nodes, operator-quadrature
nodes and output sample points), so the whole iteration works with function
values that are never re-interpolated from coarser data.

The limit of the iteration is set by the accuracy of the operator
evaluation (the quadrature config), not by the Newton grid size n.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import SingularSystemError, solve_dense
from .problem import Grid, HammersteinProblem, SampledFunction, make_grid
from .quadrature import QuadratureConfig, SubtractionPlan, weight_matrix
from .reports import IterationRecord, SolveReport


class SingularOperatorError(RuntimeError):
    """The linearized system became numerically singular during a solve."""

    def __init__(self, message: str, report: Optional[SolveReport] = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class LDSettings:
    tol: float = 1e-12
    max_iter: int = 30
    quad: QuadratureConfig = QuadratureConfig()
    sample_count: int = 201

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.sample_count < 2:
            raise ValueError(f"sample_count must be at least 2, got {self.sample_count}")


@dataclass(frozen=True)
class LDState:
    """One Newton iterate: values on the frozen point set plus nodal vector."""

    grid: Grid
    iterate: SampledFunction
    nodal: np.ndarray
    k: int
    eval_points: np.ndarray


def _evaluation_points(problem, grid, settings) -> np.ndarray:
    pieces = [grid.nodes, np.linspace(problem.a, problem.b, settings.sample_count)]
    if settings.quad.mode == "fine":
        pieces.append(np.linspace(problem.a, problem.b, settings.quad.n_fine + 1))
    return np.unique(np.concatenate(pieces))


def _sample_initial(problem, phi0, points) -> np.ndarray:
    if phi0 is None:
        phi0 = problem.y
    if isinstance(phi0, SampledFunction):
        return phi0(points)
    if callable(phi0):
        return np.broadcast_to(np.asarray(phi0(points), dtype=float), points.shape).copy()
    return np.full(points.shape, float(phi0))


class _Workspace:
    """Geometry-dependent factors shared by every step of one solve."""

    def __init__(self, problem: HammersteinProblem, grid: Grid, settings: LDSettings):
        self.problem = problem
        self.grid = grid
        self.settings = settings
        self.points = _evaluation_points(problem, grid, settings)
        self.node_idx = self._locate(grid.nodes)
        self.sample_points = np.linspace(problem.a, problem.b, settings.sample_count)
        self.sample_idx = self._locate(self.sample_points)

        kernel, L = problem.kernel, problem.L
        nodes = grid.nodes
        w_nodes = weight_matrix(grid, kernel, nodes)
        self.G = w_nodes * np.asarray(L(nodes[:, None], nodes[None, :]), dtype=float)
        # recovery weights at every evaluation point (rows at the nodes are
        # float-identical to rows of G, which keeps nodal values consistent)
        self.WL_coarse = weight_matrix(grid, kernel, self.points) * np.asarray(
            L(self.points[:, None], nodes[None, :]), dtype=float
        )

        if settings.quad.mode == "fine":
            fine = make_grid(problem.a, problem.b, settings.quad.n_fine)
            self.fine_nodes = fine.nodes
            self.fine_idx = self._locate(fine.nodes)
            wl = np.empty((self.points.size, fine.n + 1))
            chunk = max(1, int(2_000_000 // (fine.n + 1)))
            for start in range(0, self.points.size, chunk):
                sl = slice(start, min(start + chunk, self.points.size))
                wl[sl] = weight_matrix(fine, kernel, self.points[sl]) * np.asarray(
                    L(self.points[sl, None], fine.nodes[None, :]), dtype=float
                )
            self.WL_fine = wl
            self.plan = None
        else:
            self.plan = SubtractionPlan(problem, self.points, settings.quad.gl_points)

        self.y_points = np.broadcast_to(
            np.asarray(problem.y(self.points), dtype=float), self.points.shape
        ).copy()
        self.exact_samples = None
        if problem.exact is not None:
            self.exact_samples = np.asarray(problem.exact(self.sample_points), dtype=float)

    def _locate(self, targets) -> np.ndarray:
        idx = np.searchsorted(self.points, targets)
        if not np.array_equal(self.points[idx], targets):
            raise ValueError("evaluation point set does not contain the requested points")
        return idx

    def operator_values(self, values: np.ndarray) -> np.ndarray:
        """Integral-operator values at every evaluation point."""
        nl = self.problem.nonlin
        if self.plan is None:
            ft = np.asarray(nl.F(self.fine_nodes, values[self.fine_idx]), dtype=float)
            return self.WL_fine @ ft
        return self.plan.apply(lambda t: np.interp(t, self.points, values))

    def step(self, values: np.ndarray, K_points: np.ndarray):
        """One Newton step from the given iterate; K_points belongs to it."""
        nl = self.problem.nonlin
        nodes = self.grid.nodes
        nodal_old = values[self.node_idx]
        df = np.asarray(nl.dF(nodes, nodal_old), dtype=float)
        A = self.G * df[None, :]
        rhs = K_points[self.node_idx] + self.y_points[self.node_idx] - A @ nodal_old
        M = np.eye(self.grid.n + 1) - A
        nodal_new = solve_dense(M, rhs)
        correction = self.WL_coarse @ (df * (nodal_new - nodal_old))
        values_new = correction + K_points + self.y_points
        step_norm = float(np.max(np.abs(nodal_new - nodal_old)))
        return values_new, step_norm

    def residual_norm(self, values: np.ndarray, K_points: np.ndarray) -> float:
        r = values[self.node_idx] - K_points[self.node_idx] - self.y_points[self.node_idx]
        return float(np.max(np.abs(r)))

    def true_error(self, values: np.ndarray) -> Optional[float]:
        if self.exact_samples is None:
            return None
        return float(np.max(np.abs(values[self.sample_idx] - self.exact_samples)))


def ld_init(
    problem: HammersteinProblem,
    grid: Grid,
    phi0=None,
    settings: LDSettings = LDSettings(),
) -> LDState:
    """Initial state; phi0 defaults to the right-hand side y."""
    points = _evaluation_points(problem, grid, settings)
    values = _sample_initial(problem, phi0, points)
    return LDState(
        grid=grid,
        iterate=SampledFunction(points, values),
        nodal=values[np.searchsorted(points, grid.nodes)],
        k=0,
        eval_points=points,
    )


def ld_step(
    state: LDState, problem: HammersteinProblem, settings: LDSettings = LDSettings()
) -> LDState:
    """One Newton step (standalone convenience; ld_solve reuses the workspace)."""
    ws = _Workspace(problem, state.grid, settings)
    if not np.array_equal(ws.points, state.eval_points):
        raise ValueError("state evaluation points do not match the settings")
    values = state.iterate.values
    K_points = ws.operator_values(values)
    values_new, _ = ws.step(values, K_points)
    return LDState(
        grid=state.grid,
        iterate=SampledFunction(ws.points, values_new),
        nodal=values_new[ws.node_idx],
        k=state.k + 1,
        eval_points=ws.points,
    )


def ld_solve(
    problem: HammersteinProblem,
    grid: Grid,
    settings: LDSettings = LDSettings(),
    phi0=None,
) -> tuple[SampledFunction, SolveReport]:
    """Newton iteration on the operator equation, product-rule discretized.

    Stops when the nodal step norm drops to settings.tol or after max_iter
    steps (flagged in the report, not fatal). A numerically singular
    linearized system raises SingularOperatorError carrying the partial
    report.
    """
    ws = _Workspace(problem, grid, settings)
    values = _sample_initial(problem, phi0, ws.points)

    report = SolveReport(
        method="ld",
        n=grid.n,
        n_fine=settings.quad.n_fine if settings.quad.mode == "fine" else None,
        mode=settings.quad.mode,
    )
    tic = time.perf_counter()
    K_points = ws.operator_values(values)
    report.records.append(
        IterationRecord(
            k=0,
            step_norm=None,
            residual_norm=ws.residual_norm(values, K_points),
            true_error=ws.true_error(values),
            wall_ms=(time.perf_counter() - tic) * 1e3,
        )
    )
    report.status = "max_iter"
    for k in range(1, settings.max_iter + 1):
        tic = time.perf_counter()
        try:
            values_new, step_norm = ws.step(values, K_points)
        except SingularSystemError as exc:
            report.status = "singular"
            raise SingularOperatorError(
                f"linearized system singular at iteration {k}: {exc}", report
            ) from exc
        K_new = ws.operator_values(values_new)
        report.records.append(
            IterationRecord(
                k=k,
                step_norm=step_norm,
                residual_norm=ws.residual_norm(values_new, K_new),
                true_error=ws.true_error(values_new),
                wall_ms=(time.perf_counter() - tic) * 1e3,
            )
        )
        values, K_points = values_new, K_new
        if step_norm <= settings.tol:
            report.status = "converged"
            break
    return SampledFunction(ws.points, values), report
