"""Product-trapezoidal quadrature for weakly singular kernels.

Weight vectors integrate the singular factor H exactly against the
piecewise-linear hat basis on a grid, using closed-form antiderivatives for
the built-in kernels and folded Gauss-Legendre panels for smooth ones.
Operator evaluation offers two routes: a fine product rule reusing the
weight machinery, and singularity subtraction with graded Gauss panels.

An independent adaptive engine (`adaptive_kernel_batch`) supplies reference
values for tests and manufactured right-hand sides. It never touches the
analytic antiderivatives: singular integrands are tamed by an exact change
of variable at t = s and then refined by interval halving with an embedded
Gauss pair error estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import (
    KERNEL_ALG,
    KERNEL_LOG,
    KERNEL_SMOOTH,
    Grid,
    HammersteinProblem,
    SampledFunction,
    SingularKernel,
    make_grid,
)

# Distances below this are treated as coincident with the singular point;
# the antiderivative limits there are exactly zero.
_TINY = 1e-300


class QuadratureConvergenceError(RuntimeError):
    """Adaptive refinement exhausted its budget above the requested tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    """How the integral operator is evaluated inside the solvers.

    mode "fine": product-trapezoidal rule on a uniform grid of n_fine panels.
    mode "subtract": singularity subtraction with composite Gauss-Legendre
    (gl_points per panel) on panels graded toward t = s.
    """

    n_fine: int = 4096
    mode: str = "fine"
    gl_points: int = 16

    def __post_init__(self):
        if self.n_fine < 2:
            raise ValueError(f"n_fine must be at least 2, got {self.n_fine}")
        if self.mode not in ("fine", "subtract"):
            raise ValueError(f"mode must be 'fine' or 'subtract', got {self.mode!r}")
        if self.gl_points < 2:
            raise ValueError(f"gl_points must be at least 2, got {self.gl_points}")


@dataclass(frozen=True)
class WeightVector:
    """Product-rule weights w_j(s), one per grid node, for a fixed point s."""

    s: float
    w: np.ndarray


# ---------------------------------------------------------------------------
# analytic antiderivatives and moments


def _antideriv0(kernel: SingularKernel, u: np.ndarray) -> np.ndarray:
    """Antiderivative of H at offset u = t - s, normalized to 0 at u = 0."""
    au = np.abs(u)
    if kernel.kind == KERNEL_LOG:
        out = np.zeros_like(u)
        m = au > _TINY
        out[m] = u[m] * (np.log(au[m]) - 1.0)
        return out
    beta = kernel.beta
    return np.sign(u) * au ** (1.0 - beta) / (1.0 - beta)


def _antideriv1(kernel: SingularKernel, u: np.ndarray) -> np.ndarray:
    """Antiderivative of u*H at offset u = t - s, normalized to 0 at u = 0."""
    au = np.abs(u)
    if kernel.kind == KERNEL_LOG:
        out = np.zeros_like(u)
        m = au > _TINY
        out[m] = u[m] ** 2 * (0.5 * np.log(au[m]) - 0.25)
        return out
    beta = kernel.beta
    return au ** (2.0 - beta) / (2.0 - beta)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_rule(npts: int) -> tuple[np.ndarray, np.ndarray]:
    if npts not in _GL_CACHE:
        _GL_CACHE[npts] = np.polynomial.legendre.leggauss(npts)
    return _GL_CACHE[npts]


def _smooth_panel_integrals(kernel, s, c, d, tfun, npts=16):
    """Gauss-Legendre value of int_c^d H(s,t) tfun(t) dt for a smooth H.

    Nodes are folded symmetrically about the panel midpoint so that constant
    kernels reproduce hat-function integrals to a couple of ulp.
    """
    x, w = _gl_rule(npts)
    half_n = npts // 2
    xp = x[npts - half_n :]
    wp = w[npts - half_n :]
    mid = 0.5 * (c + d)
    half = 0.5 * (d - c)
    tp = mid[..., None] + half[..., None] * xp
    tm = mid[..., None] - half[..., None] * xp
    vals = kernel.func(s[..., None], tp) * tfun(tp) + kernel.func(s[..., None], tm) * tfun(tm)
    return half * (vals @ wp)


def moment0(kernel: SingularKernel, s: float, c: float, d: float) -> float:
    """int_c^d H(s,t) dt, exact for the built-in singular kernels."""
    _check_subinterval(c, d)
    if c == d:
        return 0.0
    if kernel.kind == KERNEL_SMOOTH:
        edges = np.linspace(c, d, 9)
        lo, hi = edges[:-1], edges[1:]
        vals = _smooth_panel_integrals(kernel, np.full(8, float(s)), lo, hi, lambda t: 1.0)
        return float(np.sum(vals))
    u = np.array([c - s, d - s], dtype=float)
    f = _antideriv0(kernel, u)
    return float(f[1] - f[0])


def moment1(kernel: SingularKernel, s: float, c: float, d: float) -> float:
    """int_c^d H(s,t) * t dt, exact for the built-in singular kernels."""
    _check_subinterval(c, d)
    if c == d:
        return 0.0
    if kernel.kind == KERNEL_SMOOTH:
        edges = np.linspace(c, d, 9)
        lo, hi = edges[:-1], edges[1:]
        vals = _smooth_panel_integrals(kernel, np.full(8, float(s)), lo, hi, lambda t: t)
        return float(np.sum(vals))
    u = np.array([c - s, d - s], dtype=float)
    f1 = _antideriv1(kernel, u)
    return float(f1[1] - f1[0]) + s * moment0(kernel, s, c, d)


def _check_subinterval(c, d):
    if not (c <= d):
        raise ValueError(f"need c <= d, got c={c}, d={d}")


# ---------------------------------------------------------------------------
# product-rule weights


def weight_matrix(grid: Grid, kernel: SingularKernel, svals) -> np.ndarray:
    """Rows of product-trapezoidal weights, one row per evaluation point.

    Row i holds the n+1 weights that integrate H(svals[i], t) against the
    piecewise-linear interpolant on the grid.
    """
    svals = np.atleast_1d(np.asarray(svals, dtype=float))
    out = np.empty((svals.size, grid.n + 1))
    chunk = max(1, int(4_000_000 // (grid.n + 1)))
    for start in range(0, svals.size, chunk):
        sl = slice(start, min(start + chunk, svals.size))
        if kernel.kind == KERNEL_SMOOTH:
            out[sl] = _smooth_weight_rows(grid, kernel, svals[sl])
        else:
            out[sl] = _analytic_weight_rows(grid, kernel, svals[sl])
    return out


def _analytic_weight_rows(grid, kernel, svals):
    nodes = grid.nodes
    u = nodes[None, :] - svals[:, None]
    p0 = _antideriv0(kernel, u)
    p1 = _antideriv1(kernel, u)
    d0 = p0[:, 1:] - p0[:, :-1]
    d1 = p1[:, 1:] - p1[:, :-1]
    # per panel j (spanning [t_j, t_{j+1}]): integrals of H*(t - t_j) and H*(t_{j+1} - t)
    up = d1 - u[:, :-1] * d0
    dn = u[:, 1:] * d0 - d1
    w = np.empty((svals.size, grid.n + 1))
    w[:, 0] = dn[:, 0]
    w[:, -1] = up[:, -1]
    if grid.n > 1:
        w[:, 1:-1] = up[:, :-1] + dn[:, 1:]
    return w / grid.h


def _smooth_weight_rows(grid, kernel, svals, npts=16):
    # hat ramps are formed in panel-local coordinates half*(1 +- xi), and the
    # panel geometry comes from index arithmetic rather than node differences:
    # both t - t_j and t_{j+1} - t_j carry absolute roundoff at the node
    # magnitude, which is dozens of ulp relative to one panel width
    x, wq = _gl_rule(npts)
    half_n = npts // 2
    xp = x[npts - half_n :]
    wp = wq[npts - half_n :]
    half = grid.h / 2.0
    mid = grid.a + grid.h * (np.arange(grid.n) + 0.5)
    tp = mid[:, None] + half * xp  # (panels, fold)
    tm = mid[:, None] - half * xp
    hp = np.asarray(kernel.func(svals[:, None, None], tp[None]), dtype=float)
    hm = np.asarray(kernel.func(svals[:, None, None], tm[None]), dtype=float)
    ramp_p = 1.0 + xp
    ramp_m = 1.0 - xp
    up = (hp * ramp_p + hm * ramp_m) @ wp * half**2
    dn = (hp * ramp_m + hm * ramp_p) @ wp * half**2
    w = np.empty((svals.size, grid.n + 1))
    w[:, 0] = dn[:, 0]
    w[:, -1] = up[:, -1]
    if grid.n > 1:
        w[:, 1:-1] = up[:, :-1] + dn[:, 1:]
    return w / grid.h


def product_weights(grid: Grid, kernel: SingularKernel, s: float) -> WeightVector:
    """Weight vector at a single evaluation point s in [a, b]."""
    s = float(s)
    if not (grid.a <= s <= grid.b):
        raise ValueError(f"s={s} outside [{grid.a}, {grid.b}]")
    return WeightVector(s=s, w=weight_matrix(grid, kernel, [s])[0])


def apply_tangent_rule(
    grid: Grid,
    problem: HammersteinProblem,
    x: SampledFunction,
    h_values,
    s: float,
) -> float:
    """Product-rule value of the linearized operator applied to nodal data.

    Computes sum_j w_j(s) * L(s, t_j) * dF(t_j, x(t_j)) * h_values[j].
    The grid nodes must be contained in x.points so x(t_j) is exact.
    """
    h_values = np.asarray(h_values, dtype=float)
    if h_values.shape != (grid.n + 1,):
        raise ValueError("h_values must have one entry per grid node")
    idx = np.searchsorted(x.points, grid.nodes)
    if not (
        np.all(idx < x.points.size) and np.array_equal(x.points[idx], grid.nodes)
    ):
        raise ValueError("grid nodes must be a subset of x.points")
    w = weight_matrix(grid, problem.kernel, [s])[0]
    xt = x.values[idx]
    lv = np.asarray(problem.L(float(s), grid.nodes), dtype=float)
    fv = np.asarray(problem.nonlin.dF(grid.nodes, xt), dtype=float)
    return float(np.sum(w * lv * fv * h_values))


# ---------------------------------------------------------------------------
# operator evaluation (production paths)


def _values_on(x, pts: np.ndarray) -> np.ndarray:
    if isinstance(x, SampledFunction):
        return x(pts)
    return np.asarray(x(pts), dtype=float)


def eval_operator(
    problem: HammersteinProblem, x, s: float, cfg: QuadratureConfig = QuadratureConfig()
) -> float:
    """Value at s of the integral operator applied to x.

    x may be a SampledFunction (interpolated where needed) or a callable.
    """
    s = float(s)
    if cfg.mode == "fine":
        fine = _fine_grid(problem, cfg)
        g = _smooth_part(problem, s, fine.nodes, _values_on(x, fine.nodes))
        w = weight_matrix(fine, problem.kernel, [s])[0]
        return float(w @ g)
    plan = SubtractionPlan(problem, np.array([s]), cfg.gl_points)
    return float(plan.apply(lambda pts: _values_on(x, pts))[0])


def _fine_grid(problem, cfg) -> Grid:
    return make_grid(problem.a, problem.b, cfg.n_fine)


def _smooth_part(problem, s, t, xt):
    lv = np.asarray(problem.L(s, t), dtype=float)
    fv = np.asarray(problem.nonlin.F(t, xt), dtype=float)
    return lv * fv


_GRADE_LEVELS = 46  # dyadic panels per side; innermost width ~1e-14 of the side


class SubtractionPlan:
    """Precomputed node/weight tables for singularity-subtraction evaluation.

    For each point s the integral of H*(g - g(s)) is done by composite
    Gauss-Legendre on panels graded toward t = s, and g(s)*moment0 is added
    back. Geometry-dependent factors are computed once so the plan can be
    reapplied cheaply to successive iterates.
    """

    def __init__(self, problem: HammersteinProblem, svals, gl_points: int = 16):
        self.problem = problem
        self.svals = np.atleast_1d(np.asarray(svals, dtype=float))
        a, b = problem.a, problem.b
        x, w = _gl_rule(gl_points)
        t_rows = []
        hw_rows = []
        counts = []
        m0 = np.empty(self.svals.size)
        for i, s in enumerate(self.svals):
            edges = self._edges(a, b, s)
            mid = 0.5 * (edges[:-1] + edges[1:])
            half = 0.5 * (edges[1:] - edges[:-1])
            tn = (mid[:, None] + half[:, None] * x).ravel()
            gw = (half[:, None] * w).ravel()
            dist = np.abs(tn - s)
            hv = np.zeros_like(tn)
            pos = dist > 0.0
            hv[pos] = np.asarray(problem.kernel.evaluate(s, tn[pos]), dtype=float)
            t_rows.append(tn)
            hw_rows.append(hv * gw)
            counts.append(tn.size)
            m0[i] = moment0(problem.kernel, s, a, b)
        self.t_nodes = np.concatenate(t_rows)
        self.h_weights = np.concatenate(hw_rows)
        self.row_of_node = np.repeat(np.arange(self.svals.size), counts)
        self.m0 = m0
        self.L_nodes = np.asarray(
            problem.L(self.svals[self.row_of_node], self.t_nodes), dtype=float
        )
        self.L_diag = np.asarray(problem.L(self.svals, self.svals), dtype=float)
        # mask where the quadrature node coincides with s in floating point:
        # the subtracted integrand has limit zero there
        self.coincident = self.t_nodes == self.svals[self.row_of_node]

    @staticmethod
    def _edges(a, b, s):
        pieces = [np.array([a])]
        if a < s < b:
            off = 2.0 ** (-np.arange(_GRADE_LEVELS + 1.0))
            pieces.append(s - (s - a) * off)
            pieces.append(s + (b - s) * off[::-1])
        elif s == a:
            off = 2.0 ** (-np.arange(_GRADE_LEVELS + 1.0))
            pieces.append(a + (b - a) * off[::-1])
        elif s == b:
            off = 2.0 ** (-np.arange(_GRADE_LEVELS + 1.0))
            pieces.append(b - (b - a) * off)
        else:
            raise ValueError(f"s={s} outside [{a}, {b}]")
        pieces.append(np.array([b]))
        edges = np.unique(np.concatenate(pieces))
        return edges

    def apply(self, values_at) -> np.ndarray:
        """Operator values at every plan point; values_at(t) samples the iterate."""
        nl = self.problem.nonlin
        xt = np.asarray(values_at(self.t_nodes), dtype=float)
        g = self.L_nodes * np.asarray(nl.F(self.t_nodes, xt), dtype=float)
        xs = np.asarray(values_at(self.svals), dtype=float)
        gs = self.L_diag * np.asarray(nl.F(self.svals, xs), dtype=float)
        diff = g - gs[self.row_of_node]
        diff[self.coincident] = 0.0
        sums = np.bincount(
            self.row_of_node, weights=diff * self.h_weights, minlength=self.svals.size
        )
        return sums + gs * self.m0


# ---------------------------------------------------------------------------
# adaptive reference quadrature (independent of the analytic weight path)

_REF_LO = 10
_REF_HI = 21

_PROFILE_DIRECT = 0
_PROFILE_POWER = 1  # t = s + sgn * v**p; weight factor per kernel kind


def _rule_pair(fun, lo, hi, prof):
    """Embedded Gauss pair on a batch of intervals; returns (value, error)."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    xh, wh = _gl_rule(_REF_HI)
    xl, wl = _gl_rule(_REF_LO)
    th = mid[:, None] + half[:, None] * xh
    vh = fun(th.ravel(), np.repeat(prof, _REF_HI)).reshape(th.shape)
    ih = half * (vh @ wh)
    tl = mid[:, None] + half[:, None] * xl
    vl = fun(tl.ravel(), np.repeat(prof, _REF_LO)).reshape(tl.shape)
    il = half * (vl @ wl)
    return ih, np.abs(ih - il)


def _adaptive_batch(fun, lo, hi, prof, task_of_prof, tol, max_evals, max_rounds=600):
    """Interval-halving refinement of a batch of transformed integrals.

    fun(points, profile_ids) evaluates the integrand; profiles group
    intervals that share transform parameters, tasks group profiles whose
    values are summed into one integral. tol is absolute, per task.
    """
    n_tasks = tol.size
    keep = hi > lo
    lo, hi, prof = lo[keep], hi[keep], prof[keep]
    if lo.size == 0:
        return np.zeros(n_tasks), np.zeros(n_tasks)
    val, err = _rule_pair(fun, lo, hi, prof)
    evals = np.zeros(n_tasks)
    np.add.at(evals, task_of_prof[prof], _REF_LO + _REF_HI)
    for _ in range(max_rounds):
        tid = task_of_prof[prof]
        tot_err = np.bincount(tid, weights=err, minlength=n_tasks)
        needy = tot_err > tol
        if not needy.any():
            break
        task_max = np.zeros(n_tasks)
        np.maximum.at(task_max, tid, err)
        cand = needy[tid] & (err >= 0.25 * task_max[tid])
        mid = 0.5 * (lo + hi)
        cand &= (mid > lo) & (mid < hi)
        if not cand.any():
            raise QuadratureConvergenceError(
                "interval halving stalled above the requested tolerance"
            )
        if np.any(evals[needy] > max_evals):
            raise QuadratureConvergenceError(
                f"evaluation budget ({max_evals}) exhausted above tolerance"
            )
        c_lo = np.concatenate([lo[cand], mid[cand]])
        c_hi = np.concatenate([mid[cand], hi[cand]])
        c_prof = np.concatenate([prof[cand], prof[cand]])
        c_val, c_err = _rule_pair(fun, c_lo, c_hi, c_prof)
        np.add.at(evals, task_of_prof[c_prof], _REF_LO + _REF_HI)
        lo = np.concatenate([lo[~cand], c_lo])
        hi = np.concatenate([hi[~cand], c_hi])
        prof = np.concatenate([prof[~cand], c_prof])
        val = np.concatenate([val[~cand], c_val])
        err = np.concatenate([err[~cand], c_err])
    tid = task_of_prof[prof]
    tot_err = np.bincount(tid, weights=err, minlength=n_tasks)
    if np.any(tot_err > tol):
        raise QuadratureConvergenceError(
            "adaptive refinement did not reach the requested tolerance"
        )
    sums = np.bincount(tid, weights=val, minlength=n_tasks)
    return sums, tot_err


def adaptive_kernel_batch(
    kernel: SingularKernel,
    g,
    svals,
    c,
    d,
    tol: float = 1e-10,
    max_evals: int = 10**6,
    breaks=(),
) -> np.ndarray:
    """Reference values of int_c^d H(s,t) g(t) dt for a batch of tasks.

    Parameters
    ----------
    kernel : SingularKernel
        The singular factor H.
    g : callable
        Smooth part of the integrand, called as ``g(t, task_idx)`` with flat
        arrays; must be vectorized.
    svals, c, d : array_like
        Per-task singular point and integration bounds (scalars broadcast).
    tol : float
        Absolute tolerance per task.
    max_evals : int
        Integrand-evaluation budget per task before reporting failure.
    breaks : array_like
        Known kink locations of g (t coordinates). Intervals never straddle
        a break, which keeps the embedded error estimate trustworthy: on
        integrands with an interior kink the two Gauss rules can agree by
        accident while both are off.

    Raises
    ------
    QuadratureConvergenceError
        If the budget is exhausted before every task meets ``tol``.
    """
    svals = np.atleast_1d(np.asarray(svals, dtype=float))
    c = np.broadcast_to(np.asarray(c, dtype=float), svals.shape).astype(float)
    d = np.broadcast_to(np.asarray(d, dtype=float), svals.shape).astype(float)
    if np.any(c > d):
        raise ValueError("need c <= d for every task")
    n_tasks = svals.size
    breaks = np.unique(np.asarray(breaks, dtype=float)) if len(breaks) else np.empty(0)

    if kernel.kind == KERNEL_LOG:
        power = 2.0
    elif kernel.kind == KERNEL_ALG:
        power = 1.0 / (1.0 - kernel.beta)
    else:
        power = 1.0

    prof_kind, prof_s, prof_sgn, prof_task = [], [], [], []
    iv_lo, iv_hi, iv_prof = [], [], []

    def add_profile(kind, s, sgn, task, lo, hi, cuts=()):
        if hi <= lo:
            return
        pid = len(prof_kind)
        prof_kind.append(kind)
        prof_s.append(s)
        prof_sgn.append(sgn)
        prof_task.append(task)
        edges = np.concatenate(([lo], np.asarray(cuts, dtype=float), [hi]))
        edges = np.unique(edges[(edges >= lo) & (edges <= hi)])
        iv_lo.extend(edges[:-1])
        iv_hi.extend(edges[1:])
        iv_prof.extend([pid] * (edges.size - 1))

    for i in range(n_tasks):
        s, ci, di = svals[i], c[i], d[i]
        inner = breaks[(breaks > ci) & (breaks < di)]
        if kernel.kind == KERNEL_SMOOTH or s < ci or s > di:
            add_profile(_PROFILE_DIRECT, s, 1.0, i, ci, di, cuts=inner)
            continue
        if s > ci:  # left side, t = s - v**power
            cuts = (s - inner[inner < s]) ** (1.0 / power)
            add_profile(
                _PROFILE_POWER, s, -1.0, i, 0.0, (s - ci) ** (1.0 / power), cuts=cuts
            )
        if s < di:  # right side, t = s + v**power
            cuts = (inner[inner > s] - s) ** (1.0 / power)
            add_profile(
                _PROFILE_POWER, s, 1.0, i, 0.0, (di - s) ** (1.0 / power), cuts=cuts
            )

    prof_kind = np.array(prof_kind, dtype=np.intp)
    prof_s = np.array(prof_s, dtype=float)
    prof_sgn = np.array(prof_sgn, dtype=float)
    prof_task = np.array(prof_task, dtype=np.intp)

    if kernel.kind == KERNEL_ALG:
        beta = kernel.beta

    def fun(v, pid):
        out = np.empty_like(v)
        kinds = prof_kind[pid]
        m = kinds == _PROFILE_DIRECT
        if m.any():
            t = v[m]
            ss = prof_s[pid[m]]
            out[m] = np.asarray(kernel.evaluate(ss, t), dtype=float) * g(t, prof_task[pid[m]])
        m = ~m
        if m.any():
            vv = v[m]
            t = prof_s[pid[m]] + prof_sgn[pid[m]] * vv**power
            gv = g(t, prof_task[pid[m]])
            if kernel.kind == KERNEL_LOG:
                out[m] = 4.0 * vv * np.log(vv) * gv
            else:
                out[m] = power * gv
        return out

    tol_arr = np.full(n_tasks, float(tol))
    vals, _ = _adaptive_batch(
        fun,
        np.array(iv_lo, dtype=float),
        np.array(iv_hi, dtype=float),
        np.array(iv_prof, dtype=np.intp),
        prof_task,
        tol_arr,
        max_evals,
    )
    return vals


def eval_operator_reference_parts(
    kernel, L, nonlin, x, svals, a, b, tol=1e-10, max_evals: int = 10**6
) -> np.ndarray:
    """Reference operator values built from problem parts (see eval_operator_reference)."""
    svals = np.atleast_1d(np.asarray(svals, dtype=float))
    breaks = x.points[1:-1] if isinstance(x, SampledFunction) else ()

    def g(t, task_idx):
        ss = svals[task_idx]
        xt = _values_on(x, t)
        lv = np.asarray(L(ss, t), dtype=float)
        return lv * np.asarray(nonlin.F(t, xt), dtype=float)

    return adaptive_kernel_batch(
        kernel, g, svals, a, b, tol=tol, max_evals=max_evals, breaks=breaks
    )


def eval_operator_reference(
    problem: HammersteinProblem, x, s, tol: float = 1e-10, max_evals: int = 10**6
):
    """High-accuracy reference value of the integral operator at s.

    Adaptive quadrature split (and transformed) at t = s, refined until the
    estimated absolute error is at most tol. Raises
    QuadratureConvergenceError when the evaluation budget is exhausted.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    scalar = np.ndim(s) == 0
    vals = eval_operator_reference_parts(
        problem.kernel,
        problem.L,
        problem.nonlin,
        x,
        np.atleast_1d(np.asarray(s, dtype=float)),
        problem.a,
        problem.b,
        tol=tol,
        max_evals=max_evals,
    )
    return float(vals[0]) if scalar else vals
