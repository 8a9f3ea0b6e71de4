"""Constrained minimization of discrete p-Dirichlet energies.

Solves  min_v  (1/p) sum_e w_e |v(x) - v(y)|^p  -  <source, v>
subject to v held at prescribed values outside a free vertex set.  The
Euler-Lagrange equations are the p-Laplace equations driven by `source`,
so the gradient of the objective at a free vertex x is exactly the local
equation defect  mu(x) * (-lap_p v)(x) - source(x).

Strategy: the |t|^p term is smoothed to (t^2 + eps^2)^(p/2), which keeps
the Hessian bounded (p < 2) and nondegenerate (p > 2).  A damped Newton
iteration runs through a decreasing eps schedule, warm started from the
p = 2 solution (one exact Newton step of the quadratic problem), and a
final unsmoothed stage with a floored Hessian coefficient polishes the
iterate so the reported defect refers to the exact phi_p operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graphs import WeightedGraph

ARMIJO_SLOPE = 1e-4
MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class SolveOptions:
    """Knobs for the Newton continuation.

    eps_schedule: smoothing levels, run in order, before the exact stage.
    grad_tol: per-stage gradient sup-norm target (scaled by the caller).
    max_iterations: Newton iteration cap per stage.
    polish: run the final unsmoothed stage.
    residual_target: callers raise SolverError above this defect.
    initial: optional start values for the free vertices (full-length array).
    """

    eps_schedule: tuple = (1e-2, 1e-6, 1e-10)
    grad_tol: float = 1e-12
    max_iterations: int = 100
    polish: bool = True
    residual_target: float = 1e-9
    initial: np.ndarray | None = None


@dataclass
class StageReport:
    eps: float          # 0.0 marks the exact stage
    iterations: int
    grad_inf: float


@dataclass
class MinimizeReport:
    p: float
    stages: list = field(default_factory=list)
    grad_inf: float = np.inf
    energy: float = np.nan

    @property
    def total_iterations(self) -> int:
        return sum(s.iterations for s in self.stages)


class _Smoothing:
    """Edge energy density, its derivative phi, and second derivative."""

    def __init__(self, p: float, eps: float):
        self.p = p
        self.eps = eps

    def density(self, t):
        if self.eps == 0.0:
            return np.abs(t) ** self.p
        return (t * t + self.eps * self.eps) ** (self.p / 2.0)

    def phi(self, t):
        if self.eps == 0.0:
            return np.sign(t) * np.abs(t) ** (self.p - 1.0)
        return t * (t * t + self.eps * self.eps) ** ((self.p - 2.0) / 2.0)

    def second(self, t):
        p, eps = self.p, self.eps
        if eps == 0.0:
            # floor |t| so the coefficient stays positive and finite
            mags = np.abs(t)
            floor = 1e-12 + 1e-9 * (mags.max() if mags.size else 0.0)
            return (p - 1.0) * np.maximum(mags, floor) ** (p - 2.0)
        s = t * t + eps * eps
        return s ** ((p - 4.0) / 2.0) * ((p - 1.0) * t * t + eps * eps)


class _Problem:
    def __init__(self, graph: WeightedGraph, free_mask: np.ndarray,
                 source: np.ndarray):
        self.graph = graph
        self.free_mask = free_mask
        self.free_ids = np.flatnonzero(free_mask)
        self.n_free = self.free_ids.size
        position = np.full(graph.vertex_count, -1, dtype=np.int64)
        position[self.free_ids] = np.arange(self.n_free)

        relevant = free_mask[graph.edge_tails] | free_mask[graph.edge_heads]
        self.eu = graph.edge_tails[relevant]
        self.ev = graph.edge_heads[relevant]
        self.ew = graph.edge_weights[relevant]
        self.pu = position[self.eu]
        self.pv = position[self.ev]
        self.u_free = self.pu >= 0
        self.v_free = self.pv >= 0
        self.source_free = source[self.free_ids]

    def objective(self, values: np.ndarray, sm: _Smoothing) -> float:
        drops = values[self.eu] - values[self.ev]
        return (float(np.dot(self.ew, sm.density(drops))) / sm.p
                - float(np.dot(self.source_free, values[self.free_ids])))

    def gradient(self, values: np.ndarray, sm: _Smoothing) -> np.ndarray:
        drops = values[self.eu] - values[self.ev]
        flux = self.ew * sm.phi(drops)
        grad = np.zeros(self.n_free)
        np.add.at(grad, self.pu[self.u_free], flux[self.u_free])
        np.subtract.at(grad, self.pv[self.v_free], flux[self.v_free])
        return grad - self.source_free

    def hessian(self, values: np.ndarray, sm: _Smoothing) -> sp.csc_matrix:
        drops = values[self.eu] - values[self.ev]
        coeff = self.ew * sm.second(drops)
        rows, cols, vals = [], [], []
        uf, vf = self.u_free, self.v_free
        both = uf & vf
        rows.append(self.pu[uf]); cols.append(self.pu[uf]); vals.append(coeff[uf])
        rows.append(self.pv[vf]); cols.append(self.pv[vf]); vals.append(coeff[vf])
        rows.append(self.pu[both]); cols.append(self.pv[both]); vals.append(-coeff[both])
        rows.append(self.pv[both]); cols.append(self.pu[both]); vals.append(-coeff[both])
        return sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_free, self.n_free)).tocsc()


def _newton_stage(problem: _Problem, values: np.ndarray, sm: _Smoothing,
                  grad_tol: float, max_iterations: int) -> StageReport:
    """Damped Newton on one smoothing level; mutates `values` in place."""
    iterations = 0
    grad = problem.gradient(values, sm)
    grad_inf = float(np.abs(grad).max()) if grad.size else 0.0
    fp_slack = 4.0 * np.finfo(np.float64).eps

    while grad_inf > grad_tol and iterations < max_iterations:
        hess = problem.hessian(values, sm)
        try:
            step = spla.splu(hess).solve(-grad)
        except RuntimeError:
            shift = 1e-12 * float(hess.diagonal().max()) + 1e-300
            step = spla.splu(hess + shift * sp.identity(problem.n_free,
                                                        format="csc")).solve(-grad)
        slope = float(np.dot(grad, step))
        if not np.all(np.isfinite(step)) or slope >= 0.0:
            step = -grad
            slope = -float(np.dot(grad, grad))

        j0 = problem.objective(values, sm)
        budget = fp_slack * max(1.0, abs(j0))
        t = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            trial = values.copy()
            trial[problem.free_ids] += t * step
            if problem.objective(trial, sm) <= j0 + ARMIJO_SLOPE * t * slope + budget:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break  # below floating-point resolution; stop the stage
        values[:] = trial
        iterations += 1
        grad = problem.gradient(values, sm)
        grad_inf = float(np.abs(grad).max()) if grad.size else 0.0

    return StageReport(eps=sm.eps, iterations=iterations, grad_inf=grad_inf)


def minimize_p_dirichlet(graph: WeightedGraph, free_mask, fixed_values,
                         source, p: float,
                         options: SolveOptions | None = None):
    """Minimize the constrained p-Dirichlet objective.

    Parameters
    ----------
    free_mask : boolean array; True where v may move.
    fixed_values : full-length array; used (exactly) outside the free set.
    source : full-length array; the linear term, read on the free set only.
    p : exponent, > 1.
    options : SolveOptions.

    Returns (values, MinimizeReport); `values` is a full-length array whose
    fixed entries equal fixed_values bit-for-bit.  The report's grad_inf is
    measured with the exact (unsmoothed) phi_p, so it equals the maximum
    Euler-Lagrange defect over the free set.
    """
    if options is None:
        options = SolveOptions()
    p = float(p)
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"p must be finite and > 1, got {p!r}")
    free_mask = np.asarray(free_mask, dtype=bool)
    if free_mask.shape != (graph.vertex_count,):
        raise ValueError("free_mask has wrong length")
    fixed_values = np.asarray(fixed_values, dtype=np.float64)
    source = np.asarray(source, dtype=np.float64)
    if fixed_values.shape != (graph.vertex_count,) or source.shape != (graph.vertex_count,):
        raise ValueError("fixed_values and source must be full-length arrays")

    values = fixed_values.copy()
    values[free_mask] = 0.0
    report = MinimizeReport(p=p)
    problem = _Problem(graph, free_mask, source)
    exact = _Smoothing(p, 0.0)

    if problem.n_free == 0:
        report.stages.append(StageReport(eps=0.0, iterations=0, grad_inf=0.0))
        report.grad_inf = 0.0
        report.energy = problem.objective(values, exact)
        return values, report

    scale = max(1.0, float(np.abs(problem.source_free).max()))
    grad_tol = options.grad_tol * scale

    # warm start: one exact Newton step on the p = 2 quadratic
    if options.initial is not None:
        initial = np.asarray(options.initial, dtype=np.float64)
        if initial.shape != (graph.vertex_count,):
            raise ValueError("initial has wrong length")
        values[free_mask] = initial[free_mask]
    else:
        warm = _Smoothing(2.0, 0.0)
        grad2 = problem.gradient(values, warm)
        hess2 = problem.hessian(values, warm)
        try:
            values[problem.free_ids] += spla.splu(hess2).solve(-grad2)
        except RuntimeError:
            pass  # fall through; the damped stages still converge

    if p != 2.0:
        for eps in options.eps_schedule:
            report.stages.append(_newton_stage(problem, values, _Smoothing(p, eps),
                                               grad_tol, options.max_iterations))
    if options.polish or p == 2.0:
        report.stages.append(_newton_stage(problem, values, exact,
                                           grad_tol, options.max_iterations))

    final_grad = problem.gradient(values, exact)
    report.grad_inf = float(np.abs(final_grad).max())
    report.energy = problem.objective(values, exact)
    return values, report
