"""Recovery-driven adaptive refinement loop.

Each iteration solves the mixed system, postprocesses the velocity and
recovers the pseudostress, and measures per-element indicators

    eta_K^2 = ||sigma* - sigma_h||_K^2 + ||u* - u_h||_K^2 ,

i.e. the distance between the discrete solution and its superconvergent
improvements.  The maximum strategy marks every element whose indicator
reaches a fraction theta of the largest one; marked elements are
red-refined with red-green closure.  The loop stops after `max_iters`
refinements or once the system size reaches `max_dofs`.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .assembly import OseenSolution, solve_oseen
from .errors import l2_error
from .mesh import Mesh, refine_marked
from .postprocess import P1VelocityField, RecoveredTensorField, postprocess_velocity, recover_pseudostress
from .problems import ProblemSpec
from .quadrature import triangle_rule
from .spaces import VelocityField

__all__ = ["IndicatorSet", "AdaptiveRecord", "AdaptiveHistory", "compute_indicators", "mark_max", "adaptive_solve"]


@dataclass
class IndicatorSet:
    """Per-element refinement indicators and their l2 total."""

    mesh: Mesh
    eta: np.ndarray  # (nt,)

    @property
    def total(self) -> float:
        return float(np.sqrt(np.sum(self.eta**2)))


@dataclass
class AdaptiveRecord:
    """One adaptive iteration: sizes, estimator, errors, marking count."""

    iteration: int
    nt: int
    dofs: int
    estimator: float
    true_error: float  # nan when the problem has no closed form
    effectivity: float  # estimator / true_error, nan likewise
    marked: int


@dataclass
class AdaptiveHistory:
    """Per-iteration records plus the final discrete fields."""

    records: List[AdaptiveRecord] = field(default_factory=list)
    final_mesh: Optional[Mesh] = None
    final_solution: Optional[OseenSolution] = None
    final_ustar: Optional[P1VelocityField] = None
    final_sigmastar: Optional[RecoveredTensorField] = None

    @property
    def niter(self) -> int:
        return len(self.records)


def compute_indicators(
    sigma_h, sigma_star, u_h: VelocityField, u_star: P1VelocityField
) -> IndicatorSet:
    """Recovery-based indicators on every element.

    The integrands are products of piecewise-linear fields, so the
    degree-4 rule used here is exact.
    """
    mesh = u_h.mesh
    rule = triangle_rule(4)
    tris = np.arange(mesh.nt)
    pts = mesh.map_ref_points(rule.points, tris)
    area = mesh.tri_areas()

    ds = sigma_star.eval_cells(tris, pts) - sigma_h.eval_cells(tris, pts)
    du = u_star.eval_cells(tris, pts) - u_h.eval_cells(tris, pts)
    sq = np.sum(ds.reshape(ds.shape[:2] + (-1,)) ** 2, axis=2)
    sq += np.sum(du**2, axis=2)
    eta2 = area * (sq @ rule.weights)
    return IndicatorSet(mesh=mesh, eta=np.sqrt(eta2))


def mark_max(indicators: IndicatorSet, theta: float) -> np.ndarray:
    """Maximum marking: elements with ``eta >= theta * max(eta)``.

    Ties at the threshold are included.  For theta = 0 every element is
    marked; theta = 1 marks (at least) the largest one.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    eta_max = float(indicators.eta.max(initial=0.0))
    if eta_max == 0.0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(indicators.eta >= theta * eta_max)


def _true_error(problem: ProblemSpec, solution: OseenSolution) -> float:
    """Combined L2 error matching the indicator's content."""
    if not problem.has_exact:
        return float("nan")
    es = l2_error(
        solution.sigma,
        problem.exact_sigma,
        singular_corner=problem.singular_corner,
    )
    eu = l2_error(
        solution.u,
        problem.exact_u,
        singular_corner=problem.singular_corner,
    )
    return float(np.hypot(es, eu))


def adaptive_solve(
    problem: ProblemSpec,
    mesh: Optional[Mesh] = None,
    theta: Optional[float] = None,
    max_iters: int = 30,
    max_dofs: int = 200_000,
) -> AdaptiveHistory:
    """Run SOLVE -> ESTIMATE -> MARK -> REFINE with RT0 elements.

    Parameters
    ----------
    problem : ProblemSpec
    mesh : Mesh, optional
        Starting mesh; defaults to the problem's initial mesh.
    theta : float, optional
        Maximum-marking threshold; defaults to the problem's value.
    max_iters : int
        Number of refinement steps (the history then holds
        ``max_iters + 1`` records unless `max_dofs` stops it earlier).
    max_dofs : int
        Stop once the solved system size reaches this.
    """
    if mesh is None:
        mesh = problem.initial_mesh()
    if theta is None:
        theta = problem.default_theta
    if max_iters < 0:
        raise ValueError("max_iters must be >= 0")

    history = AdaptiveHistory()
    iteration = 0
    while True:
        solution = solve_oseen(problem, mesh, kind="rt0")
        ustar = postprocess_velocity(solution.sigma, solution.u)
        sigmastar = recover_pseudostress(solution.sigma)
        indicators = compute_indicators(solution.sigma, sigmastar, solution.u, ustar)
        estimator = indicators.total
        true_err = _true_error(problem, solution)
        effectivity = estimator / true_err if np.isfinite(true_err) and true_err > 0 else float("nan")

        stop = iteration >= max_iters or solution.ndofs >= max_dofs
        if stop:
            history.records.append(
                AdaptiveRecord(
                    iteration=iteration,
                    nt=mesh.nt,
                    dofs=solution.ndofs,
                    estimator=estimator,
                    true_error=true_err,
                    effectivity=effectivity,
                    marked=0,
                )
            )
            history.final_mesh = mesh
            history.final_solution = solution
            history.final_ustar = ustar
            history.final_sigmastar = sigmastar
            return history

        marked = mark_max(indicators, theta)
        history.records.append(
            AdaptiveRecord(
                iteration=iteration,
                nt=mesh.nt,
                dofs=solution.ndofs,
                estimator=estimator,
                true_error=true_err,
                effectivity=effectivity,
                marked=int(marked.size),
            )
        )
        mesh = refine_marked(mesh, marked)
        iteration += 1
