"""
Eventual cell membership of trajectories converging to a stable equilibrium.

Near the equilibrium a trajectory equals a formal λ-series solution y(t; c), so the
signed distance to each facet through the equilibrium is itself a scalar λ-series
whose dominant term a t^q e^{r t} decides on which side the trajectory ends up.

"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.linalg import null_space

from ..geometry.Polytope import signed_distance
from ..series.LambdaSeries import DominantTerm, apply_affine, dominant_term
from ..series.PowerSeries import PowerSeries, compose
from ..series.multiindex import unit
from ..solver.formal_solver import construct_formal_solution, fit_parameters
from .PiecewiseField import centered_field
from ..utils.errors import EquilibriumNotInCell

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EventuallyInside:
    cell: int

    def __str__(self):
        return f"EventuallyInside cell {self.cell}"


@dataclass(frozen=True)
class EventuallyOutside:
    cell: int
    facet: int
    dominant: DominantTerm

    def __str__(self):
        a, q, r = self.dominant
        return f"EventuallyOutside cell {self.cell} facet {self.facet} (a={a:.12g}, q={q}, r={r:.12g})"


@dataclass(frozen=True)
class Undecided:
    reason: str
    facets: Tuple[int, ...] = ()

    def __str__(self):
        return f"Undecided: {self.reason}"


def hyperplane_invariant(W, normal, tol=1e-12):
    '''True when the hyperplane {normal·z = 0} is invariant under z' = W(z)

    The field is restricted to the hyperplane through a linear parametrization and its
    normal component must vanish identically.
    '''
    m = W.in_dim
    if m == 1:
        return True
    basis = null_space(np.atleast_2d(normal))
    embed = PowerSeries(m - 1, m, {unit(k, m - 1): basis[:, k] for k in range(m - 1)}, order=W.order)
    restricted = compose(W, embed)
    scale = max([1.0] + [float(np.max(np.abs(b))) for b in W.coeffs.values()])
    return all(abs(float(b @ normal)) <= tol * scale for b in restricted.coeffs.values())


def asymptotic_membership(field, sol, cell, boundary_tol=1e-9, zero_tol=1e-12):
    '''Decide on which side of each facet through the equilibrium the solution ends up

    Args:
        field (PiecewiseField): field with an equilibrium
        sol (FormalSolution): formal solution of the cell's field centered at the equilibrium
        cell (int): cell containing the equilibrium
        boundary_tol (float): facets whose signed distance at the equilibrium is below
            -boundary_tol are eventually satisfied and skipped
        zero_tol (float): coefficient threshold of dominant_term
    Returns:
        EventuallyInside, EventuallyOutside or Undecided
    '''
    if field.equilibrium is None:
        raise ValueError("asymptotic_membership needs a field with an equilibrium")
    p = field.equilibrium.point
    polytope = field.cover.cells[cell]
    if not polytope.contains(p, boundary_tol):
        raise EquilibriumNotInCell(f"equilibrium {p.tolist()} is not in cell {cell}")
    undecided = []
    for index, H in enumerate(polytope.halfspaces):
        if signed_distance(p, H) < -boundary_tol:
            continue
        lead = dominant_term(apply_affine(sol.series, -H.a[None, :], [0.0]), zero_tol=zero_tol)
        if lead is None:
            if hyperplane_invariant(sol.field, H.a):
                logger.debug("cell %d facet %d: solution stays on the invariant facet", cell, index)
                continue
            undecided.append(index)
            continue
        logger.debug("cell %d facet %d: dominant term %s", cell, index, lead)
        if lead.a > 0:
            return EventuallyOutside(cell, index, lead)
    if undecided:
        return Undecided("truncation-limited", tuple(undecided))
    return EventuallyInside(cell)


def capture_verdict(field, trace, order=8, newton_steps=1):
    '''Hand a captured trace over to the series: fit c at capture time and decide

    Args:
        field (PiecewiseField): field with an equilibrium
        trace (FlowTrace): trace ending at the capture radius
        order (int): truncation order of the formal solution
        newton_steps (int): refinement steps of the parameter fit
    Returns:
        tuple: (verdict, FormalSolution)
    '''
    eq = field.equilibrium
    cell = trace.final_cell
    W = centered_field(field.fields[cell], eq.point)
    t_c = trace.times[-1]
    c = fit_parameters(W, eq.spectrum, trace.final_state - eq.point, t_c, order, newton_steps)
    sol = construct_formal_solution(W, eq.spectrum, c, order)
    verdict = asymptotic_membership(field, sol, cell)
    logger.info("capture at t=%.6g in cell %d: %s", t_c, cell, verdict)
    return verdict, sol
