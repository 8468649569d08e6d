"""
Discrete Yamabe flow on closed triangulated surfaces.

Vertex log-scale factors u rescale the reference lengths,
ℓ_ij = exp((u_i + u_j) / 2) ℓ⁰_ij, and evolve by u' = K̄ - K where K is the angle
defect at each vertex and K̄ its mean. Before each step the triangulation is made
Delaunay by edge flips. A flip keeps the metric and replaces the reference length of
the flipped edge so that it matches the new diagonal at the current u.

"""
import csv
import logging
import os
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy.integrate import RK45

from .TriangulatedSurface import check_triangles
from ..utils.errors import FlipLoop, NonConvergence

logger = logging.getLogger(__name__)


class ConformalState:
    '''A triangulated surface together with its vertex log-scale factors

    Args:
        surface (TriangulatedSurface): surface, copied so flips never touch the caller's
        u (array_like): log-scale factor per vertex, zeros by default
    Returns:
        ConformalState: An instance of the ConformalState class
    '''
    def __init__(self, surface, u=None):
        self.surface = surface.copy()
        self.u = np.zeros(surface.n_vertices) if u is None else np.array(u, dtype=float).reshape(-1)
        if self.u.shape[0] != surface.n_vertices:
            raise ValueError(f"{self.u.shape[0]} scale factors for {surface.n_vertices} vertices")
        self.flip_log: List[Tuple[float, int]] = []

    def lengths(self, u=None):
        return edge_lengths(self.surface, self.u if u is None else u)


def edge_lengths(surface, u):
    '''Current length of every edge id'''
    u = np.asarray(u, dtype=float)
    ends = surface.edge_vertices
    return surface.ref_lengths * np.exp(0.5 * (u[ends[:, 0]] + u[ends[:, 1]]))


def corner_angles(surface, lengths):
    '''(F, 3) interior angles, entry k at corner k of each face'''
    L = lengths[surface.face_edges]
    check_triangles(L)
    left = np.roll(L, -1, axis=1)
    right = np.roll(L, -2, axis=1)
    cos = (left ** 2 + right ** 2 - L ** 2) / (2.0 * left * right)
    return np.arccos(np.clip(cos, -1.0, 1.0))


def curvature(surface, u):
    '''Angle defect 2π - Σ angles at every vertex'''
    angles = corner_angles(surface, edge_lengths(surface, u))
    return 2.0 * np.pi - np.bincount(surface.faces.ravel(), weights=angles.ravel(),
                                     minlength=surface.n_vertices)


def flow_field_at(surface, u):
    '''u' = K̄ - K on a fixed triangulation'''
    K = curvature(surface, u)
    return K.mean() - K


def flow_field(state):
    return flow_field_at(state.surface, state.u)


def curvature_deviation(surface, u):
    K = curvature(surface, u)
    return float(np.max(np.abs(K - K.mean())))


def opposite_angle_sums(surface, lengths):
    '''Sum of the two angles facing each edge'''
    angles = corner_angles(surface, lengths)
    return angles[surface.side_faces, surface.side_corners].sum(axis=1), angles


def delaunay_margin(surface, u):
    '''min over edges of π - (α + β); nonnegative exactly on Delaunay triangulations'''
    sums, _ = opposite_angle_sums(surface, edge_lengths(surface, u))
    return float(np.min(np.pi - sums))


def is_delaunay(surface, u, tol=1e-12):
    return delaunay_margin(surface, u) >= -tol


def flip_edge(state, edge, angles, lengths):
    '''Replace `edge` by the other diagonal of the quadrilateral formed by its two faces

    The new diagonal length follows from the law of cosines at one of the shared
    vertices, so the metric is unchanged.
    '''
    S = state.surface
    (f, k), (g, l) = S.edge_sides[edge]
    a, b, c = S.faces[f, k], S.faces[f, (k + 1) % 3], S.faces[f, (k + 2) % 3]
    d = S.faces[g, l]
    e_ab, e_ca = S.face_edges[f, (k + 2) % 3], S.face_edges[f, (k + 1) % 3]
    e_bd, e_dc = S.face_edges[g, (l + 1) % 3], S.face_edges[g, (l + 2) % 3]
    beta = angles[f, (k + 1) % 3] + angles[g, (l + 2) % 3]
    l_ab, l_bd = lengths[e_ab], lengths[e_bd]
    l_ad = np.sqrt(max(l_ab ** 2 + l_bd ** 2 - 2.0 * l_ab * l_bd * np.cos(beta), 0.0))
    S.faces[f] = (a, b, d)
    S.face_edges[f] = (e_bd, edge, e_ab)
    S.faces[g] = (a, d, c)
    S.face_edges[g] = (e_dc, e_ca, edge)
    S.ref_lengths[edge] = l_ad * np.exp(-0.5 * (state.u[a] + state.u[d]))
    S.rebuild_sides()


def flip_to_delaunay(state, t=0.0, tol=1e-12, max_flips=None):
    '''Flip the worst non-Delaunay edge until none is left

    Args:
        state (ConformalState): mutated in place, flips appended to state.flip_log
        t (float): time stamped on the logged flips
        tol (float): an edge is flipped when its opposite angles exceed π + tol
        max_flips (int): cap, default n (n + 10)^2 for n vertices
    Returns:
        int: number of flips performed
    '''
    S = state.surface
    n = S.n_vertices
    cap = n * (n + 10) ** 2 if max_flips is None else int(max_flips)
    count = 0
    while True:
        lengths = state.lengths()
        sums, angles = opposite_angle_sums(S, lengths)
        excess = sums - np.pi
        excess[S.side_faces[:, 0] == S.side_faces[:, 1]] = -np.inf
        edge = int(np.argmax(excess))
        if excess[edge] <= tol:
            return count
        if count >= cap:
            raise FlipLoop(f"more than {cap} flips at t={t:.6g}", list(state.flip_log))
        flip_edge(state, edge, angles, lengths)
        state.flip_log.append((float(t), edge))
        count += 1
        logger.debug("t=%.6g: flipped edge %d (excess %.3g)", t, edge, excess[edge])


class FlowSample(NamedTuple):
    t: float
    u: np.ndarray
    deviation: float
    flips: int


@dataclass
class RunResult:
    state: ConformalState
    total_flips: int = 0
    samples: List[FlowSample] = field(default_factory=list)

    @property
    def final_deviation(self):
        return self.samples[-1].deviation


def run_flow(state0, t_end, max_step=np.inf, rtol=1e-10, atol=1e-12, flip_tol=1e-12):
    '''Integrate the flow to t_end, restoring the Delaunay property after every step

    Args:
        state0 (ConformalState): initial state, left untouched
        t_end (float): final time
        max_step (float): largest integrator step
        rtol (float): relative tolerance of the integrator
        atol (float): absolute tolerance of the integrator
        flip_tol (float): angle-sum tolerance of flip_to_delaunay
    Returns:
        RunResult: final state, flip count and one sample per accepted step
    '''
    state = ConformalState(state0.surface, state0.u)
    total = flip_to_delaunay(state, 0.0, flip_tol)
    result = RunResult(state, total)
    result.samples.append(FlowSample(0.0, state.u.copy(), curvature_deviation(state.surface, state.u), total))
    t = 0.0
    while t < t_end:
        solver = RK45(lambda _, u: flow_field_at(state.surface, u), t, state.u, t_end,
                      rtol=rtol, atol=atol, max_step=max_step)
        flipped = False
        while solver.status == "running":
            message = solver.step()
            if solver.status == "failed":
                raise NonConvergence(f"integrator failed at t={solver.t}: {message}")
            t, state.u = solver.t, solver.y.copy()
            flips = flip_to_delaunay(state, t, flip_tol)
            total += flips
            result.samples.append(FlowSample(t, state.u.copy(),
                                             curvature_deviation(state.surface, state.u), total))
            if flips:
                flipped = True
                break
        if not flipped:
            break
    result.total_flips = total
    logger.info("yamabe flow to t=%.6g: %d flips, curvature deviation %.3g",
                t, total, result.final_deviation)
    return result


def exp_coordinates(u, exponent=2.0):
    '''Componentwise exp(-exponent u), strictly positive'''
    return np.exp(-exponent * np.asarray(u, dtype=float))


def _from_exp_coordinates(z, exponent):
    return -np.log(z) / exponent


@dataclass
class ConvexityReport:
    samples: int
    failures: List[float] = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


def check_cell_convexity(state, u_a, u_b, samples=20, exponent=1.0, tol=1e-12):
    '''Check that the segment between two points of one Delaunay cell stays in the cell

    The segment is taken in exp-coordinates and the Delaunay property is tested at
    evenly spaced interior points with the triangulation of `state`.

    Args:
        state (ConformalState): fixes the triangulation
        u_a (array_like): first endpoint, Delaunay for the triangulation
        u_b (array_like): second endpoint, Delaunay for the triangulation
        samples (int): number of interior points
        exponent (float): exponent of exp_coordinates
        tol (float): angle-sum tolerance
    Returns:
        ConvexityReport: parameters s in (0, 1) where the property fails
    '''
    S = state.surface
    for u in (u_a, u_b):
        if not is_delaunay(S, u, tol):
            raise ValueError("segment endpoints must be Delaunay for the given triangulation")
    z_a, z_b = exp_coordinates(u_a, exponent), exp_coordinates(u_b, exponent)
    report = ConvexityReport(samples)
    for s in np.linspace(0.0, 1.0, samples + 2)[1:-1]:
        u = _from_exp_coordinates((1.0 - s) * z_a + s * z_b, exponent)
        if not is_delaunay(S, u, tol):
            report.failures.append(float(s))
    return report


def write_run(result, path):
    '''Write one CSV row per sample: t, u1..un, deviation, flips'''
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    n = result.state.surface.n_vertices
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t"] + [f"u{i + 1}" for i in range(n)] + ["deviation", "flips"])
        for sample in result.samples:
            writer.writerow([repr(sample.t)] + [repr(float(v)) for v in sample.u]
                            + [repr(sample.deviation), sample.flips])
    return path
