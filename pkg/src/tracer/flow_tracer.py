"""
Numeric tracing of piecewise analytic flows with cell-switch detection.

The active cell's analytic field is integrated with an adaptive Runge-Kutta scheme.
After every accepted step the facet signed distances of the active cell are scanned
along the step's dense output. At the first crossing the time is located by
bisection, the switch is recorded and the next cell is chosen from the local Taylor
continuations of the candidate cells.

"""
import csv
import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import RK45

from ..geometry.CellCover import locate_cells
from ..geometry.Polytope import signed_distance
from ..solver.formal_solver import taylor_solution
from ..utils.errors import ChatteringGuard, DimensionMismatch, LeftCover, NoAdmissibleCell, NonConvergence

logger = logging.getLogger(__name__)


@dataclass
class TraceOptions:
    '''Step control and tolerances of trace_flow'''
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf
    boundary_tol: float = 1e-9
    event_time_tol: float = 1e-12
    capture_radius: float = 1e-3
    max_switches: int = 10_000
    k_max: int = 8
    coef_tol: float = 1e-12

    def halved(self):
        '''Same options with every tolerance halved'''
        return TraceOptions(self.rtol / 2, self.atol / 2, self.max_step, self.boundary_tol / 2,
                            self.event_time_tol / 2, self.capture_radius, self.max_switches,
                            self.k_max, self.coef_tol)


class Switch(NamedTuple):
    t: float
    from_cell: int
    to_cell: int


@dataclass
class FlowTrace:
    '''Sampled trajectory with its cell history'''
    times: List[float] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    cells: List[int] = field(default_factory=list)
    switches: List[Switch] = field(default_factory=list)
    active_cell_intervals: List[Tuple[float, float, int]] = field(default_factory=list)
    status: str = "running"

    def record(self, t, x, cell):
        self.times.append(float(t))
        self.states.append(np.array(x, dtype=float))
        self.cells.append(int(cell))

    @property
    def final_state(self):
        return self.states[-1]

    @property
    def final_cell(self):
        return self.cells[-1]


class ExitOrder(NamedTuple):
    '''The continuation leaves the cell as a t^k + o(t^k) through `facet`'''
    k: int
    a: float
    facet: int


class InsideToOrder(NamedTuple):
    '''No facet distance turns positive up to order k_max'''
    k_max: int


def local_exit_order(field, cell, x, k_max=8, coef_tol=1e-12, boundary_tol=1e-9):
    '''Order at which the in-cell analytic continuation from x leaves the cell

    Each facet signed distance along the Taylor polynomial y(t) of the cell's field is
    expanded in t; facets x lies strictly inside of are ignored. For the others the
    first coefficient above coef_tol (relative to the polynomial's scale) decides.

    Args:
        field (PiecewiseField): the field
        cell (int): candidate cell
        x (array_like): boundary point of the cell
        k_max (int): highest Taylor order examined
        coef_tol (float): relative threshold for a vanishing coefficient
        boundary_tol (float): facets with signed distance below -boundary_tol are inactive
    Returns:
        ExitOrder or InsideToOrder: the smallest exit order over the facets
    '''
    x = np.asarray(x, dtype=float)
    y = taylor_solution(field.fields[cell], x, k_max)
    motion = y.coeffs[1:]
    scale = max(1.0, float(np.max(np.abs(motion)))) if motion.size else 1.0
    best = None
    for index, H in enumerate(field.cover.cells[cell].halfspaces):
        d0 = signed_distance(x, H)
        if d0 < -boundary_tol:
            continue
        if d0 > boundary_tol:
            return ExitOrder(0, d0, index)
        for k, a in enumerate(-(motion @ H.a), start=1):
            if abs(a) > coef_tol * scale:
                if a > 0 and (best is None or k < best.k):
                    best = ExitOrder(k, float(a), index)
                break
    return best if best is not None else InsideToOrder(k_max)


def choose_next_cell(field, x, t, current=None, opts=None):
    '''Cell the trajectory continues in from the boundary point x

    Candidates are the cells containing x other than `current` (or every containing
    cell when none other exists). A candidate whose continuation stays inside to
    order k_max wins, lowest index first. Failing that, the candidate exiting at the
    highest order above 1 is used.

    Args:
        field (PiecewiseField): the field
        x (array_like): switching point
        t (float): switching time, only used for logging
        current (int): cell being left, None at the start of a trace
        opts (TraceOptions): tolerances
    Returns:
        int: the chosen cell
    '''
    opts = opts or TraceOptions()
    located = locate_cells(x, field.cover, opts.boundary_tol)
    candidates = sorted(located - {current}) or sorted(located)
    if not candidates:
        raise LeftCover(f"no cell contains {np.asarray(x).tolist()} at t={t}")
    if len(candidates) == 1 and candidates[0] != current and len(located) == 1:
        return candidates[0]
    orders = {i: local_exit_order(field, i, x, opts.k_max, opts.coef_tol, opts.boundary_tol)
              for i in candidates}
    inside = [i for i in candidates if isinstance(orders[i], InsideToOrder)]
    if inside:
        if len(inside) > 1:
            logger.warning("t=%.6g: cells %s all admissible at %s, taking %d",
                           t, inside, np.asarray(x).tolist(), inside[0])
        return inside[0]
    tangent = [(orders[i].k, i) for i in candidates if orders[i].k > 1]
    if not tangent:
        raise NoAdmissibleCell(f"every candidate {candidates} is left at first order from "
                               f"{np.asarray(x).tolist()} at t={t}")
    k, chosen = min(tangent, key=lambda ki: (-ki[0], ki[1]))
    logger.warning("t=%.6g: no candidate stays inside, continuing in cell %d (exit order %d)",
                   t, chosen, k)
    return chosen


def _exit_bracket(field, cell, dense, t0, t1, tol):
    '''Interval (lo, hi) of the step [t0, t1] holding the first exit from `cell`

    The RK45 dense output is a quartic in t, so each facet distance along the step is a
    quartic too. It is recovered exactly from five samples and its real roots split the
    step into pieces of constant sign; the first piece that ends outside brackets the exit.
    This catches excursions that leave and re-enter the cell within one step.

    Returns:
        tuple: (lo, hi) with the trajectory inside at lo and outside at hi, or None
    '''
    D = field.cover.cells[cell]
    s = np.linspace(0.0, 1.0, 5)
    X = np.array([dense(t0 + si * (t1 - t0)) for si in s])
    G = D.b[:, None] - D.A @ X.T
    breaks = {0.0, 1.0}
    for g in G:
        for root in np.roots(np.polyfit(s, g - tol, 4)):
            if abs(root.imag) <= 1e-9 and 0.0 < root.real < 1.0:
                breaks.add(float(root.real))
    breaks = sorted(breaks)
    lo = t0
    for a, b in zip(breaks, breaks[1:]):
        mid_t = t0 + 0.5 * (a + b) * (t1 - t0)
        end_t = t0 + b * (t1 - t0)
        if field.exit_measure(cell, dense(mid_t)) > tol:
            return lo, mid_t
        if field.exit_measure(cell, dense(end_t)) > tol:
            return mid_t, end_t
        lo = mid_t
    return None


def trace_flow(field, x0, t_end, opts=None):
    '''Integrate x' = V(x) across cell switches

    Args:
        field (PiecewiseField): the piecewise field
        x0 (array_like): initial state inside the cover
        t_end (float): final time
        opts (TraceOptions): step control and tolerances
    Returns:
        FlowTrace: samples, switches and active cell intervals; status is "t_end" or
            "captured" (equilibrium capture radius reached)
    '''
    opts = opts or TraceOptions()
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape[0] != field.dim:
        raise DimensionMismatch(f"initial state in R^{x.shape[0]} for a field on R^{field.dim}")
    located = locate_cells(x, field.cover, opts.boundary_tol)
    if not located:
        raise LeftCover(f"initial state {x.tolist()} lies in no cell")
    current = min(located) if len(located) == 1 else choose_next_cell(field, x, 0.0, None, opts)

    trace = FlowTrace()
    t = 0.0
    start = 0.0
    trace.record(t, x, current)
    if field.captured(x, opts.capture_radius):
        trace.active_cell_intervals.append((0.0, 0.0, current))
        trace.status = "captured"
        return trace

    while t < t_end:
        solver = RK45(field.rhs(current), t, x, t_end, rtol=opts.rtol, atol=opts.atol,
                      max_step=opts.max_step)
        switched = False
        while solver.status == "running":
            t_prev = solver.t
            threshold = max(0.0, field.exit_measure(current, solver.y))
            message = solver.step()
            if solver.status == "failed":
                raise NonConvergence(f"integrator failed at t={t_prev}: {message}")
            dense = solver.dense_output()
            bracket = _exit_bracket(field, current, dense, t_prev, solver.t, opts.boundary_tol)
            if bracket is not None:
                lo, hi = bracket
                while hi - lo > opts.event_time_tol:
                    mid = 0.5 * (lo + hi)
                    if field.exit_measure(current, dense(mid)) > threshold:
                        hi = mid
                    else:
                        lo = mid
                t, x = hi, dense(hi)
                trace.record(t, x, current)
                if not locate_cells(x, field.cover, opts.boundary_tol) - {current}:
                    trace.active_cell_intervals.append((start, t, current))
                    trace.status = "left_cover"
                    raise LeftCover(f"trajectory leaves the cover at t={t}, x={x.tolist()}")
                following = choose_next_cell(field, x, t, current, opts)
                trace.switches.append(Switch(t, current, following))
                trace.active_cell_intervals.append((start, t, current))
                logger.debug("switch at t=%.12g: cell %d -> %d", t, current, following)
                start = t
                current = following
                if len(trace.switches) > opts.max_switches:
                    trace.status = "chattering"
                    raise ChatteringGuard(f"more than {opts.max_switches} switches by t={t:.6g}", trace)
                switched = True
                break
            t, x = solver.t, solver.y.copy()
            trace.record(t, x, current)
            if field.captured(x, opts.capture_radius):
                trace.active_cell_intervals.append((start, t, current))
                trace.status = "captured"
                logger.info("captured at t=%.6g in cell %d after %d switches", t, current, len(trace.switches))
                return trace
        if not switched:
            break
    trace.active_cell_intervals.append((start, t, current))
    trace.status = "t_end"
    logger.info("traced to t=%.6g in cell %d, %d switches", t, current, len(trace.switches))
    return trace


def continuation_error_exponent(field, cell, x, order, ts=None, opts=None):
    '''Fitted exponent of |numeric trajectory - Taylor continuation of `cell`| near t = 0

    Args:
        field (PiecewiseField): the piecewise field
        cell (int): cell whose analytic continuation is compared
        x (array_like): starting point (typically a tangency point on the cell boundary)
        order (int): degree of the Taylor continuation
        ts (array_like): sample times, default 8 log-spaced points in [0.01, 0.1]
        opts (TraceOptions): tracing options, tight tolerances by default
    Returns:
        tuple: (slope of the log-log fit, list of errors)
    '''
    ts = np.geomspace(0.01, 0.1, 8) if ts is None else np.asarray(ts, dtype=float)
    opts = opts or TraceOptions(rtol=1e-12, atol=1e-15)
    y = taylor_solution(field.fields[cell], x, order)
    errors = [float(np.linalg.norm(trace_flow(field, x, t, opts).final_state - y.evaluate(t)))
              for t in ts]
    slope, _ = np.polyfit(np.log(ts), np.log(errors), 1)
    return float(slope), errors


def write_trace(trace, out_dir):
    '''Write trace.csv (t, x1..xm, cell) and switches.json into out_dir

    Returns:
        tuple: paths of the two files
    '''
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "trace.csv")
    json_path = os.path.join(out_dir, "switches.json")
    m = trace.states[0].shape[0] if trace.states else 0
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(m)] + ["cell"])
        for t, x, cell in zip(trace.times, trace.states, trace.cells):
            writer.writerow([repr(t)] + [repr(float(v)) for v in x] + [cell])
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump({"status": trace.status,
                   "switches": [{"t": s.t, "from": s.from_cell, "to": s.to_cell} for s in trace.switches],
                   "intervals": [{"start": a, "end": b, "cell": c} for a, b, c in trace.active_cell_intervals]},
                  f, indent=2)
        f.write("\n")
    return csv_path, json_path
