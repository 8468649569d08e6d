"""
Property suites behind the `verify` command.

Each property is a function of a numpy Generator and a scale factor (the share of
the full sample counts to draw) returning a PropertyResult. Properties of a suite may
be evaluated concurrently; results always come back in suite order and every property
draws from its own generator seeded with (seed, position), so the outcome does not
depend on scheduling.

"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List

import numpy as np
from shapely.geometry import Point, Polygon, box

from .oracles import (compose_oracle, euler_reference, generating_function_table,
                      lambda_compose_oracle, random_lambda_series, random_poly,
                      random_power_series, reference_solution, resolvent_defect)
from ..geometry.Polytope import (HalfSpace, Polytope, facet_distance_sandwich, max_facet_distance,
                                 project_onto_polytope, random_polytope, signed_distance)
from ..series.LambdaSeries import compose_with_analytic
from ..series.Poly import star_eval
from ..series.PowerSeries import PowerSeries, compose
from ..solver.formal_solver import (StableSpectrum, check_domination, check_formal_residual,
                                    compare_perturbed, construct_formal_solution, resolvent_poly)
from ..solver.majorant import majorant_table
from ..tracer.PiecewiseField import check_field_consistency
from ..tracer.asymptotics import EventuallyInside, capture_verdict
from ..tracer.flow_tracer import (TraceOptions, continuation_error_exponent, local_exit_order,
                                  trace_flow)
from ..tracer.systems import (bernoulli_system, decoupled_system, onedim_system, spiral_system,
                              tangency_system)
from ..utils.errors import ChatteringGuard
from ..yamabe.meshes import MESHES, doubled_rhombus, octahedron, tetrahedron
from ..yamabe.yamabe_flow import (ConformalState, curvature, flip_to_delaunay, is_delaunay,
                                  check_cell_convexity, run_flow)

logger = logging.getLogger(__name__)


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str = ""
    counterexample: Any = None

    def __str__(self):
        line = f"{'PASS' if self.passed else 'FAIL'} {self.name}"
        if self.detail:
            line += f": {self.detail}"
        if not self.passed and self.counterexample is not None:
            line += f"\n    counterexample: {self.counterexample}"
        return line


def _count(n, scale):
    return max(1, int(round(n * scale)))


def _max_gap(f, g):
    '''Largest coefficient difference of two power series relative to their size'''
    keys = set(f.coeffs) | set(g.coeffs)
    gap, size = 0.0, 1.0
    for I in keys:
        a = f.coeffs.get(I, 0.0)
        b = g.coeffs.get(I, 0.0)
        gap = max(gap, float(np.max(np.abs(np.asarray(a) - b))))
        size = max(size, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return gap / size


def _lambda_gap(x, y):
    diff = x - y
    size = max([1.0] + [P.max_abs_coeff() for P in x.terms.values()])
    return max((P.max_abs_coeff() for P in diff.terms.values()), default=0.0) / size


# geometry

def _exterior_point(rng, D, spread=6.0):
    while True:
        x = rng.uniform(-spread, spread, size=D.dim)
        if np.max(D.signed_distances(x)) > 1e-6:
            return x


def _interior_point(rng, D):
    while True:
        p = rng.uniform(-1.0, 1.0, size=D.dim) * 0.5
        if D.facet_margins(p) > 1e-3:
            return p


def sandwich_holds(rng, scale):
    '''lower <= mid <= upper on random polytopes of dimension 2..5 with 3..8 facets'''
    n = _count(1000, scale)
    for trial in range(n):
        dim = int(rng.integers(2, 6))
        D = random_polytope(rng, dim, int(rng.integers(3, 9)))
        p = _interior_point(rng, D)
        x = _exterior_point(rng, D)
        lower, mid, upper = facet_distance_sandwich(p, x, D)
        if not (lower <= mid + 1e-9 and mid <= upper + 1e-9):
            return PropertyResult("sandwich_holds", False, f"trial {trial}",
                                  {"p": p.tolist(), "x": x.tolist(), "D": D.to_dict(),
                                   "values": (lower, mid, upper)})
    return PropertyResult("sandwich_holds", True, f"{n} instances")


def projection_fixes_interior(rng, scale):
    n = _count(200, scale)
    for _ in range(n):
        D = random_polytope(rng, int(rng.integers(2, 6)), int(rng.integers(3, 9)))
        p = _interior_point(rng, D)
        distance, closest = project_onto_polytope(p, D)
        if distance != 0.0 or not np.array_equal(closest, p):
            return PropertyResult("projection_fixes_interior", False, "", p.tolist())
    return PropertyResult("projection_fixes_interior", True, f"{n} points")


def halfspace_distance_agrees(rng, scale):
    '''For one half space the projection distance equals the signed distance'''
    n = _count(200, scale)
    worst = 0.0
    for _ in range(n):
        dim = int(rng.integers(2, 6))
        H = HalfSpace(rng.normal(size=dim), rng.normal())
        D = Polytope([H], H.a * (H.b + 1.0))
        x = rng.normal(size=dim) * 3.0
        if signed_distance(x, H) <= 0.0:
            continue
        distance, _ = project_onto_polytope(x, D)
        worst = max(worst, abs(distance - signed_distance(x, H)))
    return PropertyResult("halfspace_distance_agrees", worst <= 1e-10, f"max gap {worst:.2e}")


def facet_distance_below_projection(rng, scale):
    n = _count(300, scale)
    for _ in range(n):
        D = random_polytope(rng, int(rng.integers(2, 6)), int(rng.integers(3, 9)))
        x = rng.uniform(-6.0, 6.0, size=D.dim)
        distance, _ = project_onto_polytope(x, D)
        if max_facet_distance(x, D) > distance + 1e-9:
            return PropertyResult("facet_distance_below_projection", False, "", x.tolist())
    return PropertyResult("facet_distance_below_projection", True, f"{n} points")


def halfplane_polygon(H, reach=100.0):
    '''The half plane {a·x >= b} cut down to a large square, as a shapely polygon'''
    base = H.a * H.b
    along = np.array([-H.a[1], H.a[0]])
    corners = [base - reach * along, base + reach * along,
               base + reach * along + reach * H.a, base - reach * along + reach * H.a]
    return Polygon(corners)


def polygon_of(D, reach=100.0):
    shape = box(-reach, -reach, reach, reach)
    for H in D.halfspaces:
        shape = shape.intersection(halfplane_polygon(H, reach))
    return shape


def planar_projection_matches_shapely(rng, scale):
    '''In the plane the Dykstra distance matches shapely's polygon distance'''
    n = _count(200, scale)
    worst = 0.0
    for _ in range(n):
        D = random_polytope(rng, 2, int(rng.integers(3, 9)))
        x = rng.uniform(-6.0, 6.0, size=2)
        distance, _ = project_onto_polytope(x, D)
        worst = max(worst, abs(distance - polygon_of(D).distance(Point(x))))
    return PropertyResult("planar_projection_matches_shapely", worst <= 1e-7, f"max gap {worst:.2e}")


# series

def compose_matches_oracle(rng, scale):
    n = _count(200, scale)
    worst = 0.0
    for trial in range(n):
        dim = int(rng.integers(1, 4))
        order = int(rng.integers(1, 7 if dim == 1 else 5))
        f = random_power_series(rng, dim, int(rng.integers(1, 3)), order, 0.3, centered=False)
        g = random_power_series(rng, int(rng.integers(1, 4)), dim, order, 0.3)
        gap = _max_gap(compose(f, g), compose_oracle(f, g))
        worst = max(worst, gap)
        if gap > 1e-12:
            return PropertyResult("compose_matches_oracle", False, f"trial {trial} gap {gap:.2e}",
                                  {"f": f.to_dict(), "g": g.to_dict()})
    return PropertyResult("compose_matches_oracle", True, f"{n} instances, max gap {worst:.2e}")


def lambda_compose_matches_oracle(rng, scale):
    n = _count(100, scale)
    for trial in range(n):
        m = int(rng.integers(1, 3))
        rates = -np.sort(rng.uniform(0.5, 3.0, size=m))
        dim = int(rng.integers(1, 3))
        order = int(rng.integers(1, 5))
        x = random_lambda_series(rng, rates, dim, order, density=0.4)
        f = random_power_series(rng, dim, int(rng.integers(1, 3)), order, 0.4, centered=False)
        gap = _lambda_gap(compose_with_analytic(f, x), lambda_compose_oracle(f, x))
        if gap > 1e-12:
            return PropertyResult("lambda_compose_matches_oracle", False, f"trial {trial} gap {gap:.2e}",
                                  {"f": f.to_dict(), "x": x.to_dict()})
    return PropertyResult("lambda_compose_matches_oracle", True, f"{n} instances")


def composition_associative(rng, scale):
    '''(f∘g)∘h = f∘(g∘h) coefficientwise, integer coefficients keep it exact'''
    n = _count(100, scale)
    for trial in range(n):
        order = int(rng.integers(1, 5))
        d1, d2, d3 = (int(v) for v in rng.integers(1, 3, size=3))
        f = random_power_series(rng, d1, 1, order, 0.5, centered=False, integers=True)
        g = random_power_series(rng, d2, d1, order, 0.5, integers=True)
        h = random_power_series(rng, d3, d2, order, 0.5, integers=True)
        gap = _max_gap(compose(compose(f, g), h), compose(f, compose(g, h)))
        if gap > 1e-12:
            return PropertyResult("composition_associative", False, f"trial {trial} gap {gap:.2e}",
                                  {"f": f.to_dict(), "g": g.to_dict(), "h": h.to_dict()})
    return PropertyResult("composition_associative", True, f"{n} triples")


# solver

def resolvent_identity(rng, scale):
    worst = 0.0
    for u in (-3.0, -1.0, 0.0, 0.5, 2.0, 100.0):
        for degree in range(11):
            for _ in range(_count(3, scale)):
                Q = random_poly(rng, 2, degree)
                worst = max(worst, resolvent_defect(u, Q, resolvent_poly(u, Q)))
    return PropertyResult("resolvent_identity", worst <= 1e-12, f"max relative defect {worst:.2e}")


def resolvent_domination(rng, scale):
    '''P*(t) <= Q*(t) for t >= 2 deg(Q) / u when u >= 2'''
    n = _count(200, scale)
    for trial in range(n):
        u = float(rng.uniform(2.0, 10.0))
        Q = random_poly(rng, int(rng.integers(1, 3)), int(rng.integers(0, 7)))
        P = resolvent_poly(u, Q)
        t0 = check_domination(u, Q)
        for t in t0 + np.linspace(0.0, 20.0, 41):
            if star_eval(P, t) > star_eval(Q, t) * (1.0 + 1e-12):
                return PropertyResult("resolvent_domination", False, f"trial {trial}",
                                      {"u": u, "Q": Q.to_list(), "t": float(t)})
    return PropertyResult("resolvent_domination", True, f"{n} polynomials")


def majorant_matches_generating_function(rng, scale):
    worst = 0.0
    for m in (1, 2):
        for n in (1, 2):
            M = float(rng.uniform(0.5, 2.0))
            table = majorant_table(M, n, 5, m)
            oracle = generating_function_table(M, n, 5, m)
            for J, value in oracle.items():
                worst = max(worst, abs(table[J] - value) / max(1.0, abs(value)))
    return PropertyResult("majorant_matches_generating_function", worst <= 1e-12,
                          f"max relative gap {worst:.2e}")


_RATE_CHOICES = np.array([-0.5, -1.0, -1.5, -2.0, -3.0])


def random_stable_field(rng, m, degree=3, density=0.4):
    '''Diagonal linear part plus random quadratic/cubic terms, rates on a half-integer grid'''
    rates = np.sort(rng.choice(_RATE_CHOICES, size=m))[::-1]
    coeffs = {}
    for I, b in random_power_series(rng, m, m, degree, density).coeffs.items():
        if sum(I) >= 2:
            coeffs[I] = 0.5 * b
    for i in range(m):
        I = tuple(1 if k == i else 0 for k in range(m))
        coeffs[I] = np.eye(m)[i] * rates[i]
    return PowerSeries(m, m, coeffs, order=degree), StableSpectrum(rates)


def formal_residual_small(rng, scale):
    n = _count(30, scale)
    for trial in range(n):
        m = int(rng.integers(1, 4))
        V, spectrum = random_stable_field(rng, m, int(rng.integers(2, 4)))
        order = int(rng.integers(2, 9 if m == 1 else 6))
        sol = construct_formal_solution(V, spectrum, rng.uniform(-1.0, 1.0, size=m), order)
        size = max([1.0] + [P.max_abs_coeff() for P in sol.series.terms.values()])
        residual = check_formal_residual(sol) / size
        if residual > 1e-9:
            return PropertyResult("formal_residual_small", False, f"trial {trial} residual {residual:.2e}",
                                  {"V": V.to_dict(), "order": order})
    return PropertyResult("formal_residual_small", True, f"{n} fields")


def bernoulli_closed_form(rng, scale):
    V = PowerSeries(1, 1, {(1,): [-1.0], (2,): [1.0]}, order=2)
    sol = construct_formal_solution(V, StableSpectrum([-1.0]), [1.0], 12)
    ts = np.linspace(5.0, 20.0, 31)
    worst = max(abs(sol(t)[0] - np.exp(-t) / (1.0 + np.exp(-t))) for t in ts)
    return PropertyResult("bernoulli_closed_form", worst <= 1e-8, f"max error {worst:.2e}")


def perturbation_dominant_difference(rng, scale):
    cases = [
        ("bernoulli", PowerSeries(1, 1, {(1,): [-1.0], (2,): [1.0]}, order=2),
         StableSpectrum([-1.0]), [0.5], [0.1]),
        ("decoupled", PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.0, -2.0]}, order=1),
         StableSpectrum([-1.0, -2.0]), [1.0, 2.0], [0.0, 0.3]),
        ("resonant", PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.0, -2.0], (2, 0): [0.0, 1.0]},
                                 order=2),
         StableSpectrum([-1.0, -2.0]), [1.0, 1.0], [0.1, 0.0]),
    ]
    for name, V, spectrum, c, C in cases:
        report = compare_perturbed(V, spectrum, c, C, 6)
        if not report.passed:
            return PropertyResult("perturbation_dominant_difference", False, name, report)
    return PropertyResult("perturbation_dominant_difference", True, f"{len(cases)} fields")


# tracer

def _switch_count_stable(field, x0, t_end):
    opts = TraceOptions()
    first = trace_flow(field, x0, t_end, opts)
    second = trace_flow(field, x0, t_end, opts.halved())
    return first, len(first.switches) == len(second.switches)


def onedim_single_switch(rng, scale):
    trace, stable = _switch_count_stable(onedim_system(), [1.0], 2.0)
    ok = stable and len(trace.switches) == 1 and abs(trace.switches[0].t - 1.0) <= 1e-6
    return PropertyResult("onedim_single_switch", ok, f"switches {[s.t for s in trace.switches]}")


def decoupled_single_switch(rng, scale):
    trace, stable = _switch_count_stable(decoupled_system(), [1.0, 2.0], 3.0)
    ok = stable and len(trace.switches) == 1 and abs(trace.switches[0].t - np.log(2.0)) <= 1e-6
    return PropertyResult("decoupled_single_switch", ok, f"switches {[s.t for s in trace.switches]}")


def verdict_matches_final_cell(rng, scale):
    for name, field, x0 in (("decoupled", decoupled_system(), [1.0, 2.0]),
                            ("bernoulli", bernoulli_system(), [0.5])):
        trace = trace_flow(field, x0, 50.0)
        if trace.status != "captured":
            return PropertyResult("verdict_matches_final_cell", False, f"{name} not captured", trace.status)
        verdict, _ = capture_verdict(field, trace)
        if verdict != EventuallyInside(trace.final_cell):
            return PropertyResult("verdict_matches_final_cell", False, name, str(verdict))
    return PropertyResult("verdict_matches_final_cell", True, "2 systems")


def bernoulli_trace_accurate(rng, scale):
    field = bernoulli_system()
    opts = TraceOptions(capture_radius=0.0)
    trace = trace_flow(field, [0.5], 4.0, opts)
    exact = 1.0 / (1.0 + np.exp(4.0))
    reference = reference_solution(field.fields[0], [0.5], 4.0)[0]
    gap = max(abs(trace.final_state[0] - exact), abs(reference - exact))
    return PropertyResult("bernoulli_trace_accurate", gap <= 1e-8, f"max error {gap:.2e}")


def tangency_order_two(rng, scale):
    field = tangency_system()
    order = local_exit_order(field, 0, [0.0, 0.0])
    slope, _ = continuation_error_exponent(field, 1, [0.0, 0.0], 2)
    ok = getattr(order, "k", None) == 2 and slope >= 2.9
    return PropertyResult("tangency_order_two", ok, f"exit order {order}, error exponent {slope:.3f}")


def spiral_chatters(rng, scale):
    '''Switch counts grow with the horizon and the guard fires with a small cap'''
    field = spiral_system()
    counts = [len(trace_flow(field, [1.0, 0.0], t_end).switches) for t_end in (2.0, 4.0, 8.0)]
    increasing = all(a < b for a, b in zip(counts, counts[1:]))
    try:
        trace_flow(field, [1.0, 0.0], 20.0, TraceOptions(max_switches=5))
        guarded = False
    except ChatteringGuard:
        guarded = True
    return PropertyResult("spiral_chatters", increasing and guarded, f"counts {counts}, guard {guarded}")


def fields_agree_on_shared_facets(rng, scale):
    report = check_field_consistency(decoupled_system(), samples=_count(200, scale), seed=int(rng.integers(1 << 31)))
    return PropertyResult("fields_agree_on_shared_facets", report.max_disagreement <= 1e-9,
                          f"max disagreement {report.max_disagreement:.2e}")


# yamabe

def _random_u(rng, n, spread=0.1):
    u = rng.uniform(-spread, spread, size=n)
    return u - u.mean()


def gauss_bonnet(rng, scale):
    worst = 0.0
    for name, build in MESHES.items():
        surface = build()
        total = 2.0 * np.pi * surface.euler_characteristic()
        for _ in range(_count(10, scale)):
            state = ConformalState(surface, _random_u(rng, surface.n_vertices))
            worst = max(worst, abs(curvature(state.surface, state.u).sum() - total))
            flip_to_delaunay(state)
            worst = max(worst, abs(curvature(state.surface, state.u).sum() - total))
    return PropertyResult("gauss_bonnet", worst <= 1e-9, f"max defect {worst:.2e}")


def zero_sum_conserved(rng, scale):
    state = ConformalState(tetrahedron(), _random_u(rng, 4, 0.3))
    result = run_flow(state, 5.0)
    drift = max(abs(s.u.sum() - state.u.sum()) for s in result.samples)
    return PropertyResult("zero_sum_conserved", drift <= 1e-9, f"max drift {drift:.2e}")


def fixed_point_stays(rng, scale):
    result = run_flow(ConformalState(octahedron()), 5.0)
    moved = max(float(np.max(np.abs(s.u))) for s in result.samples)
    return PropertyResult("fixed_point_stays", result.total_flips == 0 and moved <= 1e-12,
                          f"flips {result.total_flips}, max |u| {moved:.2e}")


def rhombus_single_flip(rng, scale):
    state = ConformalState(doubled_rhombus())
    before = curvature(state.surface, state.u)
    flips = flip_to_delaunay(state)
    after = curvature(state.surface, state.u)
    ok = flips == 1 and is_delaunay(state.surface, state.u) and np.allclose(before, after, atol=1e-12)
    return PropertyResult("rhombus_single_flip", ok, f"flips {flips}")


def flow_converges(rng, scale):
    '''Perturbed tetrahedron: deviation below 1e-6 by t = 50, flips independent of step size'''
    state = ConformalState(tetrahedron(), [0.3, -0.3, 0.0, 0.0])
    coarse = run_flow(state, 50.0, max_step=0.5)
    fine = run_flow(state, 50.0, max_step=0.25)
    _, euler_flips = euler_reference(state, 1.0, h=1e-3)
    early = run_flow(state, 1.0)
    ok = (coarse.final_deviation <= 1e-6 and coarse.total_flips == fine.total_flips
          and early.total_flips == euler_flips)
    return PropertyResult("flow_converges", ok,
                          f"deviation {coarse.final_deviation:.2e}, flips {coarse.total_flips}/{fine.total_flips}")


def delaunay_cells_convex(rng, scale):
    surface = octahedron()
    reference = ConformalState(surface)
    n = _count(20, scale)
    checked = 0
    while checked < n:
        u_a, u_b = _random_u(rng, 6, 0.15), _random_u(rng, 6, 0.15)
        if not (is_delaunay(surface, u_a) and is_delaunay(surface, u_b)):
            continue
        checked += 1
        report = check_cell_convexity(reference, u_a, u_b)
        if not report.passed:
            return PropertyResult("delaunay_cells_convex", False, "",
                                  {"u_a": u_a.tolist(), "u_b": u_b.tolist(), "failures": report.failures})
    return PropertyResult("delaunay_cells_convex", True, f"{n} segments")


SUITES: Dict[str, List[Callable]] = {
    "geometry": [sandwich_holds, projection_fixes_interior, halfspace_distance_agrees,
                 facet_distance_below_projection, planar_projection_matches_shapely],
    "series": [compose_matches_oracle, lambda_compose_matches_oracle, composition_associative],
    "solver": [resolvent_identity, resolvent_domination, majorant_matches_generating_function,
               formal_residual_small, bernoulli_closed_form, perturbation_dominant_difference],
    "tracer": [onedim_single_switch, decoupled_single_switch, verdict_matches_final_cell,
               bernoulli_trace_accurate, tangency_order_two, spiral_chatters,
               fields_agree_on_shared_facets],
    "yamabe": [gauss_bonnet, zero_sum_conserved, fixed_point_stays, rhombus_single_flip,
               flow_converges, delaunay_cells_convex],
}


def _evaluate(prop, seed, position, scale):
    rng = np.random.default_rng([seed, position])
    try:
        return prop(rng, scale)
    except Exception as err:  # a crashing property is reported, not propagated
        logger.exception("property %s raised", prop.__name__)
        return PropertyResult(prop.__name__, False, f"raised {type(err).__name__}", str(err))


def run_suite(name, seed=0, scale=1.0, jobs=1):
    '''Run a named suite ("all" runs every suite in order)

    Args:
        name (str): suite name
        seed (int): base seed
        scale (float): share of the full sample counts
        jobs (int): worker threads
    Returns:
        list[PropertyResult]: results in suite order
    '''
    if name == "all":
        props = [prop for suite in SUITES.values() for prop in suite]
    elif name in SUITES:
        props = SUITES[name]
    else:
        raise ValueError(f"unknown suite {name!r}, expected one of {sorted(SUITES) + ['all']}")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_evaluate, prop, seed, k, scale) for k, prop in enumerate(props)]
            results = [future.result() for future in futures]
    else:
        results = [_evaluate(prop, seed, k, scale) for k, prop in enumerate(props)]
    logger.info("suite %s: %d/%d properties passed", name, sum(r.passed for r in results), len(results))
    return results
