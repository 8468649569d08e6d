"""
Independent reference computations the property suites compare against.

Composition is checked against the literal expansion: the coefficient of x^J in
f∘g is the sum over I of b_I times every way of distributing J over the |I| factor
slots of g^I, one nonzero part per slot. The majorant recursion is checked against
the power series solution of its implicit equation
1 - Σx + (Mn + 1) f = (1 - M f)^{-n}.

"""
import logging

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import comb

from ..series import algebra
from ..series.LambdaSeries import LambdaSeries
from ..series.Poly import Poly
from ..series.PowerSeries import PowerSeries, evaluate_truncated
from ..series.multiindex import indices_up_to, ordered_compositions, unit, zero
from ..utils.errors import NonConvergence
from ..yamabe.yamabe_flow import ConformalState, flip_to_delaunay, flow_field_at

logger = logging.getLogger(__name__)


def _slots(I):
    '''Factor slots of x^I: component i repeated I_i times'''
    return [i for i, e in enumerate(I) for _ in range(e)]


def compose_oracle(f, g):
    '''f∘g for power series by enumerating ordered compositions of every J'''
    order = min(f.order, g.order)
    coeffs = {}
    for J in indices_up_to(g.in_dim, order):
        total = np.zeros(f.out_dim)
        for I, b in f.coeffs.items():
            slots = _slots(I)
            weight = 0.0
            for parts in ordered_compositions(J, len(slots)):
                term = 1.0
                for slot, part in zip(slots, parts):
                    term *= g.coeffs[part][slot] if part in g.coeffs else 0.0
                weight += term
            total += weight * b
        if np.any(total):
            coeffs[J] = total
    return PowerSeries(g.in_dim, f.out_dim, coeffs, order=order)


def lambda_compose_oracle(f, x):
    '''f∘x for a centered λ-series, same enumeration with polynomial products'''
    components = [x.component(i) for i in range(x.dim)]
    out = [dict() for _ in range(f.out_dim)]
    for J in indices_up_to(x.m, x.order):
        total = [np.zeros(0) for _ in range(f.out_dim)]
        for I, b in f.coeffs.items():
            slots = _slots(I)
            weight = np.zeros(0)
            for parts in ordered_compositions(J, len(slots)):
                term = np.array([1.0])
                for slot, part in zip(slots, parts):
                    term = np.convolve(term, components[slot].get(part, np.zeros(1)))
                weight = algebra.poly_add(weight, term)
            for k in range(f.out_dim):
                total[k] = algebra.poly_add(total[k], b[k] * weight)
        for k in range(f.out_dim):
            p = algebra.trim(total[k])
            if p.shape[0]:
                out[k][J] = p
    return LambdaSeries.from_components(x.rates, out, x.order)


def generating_function_table(M, n, up_to, m):
    '''Coefficients of the series f solving 1 - Σx + (Mn + 1) f = (1 - M f)^{-n}

    Rewritten as f = Σx + Σ_{k >= 2} C(n + k - 1, k) M^k f^k and iterated from f = Σx;
    since f has no constant term each sweep fixes one more degree.

    Args:
        M (float): growth constant
        n (int): exponent n
        up_to (int): largest |J|
        m (int): number of variables
    Returns:
        dict: J -> a_J for every |J| <= up_to
    '''
    linear = {unit(i, m): np.array([1.0]) for i in range(m)}
    f = dict(linear)
    for _ in range(up_to):
        update = dict(linear)
        power = f
        for k in range(2, up_to + 1):
            power = algebra.multiply(power, f, up_to)
            weight = comb(n + k - 1, k, exact=True) * M ** k
            for J, p in power.items():
                algebra.accumulate(update, J, weight * p)
        f = update
    table = {J: 0.0 for J in indices_up_to(m, up_to)}
    for J, p in f.items():
        table[J] = float(p[0])
    table[zero(m)] = 0.0
    return table


def resolvent_defect(u, Q, P):
    '''Largest relative coefficient defect of P' - u P = Q'''
    worst = 0.0
    for i in range(Q.dim):
        q = Q.component(i)
        p = P.component(i)
        size = max(q.shape[0], p.shape[0])
        q = np.pad(q, (0, size - q.shape[0]))
        p = np.pad(p, (0, size + 1 - p.shape[0]))
        for k in range(size):
            lhs = (k + 1) * p[k + 1] - u * p[k]
            scale = max(1.0, abs((k + 1) * p[k + 1]), abs(u * p[k]), abs(q[k]))
            worst = max(worst, abs(lhs - q[k]) / scale)
    return worst


def random_poly(rng, dim, degree):
    return Poly(rng.normal(size=(degree + 1, dim)))


def reference_solution(V, x0, t_end):
    '''High accuracy reference for a single analytic field, DOP853'''
    solution = solve_ivp(lambda _, x: evaluate_truncated(V, x), (0.0, t_end), np.asarray(x0, dtype=float),
                         method="DOP853", rtol=1e-12, atol=1e-14)
    if not solution.success:
        raise NonConvergence(f"reference integration failed: {solution.message}")
    return solution.y[:, -1]


def euler_reference(state0, t_end, h=1e-4, flip_tol=1e-12):
    '''Explicit Euler run of the Yamabe flow with a flip pass after every step

    Returns:
        tuple: (final u, number of flips)
    '''
    state = ConformalState(state0.surface, state0.u)
    flips = flip_to_delaunay(state, 0.0, flip_tol)
    steps = int(round(t_end / h))
    for step in range(steps):
        state.u = state.u + h * flow_field_at(state.surface, state.u)
        flips += flip_to_delaunay(state, (step + 1) * h, flip_tol)
    logger.debug("euler reference: %d steps, %d flips", steps, flips)
    return state.u, flips


def random_power_series(rng, in_dim, out_dim, order, density=0.5, centered=True, integers=False):
    '''Sparse random series, integer coefficients in [-3, 3] when `integers`'''
    coeffs = {}
    for I in indices_up_to(in_dim, order, start=1 if centered else 0):
        if rng.random() < density:
            b = rng.integers(-3, 4, size=out_dim).astype(float) if integers else rng.normal(size=out_dim)
            coeffs[I] = b
    return PowerSeries(in_dim, out_dim, coeffs, order=order)


def random_lambda_series(rng, rates, dim, order, max_degree=2, density=0.5):
    '''Sparse centered random λ-series with polynomial coefficients'''
    m = len(rates)
    terms = {}
    for J in indices_up_to(m, order, start=1):
        if rng.random() < density:
            terms[J] = Poly(rng.normal(size=(rng.integers(1, max_degree + 2), dim)))
    return LambdaSeries(rates, terms, order=order, dim=dim)
