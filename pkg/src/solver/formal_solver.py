"""
Formal λ-series solutions x(t; c) of x' = V(x) at a stable equilibrium with diagonal
linear part Λ = diag(λ_1, ..., λ_m).

The solution is built level by level in |J|: P_0 = 0, P_{e_i} = c_i e_i, and for
|J| >= 2 the coefficient Q_J of V(x(t)) only involves lower levels, so
P_J = (d/dt - (Λ - λ·J))^{-1} Q_J is obtained componentwise with the resolvent.
This file also holds the local Taylor solution used at cell boundaries, the
domination estimate for the resolvent, the parameter fitting used when a traced
trajectory is handed over to the series, and the comparison of perturbed solutions.

"""
import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..series import algebra
from ..series.LambdaSeries import (LambdaSeries, compose_with_analytic, dominant_term,
                                   evaluate_truncated, formal_derivative, sub,
                                   truncate_by_rate)
from ..series.Poly import Poly
from ..series.PowerSeries import evaluate_on_polys, linear_part, recenter
from ..series.multiindex import norm1, rate, unit
from ..utils.errors import (DimensionMismatch, NotCentered, NotDiagonalLinearPart,
                            PreconditionU, ZeroPerturbation)

logger = logging.getLogger(__name__)

RESONANCE_TOL = 1e-12
NEAR_RESONANCE = 1e-8


class StableSpectrum:
    '''Rates λ_1 >= ... >= λ_m < 0 of the diagonal linear part

    Args:
        rates (array_like): the eigenvalues, strictly negative and sorted descending
    Returns:
        StableSpectrum: An instance of the StableSpectrum class
    '''
    def __init__(self, rates):
        rates = np.asarray(rates, dtype=float).reshape(-1)
        if rates.size == 0 or not np.all(rates < 0.0):
            raise ValueError(f"stable spectrum needs negative rates, got {rates.tolist()}")
        if np.any(np.diff(rates) > 0.0):
            raise ValueError(f"rates must be sorted descending, got {rates.tolist()}")
        self.rates = rates
        self.rates.setflags(write=False)

    @property
    def m(self):
        return self.rates.shape[0]

    def __repr__(self):
        return f"StableSpectrum({self.rates.tolist()})"


@dataclass(frozen=True)
class FormalSolution:
    series: LambdaSeries
    params: np.ndarray
    field: object
    resonance_log: Tuple[Tuple[Tuple[int, ...], int], ...] = ()

    def __call__(self, t):
        return evaluate_truncated(self.series, t)

    def to_dict(self):
        return {"series": self.series.to_dict(), "params": np.asarray(self.params).tolist(),
                "field": self.field.to_dict(),
                "resonance_log": [{"J": list(J), "i": i} for J, i in self.resonance_log]}


def _resolvent_coeffs(u, q):
    '''Coefficients of (d/dt - u)^{-1} applied to the scalar polynomial q'''
    if u == 0.0:
        return np.concatenate([[0.0], q / np.arange(1, q.shape[0] + 1)]) if q.shape[0] else q
    # -u^{-1}(1 + u^{-1} d/dt + u^{-2} d^2/dt^2 + ...) q, evaluated from the top degree
    # down through (k + 1) p_{k+1} - u p_k = q_k
    p = np.zeros(q.shape[0])
    above = 0.0
    for k in range(q.shape[0] - 1, -1, -1):
        p[k] = ((k + 1) * above - q[k]) / u
        above = p[k]
    return p


def resolvent_poly(u, Q):
    '''Right inverse of d/dt - u on polynomials

    Args:
        u (float): shift, u = 0 selects the antiderivative vanishing at t = 0
        Q (Poly): polynomial (every component gets the same u)
    Returns:
        Poly: P with P' - u P = Q
    '''
    return Poly.from_components([_resolvent_coeffs(float(u), Q.component(i)) for i in range(Q.dim)])


def resolvent_vector(U, Q, resonance_tol=RESONANCE_TOL, near_resonance=NEAR_RESONANCE):
    '''Componentwise resolvent (d/dt - diag(U))^{-1} Q

    Args:
        U (array_like): one shift per component
        Q (Poly): polynomial with len(U) components
        resonance_tol (float): |u| at or below this takes the integration branch
        near_resonance (float): |u| below this (but above resonance_tol) is warned about
    Returns:
        tuple: (P, list of components where the integration branch was taken)
    '''
    U = np.asarray(U, dtype=float)
    if U.shape[0] != Q.dim:
        raise DimensionMismatch(f"{U.shape[0]} shifts for a {Q.dim}-dim polynomial")
    components, resonant = [], []
    for i, u in enumerate(U):
        q = Q.component(i)
        if abs(u) <= resonance_tol:
            u = 0.0
            if q.any():
                resonant.append(i)
        elif abs(u) < near_resonance:
            logger.warning("near resonance u=%.3e in component %d, resolvent amplifies by 1/u", u, i)
        components.append(_resolvent_coeffs(u, q))
    return Poly.from_components(components), resonant


def construct_formal_solution(V, spectrum, c, order, resonance_tol=RESONANCE_TOL,
                              near_resonance=NEAR_RESONANCE):
    '''Formal λ-series solution x(t; c) of x' = V(x)

    Args:
        V (PowerSeries): field with V(0) = 0 and linear part exactly diag(spectrum.rates)
        spectrum (StableSpectrum): the rates λ
        c (array_like): parameters, P_{e_i} = c_i e_i
        order (int): truncation order on |J|
        resonance_tol (float): threshold for λ_i - λ·J to count as zero
        near_resonance (float): warning threshold for small nonzero λ_i - λ·J
    Returns:
        FormalSolution: series, parameters, field and resonance log
    '''
    m = spectrum.m
    lam = spectrum.rates
    c = np.asarray(c, dtype=float).reshape(-1)
    if V.in_dim != m or V.out_dim != m or c.shape[0] != m:
        raise DimensionMismatch(f"field R^{V.in_dim} -> R^{V.out_dim}, {m} rates, {c.shape[0]} parameters")
    if not V.is_centered:
        raise NotCentered(f"V(0) = {V.constant_term.tolist()} is not zero")
    deviation = np.max(np.abs(linear_part(V) - np.diag(lam)))
    if deviation > 1e-12:
        raise NotDiagonalLinearPart(f"linear part deviates from diag(λ) by {deviation:.3e}")

    solution = [dict() for _ in range(m)]
    for i in range(m):
        if c[i] != 0.0:
            solution[i][1] = {unit(i, m): np.array([c[i]])}
    nonlinear = {I: b for I, b in V.coeffs.items() if norm1(I) >= 2}
    resonance_log = []

    def solve_level(k, q_level):
        for J in sorted(set().union(*q_level)):
            mu = rate(lam, J)
            Q = Poly.from_components([q_level[i].get(J, np.zeros(0)) for i in range(m)])
            P, resonant = resolvent_vector(lam - mu, Q, resonance_tol, near_resonance)
            for i in resonant:
                logger.info("resonance λ_%d = λ·%s, integration branch", i, J)
                resonance_log.append((J, i))
            for i in range(m):
                p = algebra.trim(P.component(i))
                if p.shape[0]:
                    solution[i].setdefault(k, {})[J] = p

    algebra.compose_graded(nonlinear, solution, order, m, fill_level=solve_level)
    series = LambdaSeries.from_components(lam, [algebra.flatten(s) for s in solution], order)
    logger.debug("formal solution to order %d: %d terms, %d resonances",
                 order, len(series.terms), len(resonance_log))
    return FormalSolution(series, c, V, tuple(resonance_log))


def check_formal_residual(sol):
    '''Largest coefficient of x' - V(x) over all |J| <= order'''
    residual = sub(formal_derivative(sol.series), compose_with_analytic(sol.field, sol.series))
    return max((P.max_abs_coeff() for P in residual.terms.values()), default=0.0)


def taylor_solution(V, x0, order):
    '''Degree-K Taylor polynomial of the solution of y' = V(y), y(0) = x0

    Coefficients are matched recursively, (k+1) y_{k+1} = [t^k] V(y(t)), with V
    re-expanded around x0 first so the substituted polynomial has no constant term.

    Args:
        V (PowerSeries): field R^m -> R^m
        x0 (array_like): initial point
        order (int): degree K
    Returns:
        Poly: m-dim polynomial in t
    '''
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    m = x0.shape[0]
    if V.in_dim != m or V.out_dim != m:
        raise DimensionMismatch(f"field R^{V.in_dim} -> R^{V.out_dim} at a point of R^{m}")
    W = recenter(V, x0)
    coeffs = np.zeros((order + 1, m))
    for k in range(order):
        image = evaluate_on_polys(W, Poly(coeffs[:k + 1], dim=m), k)
        if image.degree >= k:
            coeffs[k + 1] = image.coeffs[k] / (k + 1)
    coeffs[0] = x0
    return Poly(coeffs, dim=m)


def check_domination(u, Q):
    '''Time t_0 = 2 deg(Q) / u from which the resolvent output is dominated by Q

    Args:
        u (float): shift, at least 2
        Q (Poly): polynomial
    Returns:
        float: t_0 such that P*(t) <= Q*(t) for t >= t_0, P = (d/dt - u)^{-1} Q
    '''
    if u < 2.0:
        raise PreconditionU(f"domination needs u >= 2, got {u}")
    return 2.0 * max(Q.degree, 0) / u


@dataclass
class PerturbationReport:
    '''Comparison of x(t; c + C) against x(t; c)'''
    component: int
    lambda_C: float
    dominant: object
    expected: Tuple[float, int, float]
    checked: int = 0
    mismatches: List[Tuple[Tuple[int, ...], float]] = field(default_factory=list)
    leading_mismatches: List[Tuple[Tuple[int, ...], float]] = field(default_factory=list)

    @property
    def passed(self):
        if self.mismatches or self.leading_mismatches or self.dominant is None:
            return False
        a, q, r = self.dominant
        ea, eq, er = self.expected
        return abs(a - ea) <= 1e-12 * max(1.0, abs(ea)) and q == eq and abs(r - er) <= 1e-12


def compare_perturbed(V, spectrum, c, C, order, lambda0=None, tol=1e-12):
    '''Compare the formal solutions for parameters c and c + C

    Coefficients with J_i = 0 for every i where C_i != 0 must agree, and the difference
    must start with Σ C_i e^{λ_i t} e_i up to o(e^{(λ_C + λ_0) t}).

    Args:
        V (PowerSeries): field as for construct_formal_solution
        spectrum (StableSpectrum): the rates
        c (array_like): base parameters
        C (array_like): nonzero perturbation
        order (int): truncation order
        lambda0 (float): comparison rate in (max λ_i, 0), the midpoint when omitted
        tol (float): relative coefficient tolerance
    Returns:
        PerturbationReport: the findings
    '''
    c = np.asarray(c, dtype=float)
    C = np.asarray(C, dtype=float)
    if not np.any(C):
        raise ZeroPerturbation("perturbation C must be nonzero")
    lam = spectrum.rates
    if lambda0 is None:
        lambda0 = lam[0] / 2.0
    if not lam[0] < lambda0 < 0.0:
        raise ValueError(f"comparison rate must lie in ({lam[0]}, 0), got {lambda0}")
    base = construct_formal_solution(V, spectrum, c, order).series
    moved = construct_formal_solution(V, spectrum, c + C, order).series
    diff = sub(moved, base)

    support = np.flatnonzero(C)
    i_C = int(support[np.argmax(lam[support])])
    lambda_C = float(lam[i_C])
    report = PerturbationReport(component=i_C, lambda_C=lambda_C, dominant=None,
                                expected=(float(C[i_C]), 0, lambda_C))

    for J in set(base.terms) | set(moved.terms):
        if any(J[i] for i in support):
            continue
        report.checked += 1
        scale = max(1.0, base.terms[J].max_abs_coeff() if J in base.terms else 0.0)
        gap = diff.terms[J].max_abs_coeff() if J in diff.terms else 0.0
        if gap > tol * scale:
            report.mismatches.append((J, gap))

    expected_leading = {unit(i, spectrum.m): Poly.constant(C[i] * np.eye(spectrum.m)[i])
                        for i in support}
    leading = truncate_by_rate(diff, lambda_C + lambda0)
    for J in set(leading.terms) | set(expected_leading):
        got = leading.terms.get(J, Poly(dim=spectrum.m))
        want = expected_leading.get(J, Poly(dim=spectrum.m))
        gap = (got - want).max_abs_coeff()
        if gap > tol * max(1.0, want.max_abs_coeff()):
            report.leading_mismatches.append((J, gap))

    component = LambdaSeries(lam, {J: Poly(P.coeffs[:, [i_C]], dim=1) for J, P in diff.terms.items()},
                             order=diff.order, dim=1)
    report.dominant = dominant_term(component)
    return report


@dataclass
class DegreeReport:
    '''Empirical polynomial degree growth, deg(P_J) <= p |J|'''
    p: float
    violations: List[Tuple[Tuple[int, ...], int]] = field(default_factory=list)


def degree_report(sol):
    '''Estimate p from the levels |J| <= 2 and list the J breaking deg(P_J) <= p|J|

    Terms whose index appears in the resonance log are left out.
    '''
    resonant = {J for J, _ in sol.resonance_log}
    terms = {J: P for J, P in sol.series.terms.items() if J not in resonant and norm1(J) >= 1}
    p = max((max(P.degree, 0) / norm1(J) for J, P in terms.items() if norm1(J) <= 2), default=0.0)
    violations = [(J, P.degree) for J, P in sorted(terms.items()) if P.degree > p * norm1(J)]
    return DegreeReport(p, violations)


def leading_solution_terms(sol, a):
    '''Partial sum of the formal solution over λ·J >= a'''
    return truncate_by_rate(sol.series, a)


def fit_parameters(V, spectrum, state, t_c, order, newton_steps=1, fd_step=1e-7):
    '''Parameters c with x(t_c; c) close to a traced state

    The first guess inverts the leading terms, c_i = z_i e^{-λ_i t_c}; each Newton step
    then uses a forward difference Jacobian of the order-N series.

    Args:
        V (PowerSeries): field centered at the equilibrium
        spectrum (StableSpectrum): rates
        state (array_like): state relative to the equilibrium at time t_c
        t_c (float): capture time
        order (int): truncation order of the series
        newton_steps (int): number of refinement steps
        fd_step (float): relative finite difference step
    Returns:
        numpy array: the fitted c
    '''
    lam = spectrum.rates
    z = np.asarray(state, dtype=float).reshape(-1)
    c = z * np.exp(-lam * t_c)

    def residual(params):
        return evaluate_truncated(construct_formal_solution(V, spectrum, params, order).series, t_c) - z

    for _ in range(newton_steps):
        r0 = residual(c)
        jacobian = np.zeros((spectrum.m, spectrum.m))
        for j in range(spectrum.m):
            h = fd_step * max(1.0, abs(c[j]))
            shifted = c.copy()
            shifted[j] += h
            jacobian[:, j] = (residual(shifted) - r0) / h
        try:
            c = c - np.linalg.solve(jacobian, r0)
        except np.linalg.LinAlgError:
            logger.warning("singular Jacobian while fitting c at t=%.3f, keeping the leading-term guess", t_c)
            break
    logger.debug("fitted c=%s at t=%.3f", c.tolist(), t_c)
    return c
