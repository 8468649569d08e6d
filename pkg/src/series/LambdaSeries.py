"""
λ-series: formal sums x(t) = Σ_J P_J(t) e^{λ·J t} over multi-indices J with
polynomial coefficients P_J and strictly negative rates λ. They are the formal
solutions of x' = V(x) near a stable equilibrium.

A λ-series is a power series in the m symbols e^{λ_i t} whose coefficients are
polynomials in t, so composition with an analytic map runs through the same
truncated algebra as PowerSeries.

JSON form: {"rates": [...], "order": N, "terms": [{"J": [...], "poly": [[...], ...]}]}

"""
import logging
from typing import NamedTuple

import numpy as np

from . import algebra
from .Poly import Poly
from .multiindex import indices_up_to, norm1, rate, zero
from ..utils.errors import ConfigError, DimensionMismatch, NotCentered, NotInRegime

logger = logging.getLogger(__name__)


class DominantTerm(NamedTuple):
    '''Leading behaviour a t^q e^{r t} of a scalar λ-series'''
    a: float
    q: int
    r: float


class LambdaSeries:
    '''Truncated λ-series Σ_{|J| <= order} P_J(t) e^{λ·J t}

    Args:
        rates (array_like): λ, every entry strictly negative
        terms (dict): multi-index J -> Poly (or a coefficient list accepted by Poly)
        order (int): truncation bound on |J|
        dim (int): output dimension, taken from the terms when omitted
    Returns:
        LambdaSeries: An instance of the LambdaSeries class
    '''
    def __init__(self, rates, terms=None, order=1, dim=None):
        self.rates = np.asarray(rates, dtype=float).reshape(-1)
        if not np.all(self.rates < 0.0):
            raise ValueError(f"λ-series rates must be negative, got {self.rates.tolist()}")
        self.rates.setflags(write=False)
        self.order = int(order)
        stored = {}
        for J, poly in (terms or {}).items():
            J = tuple(int(e) for e in J)
            if len(J) != self.m or min(J, default=0) < 0:
                raise DimensionMismatch(f"multi-index {J} does not have {self.m} nonnegative entries")
            if norm1(J) > self.order:
                raise ValueError(f"term {J} exceeds truncation order {self.order}")
            if not isinstance(poly, Poly):
                poly = Poly(poly, dim=dim)
            if dim is None:
                dim = poly.dim
            elif poly.dim != dim:
                raise DimensionMismatch(f"term {J} is {poly.dim}-dim, expected {dim}")
            if poly.degree >= 0:
                stored[J] = poly
        self.dim = 1 if dim is None else int(dim)
        self.terms = stored

    @classmethod
    def from_components(cls, rates, components, order):
        '''Build from scalar algebra series, one per output component'''
        dim = len(components)
        keys = set()
        for series in components:
            keys.update(series)
        terms = {J: Poly.from_components([series.get(J, np.zeros(0)) for series in components])
                 for J in keys}
        return cls(rates, terms, order=order, dim=dim)

    @classmethod
    def from_dict(cls, payload):
        try:
            terms = {tuple(t["J"]): Poly(t["poly"]) for t in payload["terms"]}
            dim = payload.get("dim")
            if dim is None and terms:
                dim = next(iter(terms.values())).dim
            return cls(payload["rates"], terms, order=payload["order"], dim=dim)
        except (KeyError, TypeError) as err:
            raise ConfigError(f"malformed λ-series payload: {err}") from err

    def to_dict(self):
        return {"rates": self.rates.tolist(), "order": self.order, "dim": self.dim,
                "terms": [{"J": list(J), "poly": P.to_list()}
                          for J, P in sorted(self.terms.items(), key=lambda kv: (norm1(kv[0]), kv[0]))]}

    @property
    def m(self):
        return self.rates.shape[0]

    @property
    def centered(self):
        return zero(self.m) not in self.terms

    def component(self, i):
        '''Scalar series of component i in the shared algebra format'''
        out = {}
        for J, P in self.terms.items():
            p = algebra.trim(P.coeffs[:, i])
            if p.shape[0]:
                out[J] = p
        return out

    def rate_of(self, J):
        return rate(self.rates, J)

    def __call__(self, t):
        return evaluate_truncated(self, t)

    def __sub__(self, other):
        return sub(self, other)

    def __repr__(self):
        return f"LambdaSeries(rates={self.rates.tolist()}, order={self.order}, dim={self.dim}, terms={len(self.terms)})"


def formal_derivative(x):
    '''Termwise P_J -> P_J' + (λ·J) P_J'''
    terms = {J: P.derivative() + P.scale(x.rate_of(J)) for J, P in x.terms.items()}
    return LambdaSeries(x.rates, terms, order=x.order, dim=x.dim)


def compose_with_analytic(f, x):
    '''f∘x for a power series f and a centered λ-series x

    Args:
        f (PowerSeries): analytic map R^n -> R^k
        x (LambdaSeries): centered n-dim λ-series
    Returns:
        LambdaSeries: k-dim series to order x.order, the J = 0 term being b_0
    '''
    if not x.centered:
        raise NotCentered("compose_with_analytic needs P_0 = 0")
    if f.in_dim != x.dim:
        raise DimensionMismatch(f"series in {f.in_dim} variables applied to a {x.dim}-dim λ-series")
    inner = [algebra.graded(x.component(i)) for i in range(x.dim)]
    levels = algebra.compose_graded(f.coeffs, inner, x.order, f.out_dim, index_dim=x.m)
    return LambdaSeries.from_components(x.rates, [algebra.flatten(l) for l in levels], x.order)


def evaluate_truncated(x, t):
    '''Σ_{|J| <= order} P_J(t) e^{λ·J t} as an n-vector'''
    out = np.zeros(x.dim)
    for J, P in x.terms.items():
        out += P.evaluate(t) * np.exp(x.rate_of(J) * t)
    return out


def tail_bound(x, t, q, norm="inf"):
    '''Product-formula bound on the omitted terms when |P_J(s)| <= s^{q|J|}

    With r_i = t^q e^{λ_i t} < 1 the omitted terms are bounded by
    Π_i 1/(1 - r_i) minus the part of the product kept by the truncation.

    Args:
        x (LambdaSeries): series whose truncation order is used
        t (float): time
        q (float): polynomial growth exponent
        norm (str): "inf" bounds Σ over |J|_∞ > order, "l1" over |J|_1 > order
            (the set actually dropped by the |J|_1 truncation)
    Returns:
        float: the bound
    '''
    if t <= 0.0:
        raise NotInRegime(f"tail bound needs t > 0, got {t}")
    r = t ** q * np.exp(x.rates * t)
    if np.any(r >= 1.0):
        raise NotInRegime(f"t^q e^(λ_i t) >= 1 at t={t}: {r.tolist()}")
    full = float(np.prod(1.0 / (1.0 - r)))
    n = x.order
    if norm == "inf":
        kept = float(np.prod((1.0 - r ** (n + 1)) / (1.0 - r)))
    elif norm == "l1":
        kept = sum(float(np.prod(r ** np.asarray(J))) for J in indices_up_to(x.m, n))
    else:
        raise ValueError(f"unknown norm {norm!r}")
    return max(full - kept, 0.0)


def dominant_term(s, rate_tol=1e-12, zero_tol=1e-12):
    '''Leading term a t^q e^{r t} of a scalar λ-series

    Terms with equal rate λ·J are merged before extraction, since only the sum over a
    rate class is meaningful. Classes whose summed polynomial vanishes are skipped.

    Args:
        s (LambdaSeries): scalar series
        rate_tol (float): relative tolerance for equal rates
        zero_tol (float): coefficients at or below this size count as zero
    Returns:
        DominantTerm: (a, q, r) for the largest surviving rate, or None
    '''
    if s.dim != 1:
        raise DimensionMismatch(f"dominant_term needs a scalar series, got dim {s.dim}")
    ordered = sorted(((s.rate_of(J), P.component(0)) for J, P in s.terms.items()),
                     key=lambda item: -item[0])
    groups = []
    for r, p in ordered:
        if groups and abs(r - groups[-1][0]) <= rate_tol * max(1.0, abs(r)):
            groups[-1][1] = algebra.poly_add(groups[-1][1], p)
        else:
            groups.append([r, p])
    for r, p in groups:
        p = algebra.trim(p, zero_tol)
        if p.shape[0]:
            return DominantTerm(float(p[-1]), p.shape[0] - 1, r)
    return None


def apply_affine(x, A, b):
    '''Termwise affine image y = A x + b

    Args:
        x (LambdaSeries): n-dim series
        A (array_like): (k, n) matrix
        b (array_like): k-vector, added to the J = 0 term
    Returns:
        LambdaSeries: k-dim series
    '''
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    terms = {J: P.apply_matrix(A) for J, P in x.terms.items()}
    origin = zero(x.m)
    constant = Poly.constant(b)
    terms[origin] = terms[origin] + constant if origin in terms else constant
    return LambdaSeries(x.rates, terms, order=x.order, dim=A.shape[0])


def sub(x, y):
    if x.dim != y.dim or not np.allclose(x.rates, y.rates, rtol=0.0, atol=1e-15):
        raise DimensionMismatch("λ-series with different rates or dimensions")
    order = min(x.order, y.order)
    terms = {J: P for J, P in x.terms.items() if norm1(J) <= order}
    for J, P in y.terms.items():
        if norm1(J) <= order:
            terms[J] = terms[J] - P if J in terms else -P
    return LambdaSeries(x.rates, terms, order=order, dim=x.dim)


def truncate_by_rate(x, a, tol=1e-12):
    '''Partial sum over the terms with λ·J >= a, the part not absorbed by o(e^{a t})'''
    terms = {J: P for J, P in x.terms.items() if x.rate_of(J) >= a - tol}
    return LambdaSeries(x.rates, terms, order=x.order, dim=x.dim)
