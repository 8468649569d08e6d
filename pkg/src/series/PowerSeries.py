"""
Truncated multivariate power series f(x) = Σ_{|I| <= N} b_I x^I with vector valued
coefficients b_I in R^n. These represent the analytic vector fields on each cell and
the generating functions used in the majorant argument.

Besides the class this file holds the operations on power series: composition,
products, majorants, truncated evaluation, re-expansion around a point and
substitution of polynomials in t.

JSON form: {"in_dim": m, "out_dim": n, "order": N, "terms": [{"I": [...], "b": [...]}]}

"""
import logging

import numpy as np
from scipy.special import comb

from . import algebra
from .Poly import Poly
from .multiindex import norm1, sub_indices, unit, zero
from ..utils.errors import ConfigError, DimensionMismatch, NonzeroConstantTerm

logger = logging.getLogger(__name__)


class PowerSeries:
    '''Truncated power series from R^m to R^n

    Args:
        in_dim (int): number of variables m
        out_dim (int): number of output components n
        coeffs (dict): multi-index I -> n-vector b_I; zero vectors are dropped
        order (int): truncation bound N on |I|, defaults to the largest stored |I|
        growth (float): optional coefficient growth constant M with |b_I| <= M^{|I|+1}
    Returns:
        PowerSeries: An instance of the PowerSeries class
    '''
    def __init__(self, in_dim, out_dim, coeffs=None, order=None, growth=None):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.growth = growth
        stored = {}
        for I, b in (coeffs or {}).items():
            I = tuple(int(e) for e in I)
            if len(I) != self.in_dim or min(I, default=0) < 0:
                raise DimensionMismatch(f"multi-index {I} does not have {self.in_dim} nonnegative entries")
            b = np.array(b, dtype=float).reshape(-1)
            if b.shape[0] != self.out_dim:
                raise DimensionMismatch(f"coefficient of {I} has length {b.shape[0]}, expected {self.out_dim}")
            if np.any(b):
                b.setflags(write=False)
                stored[I] = b
        top = max((norm1(I) for I in stored), default=0)
        self.order = top if order is None else int(order)
        if top > self.order:
            raise ValueError(f"stored term of degree {top} exceeds truncation order {self.order}")
        self.coeffs = stored
        self._table = None

    @classmethod
    def identity(cls, m, order=1):
        return cls(m, m, {unit(i, m): np.eye(m)[i] for i in range(m)}, order=order)

    @classmethod
    def constant(cls, b, in_dim, order=0):
        b = np.atleast_1d(np.asarray(b, dtype=float))
        return cls(in_dim, b.shape[0], {zero(in_dim): b}, order=order)

    @classmethod
    def from_dict(cls, payload):
        try:
            coeffs = {}
            for term in payload["terms"]:
                I = tuple(term["I"])
                if I in coeffs:
                    coeffs[I] = coeffs[I] + np.asarray(term["b"], dtype=float)
                else:
                    coeffs[I] = np.asarray(term["b"], dtype=float)
            return cls(payload["in_dim"], payload["out_dim"], coeffs,
                       order=payload.get("order"), growth=payload.get("growth"))
        except (KeyError, TypeError) as err:
            raise ConfigError(f"malformed power series payload: {err}") from err

    def to_dict(self):
        payload = {"in_dim": self.in_dim, "out_dim": self.out_dim, "order": self.order,
                   "terms": [{"I": list(I), "b": b.tolist()}
                             for I, b in sorted(self.coeffs.items(), key=lambda kv: (norm1(kv[0]), kv[0]))]}
        if self.growth is not None:
            payload["growth"] = self.growth
        return payload

    @property
    def constant_term(self):
        return self.coeffs.get(zero(self.in_dim), np.zeros(self.out_dim))

    @property
    def is_centered(self):
        return zero(self.in_dim) not in self.coeffs

    def component(self, i):
        '''Scalar series of component i in the shared algebra format (constant polys)'''
        return {I: np.array([b[i]]) for I, b in self.coeffs.items() if b[i] != 0.0}

    def truncate(self, order):
        return PowerSeries(self.in_dim, self.out_dim,
                           {I: b for I, b in self.coeffs.items() if norm1(I) <= order},
                           order=min(order, self.order), growth=self.growth)

    def __call__(self, x):
        return evaluate_truncated(self, x)

    def __add__(self, other):
        return add(self, other)

    def __repr__(self):
        return f"PowerSeries(in_dim={self.in_dim}, out_dim={self.out_dim}, order={self.order}, terms={len(self.coeffs)})"


def _from_components(in_dim, components, order):
    '''Gather scalar algebra series (one per output) back into a PowerSeries'''
    coeffs = {}
    for i, series in enumerate(components):
        for I, p in series.items():
            if p.shape[0] == 0:
                continue
            coeffs.setdefault(I, np.zeros(len(components)))[i] += p[0]
    return PowerSeries(in_dim, len(components), coeffs, order=order)


def compose(f, g):
    '''Composition f∘g of truncated power series

    Args:
        f (PowerSeries): outer series, f.in_dim = g.out_dim
        g (PowerSeries): inner series with zero constant term
    Returns:
        PowerSeries: f(g(x)) to order min(f.order, g.order), constant term b_0 of f
    '''
    if g.out_dim != f.in_dim:
        raise DimensionMismatch(f"cannot compose f: R^{f.in_dim} with g: R^{g.in_dim} -> R^{g.out_dim}")
    if not g.is_centered:
        raise NonzeroConstantTerm(f"inner series has constant term {g.constant_term.tolist()}")
    order = min(f.order, g.order)
    inner = [algebra.graded(g.component(i)) for i in range(g.out_dim)]
    levels = algebra.compose_graded(f.coeffs, inner, order, f.out_dim, index_dim=g.in_dim)
    return _from_components(g.in_dim, [algebra.flatten(l) for l in levels], order)


def evaluate_truncated(f, x):
    '''Σ_{|I| <= order} b_I x^I

    Args:
        f (PowerSeries): series
        x (array_like): point in R^m
    Returns:
        numpy array: n-vector
    '''
    if f._table is None:
        if f.coeffs:
            exponents = np.array(list(f.coeffs.keys()), dtype=float)
            values = np.array(list(f.coeffs.values()))
        else:
            exponents = np.zeros((0, f.in_dim))
            values = np.zeros((0, f.out_dim))
        f._table = (exponents, values)
    exponents, values = f._table
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != f.in_dim:
        raise DimensionMismatch(f"point of dimension {x.shape[0]} for a series in {f.in_dim} variables")
    monomials = np.prod(x ** exponents, axis=1)
    return monomials @ values


def majorant(f):
    '''Same support with componentwise absolute coefficients'''
    return PowerSeries(f.in_dim, f.out_dim, {I: np.abs(b) for I, b in f.coeffs.items()},
                       order=f.order, growth=f.growth)


def multiply(f, g):
    '''Truncated Cauchy product of two scalar valued series, to the smaller order'''
    if f.out_dim != 1 or g.out_dim != 1:
        raise DimensionMismatch("multiply needs scalar valued series")
    if f.in_dim != g.in_dim:
        raise DimensionMismatch(f"series in {f.in_dim} and {g.in_dim} variables")
    order = min(f.order, g.order)
    product = algebra.multiply(f.component(0), g.component(0), order)
    return _from_components(f.in_dim, [product], order)


def add(f, g):
    if (f.in_dim, f.out_dim) != (g.in_dim, g.out_dim):
        raise DimensionMismatch("series of different shapes")
    coeffs = dict(f.coeffs)
    for I, b in g.coeffs.items():
        coeffs[I] = coeffs[I] + b if I in coeffs else b
    return PowerSeries(f.in_dim, f.out_dim, coeffs, order=min(f.order, g.order))


def scale(f, a):
    return PowerSeries(f.in_dim, f.out_dim, {I: a * b for I, b in f.coeffs.items()}, order=f.order)


def linear_part(f):
    '''Matrix A with A[:, i] = b_{e_i}, the derivative of f at the origin'''
    A = np.zeros((f.out_dim, f.in_dim))
    for i in range(f.in_dim):
        A[:, i] = f.coeffs.get(unit(i, f.in_dim), 0.0)
    return A


def recenter(f, x0):
    '''Exact re-expansion y -> f(x0 + y) of the truncated polynomial f

    Args:
        f (PowerSeries): series in x
        x0 (array_like): new expansion point
    Returns:
        PowerSeries: series in y = x - x0 with the same order
    '''
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != f.in_dim:
        raise DimensionMismatch(f"shift of dimension {x0.shape[0]} for a series in {f.in_dim} variables")
    coeffs = {}
    for I, b in f.coeffs.items():
        for j in sub_indices(I):
            weight = 1.0
            for k, (e, d) in enumerate(zip(I, j)):
                weight *= comb(e, d, exact=True) * x0[k] ** (e - d)
            if weight != 0.0:
                coeffs[j] = coeffs[j] + weight * b if j in coeffs else weight * b
    return PowerSeries(f.in_dim, f.out_dim, coeffs, order=f.order, growth=f.growth)


def evaluate_on_polys(f, p, degree):
    '''Substitute an m-dim polynomial in t into f, keeping powers t^0..t^degree

    Args:
        f (PowerSeries): series in m variables
        p (Poly): m-dim polynomial in t
        degree (int): truncation degree in t
    Returns:
        Poly: out_dim polynomial f(p(t)) mod t^{degree+1}
    '''
    if p.dim != f.in_dim:
        raise DimensionMismatch(f"{p.dim}-dim polynomial substituted into a series in {f.in_dim} variables")
    columns = [p.coeffs[:, k] if p.degree >= 0 else np.zeros(1) for k in range(f.in_dim)]
    powers = [[np.array([1.0])] for _ in range(f.in_dim)]
    out = np.zeros((degree + 1, f.out_dim))
    for I, b in f.coeffs.items():
        term = np.array([1.0])
        for k, e in enumerate(I):
            while len(powers[k]) <= e:
                powers[k].append(np.convolve(powers[k][-1], columns[k])[:degree + 1])
            term = np.convolve(term, powers[k][e])[:degree + 1]
        out[:term.shape[0]] += np.outer(term, b)
    return Poly(out, dim=f.out_dim)
