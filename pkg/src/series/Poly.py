"""
The Poly class: n-dimensional polynomials in one variable t, P(t) = Σ a_i t^i with
a_i in R^n. Coefficients are stored as an array of shape (degree + 1, n) with trailing
zero rows trimmed, so the zero polynomial has shape (0, n) and degree -1.

"""
import numpy as np

from ..utils.errors import DimensionMismatch, NegativeTime


class Poly:
    '''n-dim polynomial in t

    Args:
        coeffs (array_like): sequence of n-vectors, the coefficient of t^i at position i.
            A flat sequence of numbers is read as a scalar polynomial (n = 1).
        dim (int): output dimension, only needed for an empty coefficient list
    Returns:
        Poly: An instance of the Poly class
    '''
    def __init__(self, coeffs=(), dim=None):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs.reshape(-1, 1) if coeffs.size or dim is None else coeffs.reshape(0, dim)
        if coeffs.ndim != 2:
            raise ValueError("Poly coefficients must be a list of vectors")
        if dim is not None and coeffs.shape[1] != dim:
            if coeffs.shape[0] == 0:
                coeffs = np.zeros((0, dim))
            else:
                raise DimensionMismatch(f"coefficients of length {coeffs.shape[1]}, expected {dim}")
        keep = coeffs.shape[0]
        while keep > 0 and not np.any(coeffs[keep - 1]):
            keep -= 1
        self.coeffs = coeffs[:keep].copy()
        self.coeffs.setflags(write=False)

    @classmethod
    def from_components(cls, components, length=None):
        '''Stack scalar coefficient arrays (one per component) into a Poly'''
        rows = max([len(c) for c in components] + [0])
        if length is not None:
            rows = max(rows, length)
        stacked = np.zeros((rows, len(components)))
        for i, c in enumerate(components):
            stacked[:len(c), i] = c
        return cls(stacked, dim=len(components))

    @classmethod
    def constant(cls, vector):
        return cls([np.asarray(vector, dtype=float)])

    @property
    def dim(self):
        return self.coeffs.shape[1]

    @property
    def degree(self):
        '''max_i deg(P_i), -1 for the zero polynomial'''
        return self.coeffs.shape[0] - 1

    def is_zero(self, tol=0.0):
        return self.max_abs_coeff() <= tol

    def max_abs_coeff(self):
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def component(self, i):
        return self.coeffs[:, i].copy()

    def evaluate(self, t):
        '''P(t) as an n-vector'''
        out = np.zeros(self.dim)
        for a in self.coeffs[::-1]:
            out = out * t + a
        return out

    def derivative(self):
        if self.degree < 1:
            return Poly(dim=self.dim)
        powers = np.arange(1, self.degree + 1)[:, None]
        return Poly(self.coeffs[1:] * powers, dim=self.dim)

    def antiderivative(self):
        '''∫_0^t P(s) ds, zero constant term'''
        if self.degree < 0:
            return Poly(dim=self.dim)
        powers = np.arange(1, self.degree + 2)[:, None]
        return Poly(np.vstack([np.zeros((1, self.dim)), self.coeffs / powers]), dim=self.dim)

    def _check(self, other):
        if self.dim != other.dim:
            raise DimensionMismatch(f"polynomials of dimension {self.dim} and {other.dim}")

    def __add__(self, other):
        self._check(other)
        rows = max(self.coeffs.shape[0], other.coeffs.shape[0])
        out = np.zeros((rows, self.dim))
        out[:self.coeffs.shape[0]] += self.coeffs
        out[:other.coeffs.shape[0]] += other.coeffs
        return Poly(out, dim=self.dim)

    def __neg__(self):
        return Poly(-self.coeffs, dim=self.dim)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, a):
        return Poly(a * self.coeffs, dim=self.dim)

    def __mul__(self, other):
        '''Componentwise product, or scaling by a number'''
        if not isinstance(other, Poly):
            return self.scale(float(other))
        self._check(other)
        if self.degree < 0 or other.degree < 0:
            return Poly(dim=self.dim)
        return Poly.from_components([np.convolve(self.coeffs[:, i], other.coeffs[:, i])
                                     for i in range(self.dim)])

    __rmul__ = __mul__

    def apply_matrix(self, A):
        '''t -> A P(t) for a (k, n) matrix A'''
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[1] != self.dim:
            raise DimensionMismatch(f"matrix with {A.shape[1]} columns applied to a {self.dim}-dim poly")
        return Poly(self.coeffs @ A.T, dim=A.shape[0])

    def truncate(self, degree):
        return Poly(self.coeffs[:degree + 1], dim=self.dim)

    def to_list(self):
        return self.coeffs.tolist()

    def __eq__(self, other):
        return isinstance(other, Poly) and self.coeffs.shape == other.coeffs.shape \
            and bool(np.all(self.coeffs == other.coeffs))

    def __repr__(self):
        return f"Poly({self.coeffs.tolist()})"


def star_eval(P, t):
    '''Dominating function P*(t) = max_i Σ_k |a_ik| t^k

    Args:
        P (Poly): polynomial
        t (float): nonnegative time
    Returns:
        float: value of the absolute-coefficient majorant, maximized over components
    '''
    if t < 0:
        raise NegativeTime(f"dominating functions are defined for t >= 0, got {t}")
    if P.degree < 0:
        return 0.0
    powers = float(t) ** np.arange(P.degree + 1)
    return float(np.max(np.abs(P.coeffs).T @ powers))
