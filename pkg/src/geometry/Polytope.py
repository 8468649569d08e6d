"""
Half spaces and convex polytopes. A HalfSpace (a, b) is the closed set {x : a·x >= b}
with a normalized to unit length, so the signed distance b - a·x is the true Euclidean
distance to the half space whenever the point lies outside it (positive outside,
negative strictly inside, zero on the bounding hyperplane).

The Polytope class keeps a designated interior point (the witness). Distances to a
polytope are computed with a cyclic Dykstra projection, which needs nothing more
than the closed-form projection onto each half space.

"""
import logging

import numpy as np

from ..utils.errors import BadWitness, DimensionMismatch, InteriorPoint, NonConvergence

logger = logging.getLogger(__name__)


class HalfSpace:
    '''The closed half space {x : a·x >= b}

    Args:
        a (array_like): normal vector, normalized on construction
        b (float): offset, rescaled together with the normal
    Returns:
        HalfSpace: An instance of the HalfSpace class
    '''
    def __init__(self, a, b):
        a = np.asarray(a, dtype=float).ravel()
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise ValueError("half space normal must be nonzero")
        self.a = a / norm
        self.b = float(b) / norm
        self.a.setflags(write=False)

    @property
    def dim(self):
        return self.a.shape[0]

    def project(self, x):
        '''Closest point of the half space to x

        Args:
            x (numpy array): point in R^m
        Returns:
            numpy array: x itself when inside, otherwise its orthogonal projection on the boundary
        '''
        gap = self.b - self.a @ x
        if gap <= 0.0:
            return x
        return x + gap * self.a

    def to_dict(self):
        return {"a": self.a.tolist(), "b": self.b}

    def __repr__(self):
        return f"HalfSpace(a={self.a.tolist()}, b={self.b})"


def signed_distance(x, H):
    '''Signed distance from x to the half space H

    Args:
        x (array_like): point in R^m
        H (HalfSpace): half space {a·x >= b}
    Returns:
        float: b - a·x, positive outside H, negative strictly inside, zero on the boundary
    '''
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != H.dim:
        raise DimensionMismatch(f"point of dimension {x.shape[-1]} against half space in R^{H.dim}")
    return float(H.b - H.a @ x)


class Polytope:
    '''Intersection of finitely many half spaces with a designated interior point

    Args:
        halfspaces (list[HalfSpace]): the facets H_i
        witness (array_like): a point strictly inside every H_i
    Returns:
        Polytope: An instance of the Polytope class
    '''
    def __init__(self, halfspaces, witness):
        self.halfspaces = tuple(halfspaces)
        if not self.halfspaces:
            raise ValueError("a polytope needs at least one half space")
        dims = {H.dim for H in self.halfspaces}
        if len(dims) != 1:
            raise DimensionMismatch(f"half spaces of mixed dimensions {sorted(dims)}")
        self.witness = np.asarray(witness, dtype=float).ravel()
        if self.witness.shape[0] != self.dim:
            raise DimensionMismatch("witness dimension does not match the half spaces")
        self.witness.setflags(write=False)
        # stacked form used by the vectorized distance helpers
        self.A = np.array([H.a for H in self.halfspaces])
        self.b = np.array([H.b for H in self.halfspaces])
        if self.facet_margins(self.witness) <= 0.0:
            raise BadWitness(f"witness {self.witness.tolist()} is not strictly interior")

    @property
    def dim(self):
        return self.halfspaces[0].dim

    def signed_distances(self, x):
        '''Signed distances of x to every facet, in facet order'''
        return self.b - self.A @ np.asarray(x, dtype=float)

    def facet_margins(self, p):
        '''min_i d(p, dH_i) for a point p, negative when p is outside some H_i'''
        return float(-np.max(self.signed_distances(p)))

    def contains(self, x, tol=0.0):
        '''True when every signed distance of x is at most tol'''
        return bool(np.all(self.signed_distances(x) <= tol))

    def to_dict(self):
        return {"halfspaces": [H.to_dict() for H in self.halfspaces],
                "witness": self.witness.tolist()}


def project_onto_polytope(x, D, tol=1e-10, max_iter=100_000):
    '''Euclidean projection onto a polytope by cyclic Dykstra iterations

    Args:
        x (array_like): point to project
        D (Polytope): target polytope
        tol (float): stop once a full cycle moves the iterate less than tol, the
            correction increments change by less than tol (Euclidean norm over all
            facets) and the iterate violates no facet by more than tol
        max_iter (int): cap on the number of full cycles
    Returns:
        tuple: (distance, closest point)
    '''
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != D.dim:
        raise DimensionMismatch(f"point of dimension {x.shape[0]} against polytope in R^{D.dim}")
    if D.contains(x):
        return 0.0, x.copy()

    y = x.copy()
    increments = np.zeros((len(D.halfspaces), D.dim))
    for iteration in range(max_iter):
        y_prev = y.copy()
        increments_prev = increments.copy()
        for i, H in enumerate(D.halfspaces):
            shifted = y + increments[i]
            y = H.project(shifted)
            increments[i] = shifted - y
        # a cycle can leave y in place while the increments still shift
        settled = np.sum((increments - increments_prev) ** 2) <= tol ** 2
        if settled and np.linalg.norm(y - y_prev) <= tol and np.max(D.signed_distances(y)) <= tol:
            if iteration > 1000:
                logger.warning("Dykstra projection needed %d cycles", iteration + 1)
            return float(np.linalg.norm(x - y)), y
    raise NonConvergence(f"projection did not reach tol={tol} within {max_iter} cycles")


def max_facet_distance(x, D):
    '''max_i d(x, H_i), the distance to the farthest violated facet (0 inside D)'''
    return float(max(0.0, np.max(D.signed_distances(x))))


def facet_distance_sandwich(p, x, D, tol=1e-10):
    '''Evaluate the three sides of the facet-distance sandwich for an exterior point

    lower = min_i d(p, dH_i) / |x - p| * d(x, D), mid = max_i d(x, H_i), upper = d(x, D)
    and lower <= mid <= upper holds for every interior p and exterior x.

    Args:
        p (array_like): strictly interior point
        x (array_like): point outside D
        D (Polytope): the polytope
        tol (float): projection tolerance
    Returns:
        tuple: (lower, mid, upper)
    '''
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    margin = D.facet_margins(p)
    if margin <= 0.0:
        raise BadWitness(f"{p.tolist()} is not strictly interior")
    if D.contains(x):
        raise InteriorPoint(f"{x.tolist()} lies in the polytope")
    upper, _ = project_onto_polytope(x, D, tol=tol)
    mid = max_facet_distance(x, D)
    lower = margin / float(np.linalg.norm(x - p)) * upper
    return lower, mid, upper


def box_polytope(lo, hi, witness=None):
    '''Axis aligned box [lo, hi] as a polytope, witness defaults to the center'''
    return clip_to_box([], lo, hi, witness)


def clip_to_box(halfspaces, lo, hi, witness=None):
    '''Intersect the given half spaces with the box [lo, hi]

    Args:
        halfspaces (list[HalfSpace]): the cell's own facets
        lo (array_like): lower box corner
        hi (array_like): upper box corner
        witness (array_like): interior point, the box center when omitted
    Returns:
        Polytope: the clipped cell, facets first then the 2m box faces
    '''
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise ValueError("box needs lo < hi in every coordinate")
    m = lo.shape[0]
    box = []
    for k in range(m):
        e = np.zeros(m)
        e[k] = 1.0
        box.append(HalfSpace(e, lo[k]))
        box.append(HalfSpace(-e, -hi[k]))
    if witness is None:
        witness = (lo + hi) / 2.0
    return Polytope(list(halfspaces) + box, witness)


def random_polytope(rng, dim, n_facets, radius=(0.5, 2.0), box=4.0):
    '''Random polytope around the origin for randomized checks

    Each facet has a random unit normal and passes at a random distance in `radius`
    from the origin, which is the witness. The result is clipped to the box
    [-box, box]^dim so it stays bounded.

    Args:
        rng (numpy.random.Generator): random source
        dim (int): ambient dimension
        n_facets (int): number of random facets (box faces come on top)
        radius (tuple): range of facet distances from the origin
        box (float): half width of the bounding box
    Returns:
        Polytope: polytope with witness 0
    '''
    normals = rng.normal(size=(n_facets, dim))
    offsets = rng.uniform(*radius, size=n_facets)
    halfspaces = [HalfSpace(a, -r * np.linalg.norm(a)) for a, r in zip(normals, offsets)]
    return clip_to_box(halfspaces, -box * np.ones(dim), box * np.ones(dim), np.zeros(dim))
