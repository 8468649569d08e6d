"""
Shared truncated series arithmetic behind both PowerSeries and LambdaSeries.

A scalar series is a dict mapping a multi-index J to a 1-D numpy array holding the
coefficients (1, t, t^2, ...) of a polynomial in t. Plain power series use constant
polynomials, λ-series use the polynomial P_J(t) in front of e^{λ·J t}. Viewed this
way a λ-series is a power series in the m symbols e^{λ_i t}, so composition is the
same operation for both.

A graded series splits a scalar series by level |J| (dict level -> scalar series).
Composition is computed level by level: the level-k coefficient of a monomial
g_1^{I_1}...g_m^{I_m} only needs lower levels of its factors, which is what lets the
formal solver feed freshly solved levels back into the composition.

"""
import numpy as np

from .multiindex import add, first_nonzero, norm1, sub, unit, zero


def poly_add(p, q):
    '''Sum of two coefficient arrays of possibly different lengths'''
    if p.shape[0] < q.shape[0]:
        p, q = q, p
    out = p.copy()
    out[:q.shape[0]] += q
    return out


def trim(p, tol=0.0):
    '''Drop trailing coefficients with |a| <= tol'''
    keep = p.shape[0]
    while keep > 0 and abs(p[keep - 1]) <= tol:
        keep -= 1
    return p[:keep]


def accumulate(target, J, p):
    if J in target:
        target[J] = poly_add(target[J], p)
    else:
        target[J] = np.array(p, dtype=float)


def graded(series):
    '''Split a scalar series by |J|'''
    levels = {}
    for J, p in series.items():
        levels.setdefault(norm1(J), {})[J] = p
    return levels


def flatten(levels):
    '''Inverse of graded'''
    series = {}
    for level in levels.values():
        series.update(level)
    return series


def multiply(a, b, order):
    '''Truncated Cauchy product of two scalar series, keeping |J| <= order'''
    out = {}
    for I, p in a.items():
        for J, q in b.items():
            K = add(I, J)
            if norm1(K) <= order:
                accumulate(out, K, np.convolve(p, q))
    return out


def mul_level(A, B, k, lo_a=1, lo_b=1):
    '''Level k of the product of two graded series

    Args:
        A (dict): graded series whose lowest nonzero level is at least lo_a
        B (dict): graded series whose lowest nonzero level is at least lo_b
        k (int): requested level
    Returns:
        dict: scalar series with every |J| = k
    '''
    out = {}
    for j in range(lo_a, k - lo_b + 1):
        left = A.get(j)
        right = B.get(k - j)
        if not left or not right:
            continue
        for I, p in left.items():
            for J, q in right.items():
                accumulate(out, add(I, J), np.convolve(p, q))
    return out


def compose_graded(outer, inner, order, out_dim, index_dim=None, fill_level=None):
    '''Substitute graded scalar series into a power series, level by level

    Monomials are built by repeated multiplication along a ladder
    I -> I - e_p (p the first nonzero position), so every monomial costs one product.

    Args:
        outer (dict): multi-index I -> coefficient vector b_I of length out_dim
        inner (list): one graded series per variable of `outer`, all with level 0 empty
        order (int): highest level computed
        out_dim (int): number of output components
        index_dim (int): length of the multi-indices of `inner`, defaults to len(inner)
        fill_level (callable): optional hook fill_level(k, q) called once level k of the
            output is known (q is a list of out_dim scalar series). The hook may add
            level k to `inner` before level k + 1 is computed.
    Returns:
        list: out_dim graded series, the level-0 part being b_0
    '''
    m = len(inner)
    if index_dim is None:
        index_dim = m
    chain = {}
    for I in outer:
        J = I
        while norm1(J) >= 2 and J not in chain:
            p = first_nonzero(J)
            pred = sub(J, unit(p, m))
            chain[J] = (pred, p)
            J = pred
    ladder = sorted(chain, key=norm1)
    monomials = {I: {} for I in ladder}

    out = [dict() for _ in range(out_dim)]
    if zero(m) in outer:
        for i, b in enumerate(outer[zero(m)]):
            if b != 0.0:
                out[i][0] = {zero(index_dim): np.array([b], dtype=float)}

    for k in range(1, order + 1):
        for I in ladder:
            degree = norm1(I)
            if degree > k:
                break
            pred, p = chain[I]
            source = inner[first_nonzero(pred)] if norm1(pred) == 1 else monomials[pred]
            level = mul_level(source, inner[p], k, lo_a=degree - 1, lo_b=1)
            if level:
                monomials[I][k] = level
        for I, b in outer.items():
            degree = norm1(I)
            if degree == 0 or degree > k:
                continue
            term = inner[first_nonzero(I)].get(k) if degree == 1 else monomials[I].get(k)
            if not term:
                continue
            for i in range(out_dim):
                if b[i] == 0.0:
                    continue
                target = out[i].setdefault(k, {})
                for J, poly in term.items():
                    accumulate(target, J, b[i] * poly)
        if fill_level is not None:
            fill_level(k, [out[i].get(k, {}) for i in range(out_dim)])
    return out
