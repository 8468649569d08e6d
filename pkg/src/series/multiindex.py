"""
Multi-indices are plain tuples of nonnegative ints (hashable, usable as dict keys).
This module collects the few operations the series code needs on them.

"""
from itertools import combinations, product
from typing import Iterator, Tuple

import numpy as np

MultiIndex = Tuple[int, ...]


def norm1(I):
    '''|I| = sum of the exponents'''
    return sum(I)


def zero(m):
    return (0,) * m


def unit(i, m):
    '''The unit multi-index e_i in m variables'''
    return tuple(1 if k == i else 0 for k in range(m))


def add(I, J):
    return tuple(a + b for a, b in zip(I, J))


def sub(I, J):
    return tuple(a - b for a, b in zip(I, J))


def leq(I, J):
    '''Componentwise I <= J'''
    return all(a <= b for a, b in zip(I, J))


def rate(rates, J):
    '''λ·J for a rate vector λ'''
    return float(np.dot(rates, J))


def indices_of_degree(m, k) -> Iterator[MultiIndex]:
    '''All multi-indices in m variables with |I| = k, ordered by the first exponent'''
    if m == 0:
        if k == 0:
            yield ()
        return
    # stars and bars: choose the m-1 bar positions among k+m-1 slots
    for bars in combinations(range(k + m - 1), m - 1):
        previous = -1
        parts = []
        for bar in bars:
            parts.append(bar - previous - 1)
            previous = bar
        parts.append(k + m - 2 - previous)
        yield tuple(parts)


def indices_up_to(m, order, start=0):
    '''All multi-indices with start <= |I| <= order, grouped by increasing degree'''
    return [I for k in range(start, order + 1) for I in indices_of_degree(m, k)]


def sub_indices(J):
    '''All I with 0 <= I <= J componentwise'''
    return product(*(range(j + 1) for j in J))


def ordered_compositions(J, k):
    '''Ordered k-tuples of nonzero multi-indices summing to J

    Args:
        J (tuple): target multi-index
        k (int): number of parts
    Returns:
        generator: tuples (J_1, ..., J_k), each J_i != 0 and J_1 + ... + J_k = J
    '''
    if k == 0:
        if norm1(J) == 0:
            yield ()
        return
    if norm1(J) < k:
        return
    if k == 1:
        yield (tuple(J),)
        return
    for first in sub_indices(J):
        if norm1(first) == 0:
            continue
        rest = sub(J, first)
        if norm1(rest) < k - 1:
            continue
        for tail in ordered_compositions(rest, k - 1):
            yield (first,) + tail


def first_nonzero(I):
    '''Position of the first nonzero exponent'''
    for position, e in enumerate(I):
        if e:
            return position
    raise ValueError("zero multi-index has no nonzero position")
