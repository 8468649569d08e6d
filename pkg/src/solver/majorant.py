"""
The majorant recursion a_J bounding the coefficients of formal solutions:

    a_0 = 0,   a_J = 1 for |J| = 1,
    a_J = Σ_{I in Z^n, |I| >= 2} M^{|I|} Σ_{J_{i,j}} Π a_{J_{i,j}}   for |J| >= 2,

where the inner sum runs over the ways of writing J as an ordered sum of |I|
nonzero multi-indices J_{i,j} (one per slot (i, j), 1 <= j <= I_i).

"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..series.multiindex import indices_of_degree, indices_up_to, norm1, ordered_compositions

logger = logging.getLogger(__name__)


@dataclass
class MajorantTable:
    M: float
    n: int
    m: int
    values: Dict[Tuple[int, ...], float] = field(default_factory=dict)

    def __getitem__(self, J):
        return self.values[tuple(J)]

    @property
    def up_to(self):
        return max((norm1(J) for J in self.values), default=0)


def majorant_table(M, n, up_to, m):
    '''Fill a_J for all |J| <= up_to by increasing |J|

    Args:
        M (float): growth constant, M > 0
        n (int): dimension of the index I (number of field components)
        up_to (int): largest |J|
        m (int): dimension of J (number of rates)
    Returns:
        MajorantTable: the a_J values
    '''
    if M <= 0:
        raise ValueError(f"M must be positive, got {M}")
    table = MajorantTable(M, n, m)
    values = table.values
    for J in indices_up_to(m, up_to):
        size = norm1(J)
        if size == 0:
            values[J] = 0.0
            continue
        if size == 1:
            values[J] = 1.0
            continue
        # the slot products only depend on |I|, cache them per J
        slot_sums = {}
        total = 0.0
        for k in range(2, size + 1):
            for I in indices_of_degree(n, k):
                if k not in slot_sums:
                    slot_sums[k] = sum(float(np.prod([values[part] for part in parts]))
                                       for parts in ordered_compositions(J, k))
                total += M ** k * slot_sums[k]
        values[J] = total
    logger.debug("majorant table M=%s n=%d m=%d to |J|=%d", M, n, m, up_to)
    return table


def fit_growth_rate(table):
    '''R_hat = max over stored J != 0 of a_J^{1/|J|}'''
    roots = [table.values[J] ** (1.0 / norm1(J)) for J in table.values if norm1(J) > 0]
    return float(max(roots, default=1.0))


def growth_profile(table):
    '''max_{|J| = k} a_J^{1/k} for k = 1..up_to, the sequence expected to stay bounded'''
    profile = {}
    for J, a in table.values.items():
        k = norm1(J)
        if k:
            profile[k] = max(profile.get(k, 0.0), a ** (1.0 / k))
    return [profile[k] for k in sorted(profile)]
