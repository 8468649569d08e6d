"""
Small piecewise systems with closed-form behaviour, used by the tests, the
verification suites and the example configs.

"""
import numpy as np

from ..geometry.CellCover import CellCover
from ..geometry.Polytope import HalfSpace, clip_to_box
from ..series.PowerSeries import PowerSeries
from ..solver.formal_solver import StableSpectrum
from .PiecewiseField import Equilibrium, PiecewiseField


def _split_cover(normal, bound, witnesses):
    '''Two cells {normal·x <= 0} and {normal·x >= 0} clipped to [-bound, bound]^m'''
    normal = np.asarray(normal, dtype=float)
    m = normal.shape[0]
    lo, hi = -bound * np.ones(m), bound * np.ones(m)
    cells = [clip_to_box([HalfSpace(-normal, 0.0)], lo, hi, witnesses[0]),
             clip_to_box([HalfSpace(normal, 0.0)], lo, hi, witnesses[1])]
    return CellCover(cells, lo, hi)


def onedim_system(bound=2.0):
    '''Cells {x <= 0}, {x >= 0}, V = -1 on both: from x0 = 1 the only switch is at t = 1'''
    cover = _split_cover([1.0], bound, [[-bound / 2], [bound / 2]])
    V = PowerSeries.constant([-1.0], 1)
    return PiecewiseField(cover, [V, V])


def decoupled_system(bound=3.0):
    '''V = (-x, -2y) split along the diagonal

    Cell 0 is {y >= x}, cell 1 is {y <= x}. From (1, 2) the trajectory crosses the
    diagonal once, at t = ln 2, and converges to the origin inside cell 1.
    '''
    cover = _split_cover([1.0, -1.0], bound, [[-1.0, 1.0], [1.0, -1.0]])
    V = PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.0, -2.0]}, order=1)
    return PiecewiseField(cover, [V, V], Equilibrium(np.zeros(2), StableSpectrum([-1.0, -2.0])))


def tangency_system(bound=1.0):
    '''Second order tangency at the origin

    Cell 0 is {y <= 0} with V = (1, 2x + 3y), cell 1 is {y >= 0} with V = (1, 2x + y).
    Both fields agree on y = 0. The trajectory from the origin is
    (t, 2(e^t - 1 - t)) in cell 1, while the continuation in cell 0 exits as t^2.
    '''
    cover = _split_cover([0.0, 1.0], bound, [[0.0, -bound / 2], [0.0, bound / 2]])
    below = PowerSeries(2, 2, {(0, 0): [1.0, 0.0], (1, 0): [0.0, 2.0], (0, 1): [0.0, 3.0]}, order=1)
    above = PowerSeries(2, 2, {(0, 0): [1.0, 0.0], (1, 0): [0.0, 2.0], (0, 1): [0.0, 1.0]}, order=1)
    return PiecewiseField(cover, [below, above])


def spiral_system(decay=0.1, omega=np.pi, bound=2.0):
    '''Slowly decaying rotation across {x <= 0}, {x >= 0}

    The linear part has complex eigenvalues -decay ± i omega, so the trajectory crosses
    the line x = 0 about omega / pi times per unit of time, forever.
    '''
    cover = _split_cover([1.0, 0.0], bound, [[-bound / 2, 0.0], [bound / 2, 0.0]])
    V = PowerSeries(2, 2, {(1, 0): [-decay, omega], (0, 1): [-omega, -decay]}, order=1)
    return PiecewiseField(cover, [V, V])


def bernoulli_system(lo=-0.5, hi=2.0):
    '''Single cell carrying V = -x + x^2, whose solution from 1/2 is 1/(1 + e^t)'''
    box = clip_to_box([], [lo], [hi], [0.0])
    cover = CellCover([box], [lo], [hi])
    V = PowerSeries(1, 1, {(1,): [-1.0], (2,): [1.0]}, order=2)
    return PiecewiseField(cover, [V], Equilibrium(np.zeros(1), StableSpectrum([-1.0])))
