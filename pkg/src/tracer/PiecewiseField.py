"""
A piecewise analytic vector field: one truncated power series per cell of a CellCover,
plus an optional stable equilibrium (point and spectrum) for the asymptotic analysis.

The fields file is either a list of power series payloads or
{"fields": [...], "equilibrium": {"point": [...], "rates": [...]}}.

"""
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from ..geometry.CellCover import load_cover
from ..series.PowerSeries import PowerSeries, evaluate_truncated, recenter
from ..solver.formal_solver import StableSpectrum
from ..utils.errors import ConfigError, DimensionMismatch, NotCentered

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Equilibrium:
    point: np.ndarray
    spectrum: StableSpectrum

    @classmethod
    def from_dict(cls, payload):
        try:
            return cls(np.asarray(payload["point"], dtype=float), StableSpectrum(payload["rates"]))
        except (KeyError, TypeError) as err:
            raise ConfigError(f"malformed equilibrium block: {err}") from err


class PiecewiseField:
    '''Analytic field V_i on each cell D_i of a cover

    Args:
        cover (CellCover): the cells
        fields (list[PowerSeries]): one field R^m -> R^m per cell
        equilibrium (Equilibrium): optional stable equilibrium
    Returns:
        PiecewiseField: An instance of the PiecewiseField class
    '''
    def __init__(self, cover, fields, equilibrium=None):
        if len(fields) != len(cover):
            raise DimensionMismatch(f"{len(fields)} fields for {len(cover)} cells")
        for i, V in enumerate(fields):
            if V.in_dim != cover.dim or V.out_dim != cover.dim:
                raise DimensionMismatch(f"field {i} maps R^{V.in_dim} -> R^{V.out_dim}, cover lives in R^{cover.dim}")
        if equilibrium is not None and equilibrium.point.shape[0] != cover.dim:
            raise DimensionMismatch("equilibrium point has the wrong dimension")
        self.cover = cover
        self.fields = list(fields)
        self.equilibrium = equilibrium

    @property
    def dim(self):
        return self.cover.dim

    def rhs(self, cell):
        '''Right hand side f(t, x) of the active cell, in the solver calling convention'''
        V = self.fields[cell]
        return lambda t, x: evaluate_truncated(V, x)

    def exit_measure(self, cell, x):
        '''Largest facet signed distance of x for the given cell (> 0 means outside)'''
        return float(np.max(self.cover.cells[cell].signed_distances(x)))

    def captured(self, x, radius):
        if self.equilibrium is None:
            return False
        return float(np.linalg.norm(np.asarray(x) - self.equilibrium.point)) <= radius


def centered_field(V, point, tol=1e-12):
    '''The field re-expanded at an equilibrium, z -> V(point + z), with V(point) = 0 enforced'''
    W = recenter(V, point)
    residue = float(np.max(np.abs(W.constant_term)))
    if residue > tol:
        raise NotCentered(f"field does not vanish at the equilibrium, |V(p)| = {residue:.3e}")
    coeffs = {I: b for I, b in W.coeffs.items() if any(I)}
    return PowerSeries(W.in_dim, W.out_dim, coeffs, order=W.order, growth=W.growth)


def _read_json(source, what):
    if isinstance(source, (dict, list)):
        return source
    if not os.path.exists(source):
        raise ConfigError(f"{what} file not found: {source}")
    with open(source) as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{source}: {err}") from err


def load_fields(fields, equilibrium=None):
    '''Read the per-cell power series and the equilibrium block from a fields source

    Args:
        fields: fields JSON path or payload
        equilibrium (dict): optional {"point", "rates"} block overriding the fields file
    Returns:
        tuple: (list of PowerSeries, Equilibrium or None)
    '''
    payload = _read_json(fields, "fields")
    if isinstance(payload, dict):
        if equilibrium is None:
            equilibrium = payload.get("equilibrium")
        payload = payload.get("fields")
        if payload is None:
            raise ConfigError("fields payload has no 'fields' list")
    series = [PowerSeries.from_dict(entry) for entry in payload]
    if isinstance(equilibrium, dict):
        equilibrium = Equilibrium.from_dict(equilibrium)
    return series, equilibrium


def load_field(cover, fields, equilibrium=None):
    '''Assemble a PiecewiseField from cover and fields sources (paths or payloads)'''
    cover = cover if hasattr(cover, "cells") else load_cover(cover)
    series, equilibrium = load_fields(fields, equilibrium)
    return PiecewiseField(cover, series, equilibrium)


def field_to_dict(field):
    payload = {"fields": [V.to_dict() for V in field.fields]}
    if field.equilibrium is not None:
        payload["equilibrium"] = {"point": field.equilibrium.point.tolist(),
                                  "rates": field.equilibrium.spectrum.rates.tolist()}
    return payload


@dataclass
class ConsistencyReport:
    max_disagreement: float
    samples: int
    worst_point: object = None


def check_field_consistency(field, samples=200, seed=0, tol=1e-9):
    '''Sample points on shared facets and compare the adjacent cell fields

    For every facet of every cell, random points of the bounds are projected onto the
    facet hyperplane; those lying in two or more cells are used to compare the fields.

    Args:
        field (PiecewiseField): the field
        samples (int): points drawn per facet
        seed (int): random seed
        tol (float): boundary tolerance used to decide membership
    Returns:
        ConsistencyReport: the largest |V_i(x) - V_j(x)| found
    '''
    rng = np.random.default_rng(seed)
    cover = field.cover
    worst, worst_point, used = 0.0, None, 0
    for cell in cover.cells:
        for H in cell.halfspaces:
            points = rng.uniform(cover.lo, cover.hi, size=(samples, cover.dim))
            points = points + np.outer(H.b - points @ H.a, H.a)
            for x in points:
                owners = [i for i, other in enumerate(cover.cells) if other.contains(x, tol)]
                if len(owners) < 2:
                    continue
                used += 1
                values = [evaluate_truncated(field.fields[i], x) for i in owners]
                spread = max(float(np.max(np.abs(v - values[0]))) for v in values)
                if spread > worst:
                    worst, worst_point = spread, x
    return ConsistencyReport(worst, used, worst_point)
