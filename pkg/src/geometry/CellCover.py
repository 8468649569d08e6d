"""
A finite closed cover of a box by convex polytopes (the cells a piecewise analytic
vector field is defined on), together with cell location, a Monte Carlo coverage
check and the JSON form of covers:

    {"cells": [{"halfspaces": [{"a": [...], "b": r}], "witness": [...]}],
     "bounds": {"lo": [...], "hi": [...]}}

"""
import json
import logging
import os

import numpy as np

from .Polytope import HalfSpace, Polytope
from ..utils.errors import ConfigError, DimensionMismatch

logger = logging.getLogger(__name__)


class CellCover:
    '''Cells D_i covering the box `bounds`

    Args:
        cells (list[Polytope]): the closed cells, possibly overlapping on facets
        lo (array_like): lower corner of the covered box
        hi (array_like): upper corner of the covered box
    Returns:
        CellCover: An instance of the CellCover class
    '''
    def __init__(self, cells, lo, hi):
        self.cells = tuple(cells)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError("cover bounds need lo < hi with matching shapes")
        for i, cell in enumerate(self.cells):
            if cell.dim != self.dim:
                raise DimensionMismatch(f"cell {i} lives in R^{cell.dim}, bounds in R^{self.dim}")

    @property
    def dim(self):
        return self.lo.shape[0]

    def __len__(self):
        return len(self.cells)

    def __getitem__(self, index):
        return self.cells[index]


def locate_cells(x, cover, tol=1e-9):
    '''Indices of the cells containing x up to the boundary tolerance

    Args:
        x (array_like): point in R^m
        cover (CellCover): the cover
        tol (float): a facet counts as satisfied while its signed distance is <= tol
    Returns:
        set: cell indices, empty outside the cover
    '''
    x = np.asarray(x, dtype=float)
    return {i for i, cell in enumerate(cover.cells) if cell.contains(x, tol)}


class CoverageReport:
    '''Outcome of validate_cover

    Args:
        fraction (float): share of sampled points lying in at least one cell
        samples (int): number of sampled points
        witness (numpy array): an uncovered sample, None when everything is covered
    '''
    def __init__(self, fraction, samples, witness=None):
        self.fraction = fraction
        self.samples = samples
        self.witness = witness

    @property
    def passed(self):
        return self.fraction == 1.0

    def __repr__(self):
        return f"CoverageReport(fraction={self.fraction}, samples={self.samples}, witness={self.witness})"


def validate_cover(cover, samples=10_000, seed=0, tol=1e-9):
    '''Monte Carlo check that the cells cover their bounds

    Args:
        cover (CellCover): the cover
        samples (int): number of uniform points drawn in the bounds
        seed (int): seed of the sampler
        tol (float): boundary tolerance passed to locate_cells
    Returns:
        CoverageReport: fraction covered and, if any, an uncovered point
    '''
    if samples < 1:
        raise ValueError(f"validate_cover needs at least one sample, got {samples}")
    rng = np.random.default_rng(seed)
    points = rng.uniform(cover.lo, cover.hi, size=(samples, cover.dim))
    covered = np.zeros(samples, dtype=bool)
    for cell in cover.cells:
        covered |= np.all(points @ cell.A.T >= cell.b - tol, axis=1)
    fraction = float(np.count_nonzero(covered)) / samples
    witness = None
    if not np.all(covered):
        witness = points[np.argmin(covered)]
        logger.info("cover misses %.4f of the sampled box, e.g. %s", 1.0 - fraction, witness)
    return CoverageReport(fraction, samples, witness)


def cover_from_dict(payload):
    '''Build a CellCover from its JSON payload, normals are normalized on load'''
    try:
        bounds = payload["bounds"]
        cells = []
        for entry in payload["cells"]:
            halfspaces = [HalfSpace(h["a"], h["b"]) for h in entry["halfspaces"]]
            cells.append(Polytope(halfspaces, entry["witness"]))
        return CellCover(cells, bounds["lo"], bounds["hi"])
    except (KeyError, TypeError) as err:
        raise ConfigError(f"malformed cover payload: missing or invalid {err}") from err


def load_cover(source):
    '''Load a cover from a JSON file path or an already parsed payload'''
    if isinstance(source, dict):
        return cover_from_dict(source)
    if not os.path.exists(source):
        raise ConfigError(f"cover file not found: {source}")
    with open(source) as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{source}: {err}") from err
    return cover_from_dict(payload)


def cover_to_dict(cover):
    return {"cells": [cell.to_dict() for cell in cover.cells],
            "bounds": {"lo": cover.lo.tolist(), "hi": cover.hi.tolist()}}
