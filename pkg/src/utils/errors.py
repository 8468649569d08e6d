"""
Exception hierarchy shared by every sub-package. All errors derive from
PiecewiseFlowError so callers (the CLI in particular) can catch the whole family
at once and map it to an exit code.

"""


class PiecewiseFlowError(Exception):
    '''Base class of every error raised by this package'''


class ConfigError(PiecewiseFlowError):
    '''Malformed or missing configuration input (JSON payloads, paths, options)'''


class DimensionMismatch(PiecewiseFlowError):
    '''Operands have incompatible input or output dimensions'''


class NonConvergence(PiecewiseFlowError):
    '''An iterative method stopped at its iteration cap before reaching tolerance'''


# geometry
class BadWitness(PiecewiseFlowError):
    '''The designated interior point of a polytope is not strictly interior'''


class InteriorPoint(PiecewiseFlowError):
    '''A point required to be outside a polytope lies inside it'''


# series
class NonzeroConstantTerm(PiecewiseFlowError):
    '''The inner series of a composition has a nonzero constant term'''


class NotCentered(PiecewiseFlowError):
    '''A series (or field) required to vanish at the origin does not'''


class NotInRegime(PiecewiseFlowError):
    '''The tail estimate was requested at a time where t^q e^{λ_i t} >= 1'''


class NegativeTime(PiecewiseFlowError):
    '''A dominating function was evaluated at a negative time'''


# solver
class NotDiagonalLinearPart(PiecewiseFlowError):
    '''The linear part of the field is not the diagonal matrix of the rates'''


class PreconditionU(PiecewiseFlowError):
    '''The domination estimate needs u >= 2'''


class ZeroPerturbation(PiecewiseFlowError):
    '''The parameter perturbation C is the zero vector'''


# tracer
class LeftCover(PiecewiseFlowError):
    '''The trajectory reached a state contained in no cell of the cover'''


class ChatteringGuard(PiecewiseFlowError):
    '''More cell switches than the configured cap.

    Args:
        message (str): human readable reason
        trace (FlowTrace): everything recorded up to the point of failure
    '''
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NoAdmissibleCell(PiecewiseFlowError):
    '''Every candidate cell is left at first order by its own continuation'''


class EquilibriumNotInCell(PiecewiseFlowError):
    '''The equilibrium does not belong to the cell under asymptotic analysis'''


# yamabe
class DegenerateTriangle(PiecewiseFlowError):
    '''Some face violates the triangle inequality'''


class FlipLoop(PiecewiseFlowError):
    '''Delaunay flipping exceeded its cap.

    Args:
        message (str): human readable reason
        flip_log (list): (time, edge) records of the flips performed before giving up
    '''
    def __init__(self, message, flip_log=None):
        super().__init__(message)
        self.flip_log = list(flip_log or [])
